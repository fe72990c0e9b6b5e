#include "taskimp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "taskimp/errors.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

std::vector<double> default_percent_grid() {
  std::vector<double> grid;
  for (int x = 10; x <= 100; x += 10) grid.push_back(x);
  return grid;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {
int sign_of(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace

AgreementCurve agreement(std::span<const double> estimate, std::span<const double> truth,
                         const std::vector<double>& percents) {
  if (estimate.size() != truth.size()) throw DataError("agreement: estimate and truth are not aligned");
  for (std::size_t k = 0; k < percents.size(); ++k)
    if (!(percents[k] > 0.0 && percents[k] <= 100.0) || (k > 0 && percents[k] <= percents[k - 1]))
      throw UsageError("agreement: percents must ascend within (0, 100]");
  const std::size_t n = estimate.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(estimate[a]) > std::abs(estimate[b]); });

  AgreementCurve curve;
  for (double x : percents) {
    AgreementPoint pt;
    pt.percent = x;
    const double exact = x / 100.0 * static_cast<double>(n);
    pt.selected = std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact))));
    if (pt.selected >= 2) {
      std::vector<double> e, t;
      std::size_t same = 0;
      for (std::size_t k = 0; k < pt.selected; ++k) {
        e.push_back(estimate[order[k]]);
        t.push_back(truth[order[k]]);
        if (sign_of(e.back()) == sign_of(t.back())) ++same;
      }
      pt.corr = pearson(e, t);
      pt.sign_acc = static_cast<double>(same) / static_cast<double>(pt.selected);
    }
    curve.points.push_back(pt);
  }
  return curve;
}

double series_mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DataError("series_mse: empty or misaligned input");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

double imputation_mse(const ImputationSet& imp, const SampleSet& truth, const MaskSet& mask) {
  if (imp.series.size() != truth.series.size() || mask.series_mask.size() != truth.series.size())
    throw DataError("imputation_mse: imputation, truth and mask are not aligned");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.series.size(); ++t) {
    if (!mask.series_mask[t]) continue;
    const double d = imp.series[t] - truth.series[t];
    s += d * d;
    ++count;
  }
  if (count == 0) throw DataError("imputation_mse: the mask is empty");
  return s / static_cast<double>(count);
}

TimingTable timing_report(const std::vector<TimedRun>& runs, std::optional<double> per_retrain_seconds,
                          std::size_t projected_count) {
  if (runs.empty()) throw UsageError("timing_report needs at least one run");
  const auto ref = std::find_if(runs.begin(), runs.end(), [](const TimedRun& r) { return r.method == "seq-sim"; });
  const double base = (ref == runs.end() ? runs.front() : *ref).seconds;
  TimingTable t;
  for (const auto& r : runs) {
    TimingRow row{r.method, r.seconds, std::nullopt};
    if (base > 0.0) row.ratio_to_seq_sim = r.seconds / base;
    t.rows.push_back(row);
  }
  if (per_retrain_seconds) {
    t.projected_retrain_seconds = *per_retrain_seconds * static_cast<double>(projected_count);
    t.projected_count = projected_count;
  }
  return t;
}

std::string format_timing(const TimingTable& t) {
  std::ostringstream out;
  out << "method,seconds,ratio_to_seq_sim\n";
  for (const auto& r : t.rows)
    out << r.method << ',' << textio::format_double(r.seconds) << ','
        << (r.ratio_to_seq_sim ? textio::format_double(*r.ratio_to_seq_sim) : std::string("NA")) << '\n';
  if (t.projected_retrain_seconds)
    out << "retrain-oracle(projected " << t.projected_count << " samples),"
        << textio::format_double(*t.projected_retrain_seconds) << ",NA\n";
  return out.str();
}

std::string format_agreement(const AgreementCurve& c) {
  std::ostringstream out;
  out << "percent,selected,corr,sign_acc\n";
  for (const auto& p : c.points)
    out << textio::format_double(p.percent) << ',' << p.selected << ','
        << (p.corr ? textio::format_double(*p.corr) : std::string("NA")) << ','
        << (p.sign_acc ? textio::format_double(*p.sign_acc) : std::string("NA")) << '\n';
  return out.str();
}

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void frame(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

}  // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
  double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = 1.0;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (const auto& y : s.y)
      if (y) y0 = std::min(y0, *y), y1 = std::max(y1, *y);
  }
  if (x0 >= x1) x0 = 0.0, x1 = 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  auto out = textio::open_output(path);
  frame(out, title);
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = y0 + (y1 - y0) * k / 4.0;
    const double x = x0 + (x1 - x0) * k / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << num(y) << "</text>\n"
        << "<text x=\"" << px(x) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << num(x)
        << "</text>\n";
  }
  if (y0 < 0.0 && y1 > 0.0)
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(0) << "\" y2=\"" << py(0)
        << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size() && k < series[s].y.size(); ++k)
      if (series[s].y[k]) out << px(series[s].x[k]) << ',' << py(*series[s].y[k]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << kLeft + pw + 10 << "\" y=\"" << kTop + 16 + 18 * s << "\" fill=\"" << color << "\">"
        << escape(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars) {
  double top = 0.0;
  for (const auto& b : bars) top = std::max(top, b.second);
  if (top <= 0.0) top = 1.0;
  const double pw = kWidth - kLeft - 40, ph = kHeight - kTop - kBottom;
  const double slot = bars.empty() ? pw : pw / static_cast<double>(bars.size());
  auto out = textio::open_output(path);
  frame(out, title);
  out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << kTop + ph << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double h = std::max(0.0, bars[k].second) / top * ph;
    const double x = kLeft + slot * k + slot * 0.15;
    out << "<rect x=\"" << x << "\" y=\"" << kTop + ph - h << "\" width=\"" << slot * 0.7 << "\" height=\"" << h
        << "\" fill=\"" << kPalette[k % std::size(kPalette)] << "\"/>\n"
        << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kTop + ph - h - 4 << "\" text-anchor=\"middle\">"
        << num(bars[k].second) << "</text>\n"
        << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
        << escape(bars[k].first) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace taskimp
