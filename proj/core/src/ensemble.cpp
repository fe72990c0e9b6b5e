#include "taskimp/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "taskimp/errors.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty set");
  if (!(q > 0.0 && q <= 100.0)) throw UsageError("percentile rank must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const double exact = q / 100.0 * static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

void EnsembleSpec::validate() const {
  if (!(replace_percent > 0.0 && replace_percent <= 100.0))
    throw UsageError("replace_percent must lie in (0, 100]");
  if (!gain || !first || !second) throw UsageError("ensemble spec is incomplete");
  if (first->size() != gain->samples || second->size() != gain->samples || first->output_len != gain->horizon ||
      second->output_len != gain->horizon)
    throw DataError("ensemble: gain matrix and imputation sets are misaligned");
}

SplicedLabels combine(const EnsembleSpec& spec) {
  spec.validate();
  const auto& g = *spec.gain;
  SplicedLabels out;
  out.labels = *spec.first;
  out.labels.source_name = "spliced";
  out.replaced.assign(g.values.size(), 0);

  std::vector<double> positive;
  for (double v : g.values)
    if (v > 0.0) positive.push_back(v);
  out.positive_count = positive.size();
  if (positive.empty()) return out;
  const double q = 100.0 - spec.replace_percent;
  out.threshold = q > 0.0 ? nearest_rank_percentile(positive, q) : *std::min_element(positive.begin(), positive.end());
  out.has_threshold = true;
  // With c = 100 the threshold is the smallest positive gain and strict
  // comparison leaves that single entry in place; pass every positive gain.
  const bool take_all = spec.replace_percent >= 100.0;
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    const double v = g.values[k];
    if (take_all ? v > 0.0 : v > out.threshold) {
      out.labels.labels[k] = spec.second->labels[k];
      out.replaced[k] = 1;
      ++out.replaced_count;
    }
  }
  return out;
}

EnsembleOutcome run_ensemble(const EnsembleSpec& spec, const Architecture& arch, const TrainConfig& cfg,
                             const SampleSet& train_set, const SampleSet& val, const SampleSet& test,
                             const std::optional<ModelParams>& baseline) {
  auto spliced = combine(spec);
  TrainConfig quiet = cfg;
  quiet.record_trajectory = false;
  EnsembleReport report;
  report.threshold = spliced.threshold;
  report.positive_count = spliced.positive_count;
  report.replaced_count = spliced.replaced_count;

  if (baseline) {
    report.baseline_test_mse = evaluate(*baseline, test);
  } else {
    const auto base = train(arch, train_set, spec.first->labels, val, quiet);
    report.baseline_test_mse = evaluate(base.params, test);
    report.baseline_epochs = base.trajectory.epochs();
  }
  auto ens = train(arch, train_set, spliced.labels.labels, val, quiet);
  report.ensemble_test_mse = evaluate(ens.params, test);
  report.ensemble_epochs = ens.trajectory.epochs();
  return {std::move(ens.params), std::move(spliced), report};
}

void save_spliced(const std::filesystem::path& path, const SampleSet& ss, const SplicedLabels& s,
                  const EnsembleSpec& spec) {
  const auto& g = *spec.gain;
  auto out = textio::open_output(path);
  out << "# pair=" << spec.first->source_name << ',' << spec.second->source_name << '\n'
      << "# estimator=" << g.estimator << '\n'
      << "# replace_percent=" << textio::format_double(spec.replace_percent) << '\n'
      << "# threshold=" << (s.has_threshold ? textio::format_double(s.threshold) : std::string("none")) << '\n'
      << "# positive_gains=" << s.positive_count << '\n'
      << "# replaced=" << s.replaced_count << '\n';
  out << "sample_index,timestep,timestamp,value,source\n";
  const std::size_t L2 = s.labels.output_len;
  for (std::size_t i = 0; i < s.labels.size(); ++i)
    for (std::size_t l = 0; l < L2; ++l) {
      const std::size_t k = i * L2 + l;
      if (!g.masked[k]) continue;
      out << i << ',' << l << ',' << ss.timestamps[ss.target_row(i, l)] << ','
          << textio::format_double(s.labels.labels[k]) << ','
          << (s.replaced[k] ? spec.second->source_name : spec.first->source_name) << '\n';
    }
}

}  // namespace taskimp
