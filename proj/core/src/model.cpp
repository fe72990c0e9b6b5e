#include "taskimp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <map>

#include "taskimp/dual.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::size_t> mlp_widths(const MlpArch& arch, const Dims& dims) {
  std::vector<std::size_t> widths{dims.input_size()};
  for (std::size_t k = 0; k + 1 < arch.layers; ++k) widths.push_back(arch.hidden);
  widths.push_back(dims.output_len);
  return widths;
}

// ---------------------------------------------------------------------------
// MLP

template <class T>
class MlpNet {
 public:
  MlpNet(const MlpArch& arch, const Dims& dims) : widths_(mlp_widths(arch, dims)) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
      w_offset_.push_back(offset);
      offset += widths_[k + 1] * widths_[k];
      b_offset_.push_back(offset);
      offset += widths_[k + 1];
    }
    acts_.resize(widths_.size());
    pre_.resize(widths_.size());
    for (std::size_t k = 0; k < widths_.size(); ++k) {
      acts_[k].resize(widths_[k]);
      pre_[k].resize(widths_[k]);
    }
    delta_.resize(*std::max_element(widths_.begin(), widths_.end()));
    delta_next_.resize(delta_.size());
  }

  std::span<const T> forward(std::span<const T> theta, std::span<const double> x) {
    for (std::size_t i = 0; i < widths_[0]; ++i) acts_[0][i] = T(x[i]);
    const std::size_t last = widths_.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
      const std::size_t in = widths_[k];
      const std::size_t out = widths_[k + 1];
      const T* w = theta.data() + w_offset_[k];
      const T* b = theta.data() + b_offset_[k];
      const auto& a = acts_[k];
      auto& z = pre_[k + 1];
      for (std::size_t r = 0; r < out; ++r) {
        T s = b[r];
        const T* wr = w + r * in;
        for (std::size_t c = 0; c < in; ++c) s += wr[c] * a[c];
        z[r] = s;
      }
      auto& next = acts_[k + 1];
      if (k + 1 == last) {
        for (std::size_t r = 0; r < out; ++r) next[r] = z[r];
      } else {
        // ReLU; the subgradient at exactly zero is 0.
        for (std::size_t r = 0; r < out; ++r) next[r] = value_of(z[r]) > 0.0 ? z[r] : T(0.0);
      }
    }
    return acts_[last];
  }

  void backward(std::span<const T> theta, std::span<const T> seed, std::span<T> grad) {
    const std::size_t last = widths_.size() - 1;
    std::copy(seed.begin(), seed.end(), delta_.begin());
    for (std::size_t k = last; k-- > 0;) {
      const std::size_t in = widths_[k];
      const std::size_t out = widths_[k + 1];
      const auto& a = acts_[k];
      T* gw = grad.data() + w_offset_[k];
      T* gb = grad.data() + b_offset_[k];
      for (std::size_t r = 0; r < out; ++r) {
        const T d = delta_[r];
        gb[r] = d;
        T* gwr = gw + r * in;
        for (std::size_t c = 0; c < in; ++c) gwr[c] = d * a[c];
      }
      if (k == 0) break;
      const T* w = theta.data() + w_offset_[k];
      for (std::size_t c = 0; c < in; ++c) delta_next_[c] = T(0.0);
      for (std::size_t r = 0; r < out; ++r) {
        const T d = delta_[r];
        const T* wr = w + r * in;
        for (std::size_t c = 0; c < in; ++c) delta_next_[c] += wr[c] * d;
      }
      const auto& z = pre_[k];
      for (std::size_t c = 0; c < in; ++c) delta_[c] = value_of(z[c]) > 0.0 ? delta_next_[c] : T(0.0);
    }
  }

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> w_offset_, b_offset_;
  std::vector<std::vector<T>> acts_, pre_;
  std::vector<T> delta_, delta_next_;
};

// ---------------------------------------------------------------------------
// DLinear
//
// Layout: W_seasonal (L2 x L1), b_seasonal (L2), W_trend (L2 x L1),
// b_trend (L2), then optionally c (D) and c0.

template <class T>
class DLinearNet {
 public:
  DLinearNet(const DLinearArch& arch, const Dims& dims) : arch_(arch), dims_(dims) {
    const std::size_t L1 = dims.input_len, L2 = dims.output_len, D = dims.features;
    ws_ = 0;
    bs_ = ws_ + L2 * L1;
    wt_ = bs_ + L2;
    bt_ = wt_ + L2 * L1;
    proj_ = bt_ + L2;
    seasonal_.resize(D * L1);
    trend_.resize(D * L1);
    channel_out_.resize(D * L2);
    out_.resize(L2);
    channel_seed_.resize(L2);
  }

  std::span<const T> forward(std::span<const T> theta, std::span<const double> x) {
    const std::size_t L1 = dims_.input_len, L2 = dims_.output_len, D = dims_.features;
    const auto half = static_cast<std::ptrdiff_t>(arch_.kernel / 2);
    const double inv_k = 1.0 / static_cast<double>(arch_.kernel);
    for (std::size_t d = 0; d < D; ++d) {
      const double* xd = x.data() + d * L1;
      for (std::size_t t = 0; t < L1; ++t) {
        double s = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
          const auto idx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + j, 0,
                                                      static_cast<std::ptrdiff_t>(L1) - 1);
          s += xd[idx];
        }
        trend_[d * L1 + t] = s * inv_k;
        seasonal_[d * L1 + t] = xd[t] - trend_[d * L1 + t];
      }
      for (std::size_t j = 0; j < L2; ++j) {
        T s = theta[bs_ + j] + theta[bt_ + j];
        const T* wsj = theta.data() + ws_ + j * L1;
        const T* wtj = theta.data() + wt_ + j * L1;
        for (std::size_t t = 0; t < L1; ++t)
          s += wsj[t] * T(seasonal_[d * L1 + t]) + wtj[t] * T(trend_[d * L1 + t]);
        channel_out_[d * L2 + j] = s;
      }
    }
    if (arch_.output_projection) {
      for (std::size_t j = 0; j < L2; ++j) {
        T s = theta[proj_ + D];
        for (std::size_t d = 0; d < D; ++d) s += theta[proj_ + d] * channel_out_[d * L2 + j];
        out_[j] = s;
      }
    } else {
      for (std::size_t j = 0; j < L2; ++j) out_[j] = channel_out_[j];
    }
    return out_;
  }

  void backward(std::span<const T> theta, std::span<const T> seed, std::span<T> grad) {
    const std::size_t L1 = dims_.input_len, L2 = dims_.output_len, D = dims_.features;
    std::fill(grad.begin(), grad.end(), T(0.0));
    if (arch_.output_projection) {
      T bias(0.0);
      for (std::size_t j = 0; j < L2; ++j) bias += seed[j];
      grad[proj_ + D] = bias;
      for (std::size_t d = 0; d < D; ++d) {
        T s(0.0);
        for (std::size_t j = 0; j < L2; ++j) s += seed[j] * channel_out_[d * L2 + j];
        grad[proj_ + d] = s;
      }
    }
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t j = 0; j < L2; ++j)
        channel_seed_[j] = arch_.output_projection ? theta[proj_ + d] * seed[j] : seed[j];
      for (std::size_t j = 0; j < L2; ++j) {
        const T g = channel_seed_[j];
        grad[bs_ + j] += g;
        grad[bt_ + j] += g;
        T* gws = grad.data() + ws_ + j * L1;
        T* gwt = grad.data() + wt_ + j * L1;
        for (std::size_t t = 0; t < L1; ++t) {
          gws[t] += g * T(seasonal_[d * L1 + t]);
          gwt[t] += g * T(trend_[d * L1 + t]);
        }
      }
    }
  }

 private:
  DLinearArch arch_;
  Dims dims_;
  std::size_t ws_, bs_, wt_, bt_, proj_;
  std::vector<double> seasonal_, trend_;
  std::vector<T> channel_out_, out_, channel_seed_;
};

template <class T>
using Net = std::variant<MlpNet<T>, DLinearNet<T>>;

template <class T>
Net<T> make_net(const Architecture& arch, const Dims& dims) {
  return std::visit(overloaded{[&](const MlpArch& a) -> Net<T> { return MlpNet<T>(a, dims); },
                               [&](const DLinearArch& a) -> Net<T> { return DLinearNet<T>(a, dims); }},
                    arch);
}

template <class T>
std::span<const T> net_forward(Net<T>& net, std::span<const T> theta, std::span<const double> x) {
  return std::visit([&](auto& n) { return n.forward(theta, x); }, net);
}

template <class T>
void net_backward(Net<T>& net, std::span<const T> theta, std::span<const T> seed, std::span<T> grad) {
  std::visit([&](auto& n) { n.backward(theta, seed, grad); }, net);
}

void check_input(const ModelParams& p, std::span<const double> x) {
  if (x.size() != p.dims().input_size())
    throw DataError("input shape mismatch: expected " + std::to_string(p.dims().input_size()) +
                    " values (D x L1), got " + std::to_string(x.size()));
}

std::vector<Dual> dual_theta(const ModelParams& p, std::span<const double> v) {
  if (v.size() != p.size()) throw DataError("direction length does not match parameter count");
  std::vector<Dual> theta(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) theta[i] = Dual(p.theta()[i], v[i]);
  return theta;
}

}  // namespace

std::string describe(const Architecture& arch) {
  return std::visit(
      overloaded{[](const MlpArch& a) {
                   return "mlp layers=" + std::to_string(a.layers) + " hidden=" + std::to_string(a.hidden);
                 },
                 [](const DLinearArch& a) {
                   return "dlinear kernel=" + std::to_string(a.kernel) +
                          " projection=" + std::to_string(a.output_projection ? 1 : 0);
                 }},
      arch);
}

void validate(const Architecture& arch, const Dims& dims) {
  if (dims.features == 0 || dims.input_len == 0 || dims.output_len == 0)
    throw UsageError("model dimensions must be positive");
  std::visit(overloaded{[](const MlpArch& a) {
                          if (a.layers == 0) throw UsageError("mlp: layers must be >= 1");
                          if (a.hidden == 0) throw UsageError("mlp: hidden size must be >= 1");
                        },
                        [&](const DLinearArch& a) {
                          if (a.kernel == 0 || a.kernel % 2 == 0)
                            throw UsageError("dlinear: kernel must be a positive odd number");
                          if (!a.output_projection && dims.features != 1)
                            throw UsageError("dlinear: multivariate input needs the output projection");
                        }},
             arch);
}

std::size_t parameter_count(const Architecture& arch, const Dims& dims) {
  validate(arch, dims);
  return std::visit(overloaded{[&](const MlpArch& a) {
                                 const auto w = mlp_widths(a, dims);
                                 std::size_t count = 0;
                                 for (std::size_t k = 0; k + 1 < w.size(); ++k) count += w[k] * w[k + 1] + w[k + 1];
                                 return count;
                               },
                               [&](const DLinearArch& a) {
                                 const std::size_t base = 2 * (dims.output_len * dims.input_len + dims.output_len);
                                 return base + (a.output_projection ? dims.features + 1 : 0);
                               }},
                    arch);
}

ModelParams::ModelParams(Architecture arch, Dims dims, std::vector<double> theta)
    : arch_(arch), dims_(dims), theta_(std::move(theta)) {
  const std::size_t expected = parameter_count(arch_, dims_);
  if (theta_.size() != expected)
    throw DataError("parameter vector has " + std::to_string(theta_.size()) + " entries, " +
                    describe(arch_) + " needs " + std::to_string(expected));
  for (double v : theta_)
    if (!std::isfinite(v)) throw NumericalError("parameter vector contains non-finite values");
}

ModelParams init_params(const Architecture& arch, const Dims& dims, std::uint64_t seed) {
  std::vector<double> theta(parameter_count(arch, dims), 0.0);
  Rng rng(seed);
  auto fill_uniform = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) theta[offset + i] = uniform_real(rng, -bound, bound);
  };
  std::visit(overloaded{[&](const MlpArch& a) {
                          const auto w = mlp_widths(a, dims);
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k + 1 < w.size(); ++k) {
                            fill_uniform(offset, w[k] * w[k + 1], w[k]);
                            offset += w[k] * w[k + 1] + w[k + 1];
                          }
                        },
                        [&](const DLinearArch& a) {
                          const std::size_t L1 = dims.input_len, L2 = dims.output_len;
                          fill_uniform(0, L2 * L1, L1);
                          fill_uniform(L2 * L1 + L2, L2 * L1, L1);
                          if (a.output_projection) fill_uniform(2 * (L2 * L1 + L2), dims.features, dims.features);
                        }},
             arch);
  return ModelParams(arch, dims, std::move(theta));
}

// ---------------------------------------------------------------------------

struct ModelEvaluator::Impl {
  Net<double> net;
  std::vector<double> seed;
  std::span<const double> last_output;
};

ModelEvaluator::ModelEvaluator(const ModelParams& params)
    : params_(&params),
      impl_(std::make_unique<Impl>(Impl{make_net<double>(params.arch(), params.dims()),
                                        std::vector<double>(params.dims().output_len), {}})) {}
ModelEvaluator::~ModelEvaluator() = default;
ModelEvaluator::ModelEvaluator(ModelEvaluator&&) noexcept = default;
ModelEvaluator& ModelEvaluator::operator=(ModelEvaluator&&) noexcept = default;

std::span<const double> ModelEvaluator::forward(std::span<const double> x) {
  check_input(*params_, x);
  impl_->last_output = net_forward<double>(impl_->net, params_->theta(), x);
  return impl_->last_output;
}

void ModelEvaluator::vjp(std::span<const double> seed, std::span<double> grad) {
  if (seed.size() != params_->dims().output_len || grad.size() != params_->size())
    throw DataError("vjp: shape mismatch");
  net_backward<double>(impl_->net, params_->theta(), seed, grad);
}

void ModelEvaluator::loss_grad(std::span<const double> y, std::span<double> grad) {
  const auto& f = impl_->last_output;
  if (y.size() != f.size()) throw DataError("loss: target length mismatch");
  const double scale = 2.0 / static_cast<double>(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) impl_->seed[j] = scale * (f[j] - y[j]);
  vjp(impl_->seed, grad);
}

std::vector<double> forward(const ModelParams& p, std::span<const double> x) {
  ModelEvaluator ev(p);
  const auto out = ev.forward(x);
  return {out.begin(), out.end()};
}

double sample_loss(const ModelParams& p, std::span<const double> x, std::span<const double> y) {
  ModelEvaluator ev(p);
  const auto f = ev.forward(x);
  if (f.size() != y.size()) throw DataError("loss: target length mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) sum += (f[j] - y[j]) * (f[j] - y[j]);
  return sum / static_cast<double>(f.size());
}

std::vector<double> param_grad(const ModelParams& p, std::span<const double> x,
                               std::span<const double> y) {
  ModelEvaluator ev(p);
  ev.forward(x);
  std::vector<double> grad(p.size());
  ev.loss_grad(y, grad);
  return grad;
}

Matrix output_jacobian(const ModelParams& p, std::span<const double> x, const SegmentProjector& proj) {
  if (proj.output_len() != p.dims().output_len) throw DataError("projector length mismatch");
  ModelEvaluator ev(p);
  ev.forward(x);
  Matrix jac(proj.segments, p.size());
  for (std::size_t s = 0; s < proj.segments; ++s) ev.vjp(proj.a.row(s), jac.row(s));
  return jac;
}

Matrix output_jacobian(const ModelParams& p, std::span<const double> x) {
  return output_jacobian(p, x, make_projector(p.dims().output_len, p.dims().output_len));
}

Matrix ntk(const ModelParams& p, std::span<const double> xa, std::span<const double> xb,
           const SegmentProjector& proj) {
  return multiply_transposed(output_jacobian(p, xa, proj), output_jacobian(p, xb, proj));
}

std::vector<double> jacobian_vector_product(const ModelParams& p, std::span<const double> x,
                                            std::span<const double> v) {
  check_input(p, x);
  const auto theta = dual_theta(p, v);
  auto net = make_net<Dual>(p.arch(), p.dims());
  const auto out = net_forward<Dual>(net, theta, x);
  std::vector<double> jv(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) jv[j] = out[j].d;
  return jv;
}

std::vector<double> hessian_vector_product(const ModelParams& p, std::span<const double> x,
                                           std::span<const double> y, std::span<const double> v) {
  check_input(p, x);
  if (y.size() != p.dims().output_len) throw DataError("hvp: target length mismatch");
  const auto theta = dual_theta(p, v);
  auto net = make_net<Dual>(p.arch(), p.dims());
  const auto out = net_forward<Dual>(net, theta, x);
  const double scale = 2.0 / static_cast<double>(out.size());
  std::vector<Dual> seed(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) seed[j] = (out[j] - Dual(y[j])) * Dual(scale);
  std::vector<Dual> grad(p.size());
  net_backward<Dual>(net, theta, seed, grad);
  std::vector<double> hv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) hv[i] = grad[i].d;
  return hv;
}

// ---------------------------------------------------------------------------

void save_params(const std::filesystem::path& path, const ModelParams& p) {
  auto out = textio::open_output(path);
  const auto& d = p.dims();
  out << "taskimp-params version=1 arch=" << describe(p.arch()) << " features=" << d.features
      << " input_len=" << d.input_len << " output_len=" << d.output_len << " count=" << p.size() << '\n';
  for (double v : p.theta()) out << textio::format_hex(v) << '\n';
}

ModelParams load_params(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing checkpoint '" + path.string() + "'");
  auto in = textio::open_input(path);
  std::string header;
  std::getline(in, header);
  std::istringstream tokens(header);
  std::string magic, arch_name;
  tokens >> magic;
  if (magic != "taskimp-params") throw DataError("'" + path.string() + "' is not a checkpoint file");
  std::map<std::string, std::string> kv;
  for (std::string tok; tokens >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw DataError("malformed checkpoint header");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto number = [&](const std::string& key) -> std::size_t {
    long long v = 0;
    if (!kv.count(key) || !textio::parse_int(kv[key], v) || v < 0)
      throw DataError("checkpoint header missing '" + key + "'");
    return static_cast<std::size_t>(v);
  };
  Architecture arch;
  if (kv["arch"] == "mlp") {
    arch = MlpArch{number("layers"), number("hidden")};
  } else if (kv["arch"] == "dlinear") {
    arch = DLinearArch{number("kernel"), number("projection") != 0};
  } else {
    throw DataError("checkpoint: unknown architecture '" + kv["arch"] + "'");
  }
  const Dims dims{number("features"), number("input_len"), number("output_len")};
  const std::size_t count = number("count");
  std::vector<double> theta;
  theta.reserve(count);
  for (std::string line; std::getline(in, line);) {
    if (textio::trim(line).empty()) continue;
    double v = 0.0;
    if (!textio::parse_hex(line, v)) throw DataError("checkpoint: bad value '" + line + "'");
    theta.push_back(v);
  }
  if (theta.size() != count) throw DataError("checkpoint: expected " + std::to_string(count) + " values");
  return ModelParams(arch, dims, std::move(theta));
}

}  // namespace taskimp
