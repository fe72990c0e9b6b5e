#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/influence.hpp"

using namespace taskimp;
using namespace testing_util;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::function<void(std::span<const double>, std::span<double>)> matrix_operator(const Eigen::MatrixXd& m) {
  return [m](std::span<const double> v, std::span<double> out) {
    const Eigen::VectorXd r = m * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    std::copy(r.data(), r.data() + r.size(), out.begin());
  };
}

// Linear regression f = W x + b fitted by ordinary least squares. Each output
// step has its own row of W and bias, so the normal equations split per step.
struct OlsCase {
  Dims dims{1, 3, 2};
  SampleSet train;
  SampleSet eval;
  ImputationSet first;
  ImputationSet second;
  RowMat design;  // n x (D*L1 + 1), rows [x_i, 1]
  ModelParams params{MlpArch{1, 1}, Dims{1, 3, 2}, std::vector<double>(8, 0.0)};
};

OlsCase make_ols(std::uint64_t seed) {
  OlsCase c;
  const std::size_t n = 40, in = c.dims.input_size(), L2 = c.dims.output_len;
  c.train = random_samples(c.dims, n, seed);
  c.eval = random_samples(c.dims, 15, seed + 1, Split::validation);
  c.first = labels_of(c.train.targets, L2, "first");
  c.second = c.first;
  Rng rng(seed + 2);
  for (auto& v : c.second.labels) v += standard_normal(rng);
  c.design = RowMat(n, in + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < in; ++k) c.design(i, k) = c.train.input(i)[k];
    c.design(i, in) = 1.0;
  }
  std::vector<double> theta(L2 * in + L2);
  const Eigen::MatrixXd gram = c.design.transpose() * c.design;
  for (std::size_t l = 0; l < L2; ++l) {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = c.first.at(i, l);
    const Eigen::VectorXd beta = gram.ldlt().solve(c.design.transpose() * y);
    for (std::size_t k = 0; k < in; ++k) theta[l * in + k] = beta[k];
    theta[L2 * in + l] = beta[in];
  }
  c.params = ModelParams(MlpArch{1, 1}, c.dims, theta);
  return c;
}

}  // namespace

TEST(ConjugateGradient, SolvesSpdSystemLikeCholesky) {
  const std::size_t n = 12;
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(n, n);
  const Eigen::MatrixXd spd = m * m.transpose() + Eigen::MatrixXd::Identity(n, n);
  const auto b = random_vector(n, 3);
  const auto r = conjugate_gradient(matrix_operator(spd), b, 200, 1e-12);
  ASSERT_TRUE(r.report.converged);
  EXPECT_LE(r.report.residual_norm, 1e-12);
  const Eigen::VectorXd exact = spd.llt().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(r.x[k], exact[static_cast<Eigen::Index>(k)], 1e-10);
}

TEST(ConjugateGradient, ReportsIterationLimitAndTrueResidual) {
  Eigen::VectorXd diag(6);
  diag << 1, 10, 100, 1000, 1e4, 1e5;
  const Eigen::MatrixXd a = diag.asDiagonal();
  const std::vector<double> b(6, 1.0);
  const auto r = conjugate_gradient(matrix_operator(a), b, 2, 1e-12);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 2u);
  const Eigen::VectorXd resid = Eigen::VectorXd::Ones(6) - a * Eigen::Map<const Eigen::VectorXd>(r.x.data(), 6);
  EXPECT_NEAR(r.report.residual_norm, resid.norm(), 1e-12);
}

TEST(ConjugateGradient, FlagsNonPositiveCurvature) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  a(0, 0) = -1.0;
  const auto r = conjugate_gradient(matrix_operator(a), std::vector<double>{1.0, 0.0, 0.0}, 10, 1e-10);
  EXPECT_FALSE(r.report.converged);
  EXPECT_NE(r.report.message.find("curvature"), std::string::npos);
}

TEST(Influence, HessianProductOfLinearModelIsGramMatrix) {
  const auto c = make_ols(1);
  const std::size_t n = c.train.size(), in = c.dims.input_size(), L2 = c.dims.output_len;
  const auto v = random_vector(c.params.size(), 9);
  const auto hv = training_hessian_product(c.params, c.train, c.first.labels, v, 0.25);
  const Eigen::MatrixXd gram = c.design.transpose() * c.design * (2.0 / (static_cast<double>(n) * L2));
  for (std::size_t l = 0; l < L2; ++l) {
    Eigen::VectorXd vl(in + 1);
    for (std::size_t k = 0; k < in; ++k) vl[k] = v[l * in + k];
    vl[in] = v[L2 * in + l];
    const Eigen::VectorXd expect = gram * vl + 0.25 * vl;
    for (std::size_t k = 0; k < in; ++k) EXPECT_NEAR(hv[l * in + k], expect[k], 1e-12);
    EXPECT_NEAR(hv[L2 * in + l], expect[in], 1e-12);
  }
}

TEST(Influence, MatchesClosedFormOlsLabelEffect) {
  const auto c = make_ols(2);
  const std::size_t n = c.train.size(), in = c.dims.input_size(), L2 = c.dims.output_len;
  InfluenceConfig cfg;
  cfg.damping = 1e-10;
  cfg.cg_tolerance = 1e-11;
  const auto r = estimate_influence(c.params, c.train, c.first, c.second, c.eval, cfg);
  ASSERT_TRUE(r.cg.converged) << r.cg.message;
  EXPECT_LE(r.cg.residual_norm, cfg.cg_tolerance);

  // Effect of moving label (i, l) on the refitted OLS coefficients of step l,
  // contracted with the evaluation gradient.
  const auto g = eval_loss_gradient(c.params, c.eval);
  const Eigen::MatrixXd gram_inv = (c.design.transpose() * c.design).inverse();
  for (std::size_t l = 0; l < L2; ++l) {
    Eigen::VectorXd gl(in + 1);
    for (std::size_t k = 0; k < in; ++k) gl[k] = g[l * in + k];
    gl[in] = g[L2 * in + l];
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::VectorXd dbeta = gram_inv * c.design.row(i).transpose() * (c.second.at(i, l) - c.first.at(i, l));
      const double expected = -gl.dot(dbeta);
      EXPECT_NEAR(r.gain.at(i, l), expected, 1e-6 * std::abs(expected) + 1e-14) << i << "," << l;
    }
  }
}

TEST(Influence, LargeDampingApproachesScaledKernelEstimate) {
  const auto c = make_ols(3);
  InfluenceConfig cfg;
  cfg.damping = 1e7;
  cfg.cg_tolerance = 1e-14;
  const auto r = estimate_influence(c.params, c.train, c.first, c.second, c.eval, cfg);
  const auto s = estimate_seq_sim(c.params, c.train, c.first, c.second, c.eval);
  for (std::size_t k = 0; k < s.values.size(); ++k)
    EXPECT_NEAR(r.gain.values[k] * cfg.damping, s.values[k], 1e-5 * (1.0 + std::abs(s.values[k])));
}

TEST(Influence, DampingShrinksTheSolve) {
  const auto c = make_ols(4);
  double previous = std::numeric_limits<double>::infinity();
  for (double damping : {1e-3, 1e-1, 1.0, 10.0}) {
    InfluenceConfig cfg;
    cfg.damping = damping;
    cfg.cg_tolerance = 1e-10;
    const auto r = estimate_influence(c.params, c.train, c.first, c.second, c.eval, cfg);
    double total = 0.0;
    for (double v : r.gain.values) total += v * v;
    EXPECT_LT(total, previous) << damping;
    previous = total;
  }
}

TEST(Influence, NonConvergenceIsReportedOnTheMatrix) {
  const auto c = make_ols(5);
  InfluenceConfig cfg;
  cfg.damping = 0.0;
  cfg.cg_max_iters = 1;
  cfg.cg_tolerance = 1e-14;
  const auto r = estimate_influence(c.params, c.train, c.first, c.second, c.eval, cfg);
  EXPECT_FALSE(r.cg.converged);
  EXPECT_FALSE(r.gain.converged);
  cfg.damping = -1.0;
  EXPECT_THROW(estimate_influence(c.params, c.train, c.first, c.second, c.eval, cfg), UsageError);
}

TEST(RankDiscard, HighestTotalsWithLowerIndexOnTies) {
  GainMatrix g;
  g.samples = 5;
  g.horizon = 2;
  g.values = {1, 0, 3, 0, -1, 0, 2, 1, 0, 0};  // totals 1, 3, -1, 3, 0
  g.masked.assign(10, 1);
  EXPECT_EQ(rank_discard(g, 20.0), (std::vector<std::size_t>{1}));
  EXPECT_EQ(rank_discard(g, 40.0), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(rank_discard(g, 41.0), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(rank_discard(g, 1.0), (std::vector<std::size_t>{1}));
  EXPECT_THROW(rank_discard(g, 0.0), UsageError);
  EXPECT_THROW(rank_discard(g, 100.0), UsageError);
}
