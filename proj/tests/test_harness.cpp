// Copyright 2026 The vsdesign Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "test_util.hpp"
#include "vsdesign/estimator.hpp"
#include "vsdesign/harness.hpp"
#include "vsdesign/stats.hpp"
#include "vsdesign/verify.hpp"

namespace vsdesign {
namespace {

using testing::code_of;
using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::three_by_two;

Vector y_three() {
  Vector y(3);
  y << 1, 2, 4;
  return y;
}

DesignConfig design_k(std::size_t k) {
  DesignConfig c;
  c.k = k;
  return c;
}

MonteCarloConfig mc_of(std::size_t trials, unsigned workers = 1) {
  MonteCarloConfig mc;
  mc.trials = trials;
  mc.workers = workers;
  return mc;
}

struct ExactFixedMoments {
  double mse = 0.0;   // E‖ŵ − w*‖²
  double loss = 0.0;  // E[L(ŵ)]
};

// Expectations under the exact law of π for a fixed response.
ExactFixedMoments exact_fixed(const DesignMatrix& x, const Vector& y, const SamplingDistribution& q, std::size_t k) {
  const SequenceLaw law = brute_force_vs_probs(x, q, k);
  const auto qp = std::make_shared<const SamplingDistribution>(q);
  const Weights w_star = least_squares(factorize(x), x, y);
  ExactFixedMoments out;
  for (std::size_t code = 0; code < law.size(); ++code) {
    if (law[code] == 0.0) continue;
    const auto est = subsampled_ls(x, make_design_sequence(law.decode(code), qp), y);
    out.mse += law[code] * (est.w_hat - w_star).squaredNorm();
    out.loss += law[code] * residual(x, est.w_hat, y).squaredNorm();
  }
  return out;
}

TEST(CompensatedSum, RecoversLostLowOrderBits) {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1.0);
}

TEST(Summarize, MeanAndStandardError) {
  const std::vector<double> v{1, 2, 3, 4};
  const MeanEstimate m = summarize(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 12), 1e-15);
  EXPECT_EQ(m.count, 4u);
  const std::vector<double> one{7};
  EXPECT_EQ(summarize(one).se, 0.0);
}

TEST(RunTrials, OrderedAndWorkerIndependent) {
  const std::function<double(std::size_t)> body = [](std::size_t t) { return std::sqrt(static_cast<double>(t)); };
  const auto a = run_trials<double>(101, 1, body);
  const auto b = run_trials<double>(101, 4, body);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[100], 10.0);
  const std::function<int(std::size_t)> boom = [](std::size_t t) -> int {
    if (t == 37) fail(ErrorCode::kInvariantViolated, "boom");
    return 0;
  };
  EXPECT_EQ(code_of([&] { run_trials<int>(64, 3, boom); }), ErrorCode::kInvariantViolated);
}

TEST(Within3Se, AbsoluteAllowanceForExactZeros) {
  EXPECT_TRUE(within_3se(0.29, 0.1));
  EXPECT_FALSE(within_3se(0.31, 0.1));
  EXPECT_TRUE(within_3se(1e-13, 0.0));
  EXPECT_FALSE(within_3se(1e-9, 0.0));
}

TEST(FamilyThreshold, BonferroniAdjustment) {
  EXPECT_NEAR(family_z_threshold(1), 3.0, 1e-9);
  // Oracle: scipy.stats.norm.isf(0.0026997960632601866 / 20).
  EXPECT_NEAR(family_z_threshold(10), 3.642522275831624, 1e-9);
  EXPECT_GT(family_z_threshold(100), family_z_threshold(10));
}

TEST(ResponseModel, FixedAndNoiseless) {
  const DesignMatrix x = three_by_two();
  RngStream rng(1, 0);
  const auto fixed = generate_response(ResponseModel::fixed(y_three()), x, rng);
  EXPECT_EQ(fixed.y, y_three());
  EXPECT_NEAR(fixed.ground_truth(0), 4.0 / 3, 1e-12);
  EXPECT_NEAR(fixed.ground_truth(1), 7.0 / 3, 1e-12);
  const Vector w = Vector::Ones(2);
  const auto clean = generate_response(ResponseModel::homoscedastic(w, 0.0), x, rng);
  EXPECT_EQ(clean.y, x.entries() * w);
  const auto flat = generate_response(ResponseModel::bayesian(w, 0.0, 0.0), x, rng);
  EXPECT_EQ(flat.ground_truth, w);
}

TEST(ResponseModel, HeteroscedasticNoiseHasRequestedScale) {
  const DesignMatrix x = three_by_two();
  Vector sig(3);
  sig << 0.5, 1.0, 2.0;
  const ResponseModel m = ResponseModel::heteroscedastic(Vector::Zero(2), sig);
  std::vector<std::vector<double>> cols(3);
  for (std::size_t t = 0; t < 20000; ++t) {
    RngStream rng(9, 0, t);
    const auto r = generate_response(m, x, rng);
    for (int i = 0; i < 3; ++i) cols[i].push_back(r.y(i) * r.y(i));
  }
  for (int i = 0; i < 3; ++i) {
    const MeanEstimate e = summarize(cols[i]);
    EXPECT_NEAR(e.mean, sig(i) * sig(i), 5 * e.se);
  }
}

TEST(ResponseModel, BayesianDrawsGroundTruth) {
  const DesignMatrix x = three_by_two();
  const ResponseModel m = ResponseModel::bayesian(Vector::Zero(2), 2.0, 0.0);
  std::vector<double> w0;
  for (std::size_t t = 0; t < 20000; ++t) {
    RngStream rng(5, 0, t);
    const auto r = generate_response(m, x, rng);
    EXPECT_LE((r.y - x.entries() * r.ground_truth).cwiseAbs().maxCoeff(), 1e-15);
    w0.push_back(r.ground_truth(0) * r.ground_truth(0));
  }
  const MeanEstimate e = summarize(w0);
  EXPECT_NEAR(e.mean, 4.0, 5 * e.se);
}

TEST(ResponseModel, Validation) {
  const DesignMatrix x = three_by_two();
  RngStream rng(0, 0);
  EXPECT_EQ(code_of([&] { generate_response(ResponseModel::homoscedastic(Vector::Ones(3), 1), x, rng); }),
            ErrorCode::kModelDimensionMismatch);
  EXPECT_EQ(code_of([&] { generate_response(ResponseModel::heteroscedastic(Vector::Ones(2), Vector::Ones(2)), x, rng); }),
            ErrorCode::kModelDimensionMismatch);
  EXPECT_EQ(code_of([&] { generate_response(ResponseModel::fixed(Vector::Ones(4)), x, rng); }),
            ErrorCode::kModelDimensionMismatch);
  EXPECT_EQ(code_of([&] { generate_response(ResponseModel::homoscedastic(Vector::Ones(2), -1), x, rng); }),
            ErrorCode::kInvalidConfig);
  for (auto kind : {ModelKind::kHomoscedastic, ModelKind::kHeteroscedastic, ModelKind::kBayesian, ModelKind::kFixed}) {
    EXPECT_EQ(parse_model_kind(to_string(kind)), kind);
  }
}

TEST(ResponseModel, ExpectedNoiseNorm) {
  const DesignMatrix x = three_by_two();
  const GramFactor f = factorize(x);
  EXPECT_DOUBLE_EQ(expected_noise_norm2(ResponseModel::homoscedastic(Vector::Ones(2), 2.0), x, f), 12.0);
  Vector sig(3);
  sig << 1, 2, 3;
  EXPECT_DOUBLE_EQ(expected_noise_norm2(ResponseModel::heteroscedastic(Vector::Ones(2), sig), x, f), 14.0);
  EXPECT_NEAR(expected_noise_norm2(ResponseModel::fixed(y_three()), x, f), 1.0 / 3, 1e-12);
}

TEST(AoptTrace, SupportOfThreeByTwo) {
  const DesignMatrix x = three_by_two();
  EXPECT_NEAR(aopt_trace(x, {0, 1}), 2.0, 1e-12);
  EXPECT_NEAR(aopt_trace(x, {0, 1, 2}), 4.0 / 3, 1e-12);
  EXPECT_NEAR(aopt_trace(x, {0, 2}), 3.0, 1e-12);
}

TEST(MseExcess, MatchesExactEnumeration) {
  const DesignMatrix x(gaussian_matrix(4, 2, 21));
  const Vector y = gaussian_vector(4, 22);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(3), x, f);
  const ExactFixedMoments exact = exact_fixed(x, y, q, 3);
  const MseExcessReport rep =
      estimate_mse_excess(x, ResponseModel::fixed(y), design_k(3), mc_of(20000), RngStream(4, 1));
  EXPECT_NEAR(rep.excess.value, exact.mse, 4 * rep.excess.se);
  // Fixed response: w_LS = w*, so the excess is the design variance.
  EXPECT_NEAR(rep.cross_term.value, 0.0, 1e-12);
  EXPECT_TRUE(rep.unbiased_within_3se() || rep.bias_mean.cwiseAbs().maxCoeff() < 4 * rep.bias_se.maxCoeff());
  EXPECT_NEAR(rep.minimax_ratio.value, rep.excess.value / rep.noise_norm2, 1e-12);
}

TEST(MseExcess, BitIdenticalAcrossWorkerCounts) {
  const DesignMatrix x(gaussian_matrix(15, 3, 5));
  const ResponseModel m = ResponseModel::homoscedastic(Vector::Ones(3), 0.7);
  const auto a = estimate_mse_excess(x, m, design_k(6), mc_of(300, 1), RngStream(8, 1));
  const auto b = estimate_mse_excess(x, m, design_k(6), mc_of(300, 3), RngStream(8, 1));
  EXPECT_EQ(a.excess.value, b.excess.value);
  EXPECT_EQ(a.excess.se, b.excess.se);
  EXPECT_EQ(a.bias_mean, b.bias_mean);
  EXPECT_EQ(a.aopt_trace.value, b.aopt_trace.value);
}

TEST(MseExcess, NoiselessConsistentSystemIsExact) {
  const DesignMatrix x(gaussian_matrix(10, 3, 5));
  const auto rep =
      estimate_mse_excess(x, ResponseModel::homoscedastic(Vector::Ones(3), 0.0), design_k(4), mc_of(50), RngStream(1, 1));
  EXPECT_NEAR(rep.excess.value, 0.0, 1e-18);
  EXPECT_TRUE(rep.minimax_ratio.skipped);
}

TEST(MspeExcess, WhiteningIdentityAndDefaultDistribution) {
  const DesignMatrix x(gaussian_matrix(12, 3, 31));
  const ResponseModel m = ResponseModel::heteroscedastic(Vector::Ones(3), Vector::LinSpaced(12, 0.1, 2.0));
  const MspeExcessReport rep = estimate_mspe_excess(x, m, design_k(5), mc_of(400), RngStream(3, 2));
  EXPECT_EQ(rep.whitening_pairs, 100u);
  EXPECT_TRUE(rep.whitening_ok());
  EXPECT_GE(rep.design_variance.value, 0.0);
}

TEST(LossRatio, MatchesExactEnumeration) {
  const DesignMatrix x(gaussian_matrix(4, 2, 41));
  const Vector y = gaussian_vector(4, 42);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(3), x, f);
  const ExactFixedMoments exact = exact_fixed(x, y, q, 3);
  const LossRatioReport rep = estimate_loss_ratio(x, y, design_k(3), mc_of(20000), RngStream(2, 3));
  EXPECT_NEAR(rep.excess_loss.value + rep.l_star, exact.loss, 4 * rep.excess_loss.se);
  EXPECT_NEAR(rep.ratio.value, exact.loss / rep.l_star, 4 * rep.ratio.se);
}

// Property: for a fixed response, E[L(ŵ)] − L(w*) equals E‖X(ŵ − w*)‖².
TEST(LossRatio, ExactIdentityByEnumeration) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DesignMatrix x(gaussian_matrix(4, 2, seed));
    const Vector y = gaussian_vector(4, seed + 10);
    const GramFactor f = factorize(x);
    const SamplingDistribution q = resolve_distribution(design_k(3), x, f);
    const SequenceLaw law = brute_force_vs_probs(x, q, 3);
    const auto qp = std::make_shared<const SamplingDistribution>(q);
    const Weights w_star = least_squares(f, x, y);
    const double l_star = residual(x, w_star, y).squaredNorm();
    double loss = 0.0, mspe = 0.0;
    for (std::size_t code = 0; code < law.size(); ++code) {
      if (law[code] == 0.0) continue;
      const auto est = subsampled_ls(x, make_design_sequence(law.decode(code), qp), y);
      loss += law[code] * residual(x, est.w_hat, y).squaredNorm();
      mspe += law[code] * (x.entries() * (est.w_hat - w_star)).squaredNorm();
    }
    EXPECT_NEAR(loss - l_star, mspe, 1e-10 * loss);
  }
}

TEST(LossRatio, RejectsResponseInSpan) {
  const DesignMatrix x = three_by_two();
  const Vector y = x.entries() * Vector::Ones(2);
  EXPECT_EQ(code_of([&] { estimate_loss_ratio(x, y, design_k(3), mc_of(10), RngStream(0, 0)); }),
            ErrorCode::kResponseInColumnSpan);
}

TEST(Averaging, ExcessScalesInverselyWithM) {
  const DesignMatrix x(gaussian_matrix(10, 2, 51));
  const ResponseModel m = ResponseModel::fixed(gaussian_vector(10, 52));
  const AveragingReport rep = estimate_averaged_mse_excess(x, m, design_k(4), {1, 2, 4}, 3000, 1, RngStream(6, 1));
  ASSERT_EQ(rep.excess.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    const double mm = static_cast<double>(rep.m_values[i]);
    const double se = std::hypot(mm * rep.excess[i].se, rep.excess[0].se);
    EXPECT_NEAR(mm * rep.excess[i].value, rep.excess[0].value, 4 * se);
  }
}

TEST(Averaging, Validation) {
  const DesignMatrix x = three_by_two();
  const ResponseModel m = ResponseModel::fixed(y_three());
  EXPECT_EQ(code_of([&] { estimate_averaged_mse_excess(x, m, design_k(3), {}, 5, 1, RngStream(0, 0)); }),
            ErrorCode::kEmptyList);
  EXPECT_EQ(code_of([&] { estimate_averaged_mse_excess(x, m, design_k(3), {2, 3}, 5, 1, RngStream(0, 0)); }),
            ErrorCode::kInvalidConfig);
}

TEST(Marginals, AgreeWithFormula) {
  const DesignMatrix x(gaussian_matrix(6, 2, 61));
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(5), x, f);
  EXPECT_EQ(code_of([&] { check_marginals(x, q, 5, mc_of(9999), RngStream(0, 0)); }), ErrorCode::kInvalidConfig);
  const MarginalReport rep = check_marginals(x, q, 5, mc_of(20000), RngStream(7, 4));
  double zmax = 0.0;
  for (const auto& m : rep.marginals) zmax = std::max(zmax, std::abs(m.empirical - m.formula) / m.se);
  EXPECT_LE(zmax, family_z_threshold(6));
  EXPECT_LE(rep.max_cov_abs_diff, 0.05);
}

TEST(Marginals, RunningExampleFormulaAndRelativeAccuracy) {
  const DesignMatrix x = three_by_two();
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(4), x, f);
  const MarginalReport rep = check_marginals(x, q, 4, mc_of(200000), RngStream(8, 7));
  // E[s_3] = 2 (14/48) + 2/3 = 5/4.
  EXPECT_NEAR(rep.marginals[2].formula, 1.25, 1e-12);
  for (const auto& m : rep.marginals) EXPECT_NEAR(m.empirical, m.formula, 0.02 * m.formula);
}

TEST(Marginals, SizeDReducesToLeverage) {
  const DesignMatrix x(gaussian_matrix(6, 2, 62));
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(2), x, f);
  const MarginalReport rep = check_marginals(x, q, 2, mc_of(20000), RngStream(8, 8));
  const Vector lev = compute_scores(x, f).leverage;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(rep.marginals[i].formula, lev(i), 1e-12);
    EXPECT_LE(std::abs(rep.marginals[i].empirical - lev(i)), family_z_threshold(6) * rep.marginals[i].se);
  }
}

TEST(SketchMoments, PseudoinverseFrobeniusRate) {
  const DesignMatrix x = three_by_two();
  const SamplingDistribution q = resolve_distribution(design_k(3), x, factorize(x));
  for (std::size_t m : {1000u, 10000u}) {
    const auto rep = estimate_pseudoinverse_mean(x, q, 3, mc_of(m), RngStream(5, m));
    EXPECT_LE(rep.frobenius_error, 5.0 / std::sqrt(static_cast<double>(m)));
  }
}

// Trends in k for a fixed response on a d = 3 instance, k in {d+2, 2d, 4d, 8d}.
class TrendInK : public ::testing::Test {
 protected:
  const DesignMatrix x{gaussian_matrix(40, 3, 390)};
  const Vector y = x.entries() * Vector::Ones(3) + gaussian_vector(40, 391);
  const std::vector<std::size_t> ks{5, 6, 12, 24};
};

TEST_F(TrendInK, NormalizedExcessBoundedAndNonIncreasing) {
  const GramFactor f = factorize(x);
  const double l_star = residual(x, least_squares(f, x, y), y).squaredNorm();
  const double phi = f.gram_inverse().trace();
  std::vector<double> v, se;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto rep = estimate_mse_excess(x, ResponseModel::fixed(y), design_k(ks[i]), mc_of(4000), RngStream(39, i));
    const double scale = static_cast<double>(ks[i]) / (l_star * phi);
    v.push_back(rep.excess.value * scale);
    se.push_back(rep.excess.se * scale);
  }
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1] + 3 * std::hypot(se[i], se[i - 1]));
  for (double value : v) EXPECT_LT(value, 10.0);
}

TEST_F(TrendInK, LossRatioApproachesOne) {
  std::vector<MetricEstimate> r;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    r.push_back(estimate_loss_ratio(x, y, design_k(ks[i]), mc_of(4000), RngStream(41, i)).ratio);
  }
  for (std::size_t i = 1; i < r.size(); ++i) {
    EXPECT_LE(r[i].value - 1.0, r[i - 1].value - 1.0 + 3 * std::hypot(r[i].se, r[i - 1].se));
  }
  EXPECT_GT(r.back().value, 1.0);
}

TEST(SketchMoments, PseudoinverseMeanAndInverseBound) {
  const DesignMatrix x(gaussian_matrix(8, 3, 71));
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design_k(5), x, f);
  const auto pinv = estimate_pseudoinverse_mean(x, q, 5, mc_of(5000), RngStream(1, 5));
  EXPECT_LE(pinv.max_abs_z, family_z_threshold(24));
  const auto inv = estimate_inverse_moment(x, q, 5, mc_of(5000), RngStream(1, 6));
  EXPECT_TRUE(inv.holds());
}

TEST(Verification, PassesOnRunningExample) {
  VerifyConfig cfg;
  cfg.design = design_k(3);
  cfg.model = ResponseModel::fixed(y_three());
  cfg.mc = mc_of(10000);
  cfg.seed = 3;
  const EvalReport rep = run_verification(three_by_two(), cfg);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.checks.size(), 9u);
  for (const auto& c : rep.checks) EXPECT_NE(c.status, CheckStatus::kSkipped) << c.name;
  EXPECT_FALSE(rep.expected_loss_ratio.skipped);
}

TEST(Verification, SkipsWhatDoesNotApply) {
  VerifyConfig cfg;
  cfg.design = design_k(4);
  cfg.model = ResponseModel::homoscedastic(Vector::Ones(3), 1.0);
  cfg.mc = mc_of(500);
  const EvalReport rep = run_verification(DesignMatrix(gaussian_matrix(9, 3, 2)), cfg);
  EXPECT_TRUE(rep.expected_loss_ratio.skipped);
  int skipped = 0;
  for (const auto& c : rep.checks) skipped += c.status == CheckStatus::kSkipped;
  EXPECT_EQ(skipped, 2);  // expected loss identity and marginals
}

}  // namespace
}  // namespace vsdesign
