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

#ifndef VSDESIGN_VERIFY_HPP
#define VSDESIGN_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vsdesign/harness.hpp"

namespace vsdesign {

enum class CheckStatus { kPass, kFail, kSkipped };

inline std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kSkipped;
  /// The quantity compared against `threshold` (statistic <= threshold passes).
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyConfig {
  DesignConfig design;
  ResponseModel model;
  MonteCarloConfig mc;
  std::uint64_t seed = 0;
};

struct EvalReport {
  MetricEstimate mse_excess;
  MetricEstimate mspe_excess;
  MetricEstimate expected_loss_ratio;
  MetricEstimate minimax_ratio;
  MetricEstimate aopt_trace;
  std::size_t trial_count = 0;

  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  double alpha = kDefaultAlpha;
  DistributionKind dist = DistributionKind::kMixture;
  ModelKind model = ModelKind::kFixed;
  std::uint64_t seed = 0;

  std::vector<CheckResult> checks;

  bool passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckResult& c) { return c.status == CheckStatus::kFail; });
  }
};

/// z such that a two-sided normal tail beyond z has mass 0.0027 / m, i.e.
/// the 3-SE rule Bonferroni-adjusted for m simultaneous coordinates.
inline double family_z_threshold(std::size_t m) {
  const double target = 0.0026997960632601866 / static_cast<double>(std::max<std::size_t>(m, 1));
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::max(3.0, 0.5 * (lo + hi));
}

namespace detail {

// Stream ids keep the Monte Carlo runs of different checks independent.
enum VerifyStream : std::uint64_t {
  kMseStream = 1,
  kMspeStream = 2,
  kLossStream = 3,
  kMarginalStream = 4,
  kPinvStream = 5,
  kInverseMomentStream = 6,
  kLossMspeStream = 7,
};

inline CheckResult make_check(std::string name, bool ok, double stat, double thresh, std::string detail = {}) {
  return {std::move(name), ok ? CheckStatus::kPass : CheckStatus::kFail, stat, thresh, std::move(detail)};
}

inline CheckResult skipped_check(std::string name, std::string reason) {
  return {std::move(name), CheckStatus::kSkipped, 0.0, 0.0, std::move(reason)};
}

}  // namespace detail

/// Runs the identity and bound checks on X for one design configuration.
inline EvalReport run_verification(const DesignMatrix& x, const VerifyConfig& cfg) {
  using namespace detail;
  EvalReport rep;
  rep.n = x.n();
  rep.d = x.d();
  rep.k = cfg.design.k;
  rep.alpha = cfg.design.alpha;
  rep.dist = cfg.design.dist;
  rep.model = cfg.model.kind;
  rep.seed = cfg.seed;
  rep.trial_count = cfg.mc.trials;

  const GramFactor f = factorize(x);
  const auto d = static_cast<Eigen::Index>(x.d());
  const SamplingDistribution q = resolve_distribution(cfg.design, x, f);
  DesignConfig design_x = cfg.design;
  design_x.q = q;

  {
    const Matrix gram = x.entries().transpose() * x.entries();
    const double r = (gram * f.gram_inverse() - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    rep.checks.push_back(make_check("gram_inverse_residual", r <= 1e-8, r, 1e-8));
  }
  {
    const ScoreProfile s = compute_scores(x, f);
    const double dd = static_cast<double>(x.d());
    const double e = std::max(std::abs(s.leverage.sum() - dd) / dd, std::abs(s.inverse.sum() - s.phi) / s.phi);
    rep.checks.push_back(make_check("score_sums", e <= 1e-8, e, 1e-8, "relative error of sum(l)=d and sum(v)=phi"));
  }

  const MseExcessReport mse = estimate_mse_excess(x, cfg.model, design_x, cfg.mc, RngStream(cfg.seed, kMseStream));
  rep.mse_excess = mse.excess;
  rep.minimax_ratio = mse.minimax_ratio;
  rep.aopt_trace = mse.aopt_trace;
  {
    double zmax = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = std::abs(mse.bias_mean(j));
      const double allowance = 1e-12 * std::max(1.0, std::abs(mse.w_ls_mean(j)));
      zmax = std::max(zmax, diff <= allowance ? 0.0 : (mse.bias_se(j) > 0.0 ? diff / mse.bias_se(j) : 1e300));
    }
    const double z = family_z_threshold(x.d());
    rep.checks.push_back(make_check("unbiasedness", zmax <= z, zmax, z, "max |mean(w_hat - w_ls)| / SE over coordinates"));
  }
  {
    const double se = mse.cross_term.se;
    const double v = std::abs(mse.cross_term.value);
    rep.checks.push_back(make_check("mse_decomposition", within_3se(v, se, mse.excess.value), v, 3.0 * se,
                                    "excess MSE minus E|w_hat - w_ls|^2"));
  }

  const MspeExcessReport mspe = estimate_mspe_excess(x, cfg.model, cfg.design, cfg.mc, RngStream(cfg.seed, kMspeStream));
  rep.mspe_excess = mspe.excess;
  rep.checks.push_back(make_check("whitening_identity", mspe.whitening_ok(), mspe.whitening_max_rel_error, 1e-8,
                                  "paired |X(w_hat - w)|^2 vs |U(v_hat - v)|^2"));

  const bool fixed_model = cfg.model.kind == ModelKind::kFixed;
  const double l_star = fixed_model ? expected_noise_norm2(cfg.model, x, f) : 0.0;
  const double tiny = fixed_model ? 1e-12 * cfg.model.fixed_y.norm() : 0.0;
  if (fixed_model && l_star > tiny * tiny) {
    const LossRatioReport loss =
        estimate_loss_ratio(x, cfg.model.fixed_y, design_x, cfg.mc, RngStream(cfg.seed, kLossStream));
    rep.expected_loss_ratio = loss.ratio;
    const MspeExcessReport mspe_x =
        estimate_mspe_excess(x, cfg.model, design_x, cfg.mc, RngStream(cfg.seed, kLossMspeStream), 0);
    const double gap = std::abs(loss.excess_loss.value - mspe_x.excess.value);
    const double se = std::hypot(loss.excess_loss.se, mspe_x.excess.se);
    rep.checks.push_back(make_check("expected_loss_identity", within_3se(gap, se, loss.l_star), gap, 3.0 * se,
                                    "E[L(w_hat)] - L(w*) vs MSPE"));
  } else {
    const std::string why = fixed_model ? "response lies in the column span of X" : "requires the fixed response model";
    rep.expected_loss_ratio = MetricEstimate::skip(why);
    rep.checks.push_back(skipped_check("expected_loss_identity", why));
  }

  if (cfg.mc.trials >= kMinMarginalTrials) {
    const MarginalReport marg =
        check_marginals(x, q, cfg.design.k, cfg.mc, RngStream(cfg.seed, kMarginalStream));
    double zmax = 0.0;
    for (const auto& m : marg.marginals) {
      const double diff = std::abs(m.empirical - m.formula);
      zmax = std::max(zmax, diff <= 1e-12 ? 0.0 : (m.se > 0.0 ? diff / m.se : 1e300));
    }
    const double z = family_z_threshold(x.n());
    rep.checks.push_back(make_check("marginals", zmax <= z, zmax, z, "max |mean(s_i) - ((k-d)q_i + l_i)| / SE"));
  } else {
    rep.checks.push_back(skipped_check("marginals", "needs at least 10000 trials"));
  }

  {
    const PseudoinverseMomentReport pinv =
        estimate_pseudoinverse_mean(x, q, cfg.design.k, cfg.mc, RngStream(cfg.seed, kPinvStream));
    const double z = family_z_threshold(static_cast<std::size_t>(pinv.mean.size()));
    rep.checks.push_back(make_check("pseudoinverse_unbiasedness", pinv.max_abs_z <= z, pinv.max_abs_z, z,
                                    "max |mean((S X)^+ S) - X^+| / SE over entries"));
  }
  {
    const InverseMomentReport inv =
        estimate_inverse_moment(x, q, cfg.design.k, cfg.mc, RngStream(cfg.seed, kInverseMomentStream));
    rep.checks.push_back(make_check("inverse_moment_bound", inv.holds(), -inv.min_eigenvalue, 0.0,
                                    "negated smallest eigenvalue of k/(k-d+1)(X'X)^-1 + 3SE I - mean"));
  }
  return rep;
}

}  // namespace vsdesign

#endif  // VSDESIGN_VERIFY_HPP
