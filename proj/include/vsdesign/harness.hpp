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

// Monte Carlo estimators for the quantities that rescaled volume sampling is
// supposed to control: excess MSE and MSPE over full least squares, expected
// square loss, multiplicity moments, and the first and inverse moments of the
// sketch.
//
// Every estimator is a deterministic function of its inputs and the key of
// the RngStream it is handed. Trial t draws from streams keyed by
// (master_seed, stream_id, 4t + purpose), results are stored in trial order
// and reduced with compensated sums, so worker count never changes a report.

#ifndef VSDESIGN_HARNESS_HPP
#define VSDESIGN_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vsdesign/error.hpp"
#include "vsdesign/estimator.hpp"
#include "vsdesign/linalg.hpp"
#include "vsdesign/rng.hpp"
#include "vsdesign/sampler.hpp"
#include "vsdesign/scores.hpp"
#include "vsdesign/stats.hpp"

namespace vsdesign {

// ---------------------------------------------------------------------------
// Response models

enum class ModelKind { kHomoscedastic, kHeteroscedastic, kBayesian, kFixed };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kHomoscedastic: return "homo";
    case ModelKind::kHeteroscedastic: return "hetero";
    case ModelKind::kBayesian: return "bayes";
    case ModelKind::kFixed: return "fixed";
  }
  return "unknown";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "homo") return ModelKind::kHomoscedastic;
  if (s == "hetero") return ModelKind::kHeteroscedastic;
  if (s == "bayes") return ModelKind::kBayesian;
  if (s == "fixed") return ModelKind::kFixed;
  return std::nullopt;
}

/// How responses are generated:
///   homoscedastic    y = Xw* + ξ,  ξ_i ~ N(0, sigma²)
///   heteroscedastic  y = Xw* + ξ,  ξ_i ~ N(0, sigma_list_i²)
///   bayesian         w ~ N(w*, prior_scale² I),  y = Xw + ξ,  ξ_i ~ N(0, sigma²)
///   fixed            y = fixed_y
struct ResponseModel {
  ModelKind kind = ModelKind::kFixed;
  Weights w_star;
  double sigma = 0.0;
  Vector sigma_list;
  double prior_scale = 0.0;
  Vector fixed_y;

  static ResponseModel homoscedastic(Weights w, double sigma) {
    ResponseModel m;
    m.kind = ModelKind::kHomoscedastic;
    m.w_star = std::move(w);
    m.sigma = sigma;
    return m;
  }
  static ResponseModel heteroscedastic(Weights w, Vector sigmas) {
    ResponseModel m;
    m.kind = ModelKind::kHeteroscedastic;
    m.w_star = std::move(w);
    m.sigma_list = std::move(sigmas);
    return m;
  }
  static ResponseModel bayesian(Weights prior_mean, double prior_scale, double sigma) {
    ResponseModel m;
    m.kind = ModelKind::kBayesian;
    m.w_star = std::move(prior_mean);
    m.prior_scale = prior_scale;
    m.sigma = sigma;
    return m;
  }
  static ResponseModel fixed(Vector y) {
    ResponseModel m;
    m.kind = ModelKind::kFixed;
    m.fixed_y = std::move(y);
    return m;
  }
};

inline void validate(const ResponseModel& m, const DesignMatrix& x) {
  const auto n = static_cast<Eigen::Index>(x.n());
  const auto d = static_cast<Eigen::Index>(x.d());
  auto mismatch = [](const std::string& what) { fail(ErrorCode::kModelDimensionMismatch, what); };
  if (m.kind == ModelKind::kFixed) {
    if (m.fixed_y.size() != n) mismatch("fixed response must have length n");
    return;
  }
  if (m.w_star.size() != d) mismatch("w* must have length d");
  if (m.kind == ModelKind::kHeteroscedastic) {
    if (m.sigma_list.size() != n) mismatch("sigma list must have length n");
    if ((m.sigma_list.array() < 0.0).any()) fail(ErrorCode::kInvalidConfig, "noise scales must be non-negative");
  } else if (m.sigma < 0.0) {
    fail(ErrorCode::kInvalidConfig, "sigma must be non-negative");
  }
  if (m.prior_scale < 0.0) fail(ErrorCode::kInvalidConfig, "prior scale must be non-negative");
}

struct GeneratedResponse {
  Vector y;
  Weights ground_truth;
};

inline GeneratedResponse generate_response(const ResponseModel& m, const DesignMatrix& x, const GramFactor& f,
                                           RngStream& rng) {
  validate(m, x);
  const auto n = static_cast<Eigen::Index>(x.n());
  GeneratedResponse r;
  switch (m.kind) {
    case ModelKind::kFixed:
      r.y = m.fixed_y;
      r.ground_truth = least_squares(f, x, m.fixed_y);
      return r;
    case ModelKind::kBayesian:
      r.ground_truth = m.w_star;
      for (Eigen::Index j = 0; j < r.ground_truth.size(); ++j) r.ground_truth(j) += m.prior_scale * rng.normal();
      break;
    case ModelKind::kHomoscedastic:
    case ModelKind::kHeteroscedastic:
      r.ground_truth = m.w_star;
      break;
  }
  r.y = x.entries() * r.ground_truth;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = m.kind == ModelKind::kHeteroscedastic ? m.sigma_list(i) : m.sigma;
    if (s > 0.0) r.y(i) += s * rng.normal();
  }
  return r;
}

inline GeneratedResponse generate_response(const ResponseModel& m, const DesignMatrix& x, RngStream& rng) {
  return generate_response(m, x, factorize(x), rng);
}

/// E‖ξ‖² with ξ = Xw − y for the ground truth w of each trial. For the
/// bayesian model this is conditional on the drawn w, i.e. tr(Var[noise]).
inline double expected_noise_norm2(const ResponseModel& m, const DesignMatrix& x, const GramFactor& f) {
  validate(m, x);
  const double n = static_cast<double>(x.n());
  switch (m.kind) {
    case ModelKind::kHomoscedastic:
    case ModelKind::kBayesian:
      return n * m.sigma * m.sigma;
    case ModelKind::kHeteroscedastic:
      return m.sigma_list.squaredNorm();
    case ModelKind::kFixed:
      return residual(x, least_squares(f, x, m.fixed_y), m.fixed_y).squaredNorm();
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Configuration and result types

struct DesignConfig {
  std::size_t k = 0;
  DistributionKind dist = DistributionKind::kMixture;
  double alpha = kDefaultAlpha;
  /// Overrides dist/alpha when set.
  std::optional<SamplingDistribution> q;
};

inline SamplingDistribution resolve_distribution(const DesignConfig& c, const DesignMatrix& x, const GramFactor& f) {
  if (c.q) {
    if (c.q->n() != x.n()) fail(ErrorCode::kDimensionMismatch, "distribution length differs from n");
    return *c.q;
  }
  return make_distribution(compute_scores(x, f), x.n(), x.d(), c.dist, c.alpha);
}

struct MonteCarloConfig {
  std::size_t trials = 1000;
  unsigned workers = 1;
};

struct MetricEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t trials = 0;
  bool skipped = false;
  std::string reason;

  static MetricEstimate from(const MeanEstimate& m) { return {m.mean, m.se, m.count, false, {}}; }
  static MetricEstimate skip(std::string why) {
    MetricEstimate e;
    e.skipped = true;
    e.reason = std::move(why);
    return e;
  }
};

/// |value| <= 3 se, with a tiny absolute allowance for rounding in exact
/// identities.
inline bool within_3se(double value, double se, double scale = 1.0) {
  return std::abs(value) <= 3.0 * se + 1e-12 * std::max(1.0, std::abs(scale));
}

namespace detail {

enum StreamPurpose : std::uint64_t { kDesignDraw = 0, kResponseDraw = 1, kExtraDraw = 2 };

inline RngStream trial_stream(const RngStream& key, std::size_t trial, StreamPurpose purpose) {
  return RngStream(key.master_seed(), key.stream_id(), 4 * static_cast<std::uint64_t>(trial) + purpose);
}

inline void require_trials(const MonteCarloConfig& mc) {
  if (mc.trials < 1) fail(ErrorCode::kInvalidConfig, "trials must be at least 1");
}

}  // namespace detail

/// tr((X_SᵀX_S)^{-1}) for the rows in `subset`.
inline double aopt_trace(const DesignMatrix& x, const std::vector<std::size_t>& subset) {
  for (auto i : subset) {
    if (i >= x.n()) fail(ErrorCode::kDimensionMismatch, "subset index out of range");
  }
  return factorize(DesignMatrix(x.select_rows(subset))).gram_inverse().trace();
}

// ---------------------------------------------------------------------------
// MSE

struct MseExcessReport {
  /// E‖ŵ − w‖² − E‖w_LS − w‖².
  MetricEstimate excess;
  /// E‖ŵ − w_LS‖².
  MetricEstimate design_variance;
  /// excess − design_variance = 2 E[(ŵ − w_LS)ᵀ(w_LS − w)], zero for unbiased ŵ.
  MetricEstimate cross_term;
  /// E‖ξ‖².
  double noise_norm2 = 0.0;
  /// excess / E‖ξ‖².
  MetricEstimate minimax_ratio;
  /// Mean of tr((X_SᵀX_S)^{-1}) over the supports of the sampled designs.
  MetricEstimate aopt_trace;
  /// Mean and standard error of ŵ − w_LS per coordinate.
  Vector bias_mean;
  Vector bias_se;
  /// Mean of ŵ and of w_LS per coordinate.
  Vector w_hat_mean;
  Vector w_ls_mean;
  std::size_t trials = 0;

  bool unbiased_within_3se() const {
    for (Eigen::Index j = 0; j < bias_mean.size(); ++j) {
      if (!within_3se(bias_mean(j), bias_se(j), w_ls_mean(j))) return false;
    }
    return true;
  }
};

inline MseExcessReport estimate_mse_excess(const DesignMatrix& x, const ResponseModel& model, const DesignConfig& design,
                                           const MonteCarloConfig& mc, const RngStream& rng) {
  detail::require_trials(mc);
  validate(model, x);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design, x, f);
  const RescaledVolumeSampler sampler(x, f, q, design.k);
  const auto d = static_cast<Eigen::Index>(x.d());

  struct Record {
    double excess = 0, dvar = 0, aopt = 0;
    Vector diff, w_hat, w_ls;
  };
  auto records = run_trials<Record>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    RngStream response_rng = detail::trial_stream(rng, t, detail::kResponseDraw);
    const GeneratedResponse resp = generate_response(model, x, f, response_rng);
    const Weights w_ls = least_squares(f, x, resp.y);
    const auto [pi, stats] = sampler.sample(design_rng);
    const SubsampledEstimate est = subsampled_ls(x, pi, resp.y);
    Record r;
    r.excess = (est.w_hat - resp.ground_truth).squaredNorm() - (w_ls - resp.ground_truth).squaredNorm();
    r.diff = est.w_hat - w_ls;
    r.dvar = r.diff.squaredNorm();
    r.aopt = aopt_trace(x, support(pi));
    r.w_hat = est.w_hat;
    r.w_ls = w_ls;
    return r;
  });

  const std::size_t m = records.size();
  std::vector<double> excess(m), dvar(m), cross(m), aopt(m), col(m), col2(m), col3(m);
  for (std::size_t t = 0; t < m; ++t) {
    excess[t] = records[t].excess;
    dvar[t] = records[t].dvar;
    cross[t] = records[t].excess - records[t].dvar;
    aopt[t] = records[t].aopt;
  }
  MseExcessReport rep;
  rep.trials = m;
  rep.excess = MetricEstimate::from(summarize(excess));
  rep.design_variance = MetricEstimate::from(summarize(dvar));
  rep.cross_term = MetricEstimate::from(summarize(cross));
  rep.aopt_trace = MetricEstimate::from(summarize(aopt));
  rep.bias_mean.resize(d);
  rep.bias_se.resize(d);
  rep.w_hat_mean.resize(d);
  rep.w_ls_mean.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t t = 0; t < m; ++t) {
      col[t] = records[t].diff(j);
      col2[t] = records[t].w_hat(j);
      col3[t] = records[t].w_ls(j);
    }
    const MeanEstimate b = summarize(col);
    rep.bias_mean(j) = b.mean;
    rep.bias_se(j) = b.se;
    rep.w_hat_mean(j) = summarize(col2).mean;
    rep.w_ls_mean(j) = summarize(col3).mean;
  }
  rep.noise_norm2 = expected_noise_norm2(model, x, f);
  if (rep.noise_norm2 > 0.0) {
    rep.minimax_ratio = rep.excess;
    rep.minimax_ratio.value /= rep.noise_norm2;
    rep.minimax_ratio.se /= rep.noise_norm2;
  } else {
    rep.minimax_ratio = MetricEstimate::skip("E|xi|^2 = 0: response lies in the column span");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// MSPE through the whitened matrix U = X (XᵀX)^{-1/2}

struct MspeExcessReport {
  /// E‖U(v̂ − v)‖² − E‖U(v_LS − v)‖² = E‖v̂ − v‖² − E‖v_LS − v‖².
  MetricEstimate excess;
  /// E‖v̂ − v_LS‖².
  MetricEstimate design_variance;
  double noise_norm2 = 0.0;
  /// Largest relative gap between ‖X(ŵ − w)‖² and ‖U(v̂ − v)‖² over the
  /// paired draws.
  double whitening_max_rel_error = 0.0;
  std::size_t whitening_pairs = 0;
  std::size_t trials = 0;

  bool whitening_ok(double tol = 1e-8) const { return whitening_max_rel_error <= tol; }
};

/// When `design.q` is unset, q is built from the scores of U (whose inverse
/// scores coincide with its leverage scores); pass X's q explicitly to
/// estimate the MSPE of the X-based design instead.
inline MspeExcessReport estimate_mspe_excess(const DesignMatrix& x, const ResponseModel& model,
                                             const DesignConfig& design, const MonteCarloConfig& mc,
                                             const RngStream& rng, std::size_t whitening_pairs = 100) {
  detail::require_trials(mc);
  validate(model, x);
  const GramFactor fx = factorize(x);
  const DesignMatrix u = whiten(x, fx);
  const GramFactor fu = factorize(u);
  const SamplingDistribution q = resolve_distribution(design, u, fu);
  const RescaledVolumeSampler sampler(u, fu, q, design.k);
  const Matrix ut = u.entries().transpose();

  struct Record {
    double excess = 0, dvar = 0;
    double rel_error = -1.0;
  };
  auto records = run_trials<Record>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    RngStream response_rng = detail::trial_stream(rng, t, detail::kResponseDraw);
    const GeneratedResponse resp = generate_response(model, x, fx, response_rng);
    const Vector xw = x.entries() * resp.ground_truth;
    const Vector v_true = ut * xw;
    const Vector v_ls = ut * resp.y;
    const auto [pi, stats] = sampler.sample(design_rng);
    const SubsampledEstimate est = subsampled_ls(u, pi, resp.y);
    Record r;
    r.excess = (est.w_hat - v_true).squaredNorm() - (v_ls - v_true).squaredNorm();
    r.dvar = (est.w_hat - v_ls).squaredNorm();
    if (t < whitening_pairs) {
      const SubsampledEstimate est_x = subsampled_ls(x, pi, resp.y);
      const double lhs = (x.entries() * est_x.w_hat - xw).squaredNorm();
      const double rhs = (u.entries() * (est.w_hat - v_true)).squaredNorm();
      // Floor keeps an exact zero on one side from reading as a full mismatch.
      const double floor = 1e-8 * resp.y.squaredNorm();
      r.rel_error = std::abs(lhs - rhs) / std::max({lhs, rhs, floor, 1e-300});
    }
    return r;
  });

  const std::size_t m = records.size();
  std::vector<double> excess(m), dvar(m);
  MspeExcessReport rep;
  for (std::size_t t = 0; t < m; ++t) {
    excess[t] = records[t].excess;
    dvar[t] = records[t].dvar;
    if (records[t].rel_error >= 0.0) {
      ++rep.whitening_pairs;
      rep.whitening_max_rel_error = std::max(rep.whitening_max_rel_error, records[t].rel_error);
    }
  }
  rep.trials = m;
  rep.excess = MetricEstimate::from(summarize(excess));
  rep.design_variance = MetricEstimate::from(summarize(dvar));
  rep.noise_norm2 = expected_noise_norm2(model, x, fx);
  return rep;
}

// ---------------------------------------------------------------------------
// Expected square loss for a fixed response

struct LossRatioReport {
  /// E[L(ŵ)] / L(w*).
  MetricEstimate ratio;
  /// E[L(ŵ)] − L(w*).
  MetricEstimate excess_loss;
  double l_star = 0.0;
  std::size_t trials = 0;
};

inline LossRatioReport estimate_loss_ratio(const DesignMatrix& x, const Vector& fixed_y, const DesignConfig& design,
                                           const MonteCarloConfig& mc, const RngStream& rng) {
  detail::require_trials(mc);
  const GramFactor f = factorize(x);
  const Weights w_star = least_squares(f, x, fixed_y);
  const double l_star = residual(x, w_star, fixed_y).squaredNorm();
  const double tiny = 1e-12 * fixed_y.norm();
  if (l_star <= tiny * tiny) {
    fail(ErrorCode::kResponseInColumnSpan, "L(w*) is zero; the loss ratio is undefined");
  }
  const SamplingDistribution q = resolve_distribution(design, x, f);
  const RescaledVolumeSampler sampler(x, f, q, design.k);

  auto losses = run_trials<double>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    const auto [pi, stats] = sampler.sample(design_rng);
    const SubsampledEstimate est = subsampled_ls(x, pi, fixed_y);
    return residual(x, est.w_hat, fixed_y).squaredNorm();
  });
  std::vector<double> ratio(losses.size()), excess(losses.size());
  for (std::size_t t = 0; t < losses.size(); ++t) {
    ratio[t] = losses[t] / l_star;
    excess[t] = losses[t] - l_star;
  }
  LossRatioReport rep;
  rep.l_star = l_star;
  rep.trials = losses.size();
  rep.ratio = MetricEstimate::from(summarize(ratio));
  rep.excess_loss = MetricEstimate::from(summarize(excess));
  return rep;
}

// ---------------------------------------------------------------------------
// Averaged designs

struct AveragingReport {
  std::vector<std::size_t> m_values;
  /// Excess MSE of the m-design average, one entry per m.
  std::vector<MetricEstimate> excess;
  std::size_t blocks = 0;
};

/// Draws `blocks` independent responses, each shared by block_size = max(m)
/// designs. For every m (which must divide block_size) a block contributes
/// the mean excess of its block_size/m disjoint m-averages, so all m values
/// are estimated from the same designs.
inline AveragingReport estimate_averaged_mse_excess(const DesignMatrix& x, const ResponseModel& model,
                                                    const DesignConfig& design, std::vector<std::size_t> m_values,
                                                    std::size_t blocks, unsigned workers, const RngStream& rng) {
  if (m_values.empty()) fail(ErrorCode::kEmptyList, "no averaging sizes given");
  if (blocks < 1) fail(ErrorCode::kInvalidConfig, "need at least one block");
  const std::size_t block = *std::max_element(m_values.begin(), m_values.end());
  for (auto m : m_values) {
    if (m == 0 || block % m != 0) fail(ErrorCode::kInvalidConfig, "every m must divide the largest m");
  }
  validate(model, x);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = resolve_distribution(design, x, f);
  const RescaledVolumeSampler sampler(x, f, q, design.k);

  auto rows = run_trials<std::vector<double>>(blocks, workers, [&](std::size_t b) {
    RngStream response_rng = detail::trial_stream(rng, b, detail::kResponseDraw);
    RngStream design_rng = detail::trial_stream(rng, b, detail::kDesignDraw);
    const GeneratedResponse resp = generate_response(model, x, f, response_rng);
    const Weights w_ls = least_squares(f, x, resp.y);
    const double ls_err = (w_ls - resp.ground_truth).squaredNorm();
    std::vector<SubsampledEstimate> ests;
    ests.reserve(block);
    for (std::size_t j = 0; j < block; ++j) {
      const auto [pi, stats] = sampler.sample(design_rng);
      ests.push_back(subsampled_ls(x, pi, resp.y));
    }
    std::vector<double> out;
    for (auto m : m_values) {
      CompensatedSum s;
      for (std::size_t g = 0; g < block / m; ++g) {
        std::vector<SubsampledEstimate> group(ests.begin() + static_cast<std::ptrdiff_t>(g * m),
                                              ests.begin() + static_cast<std::ptrdiff_t>((g + 1) * m));
        s.add((averaged_estimate(group) - resp.ground_truth).squaredNorm() - ls_err);
      }
      out.push_back(s.value() / static_cast<double>(block / m));
    }
    return out;
  });

  AveragingReport rep;
  rep.m_values = m_values;
  rep.blocks = blocks;
  std::vector<double> col(blocks);
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    for (std::size_t b = 0; b < blocks; ++b) col[b] = rows[b][i];
    rep.excess.push_back(MetricEstimate::from(summarize(col)));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Multiplicity moments

struct IndexMarginal {
  double empirical = 0.0;
  double se = 0.0;
  /// (k − d) q_i + l_i.
  double formula = 0.0;
  bool flagged = false;
};

struct MarginalReport {
  std::vector<IndexMarginal> marginals;
  Matrix cov_empirical;
  /// 1{i=j} E[s_i] − (k − d) q_i q_j − l_ij².
  Matrix cov_formula;
  double max_cov_abs_diff = 0.0;
  std::size_t trials = 0;

  bool all_within_3se() const {
    return std::none_of(marginals.begin(), marginals.end(), [](const IndexMarginal& m) { return m.flagged; });
  }
  double max_abs_deviation() const {
    double v = 0.0;
    for (const auto& m : marginals) v = std::max(v, std::abs(m.empirical - m.formula));
    return v;
  }
};

inline constexpr std::size_t kMinMarginalTrials = 10'000;

inline MarginalReport check_marginals(const DesignMatrix& x, const SamplingDistribution& q, std::size_t k,
                                      const MonteCarloConfig& mc, const RngStream& rng) {
  if (mc.trials < kMinMarginalTrials) {
    fail(ErrorCode::kInvalidConfig, "marginal check needs at least 10000 trials");
  }
  const GramFactor f = factorize(x);
  const RescaledVolumeSampler sampler(x, f, q, k);
  const std::size_t n = x.n();
  const auto ni = static_cast<Eigen::Index>(n);

  auto counts = run_trials<std::vector<std::size_t>>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    return multiplicity_counts(sampler.sample(design_rng).first, n);
  });

  const ScoreProfile s = compute_scores(x, f);
  const Matrix hat = cross_leverage(x, f);
  const double kd = static_cast<double>(k - x.d());

  MarginalReport rep;
  rep.trials = counts.size();
  std::vector<double> col(counts.size());
  Vector mean(ni);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < counts.size(); ++t) col[t] = static_cast<double>(counts[t][i]);
    const MeanEstimate m = summarize(col);
    IndexMarginal im;
    im.empirical = m.mean;
    im.se = m.se;
    im.formula = kd * q[i] + s.leverage(static_cast<Eigen::Index>(i));
    im.flagged = !within_3se(im.empirical - im.formula, im.se, im.formula);
    rep.marginals.push_back(im);
    mean(static_cast<Eigen::Index>(i)) = m.mean;
  }
  rep.cov_empirical = Matrix::Zero(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = i; j < ni; ++j) {
      CompensatedSum acc;
      for (const auto& c : counts) {
        acc.add((static_cast<double>(c[static_cast<std::size_t>(i)]) - mean(i)) *
                (static_cast<double>(c[static_cast<std::size_t>(j)]) - mean(j)));
      }
      const double cov = acc.value() / static_cast<double>(counts.size() - 1);
      rep.cov_empirical(i, j) = cov;
      rep.cov_empirical(j, i) = cov;
    }
  }
  rep.cov_formula.resize(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double diag = i == j ? rep.marginals[static_cast<std::size_t>(i)].formula : 0.0;
      rep.cov_formula(i, j) = diag - kd * q[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j)] -
                              hat(i, j) * hat(i, j);
    }
  }
  rep.max_cov_abs_diff = (rep.cov_empirical - rep.cov_formula).cwiseAbs().maxCoeff();
  return rep;
}

// ---------------------------------------------------------------------------
// Sketch moments

struct PseudoinverseMomentReport {
  /// Empirical mean of (S_πX)† S_π, d x n.
  Matrix mean;
  Matrix se;
  /// X† = (XᵀX)^{-1} Xᵀ.
  Matrix target;
  double frobenius_error = 0.0;
  /// max |mean − target| / se over entries.
  double max_abs_z = 0.0;
  std::size_t trials = 0;

  bool within_3se() const {
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      for (Eigen::Index j = 0; j < mean.cols(); ++j) {
        if (!vsdesign::within_3se(mean(i, j) - target(i, j), se(i, j), target(i, j))) return false;
      }
    }
    return true;
  }
};

inline PseudoinverseMomentReport estimate_pseudoinverse_mean(const DesignMatrix& x, const SamplingDistribution& q,
                                                             std::size_t k, const MonteCarloConfig& mc,
                                                             const RngStream& rng) {
  detail::require_trials(mc);
  const GramFactor f = factorize(x);
  const RescaledVolumeSampler sampler(x, f, q, k);
  const auto n = static_cast<Eigen::Index>(x.n());
  auto draws = run_trials<Matrix>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    const DesignSequence pi = sampler.sample(design_rng).first;
    const Matrix sx = apply_sketch(pi, x.entries());
    const Matrix pinv = sx.completeOrthogonalDecomposition().pseudoInverse();
    Matrix out = Matrix::Zero(pinv.rows(), n);
    for (std::size_t t2 = 0; t2 < pi.k(); ++t2) {
      const auto ti = static_cast<Eigen::Index>(t2);
      out.col(static_cast<Eigen::Index>(pi.indices[t2])) += pinv.col(ti) * pi.rescale(ti);
    }
    return out;
  });
  PseudoinverseMomentReport rep;
  const MatrixMeanEstimate est = summarize(draws);
  rep.mean = est.mean;
  rep.se = est.se;
  rep.trials = est.count;
  rep.target = f.gram_inverse() * x.entries().transpose();
  rep.frobenius_error = (rep.mean - rep.target).norm();
  for (Eigen::Index i = 0; i < rep.mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < rep.mean.cols(); ++j) {
      const double diff = std::abs(rep.mean(i, j) - rep.target(i, j));
      const double z = rep.se(i, j) > 0.0 ? diff / rep.se(i, j) : (diff > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
      rep.max_abs_z = std::max(rep.max_abs_z, z);
    }
  }
  return rep;
}

struct InverseMomentReport {
  /// Empirical mean of (XᵀS_πᵀS_πX)^{-1}.
  Matrix mean;
  Matrix se;
  /// (k / (k − d + 1)) (XᵀX)^{-1}.
  Matrix bound;
  /// 3 x the largest entry-wise standard error.
  double slack = 0.0;
  /// Smallest eigenvalue of bound + slack I − mean.
  double min_eigenvalue = 0.0;
  std::size_t trials = 0;

  bool holds() const { return min_eigenvalue >= 0.0; }
};

inline InverseMomentReport estimate_inverse_moment(const DesignMatrix& x, const SamplingDistribution& q,
                                                   std::size_t k, const MonteCarloConfig& mc, const RngStream& rng) {
  detail::require_trials(mc);
  const GramFactor f = factorize(x);
  const RescaledVolumeSampler sampler(x, f, q, k);
  auto draws = run_trials<Matrix>(mc.trials, mc.workers, [&](std::size_t t) {
    RngStream design_rng = detail::trial_stream(rng, t, detail::kDesignDraw);
    const DesignSequence pi = sampler.sample(design_rng).first;
    return factorize(DesignMatrix(apply_sketch(pi, x.entries()))).gram_inverse();
  });
  InverseMomentReport rep;
  const MatrixMeanEstimate est = summarize(draws);
  rep.mean = est.mean;
  rep.se = est.se;
  rep.trials = est.count;
  const double dk = static_cast<double>(k);
  const double dd = static_cast<double>(x.d());
  rep.bound = dk / (dk - dd + 1.0) * f.gram_inverse();
  rep.slack = 3.0 * rep.se.maxCoeff();
  const auto d = rep.bound.rows();
  const Matrix gap = rep.bound + rep.slack * Matrix::Identity(d, d) - rep.mean;
  rep.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (gap + gap.transpose())).eigenvalues().minCoeff();
  return rep;
}

}  // namespace vsdesign

#endif  // VSDESIGN_HARNESS_HPP
