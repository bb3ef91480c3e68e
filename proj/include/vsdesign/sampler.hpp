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

// Volume sampling and its q-rescaled extension.
//
// VolumeSampler draws a size-d sequence with Pr(π) = det(X_π)² / (d! det(XᵀX))
// by bottom-up rejection: proposals come i.i.d. from q and are accepted with
// probability xᵀA x / (2d q), where A starts at (XᵀX)^{-1} and is projected
// by a rank-one downdate after every acceptance. RescaledVolumeSampler
// appends k − d i.i.d. draws from q and shuffles, which yields the
// q-rescaled volume sampling law of size k.

#ifndef VSDESIGN_SAMPLER_HPP
#define VSDESIGN_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "vsdesign/error.hpp"
#include "vsdesign/linalg.hpp"
#include "vsdesign/rng.hpp"
#include "vsdesign/scores.hpp"

namespace vsdesign {

/// An index sequence π ∈ [n]^k (0-based, repeats allowed) together with the
/// rescaling 1/sqrt(k q_{π_t}) of each selected row.
struct DesignSequence {
  std::vector<std::size_t> indices;
  Vector rescale;
  std::shared_ptr<const SamplingDistribution> source_q;

  std::size_t k() const { return indices.size(); }
};

inline Vector rescale_weights(const std::vector<std::size_t>& indices, const SamplingDistribution& q) {
  const double k = static_cast<double>(indices.size());
  Vector r(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t t = 0; t < indices.size(); ++t) {
    r(static_cast<Eigen::Index>(t)) = 1.0 / std::sqrt(k * q[indices[t]]);
  }
  return r;
}

inline DesignSequence make_design_sequence(std::vector<std::size_t> indices,
                                           std::shared_ptr<const SamplingDistribution> q) {
  DesignSequence seq;
  seq.rescale = rescale_weights(indices, *q);
  seq.indices = std::move(indices);
  seq.source_q = std::move(q);
  return seq;
}

struct SamplerStats {
  std::size_t bernoulli_trials = 0;
  std::size_t iid_draws_consumed = 0;
};

/// Hard stop for the rejection loop, about 32x the expected trial count.
inline std::size_t default_max_trials(std::size_t d) {
  const double dd = static_cast<double>(d);
  return static_cast<std::size_t>(std::ceil(64.0 * dd * (std::log(dd) + 2.0)));
}

/// Inverse-CDF sampling on a precomputed cumulative table.
class IidSampler {
 public:
  explicit IidSampler(const SamplingDistribution& q) : cdf_(q.n()) {
    const Vector& p = q.q();
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
      acc += p(static_cast<Eigen::Index>(i));
      cdf_[i] = acc;
    }
    last_positive_ = 0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
      if (p(static_cast<Eigen::Index>(i)) > 0.0) last_positive_ = i;
    }
  }

  std::size_t draw(RngStream& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(i, last_positive_);
  }

  std::size_t n() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

/// m independent draws from q.
inline std::vector<std::size_t> sample_iid(const SamplingDistribution& q, std::size_t m, RngStream& rng) {
  IidSampler sampler(q);
  std::vector<std::size_t> out(m);
  for (auto& i : out) i = sampler.draw(rng);
  return out;
}

struct VolumeSamplerOptions {
  std::size_t max_trials = 0;  // 0 selects default_max_trials(d)
  /// Verify Σ_j x_jᵀ A x_j = d − i after every acceptance.
  bool check_trace_identity = false;
  double trace_identity_tol = 1e-6;
  /// Called after every acceptance with (step i, A_{i+1}, Σ_j x_jᵀA_{i+1}x_j).
  std::function<void(std::size_t, const Matrix&, double)> on_step;
};

/// Size-d volume sampler. The proposal q must satisfy q_i >= p_i^lev / 2,
/// checked once at construction, which keeps every acceptance probability in
/// [0, 1].
class VolumeSampler {
 public:
  VolumeSampler(const DesignMatrix& x, const GramFactor& f, SamplingDistribution q,
                VolumeSamplerOptions options = {})
      : rows_(x.entries()),
        gram_inverse_(f.gram_inverse()),
        q_(std::make_shared<const SamplingDistribution>(std::move(q))),
        iid_(*q_),
        options_(std::move(options)),
        d_(x.d()) {
    detail::require_same_source(f, x);
    if (q_->n() != x.n()) fail(ErrorCode::kDimensionMismatch, "proposal length differs from n");
    if (options_.max_trials == 0) options_.max_trials = default_max_trials(d_);
    if (options_.max_trials < d_) {
      fail(ErrorCode::kPreconditionViolated, "max_trials must be at least d");
    }
    const Vector lev = (x.entries() * f.r_inverse()).rowwise().squaredNorm();
    const double dd = static_cast<double>(d_);
    for (Eigen::Index i = 0; i < lev.size(); ++i) {
      const double need = 0.5 * lev(i) / dd;
      if ((*q_)[static_cast<std::size_t>(i)] < need * (1.0 - 1e-12)) {
        fail(ErrorCode::kPreconditionViolated,
             "proposal probability " + short_number((*q_)[static_cast<std::size_t>(i)]) +
                 " at row " + std::to_string(i) + " is below half the leverage probability " +
                 short_number(need));
      }
    }
    if (options_.check_trace_identity || options_.on_step) {
      gram_ = x.entries().transpose() * x.entries();
    }
  }

  const std::shared_ptr<const SamplingDistribution>& proposal() const { return q_; }
  std::size_t d() const { return d_; }

  /// Returns the d accepted indices in acceptance order.
  std::vector<std::size_t> sample_indices(RngStream& rng, SamplerStats& stats) const {
    const auto d = static_cast<Eigen::Index>(d_);
    const double two_d = 2.0 * static_cast<double>(d_);
    Matrix a = gram_inverse_;
    Vector ax(d);
    std::vector<std::size_t> out;
    out.reserve(d_);
    for (std::size_t step = 0; step < d_; ++step) {
      for (;;) {
        if (stats.bernoulli_trials >= options_.max_trials) {
          fail(ErrorCode::kTrialBudgetExhausted,
               "volume sampling exceeded " + std::to_string(options_.max_trials) + " trials");
        }
        const std::size_t i = iid_.draw(rng);
        ++stats.bernoulli_trials;
        ++stats.iid_draws_consumed;
        const auto xi = rows_.row(static_cast<Eigen::Index>(i)).transpose();
        ax.noalias() = a * xi;
        const double quad = xi.dot(ax);
        const double p = quad / (two_d * (*q_)[i]);
        if (!(p <= 1.0 + 1e-9)) {
          fail(ErrorCode::kInvariantViolated,
               "acceptance probability " + std::to_string(p) + " exceeds 1");
        }
        if (rng.uniform() < p) {
          // A ← A − A x xᵀ A / (xᵀ A x), then symmetrize.
          a.noalias() -= (ax * ax.transpose()) / quad;
          a = 0.5 * (a + a.transpose()).eval();
          out.push_back(i);
          if (options_.check_trace_identity || options_.on_step) {
            const double trace = (a * gram_).trace();
            const double expected = static_cast<double>(d_ - step - 1);
            if (options_.check_trace_identity &&
                std::abs(trace - expected) > options_.trace_identity_tol * std::max(1.0, expected)) {
              fail(ErrorCode::kInvariantViolated,
                   "residual trace " + std::to_string(trace) + " after step " +
                       std::to_string(step + 1) + ", expected " + std::to_string(expected));
            }
            if (options_.on_step) options_.on_step(step + 1, a, trace);
          }
          break;
        }
      }
    }
    return out;
  }

  std::pair<DesignSequence, SamplerStats> sample(RngStream& rng) const {
    SamplerStats stats;
    auto idx = sample_indices(rng, stats);
    return {make_design_sequence(std::move(idx), q_), stats};
  }

 private:
  RowMatrix rows_;
  Matrix gram_inverse_;
  Matrix gram_;
  std::shared_ptr<const SamplingDistribution> q_;
  IidSampler iid_;
  VolumeSamplerOptions options_;
  std::size_t d_;
};

inline std::pair<DesignSequence, SamplerStats> sample_vs_d(const DesignMatrix& x, const GramFactor& f,
                                                           const SamplingDistribution& q, RngStream& rng,
                                                           std::size_t max_trials = 0) {
  VolumeSamplerOptions opts;
  opts.max_trials = max_trials;
  return VolumeSampler(x, f, q, std::move(opts)).sample(rng);
}

namespace detail {

inline bool dominates_half_leverage(const SamplingDistribution& q, const Vector& leverage, double d) {
  for (Eigen::Index i = 0; i < leverage.size(); ++i) {
    if (q[static_cast<std::size_t>(i)] < 0.5 * leverage(i) / d * (1.0 - 1e-12)) return false;
  }
  return true;
}

// VS^d(X) does not depend on the proposal, so when q is not dominant the
// size-d part is proposed from (q + p^lev)/2 instead, which always is.
inline SamplingDistribution volume_proposal(const SamplingDistribution& q, const DesignMatrix& x,
                                            const GramFactor& f) {
  const Vector lev = (x.entries() * f.r_inverse()).rowwise().squaredNorm();
  const double d = static_cast<double>(x.d());
  if (dominates_half_leverage(q, lev, d)) return q;
  Vector r = 0.5 * q.q() + 0.5 * lev / lev.sum();
  r /= r.sum();
  return SamplingDistribution(std::move(r));
}

}  // namespace detail

/// Sampler for the q-rescaled volume sampling law of size k.
class RescaledVolumeSampler {
 public:
  RescaledVolumeSampler(const DesignMatrix& x, const GramFactor& f, const SamplingDistribution& q,
                        std::size_t k, VolumeSamplerOptions options = {})
      : q_(std::make_shared<const SamplingDistribution>(q)),
        iid_(q),
        volume_(x, f, detail::volume_proposal(q, x, f), std::move(options)),
        k_(k) {
    if (k < x.d()) {
      fail(ErrorCode::kKTooSmall,
           "k = " + std::to_string(k) + " is smaller than d = " + std::to_string(x.d()));
    }
    if (q.n() != x.n()) fail(ErrorCode::kDimensionMismatch, "distribution length differs from n");
    q.require_positive();
  }

  std::size_t k() const { return k_; }
  const std::shared_ptr<const SamplingDistribution>& q() const { return q_; }
  const VolumeSampler& volume_sampler() const { return volume_; }

  std::pair<DesignSequence, SamplerStats> sample(RngStream& rng) const {
    SamplerStats stats;
    std::vector<std::size_t> seq = volume_.sample_indices(rng, stats);
    seq.reserve(k_);
    for (std::size_t t = volume_.d(); t < k_; ++t) {
      seq.push_back(iid_.draw(rng));
      ++stats.iid_draws_consumed;
    }
    // Fisher–Yates, exactly k − 1 draws.
    for (std::size_t t = k_; t > 1; --t) {
      std::swap(seq[t - 1], seq[rng.index(t)]);
    }
    return {make_design_sequence(std::move(seq), q_), stats};
  }

 private:
  std::shared_ptr<const SamplingDistribution> q_;
  IidSampler iid_;
  VolumeSampler volume_;
  std::size_t k_;
};

inline std::pair<DesignSequence, SamplerStats> sample_vs_k(const DesignMatrix& x, const GramFactor& f,
                                                           const SamplingDistribution& q, std::size_t k,
                                                           RngStream& rng) {
  return RescaledVolumeSampler(x, f, q, k).sample(rng);
}

/// Exact law of q-rescaled volume sampling over all n^k sequences. Sequence
/// codes are base-n numbers with π_1 as the most significant digit.
class SequenceLaw {
 public:
  SequenceLaw(std::size_t n, std::size_t k, std::vector<double> probs, double log_normalizer)
      : n_(n), k_(k), probs_(std::move(probs)), log_normalizer_(log_normalizer) {}

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& probabilities() const { return probs_; }
  double operator[](std::size_t code) const { return probs_[code]; }
  /// log of Σ_π (unnormalized mass), for comparison with the closed form.
  double log_normalizer() const { return log_normalizer_; }

  std::vector<std::size_t> decode(std::size_t code) const {
    std::vector<std::size_t> seq(k_);
    for (std::size_t t = k_; t-- > 0;) {
      seq[t] = code % n_;
      code /= n_;
    }
    return seq;
  }

  std::size_t encode(const std::vector<std::size_t>& seq) const {
    std::size_t code = 0;
    for (auto i : seq) code = code * n_ + i;
    return code;
  }

  double probability(const std::vector<std::size_t>& seq) const { return probs_[encode(seq)]; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> probs_;
  double log_normalizer_;
};

inline constexpr std::size_t kMaxEnumeration = 1'000'000;

/// Enumerates Pr(π) ∝ det(XᵀS_πᵀS_πX) Π q_{π_t} over [n]^k in log space.
/// Selections with rank(S_πX) < d get probability zero.
inline SequenceLaw brute_force_vs_probs(const DesignMatrix& x, const SamplingDistribution& q, std::size_t k) {
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  if (k < d) fail(ErrorCode::kKTooSmall, "k is smaller than d");
  if (q.n() != n) fail(ErrorCode::kDimensionMismatch, "distribution length differs from n");
  q.require_positive();
  double total = 1.0;
  for (std::size_t t = 0; t < k; ++t) {
    total *= static_cast<double>(n);
    if (total > static_cast<double>(kMaxEnumeration)) {
      fail(ErrorCode::kEnumerationTooLarge, "n^k exceeds " + std::to_string(kMaxEnumeration));
    }
  }
  const auto count = static_cast<std::size_t>(total);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const double dk = static_cast<double>(k);

  std::vector<double> logmass(count, neg_inf);
  std::vector<std::size_t> seq(k, 0);
  Matrix sx(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t code = 0; code < count; ++code) {
    std::size_t c = code;
    for (std::size_t t = k; t-- > 0;) {
      seq[t] = c % n;
      c /= n;
    }
    double log_q = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double qi = q[seq[t]];
      sx.row(static_cast<Eigen::Index>(t)) = x.row(seq[t]) / std::sqrt(dk * qi);
      log_q += std::log(qi);
    }
    Eigen::JacobiSVD<Matrix> svd(sx);
    const Vector& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(static_cast<Eigen::Index>(d) - 1) <= 1e-10 * sv(0)) continue;
    double logdet = 0.0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) logdet += 2.0 * std::log(sv(j));
    logmass[code] = logdet + log_q;
  }

  const double m = *std::max_element(logmass.begin(), logmass.end());
  std::vector<double> probs(count, 0.0);
  double z = 0.0;
  for (std::size_t c = 0; c < count; ++c) {
    if (logmass[c] == neg_inf) continue;
    probs[c] = std::exp(logmass[c] - m);
    z += probs[c];
  }
  for (auto& p : probs) p /= z;
  return SequenceLaw(n, k, std::move(probs), m + std::log(z));
}

/// log of the closed-form normalizer (d!/k^d) C(k,d) det(XᵀX).
inline double log_vs_normalizer(std::size_t k, std::size_t d, double log_det_gram) {
  const double dk = static_cast<double>(k);
  const double dd = static_cast<double>(d);
  return std::lgamma(dd + 1.0) - dd * std::log(dk) + std::lgamma(dk + 1.0) - std::lgamma(dd + 1.0) -
         std::lgamma(dk - dd + 1.0) + log_det_gram;
}

/// s_i = number of occurrences of row i in π.
inline std::vector<std::size_t> multiplicity_counts(const std::vector<std::size_t>& indices, std::size_t n) {
  std::vector<std::size_t> s(n, 0);
  for (auto i : indices) {
    if (i >= n) fail(ErrorCode::kDimensionMismatch, "index " + std::to_string(i) + " out of range");
    ++s[i];
  }
  return s;
}

inline std::vector<std::size_t> multiplicity_counts(const DesignSequence& pi, std::size_t n) {
  return multiplicity_counts(pi.indices, n);
}

/// Distinct indices of π in increasing order.
inline std::vector<std::size_t> support(const DesignSequence& pi) {
  std::vector<std::size_t> s = pi.indices;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace vsdesign

#endif  // VSDESIGN_SAMPLER_HPP
