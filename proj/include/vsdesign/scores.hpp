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

#ifndef VSDESIGN_SCORES_HPP
#define VSDESIGN_SCORES_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vsdesign/error.hpp"
#include "vsdesign/linalg.hpp"

namespace vsdesign {

/// Per-row leverage scores l_i = xᵢᵀ(XᵀX)^{-1}xᵢ, inverse scores
/// v_i = xᵢᵀ(XᵀX)^{-2}xᵢ and phi = tr((XᵀX)^{-1}).
struct ScoreProfile {
  Vector leverage;
  Vector inverse;
  double phi = 0.0;

  std::size_t n() const { return static_cast<std::size_t>(leverage.size()); }
};

enum class DistributionKind { kUniform, kLeverage, kInverse, kMixture };

inline std::string_view to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kUniform: return "uniform";
    case DistributionKind::kLeverage: return "leverage";
    case DistributionKind::kInverse: return "inverse";
    case DistributionKind::kMixture: return "mixture";
  }
  return "unknown";
}

inline std::optional<DistributionKind> parse_distribution_kind(std::string_view s) {
  if (s == "uniform") return DistributionKind::kUniform;
  if (s == "leverage") return DistributionKind::kLeverage;
  if (s == "inverse") return DistributionKind::kInverse;
  if (s == "mixture") return DistributionKind::kMixture;
  return std::nullopt;
}

/// A probability vector over rows. Construction checks non-negativity and
/// normalization to 1e-12; strict positivity, which rescaled sampling needs,
/// is checked separately by require_positive().
class SamplingDistribution {
 public:
  SamplingDistribution() = default;

  explicit SamplingDistribution(Vector q, std::optional<double> alpha = std::nullopt)
      : q_(std::move(q)), alpha_(alpha) {
    if (q_.size() == 0) fail(ErrorCode::kInvalidDistribution, "empty distribution");
    if (!q_.allFinite() || (q_.array() < 0.0).any()) {
      fail(ErrorCode::kInvalidDistribution, "probabilities must be finite and non-negative");
    }
    const double total = q_.sum();
    if (std::abs(total - 1.0) > 1e-12) {
      fail(ErrorCode::kInvalidDistribution,
           "probabilities sum to " + std::to_string(total) + ", not 1");
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(q_.size()); }
  const Vector& q() const { return q_; }
  double operator[](std::size_t i) const { return q_(static_cast<Eigen::Index>(i)); }
  std::optional<double> alpha() const { return alpha_; }

  bool strictly_positive() const { return (q_.array() > 0.0).all(); }

  void require_positive() const {
    for (Eigen::Index i = 0; i < q_.size(); ++i) {
      if (!(q_(i) > 0.0)) {
        fail(ErrorCode::kZeroProbabilityEntry,
             "row " + std::to_string(i) + " has zero sampling probability");
      }
    }
  }

 private:
  Vector q_;
  std::optional<double> alpha_;
};

inline constexpr double kDefaultAlpha = 0.5;
inline constexpr double kMinAlpha = 0.5;
inline constexpr double kMaxAlpha = 0.75;

inline ScoreProfile compute_scores(const DesignMatrix& x, const GramFactor& f) {
  detail::require_same_source(f, x);
  ScoreProfile s;
  // l_i = ‖R^{-T}xᵢ‖², the squared row norms of X R^{-1}.
  s.leverage = (x.entries() * f.r_inverse()).rowwise().squaredNorm();
  // v_i = ‖(XᵀX)^{-1}xᵢ‖²; (XᵀX)^{-2} is never formed.
  s.inverse = (x.entries() * f.gram_inverse()).rowwise().squaredNorm();
  s.phi = f.gram_inverse().trace();
  return s;
}

/// Cross-leverage scores l_ij = xᵢᵀ(XᵀX)^{-1}x_j, i.e. the hat matrix.
inline Matrix cross_leverage(const DesignMatrix& x, const GramFactor& f) {
  detail::require_same_source(f, x);
  const Matrix b = x.entries() * f.r_inverse();
  return b * b.transpose();
}

/// p^uni, p^lev or p^inv. The score-based kinds reject any row whose score
/// is zero.
inline SamplingDistribution pure_distribution(const ScoreProfile& s, std::size_t n, std::size_t d,
                                              DistributionKind kind) {
  if (s.n() != n) fail(ErrorCode::kDimensionMismatch, "score profile length differs from n");
  Vector q;
  switch (kind) {
    case DistributionKind::kUniform:
      q = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
      break;
    case DistributionKind::kLeverage:
      q = s.leverage / static_cast<double>(d);
      break;
    case DistributionKind::kInverse:
      q = s.inverse / s.phi;
      break;
    case DistributionKind::kMixture:
      fail(ErrorCode::kInvalidDistribution, "use mixture_distribution for the mixture kind");
  }
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q(i) > 0.0)) {
      fail(ErrorCode::kZeroProbabilityEntry,
           "row " + std::to_string(i) + " has zero " + std::string(to_string(kind)) +
               " score and cannot be sampled from a standalone distribution");
    }
  }
  // Scores sum to d and phi only up to rounding.
  q /= q.sum();
  return SamplingDistribution(std::move(q));
}

/// q(alpha) = alpha (p^uni + p^inv)/2 + (1 − alpha) p^lev for alpha in [0.5, 0.75].
inline SamplingDistribution mixture_distribution(const ScoreProfile& s, std::size_t n, std::size_t d,
                                                 double alpha = kDefaultAlpha) {
  if (!(alpha >= kMinAlpha && alpha <= kMaxAlpha)) {
    fail(ErrorCode::kAlphaOutOfRange,
         "alpha = " + std::to_string(alpha) + " is outside [0.5, 0.75]");
  }
  if (s.n() != n) fail(ErrorCode::kDimensionMismatch, "score profile length differs from n");
  const double dn = static_cast<double>(n);
  const Vector lev = s.leverage / static_cast<double>(d);
  const Vector inv = s.inverse / s.phi;
  Vector q = alpha * (0.5 * Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / dn) + 0.5 * inv) +
             (1.0 - alpha) * lev;
  q /= q.sum();
  return SamplingDistribution(std::move(q), alpha);
}

/// Builds the distribution named by `kind` for the scores of X.
inline SamplingDistribution make_distribution(const ScoreProfile& s, std::size_t n, std::size_t d,
                                              DistributionKind kind, double alpha = kDefaultAlpha) {
  if (kind == DistributionKind::kMixture) return mixture_distribution(s, n, d, alpha);
  return pure_distribution(s, n, d, kind);
}

}  // namespace vsdesign

#endif  // VSDESIGN_SCORES_HPP
