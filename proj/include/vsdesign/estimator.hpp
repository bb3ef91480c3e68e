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

#ifndef VSDESIGN_ESTIMATOR_HPP
#define VSDESIGN_ESTIMATOR_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vsdesign/error.hpp"
#include "vsdesign/linalg.hpp"
#include "vsdesign/sampler.hpp"

namespace vsdesign {

/// Responses observed at the selected rows, keyed by row index. A row that
/// appears several times in π is queried once.
using ResponseSubset = std::map<std::size_t, double>;

inline ResponseSubset observe(const DesignSequence& pi, const Vector& y) {
  ResponseSubset out;
  for (auto i : pi.indices) {
    if (i >= static_cast<std::size_t>(y.size())) {
      fail(ErrorCode::kDimensionMismatch, "index " + std::to_string(i) + " outside the response vector");
    }
    out.emplace(i, y(static_cast<Eigen::Index>(i)));
  }
  return out;
}

/// S_π M: row t is M.row(π_t) * rescale[t]. Works for matrices and vectors.
template <typename Derived>
Matrix apply_sketch(const DesignSequence& pi, const Eigen::MatrixBase<Derived>& m) {
  const std::size_t k = pi.k();
  if (static_cast<std::size_t>(pi.rescale.size()) != k) {
    fail(ErrorCode::kDimensionMismatch, "design sequence has mismatched rescale weights");
  }
  Matrix out(static_cast<Eigen::Index>(k), m.cols());
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t i = pi.indices[t];
    if (i >= static_cast<std::size_t>(m.rows())) {
      fail(ErrorCode::kDimensionMismatch,
           "index " + std::to_string(i) + " outside a matrix with " + std::to_string(m.rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(t)) =
        m.row(static_cast<Eigen::Index>(i)) * pi.rescale(static_cast<Eigen::Index>(t));
  }
  return out;
}

struct SubsampledEstimate {
  Weights w_hat;
  DesignSequence pi;
  /// Smallest singular value of S_πX.
  double condition_report = 0.0;
};

/// ŵ = (S_πX)† S_π y using only the responses in y_S.
inline SubsampledEstimate subsampled_ls(const DesignMatrix& x, const DesignSequence& pi, const ResponseSubset& y_s,
                                        double rank_tol = kDefaultRankTol) {
  const std::size_t k = pi.k();
  const auto d = static_cast<Eigen::Index>(x.d());
  const Matrix sx = apply_sketch(pi, x.entries());
  Vector sy(static_cast<Eigen::Index>(k));
  for (std::size_t t = 0; t < k; ++t) {
    auto it = y_s.find(pi.indices[t]);
    if (it == y_s.end()) {
      fail(ErrorCode::kDimensionMismatch, "no response supplied for row " + std::to_string(pi.indices[t]));
    }
    sy(static_cast<Eigen::Index>(t)) = it->second * pi.rescale(static_cast<Eigen::Index>(t));
  }
  if (static_cast<Eigen::Index>(k) < d) {
    fail(ErrorCode::kSketchRankDeficient, "sketch has fewer rows than columns");
  }

  Eigen::HouseholderQR<Matrix> qr(sx);
  const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  const Vector sv = Eigen::JacobiSVD<Matrix>(r).singularValues();
  SubsampledEstimate est;
  est.condition_report = sv(d - 1);
  if (!(sv(0) > 0.0) || sv(d - 1) <= rank_tol * sv(0)) {
    fail(ErrorCode::kSketchRankDeficient,
         "sketched matrix is rank deficient (smallest singular value " + std::to_string(sv(d - 1)) + ")");
  }
  est.w_hat = qr.solve(sy);
  est.pi = pi;
  return est;
}

inline SubsampledEstimate subsampled_ls(const DesignMatrix& x, const DesignSequence& pi, const Vector& y,
                                        double rank_tol = kDefaultRankTol) {
  return subsampled_ls(x, pi, observe(pi, y), rank_tol);
}

/// Coordinate-wise mean of several independent estimates.
inline Weights averaged_estimate(const std::vector<SubsampledEstimate>& estimates) {
  if (estimates.empty()) fail(ErrorCode::kEmptyList, "no estimates to average");
  Weights sum = Weights::Zero(estimates.front().w_hat.size());
  for (const auto& e : estimates) {
    if (e.w_hat.size() != sum.size()) fail(ErrorCode::kDimensionMismatch, "estimates differ in dimension");
    sum += e.w_hat;
  }
  return sum / static_cast<double>(estimates.size());
}

}  // namespace vsdesign

#endif  // VSDESIGN_ESTIMATOR_HPP
