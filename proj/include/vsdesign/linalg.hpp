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

// Dense kernel shared by every other module: a validated design matrix, an
// orthogonal factorization of it that caches the Gram inverse, least squares
// and the symmetric whitening transform.

#ifndef VSDESIGN_LINALG_HPP
#define VSDESIGN_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "vsdesign/error.hpp"

namespace vsdesign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Regression coefficients (w*, w_LS, or a subsampled estimate).
using Weights = Vector;

inline constexpr double kDefaultRankTol = 1e-10;

/// An n x d matrix whose rows are experiment vectors. Construction enforces
/// n >= d >= 1 and finite entries; full column rank is checked by
/// factorize().
class DesignMatrix {
 public:
  DesignMatrix() = default;

  explicit DesignMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.cols() < 1) {
      fail(ErrorCode::kDimensionMismatch, "design matrix needs at least one column");
    }
    if (entries_.rows() < entries_.cols()) {
      fail(ErrorCode::kRankDeficient,
           "design matrix has fewer rows (" + std::to_string(entries_.rows()) +
               ") than columns (" + std::to_string(entries_.cols()) + ")");
    }
    if (!entries_.allFinite()) {
      fail(ErrorCode::kNonFiniteEntry, "design matrix has non-finite entries");
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(entries_.cols()); }
  const Matrix& entries() const { return entries_; }
  auto row(std::size_t i) const { return entries_.row(static_cast<Eigen::Index>(i)); }

  /// Rows at the given indices, in order, repeats allowed.
  template <typename IndexRange>
  Matrix select_rows(const IndexRange& indices) const {
    Matrix out(static_cast<Eigen::Index>(std::size(indices)), entries_.cols());
    Eigen::Index t = 0;
    for (auto i : indices) out.row(t++) = entries_.row(static_cast<Eigen::Index>(i));
    return out;
  }

 private:
  Matrix entries_;
};

/// QR factorization of X with everything derived from the Gram matrix XᵀX
/// cached. Immutable after construction.
class GramFactor {
 public:
  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  const Eigen::HouseholderQR<Matrix>& qr() const { return qr_; }
  /// Upper-triangular d x d factor R with X = QR.
  const Matrix& r() const { return r_; }
  const Matrix& r_inverse() const { return r_inverse_; }
  /// (XᵀX)^{-1} = R^{-1} R^{-T}.
  const Matrix& gram_inverse() const { return gram_inverse_; }
  double log_det_gram() const { return log_det_gram_; }
  /// Singular values of X, descending.
  const Vector& singular_values() const { return singular_values_; }

  /// (XᵀX)^{-1/2}, the symmetric root.
  Matrix gram_inverse_sqrt() const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_inverse_);
    const Matrix& v = eig.eigenvectors();
    return v * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * v.transpose();
  }

  /// (XᵀX)^{1/2}, the symmetric root.
  Matrix gram_sqrt() const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_inverse_);
    const Matrix& v = eig.eigenvectors();
    return v * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * v.transpose();
  }

 private:
  friend GramFactor factorize(const DesignMatrix& x, double rank_tol);

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  Eigen::HouseholderQR<Matrix> qr_;
  Matrix r_;
  Matrix r_inverse_;
  Matrix gram_inverse_;
  double log_det_gram_ = 0.0;
  Vector singular_values_;
};

/// Factorizes X = QR. Throws RankDeficient when the smallest singular value
/// falls below rank_tol times the largest.
inline GramFactor factorize(const DesignMatrix& x, double rank_tol = kDefaultRankTol) {
  GramFactor f;
  f.n_ = x.n();
  f.d_ = x.d();
  const auto d = static_cast<Eigen::Index>(x.d());

  f.qr_.compute(x.entries());
  f.r_ = f.qr_.matrixQR().topRows(d).triangularView<Eigen::Upper>();

  // X and R share singular values.
  Eigen::JacobiSVD<Matrix> svd(f.r_);
  f.singular_values_ = svd.singularValues();
  const double smax = f.singular_values_(0);
  const double smin = f.singular_values_(d - 1);
  if (!(smax > 0.0) || smin <= rank_tol * smax) {
    fail(ErrorCode::kRankDeficient,
         "smallest singular value " + short_number(smin) + " is below " + short_number(rank_tol) +
             " x largest (" + short_number(smax) + ")");
  }

  f.r_inverse_ = f.r_.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
  Matrix gi = f.r_inverse_ * f.r_inverse_.transpose();
  f.gram_inverse_ = 0.5 * (gi + gi.transpose());

  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) log_det += std::log(std::abs(f.r_(i, i)));
  f.log_det_gram_ = 2.0 * log_det;
  return f;
}

namespace detail {

inline void require_same_source(const GramFactor& f, const DesignMatrix& x) {
  if (f.n() != x.n() || f.d() != x.d()) {
    fail(ErrorCode::kDimensionMismatch, "factor was built from a matrix of different shape");
  }
}

}  // namespace detail

/// argmin_w ‖Xw − y‖² via the cached QR.
inline Weights least_squares(const GramFactor& f, const DesignMatrix& x, const Vector& y) {
  detail::require_same_source(f, x);
  if (static_cast<std::size_t>(y.size()) != x.n()) {
    fail(ErrorCode::kDimensionMismatch,
         "response has length " + std::to_string(y.size()) + ", expected " + std::to_string(x.n()));
  }
  return f.qr().solve(y);
}

/// Xw − y.
inline Vector residual(const DesignMatrix& x, const Weights& w, const Vector& y) {
  if (static_cast<std::size_t>(w.size()) != x.d() || static_cast<std::size_t>(y.size()) != x.n()) {
    fail(ErrorCode::kDimensionMismatch, "residual: dimension mismatch");
  }
  return x.entries() * w - y;
}

/// U = X (XᵀX)^{-1/2}; UᵀU = I and U spans the same columns as X.
inline DesignMatrix whiten(const DesignMatrix& x, const GramFactor& f) {
  detail::require_same_source(f, x);
  return DesignMatrix(x.entries() * f.gram_inverse_sqrt());
}

}  // namespace vsdesign

#endif  // VSDESIGN_LINALG_HPP
