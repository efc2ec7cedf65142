// Copyright 2026 The jacospec Authors.
//
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

#pragma once

#include <Eigen/Dense>
#include <Eigen/Householder>
#include <cmath>

#include "jacospec/errors.hpp"

/// Weight ensembles: i.i.d. Gaussian and scaled Haar orthogonal matrices.
namespace jacospec::rmt {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Fills m column by column with independent standard normals.
template <typename Derived, typename Rng>
void fill_normal(Eigen::MatrixBase<Derived>& m, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = typename Derived::Scalar(rng.normal());
}

/// N x N matrix with i.i.d. N(0, sigma_w^2 / N) entries.
template <typename Scalar = double, typename Rng>
Matrix<Scalar> sample_gaussian(Eigen::Index n, double sigma_w_sq, Rng& rng) {
  if (n < 2) throw DomainError("sample_gaussian: N must be >= 2");
  Matrix<Scalar> w(n, n);
  fill_normal(w, rng);
  w *= Scalar(std::sqrt(sigma_w_sq / double(n)));
  return w;
}

/// sigma_w Q with Q Haar: QR of a Gaussian matrix, columns of Q multiplied
/// by the signs of diag(R).
template <typename Scalar = double, typename Rng>
Matrix<Scalar> sample_orthogonal(Eigen::Index n, double sigma_w_sq, Rng& rng) {
  if (n < 2) throw DomainError("sample_orthogonal: N must be >= 2");
  Matrix<Scalar> g(n, n);
  fill_normal(g, rng);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return Scalar(std::sqrt(sigma_w_sq)) * q;
}

/// Haar orthogonal operator held as N Householder reflectors built from
/// independent Gaussian vectors of sizes N, N-1, ..., 1, times a sign
/// diagonal. Same law as sample_orthogonal; applied without forming Q.
template <typename Scalar = double>
class HaarReflectors {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Rng>
  HaarReflectors(Eigen::Index n, double sigma_w_sq, Rng& rng)
      : vectors_(MatrixType::Zero(n, n)), coeffs_(n), signs_(n), scale_(Scalar(std::sqrt(sigma_w_sq))) {
    if (n < 2) throw DomainError("HaarReflectors: N must be >= 2");
    VectorType x(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index m = n - k;
      auto xk = x.head(m);
      fill_normal(xk, rng);
      Scalar tau, beta;
      auto essential = vectors_.col(k).tail(m - 1);
      xk.makeHouseholder(essential, tau, beta);
      coeffs_[k] = tau;
      signs_[k] = beta < Scalar(0) ? Scalar(-1) : Scalar(1);
    }
  }

  Eigen::Index size() const { return coeffs_.size(); }

  /// x <- sigma_w Q x.
  template <typename Derived>
  void apply_left(Eigen::MatrixBase<Derived>& x) const {
    x = signs_.asDiagonal() * x;
    x.applyOnTheLeft(Eigen::HouseholderSequence<MatrixType, VectorType>(vectors_, coeffs_));
    x *= scale_;
  }

  MatrixType dense() const {
    MatrixType q = MatrixType::Identity(size(), size());
    apply_left(q);
    return q;
  }

 private:
  MatrixType vectors_;
  VectorType coeffs_;
  VectorType signs_;
  Scalar scale_;
};

}  // namespace jacospec::rmt
