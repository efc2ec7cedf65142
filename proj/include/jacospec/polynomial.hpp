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
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "jacospec/errors.hpp"

/// Simultaneous polynomial root finding: companion-matrix eigenvalues and
/// Aberth-Ehrlich iteration over a user-supplied Newton correction.
namespace jacospec::poly {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Horner evaluation of sum_k c_k x^k (ascending coefficients).
template <typename Derived, typename T>
auto horner(const Eigen::MatrixBase<Derived>& coeffs, const T& x) {
  using R = decltype(coeffs[0] * x);
  R acc(0);
  for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) acc = acc * x + coeffs[k];
  return acc;
}

/// Value and derivative of sum_k c_k x^k.
template <typename Derived, typename T>
auto horner_with_derivative(const Eigen::MatrixBase<Derived>& coeffs, const T& x) {
  using R = decltype(coeffs[0] * x);
  R p(0), dp(0);
  for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) {
    dp = dp * x + p;
    p = p * x + coeffs[k];
  }
  return std::pair<R, R>{p, dp};
}

/// Drops leading coefficients that are exactly zero.
template <typename Scalar>
ComplexVector<Scalar> trim_leading(const ComplexVector<Scalar>& coeffs) {
  Eigen::Index n = coeffs.size();
  while (n > 0 && coeffs[n - 1] == std::complex<Scalar>(0)) --n;
  return coeffs.head(n);
}

/// All roots of sum_k c_k x^k as eigenvalues of the companion matrix.
template <typename Scalar>
ComplexVector<Scalar> companion_roots(const ComplexVector<Scalar>& coeffs) {
  using C = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
  const ComplexVector<Scalar> c = trim_leading(coeffs);
  const Eigen::Index n = c.size() - 1;
  if (n < 1) throw DomainError("companion_roots: polynomial has no roots");
  if (n == 1) {
    ComplexVector<Scalar> r(1);
    r[0] = -c[0] / c[1];
    return r;
  }
  Matrix companion = Matrix::Zero(n, n);
  companion.diagonal(-1).setOnes();
  companion.col(n - 1) = -c.head(n) / c[n];
  Eigen::ComplexEigenSolver<Matrix> solver(companion, false);
  if (solver.info() != Eigen::Success) throw ConvergenceError("companion_roots: eigensolver failed", 0.0);
  return solver.eigenvalues();
}

template <typename Scalar>
struct AberthOptions {
  Scalar rel_tol = Scalar(4) * std::numeric_limits<Scalar>::epsilon();
  int max_iter = 200;
};

/// Aberth-Ehrlich refinement of all roots in place. newton(x) returns the
/// Newton correction p(x)/p'(x). Returns the number of sweeps, or -1 if
/// some root failed to settle.
template <typename Scalar, typename Newton>
int aberth_refine(Newton&& newton, ComplexVector<Scalar>& roots, const AberthOptions<Scalar>& opt = {}) {
  using C = std::complex<Scalar>;
  const Eigen::Index n = roots.size();
  Eigen::Array<bool, Eigen::Dynamic, 1> done = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> last = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Constant(
      n, std::numeric_limits<Scalar>::infinity());
  // Steps that stop shrinking below this size have hit the rounding floor.
  const Scalar floor = std::sqrt(std::numeric_limits<Scalar>::epsilon());
  for (int it = 1; it <= opt.max_iter; ++it) {
    bool all_done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (done[i]) continue;
      const C ratio = newton(roots[i]);
      if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag())) return -1;
      C repulsion(0);
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) repulsion += C(1) / (roots[i] - roots[j]);
      const C step = ratio / (C(1) - ratio * repulsion);
      roots[i] -= step;
      const Scalar size = std::abs(step);
      const bool stalled = size <= floor * std::abs(roots[i]) && size > Scalar(0.5) * last[i];
      last[i] = size;
      if (size <= opt.rel_tol * std::abs(roots[i]) || std::abs(ratio) == Scalar(0) || stalled) {
        done[i] = true;
      } else {
        all_done = false;
      }
    }
    if (all_done) return it;
  }
  return -1;
}

/// Aberth starting points spread on a circle, rotated off the real axis.
template <typename Scalar>
ComplexVector<Scalar> circle_start(Eigen::Index n, std::complex<Scalar> center, Scalar radius) {
  ComplexVector<Scalar> x(n);
  const Scalar offset = Scalar(0.4);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar angle = Scalar(2) * std::numbers::pi_v<Scalar> * (Scalar(k) + offset) / Scalar(n);
    x[k] = center + std::polar(radius, angle);
  }
  return x;
}

/// All roots from coefficients: companion eigenvalues up to the given
/// degree, Aberth from a Cauchy-bound circle beyond it. Both are polished
/// by Aberth sweeps on the coefficient form.
template <typename Scalar>
ComplexVector<Scalar> polynomial_roots(const ComplexVector<Scalar>& coeffs, Eigen::Index companion_max_degree = 64) {
  using C = std::complex<Scalar>;
  const ComplexVector<Scalar> c = trim_leading(coeffs);
  const Eigen::Index n = c.size() - 1;
  if (n < 1) throw DomainError("polynomial_roots: polynomial has no roots");
  auto newton = [&c](const C& x) {
    const auto [p, dp] = horner_with_derivative(c, x);
    return p / dp;
  };
  ComplexVector<Scalar> roots;
  if (n <= companion_max_degree) {
    roots = companion_roots(c);
    ComplexVector<Scalar> polished = roots;
    if (aberth_refine<Scalar>(newton, polished, {Scalar(4) * std::numeric_limits<Scalar>::epsilon(), 20}) >= 0)
      roots = polished;
  } else {
    Scalar radius(0);
    for (Eigen::Index k = 0; k < n; ++k) radius = std::max(radius, std::abs(c[k] / c[n]));
    radius = std::pow(radius, Scalar(1) / Scalar(n));
    roots = circle_start<Scalar>(n, C(0), std::max(radius, Scalar(1e-3)));
    if (aberth_refine<Scalar>(newton, roots, {Scalar(4) * std::numeric_limits<Scalar>::epsilon(), 2000}) < 0)
      throw ConvergenceError("polynomial_roots: Aberth iteration did not converge", 0.0);
  }
  return roots;
}

}  // namespace jacospec::poly
