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
#include <cmath>
#include <stdexcept>

namespace jacospec {

/// Nodes and weights of a rule for the standard Gaussian measure
/// Dh = exp(-h^2/2) dh / sqrt(2 pi). Weights sum to one.
template <typename Scalar>
struct QuadratureRule {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  Array nodes;
  Array weights;

  Eigen::Index order() const { return nodes.size(); }

  /// Integral of f against the Gaussian measure.
  template <typename F>
  Scalar expect(F&& f) const {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Gauss-Hermite rule for the probabilists' weight, from the Golub-Welsch
/// eigenproblem of the Jacobi matrix (off-diagonals sqrt(k)). Nodes are
/// then Newton-polished on He_n and weights recomputed as Christoffel
/// numbers from the orthonormal recurrence.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_hermite(int order) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  const int n = order;

  Vector diag = Vector::Zero(n);
  Vector sub(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(Scalar(k));

  QuadratureRule<Scalar> rule;
  if (n == 1) {
    rule.nodes = QuadratureRule<Scalar>::Array::Zero(1);
    rule.weights = QuadratureRule<Scalar>::Array::Ones(1);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  rule.nodes = solver.eigenvalues().array();
  rule.weights.resize(n);

  // Orthonormal p_k: sqrt(k+1) p_{k+1} = x p_k - sqrt(k) p_{k-1}, p_0 = 1.
  auto orthonormal = [n](Scalar x, Scalar& pn, Scalar& sum_sq) {
    Scalar prev(0), cur(1);
    sum_sq = Scalar(1);
    for (int k = 0; k < n - 1; ++k) {
      const Scalar next = (x * cur - std::sqrt(Scalar(k)) * prev) / std::sqrt(Scalar(k + 1));
      prev = cur;
      cur = next;
      sum_sq += cur * cur;
    }
    // One more step gives p_n, whose zeros are the nodes.
    pn = (x * cur - std::sqrt(Scalar(n - 1)) * prev) / std::sqrt(Scalar(n));
    return cur;  // p_{n-1}
  };

  for (int i = 0; i < n; ++i) {
    Scalar x = rule.nodes[i];
    for (int it = 0; it < 3; ++it) {
      Scalar pn, s;
      const Scalar pn1 = orthonormal(x, pn, s);
      // p_n' = sqrt(n) p_{n-1} for the orthonormal Hermite family.
      const Scalar dp = std::sqrt(Scalar(n)) * pn1;
      if (dp == Scalar(0)) break;
      x -= pn / dp;
    }
    Scalar pn, sum_sq;
    orthonormal(x, pn, sum_sq);
    rule.nodes[i] = x;
    rule.weights[i] = Scalar(1) / sum_sq;
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace jacospec
