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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jacospec/quadrature.hpp"

/// Mean-field signal propagation: the pre-activation variance map, its
/// fixed point, the slope multiplier chi and the critical line chi = 1.
namespace jacospec::signal_prop {

enum class NonlinearityKind { linear, relu, hardtanh, tanh };

/// Pointwise nonlinearity phi and its slope phi'.
class Nonlinearity {
 public:
  constexpr explicit Nonlinearity(NonlinearityKind kind = NonlinearityKind::linear) : kind_(kind) {}

  constexpr NonlinearityKind kind() const { return kind_; }
  double value(double h) const;
  double slope(double h) const;
  /// True for the piecewise-linear maps whose slope is 0 or 1.
  constexpr bool has_binary_slope() const { return kind_ != NonlinearityKind::tanh; }

  std::string_view name() const;
  static Nonlinearity parse(std::string_view name);

  friend constexpr bool operator==(Nonlinearity, Nonlinearity) = default;

 private:
  NonlinearityKind kind_;
};

struct MeanFieldParams {
  double sigma_w_sq = 1.0;
  double sigma_b_sq = 0.0;

  /// Throws DomainError unless sigma_w_sq > 0 and sigma_b_sq >= 0.
  void validate() const;
};

using GaussianRule = QuadratureRule<double>;

/// The 101-node Gauss-Hermite rule shared by default.
const GaussianRule& default_rule();

struct FixedPoint {
  double q_star = 0.0;
  double chi = 0.0;
  /// Fraction of neurons in the linear regime; empty for tanh.
  std::optional<double> p_linear;
  int iterations = 0;
  double residual = 0.0;
  /// Every q is fixed (linear at sigma_w^2 = 1, relu at sigma_w^2 = 2, no bias).
  bool degenerate = false;
};

struct FixedPointOptions {
  double q0 = 1.0;
  double tol = 1e-12;
  int max_iter = 10000;
  double damping = 0.5;
};

/// One step of the variance map: sigma_w^2 E[phi(sqrt(q) h)^2] + sigma_b^2.
double q_step(double q_prev, Nonlinearity nl, const MeanFieldParams& params,
              const GaussianRule& quad = default_rule());

/// Solves q = q_step(q) by damped iteration with Aitken acceleration.
FixedPoint fixed_point(Nonlinearity nl, const MeanFieldParams& params,
                       const FixedPointOptions& options = {},
                       const GaussianRule& quad = default_rule());

/// Mean squared singular value of DW: sigma_w^2 E[phi'(sqrt(q) h)^2].
double chi(Nonlinearity nl, const MeanFieldParams& params, double q_star,
           const GaussianRule& quad = default_rule());

/// Probability that phi'(h) = 1 for h ~ N(0, q_star).
/// Throws UnsupportedError for tanh.
double p_linear(Nonlinearity nl, double q_star);

/// Inverse of the hard-tanh linear fraction: the q* with erf(1/sqrt(2 q*)) = p.
double q_star_for_p(double target_p);

/// log(1 - p) for hard-tanh, resolved where p itself rounds to one.
double log_saturated_fraction(double q_star);

/// Inverse of log_saturated_fraction.
double q_star_for_log_saturated(double log_one_minus_p);

struct CriticalPoint {
  double sigma_w_sq = 0.0;
  double sigma_b_sq = 0.0;
  /// NaN when the critical map is degenerate (any q* is a fixed point).
  double q_star = 0.0;
  std::optional<double> p_linear;
};

/// Points (sigma_w^2, sigma_b^2) with chi = 1. Linear and relu have a
/// single critical point regardless of the grid.
/// Throws NoRootError when some grid value admits no critical bias.
std::vector<CriticalPoint> critical_line(Nonlinearity nl, std::span<const double> sigma_w_sq_grid,
                                         double tol = 1e-10,
                                         const GaussianRule& quad = default_rule());

/// The critical (sigma_w^2, sigma_b^2) whose fixed point is q_star.
/// For relu and linear the weight scale is fixed and the bias is zero.
MeanFieldParams critical_params_for_q_star(Nonlinearity nl, double q_star,
                                           const GaussianRule& quad = default_rule());

}  // namespace jacospec::signal_prop
