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

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <string_view>
#include <vector>

/// Free-probability transforms: spectral densities, Stieltjes transforms,
/// moments and closed-form S-transforms with their product rule.
namespace jacospec::free_prob {

using Complex = std::complex<double>;

enum class SpectralVariable { eigenvalue, singular_value };

std::string_view to_string(SpectralVariable v);

/// A point mass away from zero.
struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// Grid-sampled density with explicit point masses. The zero atom is kept
/// apart from any other atoms.
struct SpectralDensity {
  Eigen::ArrayXd abscissa;
  Eigen::ArrayXd density;
  double zero_atom = 0.0;
  std::vector<Atom> atoms;
  SpectralVariable variable = SpectralVariable::eigenvalue;

  Eigen::Index size() const { return abscissa.size(); }
  /// Trapezoid integral of the continuous part.
  double continuous_mass() const;
  double atom_mass() const;
  /// zero_atom + atoms + continuous part.
  double total_mass() const;
  /// Throws DomainError unless the abscissa is strictly increasing and
  /// nonnegative, densities are nonnegative and the total mass is 1 within tol.
  void validate(double tol = 1e-3) const;
};

/// Cumulative distribution of a density, with the continuous part taken
/// as the piecewise-linear interpolant of the samples.
class DensityCdf {
 public:
  explicit DensityCdf(const SpectralDensity& rho);
  double operator()(double x) const;
  /// Limit from the left.
  double left(double x) const;

 private:
  double mass_below(double x, bool inclusive) const;

  Eigen::ArrayXd abscissa_;
  Eigen::ArrayXd density_;
  Eigen::ArrayXd cumulative_;
  double zero_atom_ = 0.0;
  std::vector<Atom> atoms_;
};

struct MomentSeries {
  std::vector<double> moments;  ///< moments[k-1] is the k-th raw moment.
  double operator[](std::size_t k) const { return moments.at(k - 1); }
};

struct BernoulliSlopeLaw {
  double p = 1.0;
};

/// S(z) = scale * prod_i (z + shift_i)^power_i.
class STransform {
 public:
  struct Factor {
    double shift;
    double power;
  };

  STransform() = default;
  explicit STransform(double scale, std::vector<Factor> factors = {});

  double operator()(double z) const;
  Complex operator()(Complex z) const;

  double scale() const { return scale_; }
  const std::vector<Factor>& factors() const { return factors_; }

  /// Pointwise product; factors with equal shifts are merged.
  STransform operator*(const STransform& other) const;
  STransform pow(double exponent) const;

  /// Taylor coefficients of ((1 + w)/S(w))^k up to w^order.
  Eigen::ArrayXd inverse_power_series(int k, int order) const;

 private:
  double scale_ = 1.0;
  std::vector<Factor> factors_;
};

STransform s_bernoulli(BernoulliSlopeLaw law);
STransform s_wishart(double sigma_w_sq);
STransform s_orthogonal(double sigma_w_sq);
/// weight_s^L slope_s^L.
STransform s_jjt(const STransform& weight_s, const STransform& slope_s, int depth);

/// z -> (1 + z)/(z S(z)). Throws DomainError at z = 0.
std::function<double(double)> m_inverse_from_s(const STransform& s);

/// Raw moments from the S-transform by Lagrange inversion:
/// m_k = (1/k) [w^{k-1}] ((1 + w)/S(w))^k.
MomentSeries moments_from_s(const STransform& s, int count);

/// zero_atom/z + sum atoms + integral of rho(t)/(z - t). The continuous part
/// is the piecewise-linear interpolant integrated against the exact kernel.
Complex stieltjes_from_density(const SpectralDensity& rho, Complex z);

/// rho[i] = -Im g(grid[i] + i epsilon)/pi, with the zero atom set to one
/// minus the integrated mass. Throws BranchError on negative density.
SpectralDensity density_from_stieltjes(const std::function<Complex(Complex)>& g, const Eigen::ArrayXd& grid,
                                       double epsilon);

/// Clamps numerical dust -1e-6 < rho < 0 to zero and throws BranchError below.
double physical_density(Complex g, double lambda);

MomentSeries moments_from_density(const SpectralDensity& rho, int count);

/// s = sqrt(lambda), rho_s(s) = 2 s rho_lambda(s^2).
SpectralDensity singular_from_eigen(const SpectralDensity& rho_lambda);

/// Trapezoid rule over a nonuniform grid.
double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);

}  // namespace jacospec::free_prob
