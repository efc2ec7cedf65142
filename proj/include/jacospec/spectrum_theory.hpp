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
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "jacospec/free_prob.hpp"
#include "jacospec/signal_prop.hpp"

/// Limiting spectra of J J^T for Gaussian and orthogonal weights with
/// Bernoulli slopes: master polynomials, physical-root continuation,
/// density inversion, spectral edges and moments.
namespace jacospec::theory {

using Complex = std::complex<double>;
using free_prob::SpectralDensity;
using signal_prop::Nonlinearity;

enum class WeightEnsemble { gaussian, orthogonal };

std::string_view to_string(WeightEnsemble w);
WeightEnsemble parse_ensemble(std::string_view name);

struct EnsembleSpec {
  WeightEnsemble weights = WeightEnsemble::gaussian;
  Nonlinearity nonlinearity{};
  int depth = 1;
  double sigma_w_sq = 1.0;
  /// Linear-regime fraction p(q*).
  double p = 1.0;
  /// The fixed point the spec was built from, NaN if none.
  double q_star = std::numeric_limits<double>::quiet_NaN();

  /// Throws UnsupportedError for tanh and DomainError for p outside (0, 1],
  /// p != 1 for linear or depth < 1.
  void validate() const;
  double chi() const { return sigma_w_sq * p; }
  double chi_to_depth() const;

  /// Critical spec at the given q*: sigma_w^2 = 1/p(q*). Linear uses
  /// sigma_w^2 = 1 and relu sigma_w^2 = 2 regardless of q*.
  static EnsembleSpec critical(WeightEnsemble weights, Nonlinearity nl, int depth, double q_star = 1.0);
  /// Critical hard-tanh spec with the given linear fraction.
  static EnsembleSpec critical_hardtanh_p(WeightEnsemble weights, int depth, double p);
  /// Spec at an arbitrary (sigma_w^2, sigma_b^2) through the fixed point.
  static EnsembleSpec from_params(WeightEnsemble weights, Nonlinearity nl, int depth,
                                  const signal_prop::MeanFieldParams& params);
};

/// S_{JJ^T} for the spec.
free_prob::STransform s_transform(const EnsembleSpec& spec);

/// Coefficients in G (ascending) of the master polynomial at z.
struct StieltjesPolynomial {
  WeightEnsemble ensemble = WeightEnsemble::gaussian;
  Complex z;
  Eigen::VectorXcd coefficients;

  int degree() const { return int(coefficients.size()) - 1; }
  Complex operator()(Complex g) const;
  Eigen::VectorXcd roots() const;
};

/// Expands sigma_w^{2L} G (Gz + p - 1)^L - (Gz - 1) (Gaussian) or
/// sigma_w^{2L} G (Gz + p - 1)^L - (zG)^L (Gz - 1) (orthogonal).
/// Throws OverflowError when a coefficient exceeds the double range.
StieltjesPolynomial build_polynomial(const EnsembleSpec& spec, Complex z);

/// Tracks every root of the master polynomial in u = zG along a path in the
/// upper half plane and keeps the index of the physical one.
class PhysicalBranch {
 public:
  explicit PhysicalBranch(const EnsembleSpec& spec);

  /// Starts at z far above the support and picks the root nearest
  /// 1 + m1/z. Throws BranchError if the choice is ambiguous.
  void seed(Complex z);
  /// Starts at z on the root nearest the given u = zG, without the
  /// ambiguity check.
  void seed_near(Complex z, Complex u_guess);
  /// Seeds high above Re z and descends vertically to z.
  void seed_and_descend(Complex z);
  /// Moves all roots to z with adaptive substeps; each root moves less than
  /// half its distance to the others and the physical root obeys the
  /// local Lipschitz bound. Throws BranchError on failure.
  void advance(Complex z);

  Complex z() const { return z_; }
  /// Physical G(z).
  Complex stieltjes() const;
  /// Physical G minus the isolated atom away from zero, if any.
  Complex continuous_stieltjes() const;
  const Eigen::VectorXcd& roots() const { return roots_; }
  Eigen::Index physical_index() const { return phys_; }

  /// Largest ratio |du| / (|du/dz| |dz|) seen for the physical root.
  double max_lipschitz_ratio() const { return max_ratio_; }
  long substeps() const { return substeps_; }

 private:
  struct Eval {
    Complex newton;  // P/P'
    Complex du_dzeta;
  };
  Eval evaluate(Complex u, Complex zeta) const;
  Eigen::VectorXcd initial_roots(Complex zeta) const;
  bool try_step(Complex z_new);
  void select(Complex z, Complex u_guess, bool check_ambiguity);

  EnsembleSpec spec_;
  double log_scale_;  // L log sigma_w^2
  double scale_;      // sigma_w^{2L}
  double c_;          // 1 - p
  double atom_location_;
  double atom_mass_;
  double lambda_ref_;
  Complex z_{0.0, 1.0};
  Eigen::VectorXcd roots_;
  Eigen::Index phys_ = 0;
  double max_ratio_ = 0.0;
  long substeps_ = 0;
};

/// Physical root at z (Im z > 0), as G. With prev_root, the root of the
/// polynomial at z nearest prev_root; otherwise by continuation from far
/// above the support. Throws BranchError when Im G > 0.
Complex solve_stieltjes(const EnsembleSpec& spec, Complex z, std::optional<Complex> prev_root = std::nullopt);

struct DensityOptions {
  /// Inversion heights relative to lambda; Richardson-combined as 2 rho(e2) - rho(e1).
  double epsilon_rel = 1e-6;
  double epsilon_rel_half = 5e-7;
  bool richardson = true;
  /// Grid points per independently seeded chunk.
  int chunk_size = 250;
};

/// Default eigenvalue grid: log-spaced from 1e-20 lambda_max up to half the
/// continuous edge, clustered toward the edge from both sides, then linear
/// to 1.05 times the largest spectral point. Points touching an atom are dropped.
Eigen::ArrayXd default_grid(const EnsembleSpec& spec, int points = 2000);

/// Eigenvalue density of J J^T on the grid. Atoms away from zero are
/// reported in `atoms`; the zero atom is one minus the remaining mass.
SpectralDensity theory_density(const EnsembleSpec& spec, const Eigen::ArrayXd& grid,
                               const DensityOptions& options = {});
SpectralDensity theory_density(const EnsembleSpec& spec, int points = 2000);

/// Singular-value density of the critical linear Gaussian network,
/// sampled parametrically in phi on (0, pi/(L+1)).
SpectralDensity linear_gaussian_density(int depth, int n_phi);

/// Location and mass of the eigenvalue atom at sigma_w^{2L} (orthogonal
/// weights only; mass max(0, 1 - L(1 - p))).
free_prob::Atom orthogonal_atom(const EnsembleSpec& spec);

/// Right edge of the continuous part. Gaussian: the double root of the
/// master polynomial found numerically; orthogonal: the closed form
/// (sigma_w^2 p)^L (1-p)/p L^L/(L-1)^(L-1) for p < 1 and L >= 2.
/// Returns 0 when there is no continuous part.
double continuous_edge(const EnsembleSpec& spec);

/// Largest point of the spectrum, counting atoms.
double lambda_max(const EnsembleSpec& spec);

/// Large-depth form (sigma_w^2 p)^L (e/p) L for Gaussian weights and
/// (sigma_w^2 p)^L (1-p)/p e L for orthogonal weights.
double lambda_max_asymptotic(const EnsembleSpec& spec);

/// Largest lambda where the continuous density vanishes, by bisection
/// on the decay of Im G(lambda + i eps) with eps. Throws NoRootError if
/// the bracket does not straddle an edge.
double spectral_edge_numeric(const EnsembleSpec& spec, std::pair<double, double> bracket, double tol = 1e-7);

struct SpectrumSummary {
  double m1 = 0.0;
  double m2 = 0.0;
  double variance = 0.0;
  double lambda_max = 0.0;
  double s_max = 0.0;
  double chi_to_L = 0.0;
};

/// Moments by Lagrange inversion of S_{JJ^T}, with lambda_max.
SpectrumSummary moments_lagrange(const EnsembleSpec& spec);

struct SweepRow {
  int depth;
  double q_star;
  WeightEnsemble weights;
  Nonlinearity nonlinearity;
  double s_max;
};

std::vector<SweepRow> smax_sweep(const std::vector<EnsembleSpec>& specs);

}  // namespace jacospec::theory
