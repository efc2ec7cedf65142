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
#include <cstdint>
#include <limits>
#include <vector>

#include "jacospec/free_prob.hpp"
#include "jacospec/rng.hpp"
#include "jacospec/signal_prop.hpp"
#include "jacospec/spectrum_theory.hpp"

/// Monte Carlo spectra of the input-output Jacobian of random networks.
namespace jacospec::empirical {

using free_prob::SpectralDensity;
using signal_prop::Nonlinearity;
using theory::SpectrumSummary;
using theory::WeightEnsemble;

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kZeroTolerance = 1e-10;

enum class SpectrumMethod {
  /// Singular value decomposition of J.
  svd,
  /// Eigenvalues of J J^T. Absolute error eps s_max^2 in s^2.
  gram,
};

struct NetworkConfig {
  int depth = 1;
  int width = 1000;
  double sigma_w_sq = 1.0;
  double sigma_b_sq = 0.0;
  Nonlinearity nonlinearity{};
  WeightEnsemble ensemble = WeightEnsemble::gaussian;
  /// Input variance; NaN selects the fixed point q*.
  double q0 = std::numeric_limits<double>::quiet_NaN();
  SpectrumMethod spectrum = SpectrumMethod::svd;

  /// Throws DomainError unless width >= 2, depth >= 1, sigma_w_sq > 0,
  /// sigma_b_sq >= 0 and q0 is NaN or >= 0.
  void validate() const;
  /// q0, or the fixed point when q0 is NaN.
  double input_variance() const;
  /// Critical network for a theory spec; sigma_b^2 is solved from q* for hard-tanh.
  static NetworkConfig critical(const theory::EnsembleSpec& spec, int width);
};

struct TrialResult {
  /// Ascending, length N.
  Eigen::VectorXd singular_values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Empirical (1/N) sum_i (h_i^l)^2 for l = 1..L.
  std::vector<double> q_per_layer;
};

/// Singular values of an N x N matrix, ascending. Uses LAPACK divide and
/// conquer when built with it, Eigen's BDCSVD otherwise.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);
/// Same from the eigenvalues of m m^T.
Eigen::VectorXd singular_values_gram(const Eigen::MatrixXd& m);

/// Largest singular value by Lanczos on m m^T, relative accuracy ~1e-12.
double largest_singular_value(const Eigen::MatrixXd& m);

/// One network draw: forward pass from h^0 ~ N(0, q0) and J = prod_l D^l W^l.
/// Throws OverflowError naming the layer if the forward pass or the
/// Jacobian scale leaves the double range.
TrialResult forward_jacobian(const NetworkConfig& config, Philox& rng);
/// Same from the given input pre-activations h^0.
TrialResult forward_jacobian(const NetworkConfig& config, Philox& rng, const Eigen::VectorXd& h0);
/// Same, drawing from Philox(seed, stream).
TrialResult forward_jacobian(const NetworkConfig& config, std::uint64_t seed, std::uint64_t stream = 0);

struct EmpiricalSpectrum {
  NetworkConfig config;
  int trials = 0;
  int failed_trials = 0;
  std::uint64_t base_seed = 0;
  /// Pooled over trials, ascending.
  Eigen::VectorXd singular_values;
  /// Squares of the pooled singular values, ascending.
  Eigen::VectorXd eigenvalues;
  /// Histograms of the eigenvalues and singular values; values below the
  /// zero tolerance go into zero_atom.
  SpectralDensity histogram;
  SpectralDensity singular_histogram;
  /// m1, m2, variance over pooled eigenvalues; lambda_max and s_max are
  /// means of the per-trial maxima.
  SpectrumSummary summary;
  /// Standard error of m1 from the spread of per-trial means.
  double m1_stderr = 0.0;
  /// Mean over trials of m2/m1^2 - 1, the variance of each trial's
  /// spectrum divided by its squared mean, and its standard error.
  double normalized_variance = 0.0;
  double normalized_variance_stderr = 0.0;
  /// Mean over trials of q^l.
  std::vector<double> mean_q_per_layer;
};

/// Runs trials in parallel; trial t draws from Philox(base_seed, t).
/// bins = 0 selects the Freedman-Diaconis rule. Throws ExperimentError when
/// more than 1% of trials fail.
EmpiricalSpectrum run_experiment(const NetworkConfig& config, int trials, std::uint64_t base_seed, int bins = 0);

/// Largest eigenvalue of J J^T for each trial, same networks as
/// run_experiment with the same base_seed. Rethrows the first trial error.
Eigen::VectorXd largest_eigenvalues(const NetworkConfig& config, int trials, std::uint64_t base_seed);

/// Histogram of nonnegative samples as a density. Samples at or below
/// zero_threshold go into zero_atom. The abscissa holds the outer bin
/// edges and the bin centers so the trapezoid rule returns the bin mass.
SpectralDensity histogram_density(const Eigen::VectorXd& sorted_samples, free_prob::SpectralVariable variable,
                                  double zero_threshold, int bins = 0);

/// Freedman-Diaconis bin count for sorted samples, in [1, 10000].
int freedman_diaconis_bins(const Eigen::VectorXd& sorted_samples);

struct ComparisonReport {
  free_prob::SpectralVariable variable = free_prob::SpectralVariable::eigenvalue;
  double ks = 0.0;
  double m1_rel_error = 0.0;
  double m2_rel_error = 0.0;
  double edge_rel_error = 0.0;
  double empirical_edge = 0.0;
  double theory_edge = 0.0;
};

/// Kolmogorov-Smirnov distance between sorted samples and a density:
/// samples within `zero_threshold` of zero are taken as exact zeros and
/// samples within `atom_rel_tol` of an atom as sitting on it.
double ks_distance(const Eigen::VectorXd& sorted_samples, const SpectralDensity& theory, double zero_threshold = 0.0,
                   double atom_rel_tol = 1e-8);

/// Compares pooled samples in the theory's variable. Moment errors are
/// taken in the eigenvalue variable, edges in the theory's variable.
ComparisonReport compare(const EmpiricalSpectrum& empirical, const SpectralDensity& theory);

/// Same for bare pooled samples of the given variable. Throws
/// VariableMismatchError when the variables differ.
ComparisonReport compare(const Eigen::VectorXd& sorted_samples, free_prob::SpectralVariable variable,
                         const SpectralDensity& theory);

}  // namespace jacospec::empirical
