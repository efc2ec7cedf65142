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

#include "jacospec/spectrum_empirical.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "jacospec/errors.hpp"
#include "jacospec/parallel.hpp"
#include "jacospec/random_matrix.hpp"

#ifdef JACOSPEC_HAVE_LAPACKE
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int) __attribute__((weak));
#endif

namespace jacospec::empirical {

namespace {

using free_prob::SpectralVariable;
using signal_prop::NonlinearityKind;

constexpr double kRescaleHigh = 1e100;
constexpr double kRescaleLow = 1e-100;
constexpr double kLogMax = 709.0;

Eigen::VectorXd sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

// Raw moment k of the eigenvalue law described by a density in either variable.
double eigen_moment(const SpectralDensity& rho, int k) {
  if (rho.variable == SpectralVariable::eigenvalue) return free_prob::moments_from_density(rho, k)[std::size_t(k)];
  const Eigen::ArrayXd power = rho.abscissa.pow(2.0 * k);
  double m = free_prob::trapezoid(rho.abscissa, power * rho.density);
  for (const auto& a : rho.atoms) m += a.mass * std::pow(a.location, 2.0 * k);
  return m;
}

double density_edge(const SpectralDensity& rho) {
  double edge = 0.0;
  if (rho.size() > 0) {
    // Mass per logarithmic interval stays bounded at a divergence near zero.
    const Eigen::ArrayXd weighted = rho.abscissa * rho.density;
    const double cut = 1e-4 * weighted.maxCoeff();
    for (Eigen::Index i = rho.size() - 1; i >= 0; --i) {
      if (weighted[i] > cut) {
        edge = rho.abscissa[i];
        break;
      }
    }
  }
  for (const auto& a : rho.atoms)
    if (a.mass > 0.0) edge = std::max(edge, a.location);
  return edge;
}

double rel_error(double value, double reference) {
  return reference == 0.0 ? std::abs(value) : std::abs(value - reference) / std::abs(reference);
}

}  // namespace

void NetworkConfig::validate() const {
  if (width < 2) throw DomainError("width must be at least 2");
  if (depth < 1) throw DomainError("depth must be at least 1");
  signal_prop::MeanFieldParams{sigma_w_sq, sigma_b_sq}.validate();
  if (!std::isnan(q0) && !(q0 >= 0.0)) throw DomainError("q0 must be nonnegative");
}

double NetworkConfig::input_variance() const {
  if (!std::isnan(q0)) return q0;
  return signal_prop::fixed_point(nonlinearity, {sigma_w_sq, sigma_b_sq}).q_star;
}

NetworkConfig NetworkConfig::critical(const theory::EnsembleSpec& spec, int width) {
  spec.validate();
  NetworkConfig config;
  config.depth = spec.depth;
  config.width = width;
  config.nonlinearity = spec.nonlinearity;
  config.ensemble = spec.weights;
  config.sigma_w_sq = spec.sigma_w_sq;
  if (spec.nonlinearity.kind() == NonlinearityKind::hardtanh) {
    if (std::isnan(spec.q_star)) {
      // p = 1: every unit stays linear with zero input and bias.
      config.sigma_b_sq = 0.0;
      config.q0 = 0.0;
    } else {
      const auto params = signal_prop::critical_params_for_q_star(spec.nonlinearity, spec.q_star);
      config.sigma_w_sq = params.sigma_w_sq;
      config.sigma_b_sq = params.sigma_b_sq;
      config.q0 = spec.q_star;
    }
  } else {
    config.sigma_b_sq = 0.0;
    config.q0 = 1.0;
  }
  config.validate();
  return config;
}

namespace {

Eigen::VectorXd dense_singular_values(const Eigen::MatrixXd& m) {
  Eigen::VectorXd s;
#ifdef JACOSPEC_HAVE_LAPACKE
  // Some BLAS builds return wrong values on some CPUs; sum s^2 = |M|_F^2 catches it.
  static std::atomic<bool> lapack_ok{true};
  if (lapack_ok.load()) {
    Eigen::MatrixXd a = m;
    s.resize(std::min(m.rows(), m.cols()));
    const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', lapack_int(a.rows()), lapack_int(a.cols()),
                                           a.data(), lapack_int(a.rows()), s.data(), nullptr, 1, nullptr, 1);
    const double frob = m.squaredNorm();
    if (info != 0 || std::abs(s.squaredNorm() - frob) > 1e-8 * frob) {
      lapack_ok.store(false);
      s.resize(0);
    }
  }
  if (s.size() == 0) s = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
#else
  s = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
#endif
  return s;
}

}  // namespace

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  // Exact zero rows and columns are removed first: each adds an exact zero,
  // and Eigen 3.4.0 BDCSVD can crash on them.
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.row(i).cwiseAbs().maxCoeff() > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (m.col(j).cwiseAbs().maxCoeff() > 0.0) cols.push_back(j);
  const Eigen::Index count = std::min(m.rows(), m.cols());
  Eigen::VectorXd s = Eigen::VectorXd::Zero(count);
  if (!rows.empty() && !cols.empty()) {
    const Eigen::VectorXd nonzero = Eigen::Index(rows.size()) == m.rows() && Eigen::Index(cols.size()) == m.cols()
                                        ? dense_singular_values(m)
                                        : dense_singular_values(m(rows, cols));
    s.head(nonzero.size()) = nonzero;
  }
  std::sort(s.data(), s.data() + s.size());
  return s;
}

Eigen::VectorXd singular_values_gram(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m.rows(), m.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(m);
  Eigen::VectorXd s = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues();
  for (double& x : s) x = std::sqrt(std::max(0.0, x));
  std::sort(s.data(), s.data() + s.size());
  return s;
}

double largest_singular_value(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() == 0 || m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Lanczos on m m^T with full reorthogonalization.
  const Eigen::Index max_steps = n;
  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(max_steps, 64));
  std::vector<double> alpha, beta;
  Philox start(0x5eed1a2c05ULL, 0);
  Eigen::VectorXd v(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = start.normal();
  v.normalize();
  double theta = 0.0;
  for (Eigen::Index k = 0; k < max_steps; ++k) {
    if (k == basis.cols()) basis.conservativeResize(Eigen::NoChange, std::min(max_steps, 2 * basis.cols()));
    basis.col(k) = v;
    w.noalias() = m * (m.transpose() * v);
    alpha.push_back(v.dot(w));
    for (int pass = 0; pass < 2; ++pass)
      w.noalias() -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    const bool last = k + 1 == max_steps;
    if (k % 5 == 4 || last || b == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      const Eigen::Map<const Eigen::VectorXd> diag(alpha.data(), Eigen::Index(alpha.size()));
      const Eigen::Map<const Eigen::VectorXd> sub(beta.data(), Eigen::Index(beta.size()));
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const Eigen::Index top = Eigen::Index(alpha.size()) - 1;
      theta = tri.eigenvalues()[top];
      if (b * std::abs(tri.eigenvectors()(top, top)) <= 1e-12 * theta || last || b <= 1e-14 * theta) break;
    }
    beta.push_back(b);
    v = w / b;
  }
  return std::sqrt(std::max(0.0, theta));
}

TrialResult forward_jacobian(const NetworkConfig& config, Philox& rng) {
  config.validate();
  const double sd = std::sqrt(config.input_variance());
  Eigen::VectorXd h0(config.width);
  for (Eigen::Index i = 0; i < h0.size(); ++i) h0[i] = sd * rng.normal();
  return forward_jacobian(config, rng, h0);
}

namespace {

// Jacobian divided by exp(log_scale); fills q_per_layer.
Eigen::MatrixXd assemble_jacobian(const NetworkConfig& config, Philox& rng, const Eigen::VectorXd& h0,
                                  std::vector<double>& q_per_layer, double& log_scale) {
  const Eigen::Index n = config.width;
  if (h0.size() != n) throw DomainError("forward_jacobian: input size differs from the width");
  const Nonlinearity nl = config.nonlinearity;
  const double bias_sd = std::sqrt(config.sigma_b_sq);

  q_per_layer.reserve(config.depth);
  Eigen::VectorXd h = h0, x(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = nl.value(h[i]);

  Eigen::MatrixXd jac(n, n), tmp(n, n);
  log_scale = 0.0;
  for (int layer = 1; layer <= config.depth; ++layer) {
    if (config.ensemble == WeightEnsemble::gaussian) {
      const Eigen::MatrixXd w = rmt::sample_gaussian(n, config.sigma_w_sq, rng);
      h.noalias() = w * x;
      if (layer == 1) {
        jac = w;
      } else {
        tmp.noalias() = w * jac;
        jac.swap(tmp);
      }
    } else {
      const rmt::HaarReflectors<double> w(n, config.sigma_w_sq, rng);
      h = x;
      w.apply_left(h);
      if (layer == 1) {
        jac = w.dense();
      } else {
        w.apply_left(jac);
      }
    }
    if (bias_sd > 0.0)
      for (Eigen::Index i = 0; i < n; ++i) h[i] += bias_sd * rng.normal();
    if (!h.allFinite()) throw OverflowError("pre-activations overflow at layer " + std::to_string(layer), layer);
    q_per_layer.push_back(h.squaredNorm() / double(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      d[i] = nl.slope(h[i]);
      x[i] = nl.value(h[i]);
    }
    jac = d.asDiagonal() * jac;
    const double norm = jac.cwiseAbs().maxCoeff();
    if (!std::isfinite(norm)) throw OverflowError("Jacobian overflow at layer " + std::to_string(layer), layer);
    if (norm > kRescaleHigh || (norm > 0.0 && norm < kRescaleLow)) {
      jac /= norm;
      log_scale += std::log(norm);
    }
  }
  return jac;
}

}  // namespace

TrialResult forward_jacobian(const NetworkConfig& config, Philox& rng, const Eigen::VectorXd& h0) {
  config.validate();
  TrialResult result;
  double log_scale = 0.0;
  const Eigen::MatrixXd jac = assemble_jacobian(config, rng, h0, result.q_per_layer, log_scale);
  result.singular_values =
      config.spectrum == SpectrumMethod::gram ? singular_values_gram(jac) : singular_values(jac);
  if (log_scale != 0.0) {
    const double top = result.singular_values.size() ? result.singular_values.maxCoeff() : 0.0;
    if (top > 0.0 && std::log(top) + log_scale > kLogMax)
      throw OverflowError("singular values exceed the double range at layer " + std::to_string(config.depth),
                          config.depth);
    for (double& s : result.singular_values) s = s > 0.0 ? std::exp(std::log(s) + log_scale) : 0.0;
  }
  return result;
}

TrialResult forward_jacobian(const NetworkConfig& config, std::uint64_t seed, std::uint64_t stream) {
  Philox rng(seed, stream);
  TrialResult r = forward_jacobian(config, rng);
  r.seed = seed;
  r.stream = stream;
  return r;
}

Eigen::VectorXd largest_eigenvalues(const NetworkConfig& config, int trials, std::uint64_t base_seed) {
  config.validate();
  if (trials < 1) throw DomainError("largest_eigenvalues: trials must be at least 1");
  Eigen::VectorXd out(trials);
  parallel_for(std::size_t(trials), [&](std::size_t t) {
    Philox rng(base_seed, t);
    const double sd = std::sqrt(config.input_variance());
    Eigen::VectorXd h0(config.width);
    for (Eigen::Index i = 0; i < h0.size(); ++i) h0[i] = sd * rng.normal();
    std::vector<double> q;
    double log_scale = 0.0;
    const double s = largest_singular_value(assemble_jacobian(config, rng, h0, q, log_scale));
    if (s > 0.0 && std::log(s) + log_scale > kLogMax)
      throw OverflowError("singular values exceed the double range at layer " + std::to_string(config.depth),
                          config.depth);
    out[Eigen::Index(t)] = s > 0.0 ? std::exp(2.0 * (std::log(s) + log_scale)) : 0.0;
  });
  return out;
}

int freedman_diaconis_bins(const Eigen::VectorXd& sorted) {
  const Eigen::Index n = sorted.size();
  if (n < 2) return 1;
  auto quantile = [&](double q) {
    const double pos = q * double(n - 1);
    const Eigen::Index i = Eigen::Index(std::floor(pos));
    const double t = pos - double(i);
    return i + 1 < n ? (1.0 - t) * sorted[i] + t * sorted[i + 1] : sorted[n - 1];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double range = sorted[n - 1] - sorted[0];
  if (!(iqr > 0.0) || !(range > 0.0)) return 1;
  const double width = 2.0 * iqr / std::cbrt(double(n));
  return int(std::clamp(std::ceil(range / width), 1.0, 10000.0));
}

SpectralDensity histogram_density(const Eigen::VectorXd& sorted, SpectralVariable variable, double zero_threshold,
                                  int bins) {
  const Eigen::Index n = sorted.size();
  if (n == 0) throw DomainError("histogram_density: no samples");
  SpectralDensity out;
  out.variable = variable;
  Eigen::Index first = 0;
  while (first < n && sorted[first] <= zero_threshold) ++first;
  out.zero_atom = double(first) / double(n);
  if (first == n) return out;
  const Eigen::VectorXd positive = sorted.tail(n - first);
  if (bins <= 0) bins = freedman_diaconis_bins(positive);
  double lo = positive[0], hi = positive[positive.size() - 1];
  if (!(hi > lo)) {
    const double pad = std::max(1e-12 * std::abs(hi), 1e-300);
    lo = std::max(0.0, lo - pad);
    hi += pad;
  }
  const double width = (hi - lo) / bins;
  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(bins);
  for (Eigen::Index i = 0; i < positive.size(); ++i)
    counts[std::clamp(Eigen::Index((positive[i] - lo) / width), Eigen::Index(0), Eigen::Index(bins - 1))] += 1.0;
  const Eigen::ArrayXd heights = counts / (double(n) * width);
  out.abscissa.resize(bins + 2);
  out.density.resize(bins + 2);
  out.abscissa[0] = lo;
  out.density[0] = heights[0];
  for (int b = 0; b < bins; ++b) {
    out.abscissa[b + 1] = lo + (b + 0.5) * width;
    out.density[b + 1] = heights[b];
  }
  out.abscissa[bins + 1] = hi;
  out.density[bins + 1] = heights[bins - 1];
  return out;
}

namespace {

std::pair<double, double> mean_and_stderr(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = double(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

EmpiricalSpectrum run_experiment(const NetworkConfig& config, int trials, std::uint64_t base_seed, int bins) {
  config.validate();
  if (trials < 1) throw DomainError("run_experiment: trials must be at least 1");
  std::vector<std::optional<TrialResult>> results(trials);
  std::vector<std::string> errors(trials);
#ifdef JACOSPEC_HAVE_LAPACKE
  if (openblas_set_num_threads && worker_count() > 1) openblas_set_num_threads(1);
#endif
  parallel_for(std::size_t(trials), [&](std::size_t t) {
    try {
      results[t] = forward_jacobian(config, base_seed, t);
    } catch (const Error& e) {
      errors[t] = e.what();
    }
  });

  EmpiricalSpectrum out;
  out.config = config;
  out.trials = trials;
  out.base_seed = base_seed;
  std::vector<double> s_pool, lambda_pool, trial_means, trial_max, trial_shape;
  out.mean_q_per_layer.assign(config.depth, 0.0);
  std::string first_error;
  for (int t = 0; t < trials; ++t) {
    if (!results[t]) {
      ++out.failed_trials;
      if (first_error.empty()) first_error = errors[t];
      continue;
    }
    const auto& r = *results[t];
    const double top = r.singular_values.size() ? r.singular_values.maxCoeff() : 0.0;
    const double cut = kZeroTolerance * top;
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
      const double s = r.singular_values[i] <= cut ? 0.0 : r.singular_values[i];
      s_pool.push_back(s);
      lambda_pool.push_back(s * s);
      sum += s * s;
      sum_sq += s * s * s * s;
    }
    const double n = double(r.singular_values.size());
    trial_means.push_back(sum / n);
    trial_shape.push_back(sum > 0.0 ? (sum_sq / n) / ((sum / n) * (sum / n)) - 1.0 : 0.0);
    trial_max.push_back(top * top);
    for (int l = 0; l < config.depth; ++l) out.mean_q_per_layer[l] += r.q_per_layer[l];
  }
  if (out.failed_trials * 100 > trials)
    throw ExperimentError(std::to_string(out.failed_trials) + " of " + std::to_string(trials) +
                          " trials failed: " + first_error);
  const int ok = trials - out.failed_trials;
  for (auto& q : out.mean_q_per_layer) q /= ok;

  out.singular_values = sorted_copy(std::move(s_pool));
  out.eigenvalues = sorted_copy(std::move(lambda_pool));
  out.histogram = histogram_density(out.eigenvalues, SpectralVariable::eigenvalue, 0.0, bins);
  out.singular_histogram = histogram_density(out.singular_values, SpectralVariable::singular_value, 0.0, bins);

  const double count = double(out.eigenvalues.size());
  out.summary.m1 = out.eigenvalues.sum() / count;
  out.summary.m2 = out.eigenvalues.squaredNorm() / count;
  out.summary.variance = std::max(0.0, out.summary.m2 - out.summary.m1 * out.summary.m1);
  out.summary.lambda_max = std::accumulate(trial_max.begin(), trial_max.end(), 0.0) / ok;
  out.summary.s_max = std::sqrt(out.summary.lambda_max);
  const signal_prop::MeanFieldParams params{config.sigma_w_sq, config.sigma_b_sq};
  try {
    const double q_star = signal_prop::fixed_point(config.nonlinearity, params).q_star;
    out.summary.chi_to_L = std::pow(signal_prop::chi(config.nonlinearity, params, q_star), config.depth);
  } catch (const ConvergenceError&) {
    out.summary.chi_to_L = std::numeric_limits<double>::quiet_NaN();
  }
  out.m1_stderr = mean_and_stderr(trial_means).second;
  const auto [shape, shape_err] = mean_and_stderr(trial_shape);
  out.normalized_variance = shape;
  out.normalized_variance_stderr = shape_err;
  return out;
}

double ks_distance(const Eigen::VectorXd& sorted, const SpectralDensity& theory, double zero_threshold,
                   double atom_rel_tol) {
  const Eigen::Index n = sorted.size();
  if (n == 0) throw DomainError("ks_distance: no samples");
  std::vector<double> x(sorted.data(), sorted.data() + n);
  for (double& v : x) {
    if (v <= zero_threshold) v = 0.0;
    for (const auto& a : theory.atoms)
      if (std::abs(v - a.location) <= atom_rel_tol * a.location) v = a.location;
  }
  std::sort(x.begin(), x.end());
  const free_prob::DensityCdf cdf(theory);
  double d = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    d = std::max(d, std::abs(double(i) / double(n) - cdf.left(x[i])));
    d = std::max(d, std::abs(double(j) / double(n) - cdf(x[i])));
    i = j;
  }
  return d;
}

ComparisonReport compare(const Eigen::VectorXd& sorted, SpectralVariable variable, const SpectralDensity& theory) {
  if (variable != theory.variable)
    throw VariableMismatchError("cannot compare " + std::string(free_prob::to_string(variable)) + " samples with the " +
                                std::string(free_prob::to_string(theory.variable)) + " density");
  if (sorted.size() == 0) throw DomainError("compare: no samples");
  ComparisonReport report;
  report.variable = variable;
  report.ks = ks_distance(sorted, theory);
  Eigen::ArrayXd lambda = sorted.array();
  if (variable == SpectralVariable::singular_value) lambda = lambda.square();
  report.m1_rel_error = rel_error(lambda.mean(), eigen_moment(theory, 1));
  report.m2_rel_error = rel_error(lambda.square().mean(), eigen_moment(theory, 2));
  report.theory_edge = density_edge(theory);
  report.empirical_edge = sorted[sorted.size() - 1];
  report.edge_rel_error = rel_error(report.empirical_edge, report.theory_edge);
  return report;
}

ComparisonReport compare(const EmpiricalSpectrum& empirical, const SpectralDensity& theory) {
  const bool eig = theory.variable == SpectralVariable::eigenvalue;
  ComparisonReport report = compare(eig ? empirical.eigenvalues : empirical.singular_values, theory.variable, theory);
  report.empirical_edge = eig ? empirical.summary.lambda_max : empirical.summary.s_max;
  report.edge_rel_error = rel_error(report.empirical_edge, report.theory_edge);
  return report;
}

}  // namespace jacospec::empirical
