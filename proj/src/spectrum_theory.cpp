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

#include "jacospec/spectrum_theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "jacospec/errors.hpp"
#include "jacospec/parallel.hpp"
#include "jacospec/polynomial.hpp"

namespace jacospec::theory {

namespace {

constexpr double kLogMax = 700.0;
constexpr double kAtomFloor = 1e-12;
constexpr double kContinuousFloor = 1e-10;
constexpr Eigen::Index kCompanionMaxDegree = 64;

using signal_prop::NonlinearityKind;

Complex ipow(Complex x, int n) {
  Complex result(1.0);
  while (n > 0) {
    if (n & 1) result *= x;
    x *= x;
    n >>= 1;
  }
  return result;
}

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double checked_exp(double log_value, const char* what) {
  if (log_value > kLogMax) throw OverflowError(std::string(what) + " exceeds the double range");
  return std::exp(log_value);
}

bool herglotz_ok(Complex g) { return g.imag() <= 1e-12 * std::max(1.0, std::abs(g)); }

// Orthogonal polynomial in u collapses to degree one.
bool orthogonal_linear(const EnsembleSpec& spec) {
  return spec.weights == WeightEnsemble::orthogonal && (spec.depth == 1 || spec.p == 1.0);
}

}  // namespace

std::string_view to_string(WeightEnsemble w) {
  return w == WeightEnsemble::gaussian ? "gaussian" : "orthogonal";
}

WeightEnsemble parse_ensemble(std::string_view name) {
  if (name == "gaussian") return WeightEnsemble::gaussian;
  if (name == "orthogonal") return WeightEnsemble::orthogonal;
  throw DomainError("unknown weight ensemble: " + std::string(name));
}

void EnsembleSpec::validate() const {
  if (nonlinearity.kind() == NonlinearityKind::tanh)
    throw UnsupportedError("tanh slopes are not Bernoulli distributed");
  if (depth < 1) throw DomainError("depth must be at least 1");
  if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq)) throw DomainError("sigma_w_sq must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  if (nonlinearity.kind() == NonlinearityKind::linear && p != 1.0)
    throw DomainError("linear networks have p = 1");
}

double EnsembleSpec::chi_to_depth() const { return std::exp(depth * std::log(chi())); }

EnsembleSpec EnsembleSpec::critical(WeightEnsemble weights, Nonlinearity nl, int depth, double q_star) {
  EnsembleSpec spec;
  spec.weights = weights;
  spec.nonlinearity = nl;
  spec.depth = depth;
  switch (nl.kind()) {
    case NonlinearityKind::linear:
      spec.sigma_w_sq = 1.0;
      spec.p = 1.0;
      break;
    case NonlinearityKind::relu:
      spec.sigma_w_sq = 2.0;
      spec.p = 0.5;
      break;
    case NonlinearityKind::hardtanh:
      if (!(q_star > 0.0)) throw DomainError("q_star must be positive");
      spec.p = signal_prop::p_linear(nl, q_star);
      spec.sigma_w_sq = 1.0 / spec.p;
      spec.q_star = q_star;
      break;
    case NonlinearityKind::tanh:
      throw UnsupportedError("tanh slopes are not Bernoulli distributed");
  }
  spec.validate();
  return spec;
}

EnsembleSpec EnsembleSpec::critical_hardtanh_p(WeightEnsemble weights, int depth, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0, 1]");
  EnsembleSpec spec;
  spec.weights = weights;
  spec.nonlinearity = Nonlinearity(NonlinearityKind::hardtanh);
  spec.depth = depth;
  spec.p = p;
  spec.sigma_w_sq = 1.0 / p;
  if (p < 1.0) spec.q_star = signal_prop::q_star_for_p(p);
  spec.validate();
  return spec;
}

EnsembleSpec EnsembleSpec::from_params(WeightEnsemble weights, Nonlinearity nl, int depth,
                                       const signal_prop::MeanFieldParams& params) {
  if (nl.kind() == NonlinearityKind::tanh) throw UnsupportedError("tanh slopes are not Bernoulli distributed");
  params.validate();
  const auto fp = signal_prop::fixed_point(nl, params);
  EnsembleSpec spec;
  spec.weights = weights;
  spec.nonlinearity = nl;
  spec.depth = depth;
  spec.sigma_w_sq = params.sigma_w_sq;
  spec.q_star = fp.q_star;
  spec.p = signal_prop::p_linear(nl, fp.q_star);
  spec.validate();
  return spec;
}

free_prob::STransform s_transform(const EnsembleSpec& spec) {
  spec.validate();
  const auto weight = spec.weights == WeightEnsemble::gaussian ? free_prob::s_wishart(spec.sigma_w_sq)
                                                               : free_prob::s_orthogonal(spec.sigma_w_sq);
  return free_prob::s_jjt(weight, free_prob::s_bernoulli({spec.p}), spec.depth);
}

Complex StieltjesPolynomial::operator()(Complex g) const { return poly::horner(coefficients, g); }

Eigen::VectorXcd StieltjesPolynomial::roots() const { return poly::polynomial_roots<double>(coefficients); }

StieltjesPolynomial build_polynomial(const EnsembleSpec& spec, Complex z) {
  spec.validate();
  if (z == Complex(0.0)) throw DomainError("build_polynomial: z must be nonzero");
  const int L = spec.depth;
  const double c = 1.0 - spec.p;
  const double log_scale = L * std::log(spec.sigma_w_sq);
  const double log_abs_z = std::log(std::abs(z));
  const double arg_z = std::arg(z);

  StieltjesPolynomial poly;
  poly.ensemble = spec.weights;
  poly.z = z;
  poly.coefficients = Eigen::VectorXcd::Zero(L + 2);
  // sigma^{2L} G (zG - c)^L = sum_k binom(L,k) z^k (-c)^{L-k} G^{k+1}
  for (int k = 0; k <= L; ++k) {
    if (c == 0.0 && k < L) continue;
    const double log_mag = log_scale + log_binom(L, k) + k * log_abs_z + (k < L ? (L - k) * std::log(c) : 0.0);
    const double phase = k * arg_z + (L - k) * std::numbers::pi;
    poly.coefficients[k + 1] += std::polar(checked_exp(log_mag, "polynomial coefficient"), phase);
  }
  if (spec.weights == WeightEnsemble::gaussian) {
    poly.coefficients[1] -= z;
    poly.coefficients[0] += 1.0;
  } else {
    const double log_mag = L * log_abs_z;
    const Complex zl = std::polar(checked_exp(log_mag, "polynomial coefficient"), L * arg_z);
    poly.coefficients[L + 1] -= zl * z;
    poly.coefficients[L] += zl;
  }
  return poly;
}

PhysicalBranch::PhysicalBranch(const EnsembleSpec& spec) : spec_(spec) {
  spec_.validate();
  log_scale_ = spec_.depth * std::log(spec_.sigma_w_sq);
  if (std::abs(log_scale_) > kLogMax) throw OverflowError("sigma_w^{2L} exceeds the double range");
  scale_ = std::exp(log_scale_);
  c_ = 1.0 - spec_.p;
  const auto atom = orthogonal_atom(spec_);
  atom_location_ = atom.location;
  atom_mass_ = atom.mass;
  lambda_ref_ = lambda_max(spec_);
}

PhysicalBranch::Eval PhysicalBranch::evaluate(Complex u, Complex zeta) const {
  const int L = spec_.depth;
  const Complex w = u - c_;
  Complex value, deriv, dzeta;
  if (spec_.weights == WeightEnsemble::gaussian) {
    const double m = std::max(1.0, std::abs(w));
    const Complex a = ipow(w / m, L - 1);
    const double t = m == 1.0 ? 1.0 : std::exp(-(L - 1) * std::log(m));
    value = u * w * a - zeta * (u - 1.0) * t;
    deriv = a * (w + double(L) * u) - zeta * t;
    dzeta = -(u - 1.0) * t;
  } else if (orthogonal_linear(spec_)) {
    value = w - zeta * (u - 1.0);
    deriv = 1.0 - zeta;
    dzeta = -(u - 1.0);
  } else {
    const double m = std::max({1.0, std::abs(w), std::abs(u)});
    const Complex a = ipow(w / m, L - 1);
    const Complex b = ipow(u / m, L - 2);
    value = w * a - zeta * (u - 1.0) * (u / m) * b;
    deriv = double(L) * a - zeta * b * (double(L) * u - double(L - 1)) / m;
    dzeta = -(u - 1.0) * (u / m) * b;
  }
  return {value / deriv, -dzeta / deriv};
}

Eigen::VectorXcd PhysicalBranch::initial_roots(Complex zeta) const {
  const int L = spec_.depth;
  auto newton = [&](Complex u) { return evaluate(u, zeta).newton; };
  if (orthogonal_linear(spec_)) {
    Eigen::VectorXcd roots(1);
    roots[0] = (c_ - zeta) / (1.0 - zeta);
    return roots;
  }
  Eigen::VectorXcd coeffs;
  double shift = 0.0;
  if (spec_.weights == WeightEnsemble::gaussian) {
    // v = u - c: v^{L+1} + c v^L - zeta v + zeta p
    coeffs = Eigen::VectorXcd::Zero(L + 2);
    coeffs[0] = zeta * spec_.p;
    coeffs[1] -= zeta;
    coeffs[L] += c_;
    coeffs[L + 1] = 1.0;
    shift = c_;
  } else {
    coeffs.resize(L + 1);
    for (int k = 0; k <= L; ++k)
      coeffs[k] = std::exp(log_binom(L, k) + (L - k) * std::log(c_)) * ((L - k) % 2 ? -1.0 : 1.0);
    coeffs[L] -= zeta;
    coeffs[L - 1] += zeta;
  }
  const Eigen::Index degree = coeffs.size() - 1;
  Eigen::VectorXcd roots;
  if (degree <= kCompanionMaxDegree) {
    roots = poly::polynomial_roots<double>(coeffs).array() + shift;
    Eigen::VectorXcd polished = roots;
    if (poly::aberth_refine<double>(newton, polished, {4 * std::numeric_limits<double>::epsilon(), 50}) >= 0)
      return polished;
  }
  // Large degree, or companion roots too far off to polish: iterate on the
  // factored form from a circle.
  double radius = 0.0;
  for (Eigen::Index k = 0; k < degree; ++k)
    radius = std::max(radius, std::pow(std::abs(coeffs[k] / coeffs[degree]), 1.0 / double(degree - k)));
  roots = poly::circle_start<double>(degree, Complex(shift), std::max(2.0 * radius, 1e-3));
  if (poly::aberth_refine<double>(newton, roots, {4 * std::numeric_limits<double>::epsilon(), 5000}) < 0)
    throw ConvergenceError("master polynomial roots did not converge", std::abs(zeta));
  return roots;
}

void PhysicalBranch::select(Complex z, Complex u_guess, bool check_ambiguity) {
  z_ = z;
  roots_ = initial_roots(z / scale_);
  double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
  phys_ = 0;
  for (Eigen::Index i = 0; i < roots_.size(); ++i) {
    const double d = std::abs(roots_[i] - u_guess);
    if (d < d1) {
      d2 = d1;
      d1 = d;
      phys_ = i;
    } else if (d < d2) {
      d2 = d;
    }
  }
  if (check_ambiguity && roots_.size() > 1 && !(d1 < 0.25 * d2))
    throw BranchError("ambiguous physical root at seed", z.real());
}

void PhysicalBranch::seed(Complex z) { select(z, 1.0 + spec_.chi_to_depth() / z, true); }

void PhysicalBranch::seed_near(Complex z, Complex u_guess) { select(z, u_guess, false); }

void PhysicalBranch::seed_and_descend(Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("seed_and_descend: Im z must be positive");
  double y = std::max(1e6 * (lambda_ref_ + std::abs(z.real())), 2.0 * z.imag());
  bool seeded = false;
  for (int attempt = 0; attempt < 3 && !seeded; ++attempt, y *= 100.0) {
    try {
      seed({z.real(), y});
      seeded = true;
    } catch (const BranchError&) {
      if (attempt == 2) throw;
    }
  }
  while (z_.imag() > z.imag()) advance({z.real(), std::max(z.imag(), 0.25 * z_.imag())});
}

bool PhysicalBranch::try_step(Complex z_new) {
  const Complex zeta_old = z_ / scale_;
  const Complex zeta_new = z_new / scale_;
  const Complex dzeta = zeta_new - zeta_old;
  const Eigen::Index n = roots_.size();

  Eigen::VectorXcd next(n);
  Eigen::VectorXd separation(n);
  double rate_old = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eval e = evaluate(roots_[i], zeta_old);
    if (i == phys_) rate_old = std::abs(e.du_dzeta);
    next[i] = roots_[i] + e.du_dzeta * dzeta;
    double sep = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sep = std::min(sep, std::abs(roots_[i] - roots_[j]));
    separation[i] = sep;
  }
  auto newton = [&](Complex u) { return evaluate(u, zeta_new).newton; };
  if (poly::aberth_refine<double>(newton, next, {4 * std::numeric_limits<double>::epsilon(), 60}) < 0) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(next[i].real()) || !std::isfinite(next[i].imag())) return false;
    if (std::abs(next[i] - roots_[i]) >= 0.5 * separation[i]) return false;
  }
  const double rate_new = std::abs(evaluate(next[phys_], zeta_new).du_dzeta);
  const double bound = std::max(rate_old, rate_new) * std::abs(dzeta);
  const double moved = std::abs(next[phys_] - roots_[phys_]);
  const double dust = 1e-13 * std::max(1.0, std::abs(roots_[phys_]));
  if (moved > 10.0 * bound + dust) return false;
  if (bound > 0.0) max_ratio_ = std::max(max_ratio_, moved / bound);
  roots_ = next;
  z_ = z_new;
  ++substeps_;
  return true;
}

void PhysicalBranch::advance(Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("advance: Im z must be positive");
  const Complex start = z_;
  const Complex delta = z - start;
  double done = 0.0, h = 1.0;
  while (done < 1.0) {
    const double step = std::min(h, 1.0 - done);
    const bool last = done + step >= 1.0;
    const Complex target = last ? z : start + delta * (done + step);
    if (try_step(target)) {
      done = last ? 1.0 : done + step;
      h = 2.0 * step;
    } else {
      h = 0.5 * step;
      if (h < 1e-13) throw BranchError("root continuation stalled", z.real());
    }
  }
  if (!herglotz_ok(stieltjes())) throw BranchError("physical root left the lower half plane", z.real());
}

Complex PhysicalBranch::stieltjes() const { return roots_[phys_] / z_; }

Complex PhysicalBranch::continuous_stieltjes() const {
  const Complex g = stieltjes();
  if (atom_mass_ > 0.0) return g - atom_mass_ / (z_ - atom_location_);
  return g;
}

Complex solve_stieltjes(const EnsembleSpec& spec, Complex z, std::optional<Complex> prev_root) {
  if (!(z.imag() > 0.0)) throw DomainError("solve_stieltjes: Im z must be positive");
  PhysicalBranch branch(spec);
  if (prev_root) {
    branch.seed_near(z, *prev_root * z);
  } else {
    branch.seed_and_descend(z);
  }
  const Complex g = branch.stieltjes();
  if (!herglotz_ok(g)) throw BranchError("no root with Im G <= 0", z.real());
  return g;
}

free_prob::Atom orthogonal_atom(const EnsembleSpec& spec) {
  spec.validate();
  if (spec.weights != WeightEnsemble::orthogonal) return {};
  double mass = std::max(0.0, 1.0 - spec.depth * (1.0 - spec.p));
  if (mass < kAtomFloor) return {};
  return {checked_exp(spec.depth * std::log(spec.sigma_w_sq), "atom location"), mass};
}

double continuous_edge(const EnsembleSpec& spec) {
  spec.validate();
  const int L = spec.depth;
  const double log_scale = L * std::log(spec.sigma_w_sq);
  const double c = 1.0 - spec.p;
  if (spec.weights == WeightEnsemble::gaussian) {
    if (c == 0.0) return checked_exp(log_scale + (L + 1) * std::log(L + 1.0) - L * std::log(double(L)), "edge");
    // Double root of u (u-c)^L = zeta (u-1) with u > 1.
    auto f = [&](double u) { return 1.0 / u + L / (u - c) - 1.0 / (u - 1.0); };
    double lo = 1.0, hi = 2.0;
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    const double u = 0.5 * (lo + hi);
    return checked_exp(log_scale + std::log(u) + L * std::log(u - c) - std::log(u - 1.0), "edge");
  }
  if (orthogonal_linear(spec)) return 0.0;
  return checked_exp(L * std::log(spec.chi()) + std::log(c / spec.p) + L * std::log(double(L)) -
                         (L - 1) * std::log(L - 1.0),
                     "edge");
}

double lambda_max(const EnsembleSpec& spec) {
  const double edge = continuous_edge(spec);
  const auto atom = orthogonal_atom(spec);
  return atom.mass > 0.0 ? std::max(edge, atom.location) : edge;
}

double lambda_max_asymptotic(const EnsembleSpec& spec) {
  spec.validate();
  const double chi_l = spec.chi_to_depth();
  const double L = spec.depth;
  if (spec.weights == WeightEnsemble::gaussian) return chi_l * std::numbers::e / spec.p * L;
  return chi_l * (1.0 - spec.p) / spec.p * std::numbers::e * L;
}

Eigen::ArrayXd default_grid(const EnsembleSpec& spec, int points) {
  if (points < 10) throw DomainError("default_grid: need at least 10 points");
  const double top = lambda_max(spec);
  const double edge = continuous_edge(spec);
  const auto atom = orthogonal_atom(spec);
  std::vector<double> grid;
  grid.reserve(points);
  if (edge <= 0.0) {
    const double lo = std::log(1e-20 * top), hi = std::log(1.05 * top);
    for (int k = 0; k < points; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / (points - 1)));
  } else {
    const int n_log = points * 3 / 5;
    const int n_edge = points * 7 / 20;
    const int n_tail = points - n_log - n_edge;
    const double mid = 0.5 * edge;
    const double lo = std::log(1e-20 * top), hi = std::log(mid);
    for (int k = 0; k < n_log; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / n_log));
    for (int k = 0; k < n_edge; ++k) {
      const double t = double(k) / n_edge;
      grid.push_back(edge - (edge - mid) * (1.0 - t) * (1.0 - t));
    }
    const double end = 1.05 * std::max(edge, atom.mass > 0.0 ? atom.location : 0.0);
    // Geometric just above the edge, then linear.
    const int n_near = n_tail / 2;
    const double near_end = 0.01 * edge;
    for (int k = 0; k < n_near; ++k) grid.push_back(edge + near_end * std::pow(1e-7, 1.0 - double(k) / n_near));
    const int n_far = n_tail - n_near;
    for (int k = 0; k < n_far; ++k)
      grid.push_back(edge + near_end + (end - edge - near_end) * (k + 1.0) / n_far);
  }
  if (atom.mass > 0.0)
    std::erase_if(grid, [&](double x) { return std::abs(x - atom.location) < 1e-4 * atom.location; });
  return Eigen::Map<Eigen::ArrayXd>(grid.data(), Eigen::Index(grid.size()));
}

SpectralDensity theory_density(const EnsembleSpec& spec, const Eigen::ArrayXd& grid, const DensityOptions& options) {
  spec.validate();
  const Eigen::Index n = grid.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(grid[i] > 0.0)) throw DomainError("theory_density: grid must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("theory_density: grid must be strictly increasing");
  }
  if (!(options.epsilon_rel > 0.0 && options.epsilon_rel_half > 0.0) || options.chunk_size < 1)
    throw DomainError("theory_density: bad options");
  const auto atom = orthogonal_atom(spec);

  SpectralDensity out;
  out.abscissa = grid;
  out.variable = free_prob::SpectralVariable::eigenvalue;
  if (atom.mass > 0.0) out.atoms.push_back(atom);
  // Nothing left for the continuous part; the branch degenerates there.
  if (atom.mass > 0.0 && 1.0 - atom.mass - (1.0 - spec.p) < kContinuousFloor) {
    out.density = Eigen::ArrayXd::Zero(n);
    out.zero_atom = 1.0 - atom.mass;
    return out;
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> chunks;
  Eigen::Index begin = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    const bool crosses = i < n && atom.mass > 0.0 && grid[i - 1] < atom.location && grid[i] > atom.location;
    if (i == n || i - begin >= options.chunk_size || crosses) {
      chunks.emplace_back(begin, i);
      begin = i;
    }
  }

  Eigen::ArrayXd density(n);
  parallel_for(chunks.size(), [&](std::size_t c) {
    const auto [first, last] = chunks[c];
    PhysicalBranch b1(spec), b2(spec);
    for (Eigen::Index i = first; i < last; ++i) {
      const double lambda = grid[i];
      const Complex z1(lambda, options.epsilon_rel * lambda);
      const Complex z2(lambda, options.epsilon_rel_half * lambda);
      if (i == first) {
        b1.seed_and_descend(z1);
        b2 = b1;
      } else {
        b1.advance(z1);
      }
      b2.advance(z2);
      const double rho1 = free_prob::physical_density(b1.continuous_stieltjes(), lambda);
      if (!options.richardson) {
        density[i] = std::max(0.0, rho1);
        continue;
      }
      const double rho2 = free_prob::physical_density(b2.continuous_stieltjes(), lambda);
      density[i] = std::max(0.0, 2.0 * rho2 - rho1);
    }
  });

  out.density = density;
  out.zero_atom = std::clamp(1.0 - out.continuous_mass() - out.atom_mass(), 0.0, 1.0);
  return out;
}

SpectralDensity theory_density(const EnsembleSpec& spec, int points) {
  return theory_density(spec, default_grid(spec, points));
}

SpectralDensity linear_gaussian_density(int depth, int n_phi) {
  if (depth < 1) throw DomainError("depth must be at least 1");
  if (n_phi < 2) throw DomainError("n_phi must be at least 2");
  const int L = depth;
  const double phi_max = std::numbers::pi / (L + 1);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(n_phi + 1);
  // phi -> 0 limit
  pts.emplace_back(std::exp(0.5 * ((L + 1) * std::log(L + 1.0) - L * std::log(double(L)))), 0.0);
  for (int k = 1; k <= n_phi; ++k) {
    const double phi = phi_max * k / (n_phi + 1);
    const double a = std::sin(phi), b = std::sin(L * phi), c = std::sin((L + 1) * phi);
    const double log_s = 0.5 * ((L + 1) * std::log(c) - std::log(a) - L * std::log(b));
    const double log_rho = 0.5 * (3 * std::log(a) + (L - 2) * std::log(b) - (L - 1) * std::log(c));
    pts.emplace_back(std::exp(log_s), 2.0 / std::numbers::pi * std::exp(log_rho));
  }
  std::sort(pts.begin(), pts.end());
  SpectralDensity out;
  out.variable = free_prob::SpectralVariable::singular_value;
  out.abscissa.resize(Eigen::Index(pts.size()));
  out.density.resize(Eigen::Index(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.abscissa[Eigen::Index(i)] = pts[i].first;
    out.density[Eigen::Index(i)] = pts[i].second;
  }
  return out;
}

double spectral_edge_numeric(const EnsembleSpec& spec, std::pair<double, double> bracket, double tol) {
  auto [lo, hi] = bracket;
  if (!(lo > 0.0 && hi > lo)) throw DomainError("spectral_edge_numeric: need 0 < lo < hi");
  const DensityOptions opt;
  auto inside = [&](double lambda) {
    PhysicalBranch branch(spec);
    branch.seed_and_descend({lambda, opt.epsilon_rel * lambda});
    const double rho1 = -branch.continuous_stieltjes().imag();
    branch.advance({lambda, opt.epsilon_rel_half * lambda});
    const double rho2 = -branch.continuous_stieltjes().imag();
    return rho2 > 0.0 && rho2 > 0.75 * rho1;
  };
  if (!inside(lo) || inside(hi)) throw NoRootError("spectral_edge_numeric: bracket does not straddle an edge");
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SpectrumSummary moments_lagrange(const EnsembleSpec& spec) {
  const auto m = free_prob::moments_from_s(s_transform(spec), 2);
  SpectrumSummary s;
  s.m1 = m[1];
  s.m2 = m[2];
  s.variance = std::max(0.0, s.m2 - s.m1 * s.m1);
  s.lambda_max = lambda_max(spec);
  s.s_max = std::sqrt(s.lambda_max);
  s.chi_to_L = spec.chi_to_depth();
  return s;
}

std::vector<SweepRow> smax_sweep(const std::vector<EnsembleSpec>& specs) {
  std::vector<SweepRow> rows(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    const auto& spec = specs[i];
    rows[i] = {spec.depth, spec.q_star, spec.weights, spec.nonlinearity, std::sqrt(lambda_max(spec))};
  });
  return rows;
}

}  // namespace jacospec::theory
