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

#include "jacospec/free_prob.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "jacospec/errors.hpp"

namespace jacospec::free_prob {
namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr double kGlWeights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Integral over [a, b] of the linear interpolant of (ra, rb) against 1/(z - t).
Complex segment_cauchy(double a, double b, double ra, double rb, Complex z) {
  const double h = b - a;
  if (h <= 0.0) return 0.0;
  const double mid = 0.5 * (a + b);
  const double beta = (rb - ra) / h;
  if (std::abs(z - mid) > 4.0 * h) {
    Complex acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      for (double sgn : {-1.0, 1.0}) {
        const double t = mid + sgn * 0.5 * h * kGlNodes[k];
        acc += kGlWeights[k] * (ra + beta * (t - a)) / (z - t);
      }
    }
    return 0.5 * h * acc;
  }
  const Complex ell = ra + beta * (z - a);
  return ell * (std::log(z - a) - std::log(z - b)) - beta * h;
}

}  // namespace

std::string_view to_string(SpectralVariable v) {
  return v == SpectralVariable::eigenvalue ? "eigenvalue" : "singular_value";
}

double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  const Eigen::Index n = x.size();
  if (n < 2) return 0.0;
  return (0.5 * (x.tail(n - 1) - x.head(n - 1)) * (y.tail(n - 1) + y.head(n - 1))).sum();
}

double SpectralDensity::continuous_mass() const { return trapezoid(abscissa, density); }

double SpectralDensity::atom_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  return m;
}

double SpectralDensity::total_mass() const { return zero_atom + atom_mass() + continuous_mass(); }

void SpectralDensity::validate(double tol) const {
  if (abscissa.size() != density.size()) throw DomainError("SpectralDensity: abscissa and density sizes differ");
  for (Eigen::Index i = 0; i < abscissa.size(); ++i) {
    if (!(abscissa[i] >= 0.0)) throw DomainError("SpectralDensity: negative abscissa");
    if (i > 0 && !(abscissa[i] > abscissa[i - 1])) throw DomainError("SpectralDensity: abscissa not increasing");
    if (!(density[i] >= 0.0)) throw DomainError("SpectralDensity: negative density");
  }
  if (!(zero_atom >= 0.0 && zero_atom <= 1.0)) throw DomainError("SpectralDensity: zero atom outside [0, 1]");
  const double mass = total_mass();
  if (!(std::abs(mass - 1.0) <= tol))
    throw DomainError("SpectralDensity: total mass " + std::to_string(mass) + " differs from one");
}

DensityCdf::DensityCdf(const SpectralDensity& rho)
    : abscissa_(rho.abscissa), density_(rho.density), zero_atom_(rho.zero_atom), atoms_(rho.atoms) {
  const Eigen::Index n = abscissa_.size();
  cumulative_ = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index i = 1; i < n; ++i)
    cumulative_[i] = cumulative_[i - 1] + 0.5 * (abscissa_[i] - abscissa_[i - 1]) * (density_[i] + density_[i - 1]);
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
}

double DensityCdf::mass_below(double x, bool inclusive) const {
  if (x < 0.0 || (x == 0.0 && !inclusive)) return 0.0;
  double m = zero_atom_;
  for (const auto& a : atoms_)
    if (a.location < x || (inclusive && a.location == x)) m += a.mass;
  const Eigen::Index n = abscissa_.size();
  if (n < 2 || x <= abscissa_[0]) return m;
  if (x >= abscissa_[n - 1]) return m + cumulative_[n - 1];
  const auto* begin = abscissa_.data();
  const Eigen::Index i = std::upper_bound(begin, begin + n, x) - begin - 1;
  const double a = abscissa_[i], b = abscissa_[i + 1];
  const double t = x - a;
  const double slope = (density_[i + 1] - density_[i]) / (b - a);
  return m + cumulative_[i] + t * (density_[i] + 0.5 * slope * t);
}

double DensityCdf::operator()(double x) const { return mass_below(x, true); }

double DensityCdf::left(double x) const { return mass_below(x, false); }

STransform::STransform(double scale, std::vector<Factor> factors) : scale_(scale) {
  for (const auto& f : factors) {
    auto it = std::find_if(factors_.begin(), factors_.end(), [&](const Factor& g) { return g.shift == f.shift; });
    if (it != factors_.end()) {
      it->power += f.power;
    } else {
      factors_.push_back(f);
    }
  }
  std::erase_if(factors_, [](const Factor& f) { return f.power == 0.0; });
}

double STransform::operator()(double z) const {
  double v = scale_;
  for (const auto& f : factors_) v *= std::pow(z + f.shift, f.power);
  return v;
}

Complex STransform::operator()(Complex z) const {
  Complex v = scale_;
  for (const auto& f : factors_) v *= std::pow(z + f.shift, f.power);
  return v;
}

STransform STransform::operator*(const STransform& other) const {
  std::vector<Factor> all = factors_;
  all.insert(all.end(), other.factors_.begin(), other.factors_.end());
  return STransform(scale_ * other.scale_, std::move(all));
}

STransform STransform::pow(double exponent) const {
  std::vector<Factor> f = factors_;
  for (auto& x : f) x.power *= exponent;
  return STransform(std::pow(scale_, exponent), std::move(f));
}

Eigen::ArrayXd STransform::inverse_power_series(int k, int order) const {
  if (order < 0) throw DomainError("inverse_power_series: negative order");
  if (!(scale_ > 0.0)) throw DomainError("inverse_power_series: scale must be positive");
  // (1 + w)^k times prod (w + s)^(-k a), each factor a binomial series.
  std::vector<Factor> f;
  f.reserve(factors_.size() + 1);
  f.push_back({1.0, double(k)});
  for (const auto& x : factors_) f.push_back({x.shift, -k * x.power});
  const STransform merged(1.0, std::move(f));

  Eigen::ArrayXd series = Eigen::ArrayXd::Zero(order + 1);
  series[0] = std::pow(scale_, -double(k));
  for (const auto& x : merged.factors_) {
    if (!(x.shift > 0.0)) throw DomainError("inverse_power_series: factor not analytic at zero");
    Eigen::ArrayXd term(order + 1);
    term[0] = std::pow(x.shift, x.power);
    for (int j = 1; j <= order; ++j) term[j] = term[j - 1] * (x.power - (j - 1)) / (j * x.shift);
    Eigen::ArrayXd product = Eigen::ArrayXd::Zero(order + 1);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j) product[i + j] += series[i] * term[j];
    series = product;
  }
  return series;
}

STransform s_bernoulli(BernoulliSlopeLaw law) {
  if (law.p == 0.0) throw DegenerateLawError("s_bernoulli: p = 0 gives an identically zero spectrum");
  if (!(law.p > 0.0 && law.p <= 1.0)) throw DomainError("s_bernoulli: p must lie in (0, 1]");
  return STransform(1.0, {{1.0, 1.0}, {law.p, -1.0}});
}

STransform s_wishart(double sigma_w_sq) {
  if (!(sigma_w_sq > 0.0)) throw DomainError("s_wishart: sigma_w^2 must be positive");
  return STransform(1.0 / sigma_w_sq, {{1.0, -1.0}});
}

STransform s_orthogonal(double sigma_w_sq) {
  if (!(sigma_w_sq > 0.0)) throw DomainError("s_orthogonal: sigma_w^2 must be positive");
  return STransform(1.0 / sigma_w_sq);
}

STransform s_jjt(const STransform& weight_s, const STransform& slope_s, int depth) {
  if (depth < 1) throw DomainError("s_jjt: depth must be >= 1");
  return (weight_s * slope_s).pow(depth);
}

std::function<double(double)> m_inverse_from_s(const STransform& s) {
  return [s](double z) {
    if (z == 0.0) throw DomainError("m_inverse_from_s: pole at z = 0");
    const double sz = s(z);
    if (sz == 0.0) throw DomainError("m_inverse_from_s: S vanishes");
    return (1.0 + z) / (z * sz);
  };
}

MomentSeries moments_from_s(const STransform& s, int count) {
  if (count < 1) throw DomainError("moments_from_s: count must be >= 1");
  MomentSeries out;
  out.moments.reserve(count);
  for (int k = 1; k <= count; ++k) out.moments.push_back(s.inverse_power_series(k, k - 1)[k - 1] / k);
  return out;
}

Complex stieltjes_from_density(const SpectralDensity& rho, Complex z) {
  const Eigen::Index n = rho.size();
  if (z.imag() == 0.0) {
    const double x = z.real();
    if ((n > 0 && x >= rho.abscissa[0] && x <= rho.abscissa[n - 1]) || (x == 0.0 && rho.zero_atom > 0.0))
      throw DomainError("stieltjes_from_density: real z inside the support");
    for (const auto& a : rho.atoms)
      if (a.location == x) throw DomainError("stieltjes_from_density: real z on an atom");
  }
  Complex g = rho.zero_atom / z;
  for (const auto& a : rho.atoms) g += a.mass / (z - a.location);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    g += segment_cauchy(rho.abscissa[i], rho.abscissa[i + 1], rho.density[i], rho.density[i + 1], z);
  return g;
}

double physical_density(Complex g, double lambda) {
  const double rho = -g.imag() / std::numbers::pi;
  if (rho < -1e-6 * std::max(1.0, std::abs(g) / std::numbers::pi))
    throw BranchError("negative density " + std::to_string(rho) + " at lambda = " + std::to_string(lambda), lambda);
  return std::max(rho, 0.0);
}

SpectralDensity density_from_stieltjes(const std::function<Complex(Complex)>& g, const Eigen::ArrayXd& grid,
                                       double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("density_from_stieltjes: epsilon must be positive");
  SpectralDensity out;
  out.abscissa = grid;
  out.density.resize(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out.density[i] = physical_density(g(Complex(grid[i], epsilon)), grid[i]);
  out.zero_atom = std::clamp(1.0 - out.continuous_mass(), 0.0, 1.0);
  return out;
}

MomentSeries moments_from_density(const SpectralDensity& rho, int count) {
  if (count < 1) throw DomainError("moments_from_density: count must be >= 1");
  MomentSeries out;
  Eigen::ArrayXd power = rho.abscissa;
  for (int k = 1; k <= count; ++k) {
    double m = trapezoid(rho.abscissa, power * rho.density);
    for (const auto& a : rho.atoms) m += a.mass * std::pow(a.location, k);
    out.moments.push_back(m);
    power *= rho.abscissa;
  }
  return out;
}

SpectralDensity singular_from_eigen(const SpectralDensity& rho_lambda) {
  if (rho_lambda.variable != SpectralVariable::eigenvalue)
    throw VariableMismatchError("singular_from_eigen: input is not an eigenvalue density");
  SpectralDensity out;
  out.variable = SpectralVariable::singular_value;
  out.abscissa = rho_lambda.abscissa.sqrt();
  out.density = 2.0 * out.abscissa * rho_lambda.density;
  out.zero_atom = rho_lambda.zero_atom;
  for (const auto& a : rho_lambda.atoms) out.atoms.push_back({std::sqrt(a.location), a.mass});
  return out;
}

}  // namespace jacospec::free_prob
