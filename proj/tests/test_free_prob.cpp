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

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "jacospec/errors.hpp"
#include "jacospec/free_prob.hpp"
#include "jacospec/random_matrix.hpp"
#include "jacospec/rng.hpp"

using namespace jacospec;
using namespace jacospec::free_prob;

namespace {

constexpr double kPi = std::numbers::pi;

// Square Wishart with unit variance.
Complex mp_stieltjes(Complex z) { return (z - std::sqrt(z) * std::sqrt(z - 4.0)) / (2.0 * z); }
double mp_density(double x) { return x <= 0.0 || x >= 4.0 ? 0.0 : std::sqrt((4.0 - x) / x) / (2.0 * kPi); }

// Grid clustered at both edges of [0, 4]: x = 4 sin^2(theta / 2).
SpectralDensity mp_law(int n) {
  SpectralDensity rho;
  rho.abscissa.resize(n);
  rho.density.resize(n);
  for (int i = 0; i < n; ++i) {
    const double theta = kPi * (i + 0.5) / n;
    rho.abscissa[i] = 4.0 * std::sin(0.5 * theta) * std::sin(0.5 * theta);
    rho.density[i] = mp_density(rho.abscissa[i]);
  }
  return rho;
}

SpectralDensity spike_at_one(double half_width, int n) {
  SpectralDensity rho;
  rho.abscissa = Eigen::ArrayXd::LinSpaced(n, 1.0 - half_width, 1.0 + half_width);
  rho.density = (1.0 - (rho.abscissa - 1.0).abs() / half_width).max(0.0) / half_width;
  return rho;
}

const Eigen::VectorXd& wishart_eigenvalues() {
  static const Eigen::VectorXd values = [] {
    Philox rng(31337);
    const auto w = rmt::sample_gaussian(2000, 1.0, rng);
    const Eigen::MatrixXd a = w * w.transpose();
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().eval();
  }();
  return values;
}

}  // namespace

TEST_CASE("trapezoid and mass bookkeeping") {
  auto rho = spike_at_one(0.01, 201);
  CHECK(std::abs(rho.total_mass() - 1.0) < 1e-12);
  rho.validate();
  rho.atoms.push_back({2.0, 0.5});
  CHECK_THROWS_AS(rho.validate(), DomainError);
  rho.density *= 0.5;
  rho.validate(1e-12);
}

TEST_CASE("cdf of a density with atoms") {
  SpectralDensity rho;
  rho.abscissa = Eigen::ArrayXd::LinSpaced(3, 1.0, 3.0);
  rho.density = Eigen::ArrayXd::Constant(3, 0.25);
  rho.zero_atom = 0.3;
  rho.atoms.push_back({2.0, 0.2});
  const DensityCdf cdf(rho);
  CHECK(cdf.left(0.0) == 0.0);
  CHECK(cdf(0.0) == doctest::Approx(0.3));
  CHECK(cdf(1.5) == doctest::Approx(0.425));
  CHECK(cdf.left(2.0) == doctest::Approx(0.55));
  CHECK(cdf(2.0) == doctest::Approx(0.75));
  CHECK(cdf(10.0) == doctest::Approx(1.0));
}

TEST_CASE("stieltjes transform of a point mass") {
  const auto rho = spike_at_one(1e-3, 401);
  CHECK(std::abs(stieltjes_from_density(rho, Complex(2.0, 0.0)) - 1.0) < 1e-6);
  CHECK(std::abs(stieltjes_from_density(rho, Complex(1.0, 0.5)) - 1.0 / Complex(0.0, 0.5)) < 1e-5);
  CHECK_THROWS_AS(stieltjes_from_density(rho, Complex(1.0, 0.0)), DomainError);
  const Complex far(1e7, 3.0);
  CHECK(std::abs(far * stieltjes_from_density(rho, far) - 1.0) < 1e-6);
}

TEST_CASE("stieltjes transform of the square Wishart law") {
  const auto rho = mp_law(2000);
  CHECK(std::abs(rho.total_mass() - 1.0) < 2e-3);
  const Complex g5 = stieltjes_from_density(rho, Complex(5.0, 0.0));
  CHECK(std::abs(mp_stieltjes(5.0).real() - (5.0 - std::sqrt(5.0)) / 10.0) < 1e-15);
  CHECK(std::abs(g5 - mp_stieltjes(5.0)) < 1e-3);
  CHECK(std::abs(g5.real() - 0.27639) < 1e-3);
  // Brute force over sampled eigenvalues.
  const auto& ev = wishart_eigenvalues();
  const double sampled = (1.0 / (5.0 - ev.array())).mean();
  CHECK(std::abs(sampled - mp_stieltjes(5.0).real()) < 2e-3);
  for (Complex z : {Complex(1.0, 0.1), Complex(3.0, 0.01), Complex(-1.0, 0.5), Complex(8.0, 2.0)}) {
    CHECK(std::abs(stieltjes_from_density(rho, z) - mp_stieltjes(z)) < 2e-3);
  }
}

TEST_CASE("density from the Wishart stieltjes transform") {
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(39, 0.1, 3.9);
  const auto rho = density_from_stieltjes(mp_stieltjes, grid, 1e-9);
  for (Eigen::Index i = 0; i < grid.size(); ++i) CHECK(std::abs(rho.density[i] - mp_density(grid[i])) < 1e-6);
  const Eigen::ArrayXd two = Eigen::ArrayXd::Constant(1, 2.0);
  const double at_two = density_from_stieltjes(mp_stieltjes, two, 1e-10).density[0];
  CHECK(std::abs(at_two - 1.0 / (2.0 * kPi)) < 1e-8);
  // Histogram of sampled eigenvalues near 2.
  const auto& ev = wishart_eigenvalues();
  const double frac = ((ev.array() > 1.9) && (ev.array() < 2.1)).cast<double>().mean() / 0.2;
  CHECK(std::abs(frac - 1.0 / (2.0 * kPi)) < 0.02);

  auto wrong_branch = [](Complex z) { return (z + std::sqrt(z) * std::sqrt(z - 4.0)) / (2.0 * z); };
  CHECK_THROWS_AS(density_from_stieltjes(wrong_branch, grid, 1e-9), BranchError);
}

TEST_CASE("density of a simple pole") {
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(20001, 0.9, 1.1);
  double prev_mass = 0.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto rho = density_from_stieltjes([](Complex z) { return 1.0 / (z - 1.0); }, grid, eps);
    const double mass = rho.continuous_mass();
    CHECK(mass > prev_mass);
    prev_mass = mass;
  }
  CHECK(prev_mass > 0.99);
}

TEST_CASE("inversion round trip") {
  for (const bool quarter : {false, true}) {
    SpectralDensity rho = mp_law(2000);
    if (quarter) rho = singular_from_eigen(rho);
    std::function<Complex(Complex)> g = [&rho](Complex z) { return stieltjes_from_density(rho, z); };
    const double top = rho.abscissa[rho.size() - 1];
    std::vector<double> xs;
    for (Eigen::Index i = 0; i < rho.size(); i += 7)
      if (rho.abscissa[i] > 0.05 * top && rho.abscissa[i] < 0.95 * top) xs.push_back(rho.abscissa[i]);
    const Eigen::ArrayXd grid = Eigen::Map<const Eigen::ArrayXd>(xs.data(), Eigen::Index(xs.size()));
    const auto back = density_from_stieltjes(g, grid, 1e-6);
    double err = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double exact = quarter ? std::sqrt(4.0 - grid[i] * grid[i]) / kPi : mp_density(grid[i]);
      err = std::max(err, std::abs(back.density[i] - exact));
    }
    CHECK(err <= 0.01);
  }
}

TEST_CASE("moments from densities") {
  const auto spike = moments_from_density(spike_at_one(1e-4, 101), 4);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(spike[k] - 1.0) < 1e-7);
  const auto mp = moments_from_density(mp_law(4000), 3);
  CHECK(std::abs(mp[1] - 1.0) < 0.01);
  CHECK(std::abs(mp[2] - 2.0) < 0.02);
  CHECK(std::abs(mp[3] - 5.0) < 0.05);
  SpectralDensity atoms;
  atoms.zero_atom = 0.5;
  atoms.atoms.push_back({2.0, 0.5});
  CHECK(moments_from_density(atoms, 2)[2] == 2.0);
}

TEST_CASE("bernoulli S-transform") {
  const auto ident = s_bernoulli({1.0});
  for (double z : {0.0, 0.3, 1.0}) CHECK(ident(z) == doctest::Approx(1.0));
  const auto half = s_bernoulli({0.5});
  CHECK(half(1.0) == doctest::Approx(4.0 / 3.0));
  CHECK(half(1e-12) == doctest::Approx(2.0));
  CHECK_THROWS_AS(s_bernoulli({0.0}), DegenerateLawError);
  CHECK_THROWS_AS(s_bernoulli({1.5}), DomainError);
}

TEST_CASE("wishart and orthogonal S-transforms") {
  CHECK(s_wishart(1.0)(0.0) == 1.0);
  CHECK(s_wishart(2.0)(1.0) == 0.25);
  const auto m_inv = m_inverse_from_s(s_wishart(1.7));
  for (double z : {0.2, 1.0, 3.0}) CHECK(m_inv(z) == doctest::Approx(1.7 * (1 + z) * (1 + z) / z));
  CHECK(s_orthogonal(1.0)(0.7) == 1.0);
  CHECK(s_orthogonal(4.0)(12.0) == 0.25);
  CHECK(s_orthogonal(3.0)(0.5) / s_orthogonal(1.0)(0.5) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("S-transform products") {
  const auto one = s_jjt(s_orthogonal(1.0), s_bernoulli({1.0}), 1);
  CHECK(one(0.4) == doctest::Approx(1.0));
  CHECK(one.factors().empty());

  const double sw2 = 1.3, p = 0.6;
  const int depth = 5;
  const auto gauss = s_jjt(s_wishart(sw2), s_bernoulli({p}), depth);
  const auto orth = s_jjt(s_orthogonal(sw2), s_bernoulli({p}), depth);
  for (double z : {0.1, 0.5, 2.0}) {
    CHECK(gauss(z) == doctest::Approx(std::pow(sw2, -depth) * std::pow(z + p, -depth)).epsilon(1e-13));
    CHECK(orth(z) == doctest::Approx(std::pow(sw2, -depth) * std::pow((z + 1) / (z + p), depth)).epsilon(1e-13));
  }
  // The Wishart (1 + z)^-1 cancels the Bernoulli (z + 1).
  CHECK(gauss.factors().size() == 1);
}

TEST_CASE("inverse moment map") {
  const auto ident = m_inverse_from_s(STransform(1.0));
  CHECK(ident(0.5) == doctest::Approx(3.0));
  CHECK_THROWS_AS(ident(0.0), DomainError);
  const auto m_inv = m_inverse_from_s(s_wishart(1.0));
  for (double z : {0.1, 0.5, 1.0}) {
    const double x = m_inv(z);
    CHECK(x == doctest::Approx((1 + z) * (1 + z) / z));
    const double m = x * mp_stieltjes(Complex(x, 0.0)).real() - 1.0;
    CHECK(std::abs(m - z) < 1e-10);
  }
}

TEST_CASE("moments by Lagrange inversion") {
  const auto catalan = moments_from_s(s_wishart(1.0), 5);
  const double expected[] = {1, 2, 5, 14, 42};
  for (int k = 1; k <= 5; ++k) CHECK(catalan[k] == doctest::Approx(expected[k - 1]).epsilon(1e-13));
  const auto ident = moments_from_s(STransform(1.0), 4);
  for (int k = 1; k <= 4; ++k) CHECK(ident[k] == doctest::Approx(1.0));
  const auto scaled = moments_from_s(s_wishart(2.0), 2);
  CHECK(scaled[2] == doctest::Approx(8.0));
  // Bernoulli projection: all moments equal p.
  const auto proj = moments_from_s(s_bernoulli({0.3}), 4);
  for (int k = 1; k <= 4; ++k) CHECK(proj[k] == doctest::Approx(0.3));
}

TEST_CASE("singular values from eigenvalues") {
  const auto rho = mp_law(4000);
  const auto s = singular_from_eigen(rho);
  CHECK(s.variable == SpectralVariable::singular_value);
  SpectralDensity bump;
  bump.abscissa = Eigen::ArrayXd::LinSpaced(4001, 1.0, 3.0);
  bump.density = (bump.abscissa - 1.0).square() * (3.0 - bump.abscissa).square() * (15.0 / 16.0);
  bump.zero_atom = 0.25;
  bump.density *= 0.75;
  const auto bump_s = singular_from_eigen(bump);
  CHECK(std::abs(bump_s.continuous_mass() - bump.continuous_mass()) < 1e-6);
  CHECK(std::abs(bump_s.total_mass() - 1.0) < 1e-6);
  CHECK(bump_s.zero_atom == 0.25);
  CHECK(std::abs(2.0 * 1.0 * mp_density(1.0) - std::sqrt(3.0) / kPi) < 1e-15);
  for (Eigen::Index i = 0; i < s.size(); i += 97) {
    const double x = s.abscissa[i];
    CHECK(std::abs(s.density[i] - std::sqrt(4.0 - x * x) / kPi) < 1e-12);
  }
  auto spike = spike_at_one(1e-4, 101);
  spike.zero_atom = 0.0;
  const auto ss = singular_from_eigen(spike);
  CHECK(std::abs(ss.continuous_mass() - 1.0) < 1e-6);
  CHECK(ss.abscissa[0] > 0.9999);
  CHECK(ss.abscissa[100] < 1.0001);
  CHECK_THROWS_AS(singular_from_eigen(s), VariableMismatchError);
}

TEST_CASE("free multiplication of sampled ensembles") {
  const int n = 1500;
  const double p = 0.4;
  Philox rng(77);
  const auto w = rmt::sample_gaussian(n, 1.0, rng);
  const Eigen::MatrixXd a = w * w.transpose();
  const auto o = rmt::sample_orthogonal(n, 1.0, rng);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = i < int(p * n) ? 1.0 : 0.0;
  const Eigen::MatrixXd b = o * d.asDiagonal() * o.transpose();
  const Eigen::MatrixXd ab = a * b;
  const Eigen::MatrixXd ab2 = ab * ab;
  const double emp[] = {ab.trace() / n, ab2.trace() / n, (ab2 * ab).trace() / n};
  const auto theory = moments_from_s(s_wishart(1.0) * s_bernoulli({p}), 3);
  for (int k = 1; k <= 3; ++k) CHECK(std::abs(emp[k - 1] / theory[k] - 1.0) < 0.03);
}
