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
#include "jacospec/spectrum_theory.hpp"

using namespace jacospec;
using namespace jacospec::theory;
using signal_prop::NonlinearityKind;

namespace {

constexpr double kPi = std::numbers::pi;
const Nonlinearity kLinear{NonlinearityKind::linear};
const Nonlinearity kRelu{NonlinearityKind::relu};
const Nonlinearity kHardTanh{NonlinearityKind::hardtanh};
const Nonlinearity kTanh{NonlinearityKind::tanh};

Complex mp_stieltjes(Complex z) { return 0.5 * (1.0 - std::sqrt(1.0 - 4.0 / z)); }
double mp_density(double x) { return x <= 0.0 || x >= 4.0 ? 0.0 : std::sqrt((4.0 - x) / x) / (2.0 * kPi); }

double nearest_distance(const Eigen::VectorXcd& roots, Complex target) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < roots.size(); ++i) best = std::min(best, std::abs(roots[i] - target));
  return best;
}

double moment(const SpectralDensity& rho, int k) {
  return free_prob::moments_from_density(rho, k)[std::size_t(k)];
}

// Linear interpolation of a sampled density.
double interpolate(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, double t) {
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.begin() || it == x.end()) return 0.0;
  const Eigen::Index i = it - x.begin();
  const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

EnsembleSpec mp_spec() { return EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 1); }

}  // namespace

TEST_CASE("ensemble specs validate and reach criticality") {
  const auto relu = EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 3);
  CHECK(relu.sigma_w_sq == 2.0);
  CHECK(relu.p == 0.5);
  CHECK(relu.chi() == doctest::Approx(1.0));
  const auto ht = EnsembleSpec::critical(WeightEnsemble::orthogonal, kHardTanh, 4, 1.0 / 64.0);
  CHECK(ht.chi() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ht.p == doctest::Approx(1.0).epsilon(1e-10));
  const auto ht2 = EnsembleSpec::critical_hardtanh_p(WeightEnsemble::gaussian, 2, 0.9);
  CHECK(ht2.q_star > 0.0);
  CHECK(signal_prop::p_linear(kHardTanh, ht2.q_star) == doctest::Approx(0.9).epsilon(1e-10));
  CHECK_THROWS_AS(EnsembleSpec::critical(WeightEnsemble::gaussian, kTanh, 2), UnsupportedError);
  EnsembleSpec bad = relu;
  bad.depth = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = relu;
  bad.nonlinearity = kLinear;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK(parse_ensemble("orthogonal") == WeightEnsemble::orthogonal);
  CHECK_THROWS_AS(parse_ensemble("unitary"), DomainError);
}

TEST_CASE("from_params goes through the fixed point") {
  const auto spec = EnsembleSpec::from_params(WeightEnsemble::gaussian, kHardTanh, 5, {1.5, 0.1});
  CHECK(spec.p == doctest::Approx(signal_prop::p_linear(kHardTanh, spec.q_star)));
  CHECK(spec.sigma_w_sq == 1.5);
}

TEST_CASE("Marchenko-Pastur polynomial roots contain the closed form") {
  const std::vector<Complex> points = {{5.0, 0.0}, {2.0, 0.5}, {0.5, 0.1}, {3.9, 0.01}, {-1.0, 2.0},
                                       {10.0, -3.0}, {1.0, 1.0}, {0.01, 0.01}, {100.0, 1.0}, {4.5, 0.2}};
  for (const Complex z : points) {
    const auto poly = build_polynomial(mp_spec(), z);
    CHECK(poly.degree() == 2);
    const Complex g = mp_stieltjes(z);
    CHECK(std::abs(poly(g)) < 1e-12 * std::max(1.0, std::abs(z)));
    CHECK(nearest_distance(poly.roots(), g) < 1e-10 * std::max(1.0, std::abs(g)));
  }
}

TEST_CASE("polynomial degree and the identity ensemble") {
  const auto g7 = build_polynomial(EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 7), {1.0, 1.0});
  CHECK(g7.degree() == 8);
  const Complex z(2.5, 0.3);
  const auto id = build_polynomial(EnsembleSpec::critical(WeightEnsemble::orthogonal, kLinear, 1), z);
  CHECK(nearest_distance(id.roots(), 1.0 / (z - 1.0)) < 1e-12);
  const auto relu = EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 4);
  CHECK(build_polynomial(relu, z).degree() == 5);
  // Every root of the u-form continuation solves the G polynomial.
  PhysicalBranch branch(relu);
  branch.seed_and_descend(z);
  const auto poly = build_polynomial(relu, z);
  CHECK(std::abs(poly(branch.stieltjes())) < 1e-10);
}

TEST_CASE("coefficient overflow is reported") {
  EnsembleSpec spec = EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 2000);
  CHECK_THROWS_AS(build_polynomial(spec, {1e3, 1.0}), OverflowError);
}

TEST_CASE("solve_stieltjes picks the physical root") {
  const Complex g = solve_stieltjes(mp_spec(), {5.0, 1e-8});
  CHECK(g.real() == doctest::Approx((5.0 - std::sqrt(5.0)) / 10.0).epsilon(1e-7));
  CHECK(g.imag() <= 0.0);
  const std::vector<EnsembleSpec> specs = {
      mp_spec(),
      EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 8),
      EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 8),
      EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 2, 0.9),
      EnsembleSpec::critical(WeightEnsemble::orthogonal, kLinear, 3),
  };
  for (const auto& spec : specs) {
    const Complex z(1e6, 1.0);
    CHECK(std::abs(z * solve_stieltjes(spec, z) - 1.0) < 1e-3);
  }
  const auto ortho = specs[3];
  for (double lambda : {0.05, 0.2, 0.4}) {
    const Complex gi = solve_stieltjes(ortho, {lambda, 1e-6 * lambda});
    CHECK(gi.imag() < 0.0);
  }
  // Grid continuation from a nearby root.
  const Complex prev = solve_stieltjes(mp_spec(), {2.0, 1e-3});
  const Complex next = solve_stieltjes(mp_spec(), {2.01, 1e-3}, prev);
  CHECK(std::abs(next - mp_stieltjes({2.01, 1e-3})) < 1e-10);
  CHECK_THROWS_AS(solve_stieltjes(mp_spec(), {2.0, 0.0}), DomainError);
}

TEST_CASE("continuation keeps Herglotz and Lipschitz properties along a grid") {
  for (const auto& spec : {EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 6),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 8, 0.9)}) {
    const auto grid = default_grid(spec, 600);
    PhysicalBranch branch(spec);
    branch.seed_and_descend({grid[0], 1e-6 * grid[0]});
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
      branch.advance({grid[i], 1e-6 * grid[i]});
      const Complex g = branch.stieltjes();
      REQUIRE(g.imag() <= 1e-12 * std::max(1.0, std::abs(g)));
    }
    CHECK(branch.max_lipschitz_ratio() <= 10.0);
    CHECK(branch.substeps() >= grid.size() - 1);
  }
}

TEST_CASE("theory density of the square Wishart matches the closed form") {
  const auto rho = theory_density(mp_spec(), 2000);
  CHECK(rho.variable == free_prob::SpectralVariable::eigenvalue);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const double x = rho.abscissa[i];
    if (x > 0.05 && x < 3.95) worst = std::max(worst, std::abs(rho.density[i] - mp_density(x)));
  }
  CHECK(worst <= 0.02);
  CHECK(rho.zero_atom < 1e-3);
  CHECK(rho.continuous_mass() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_NOTHROW(rho.validate());
}

TEST_CASE("linear orthogonal spectrum is a unit atom") {
  const auto rho = theory_density(EnsembleSpec::critical(WeightEnsemble::orthogonal, kLinear, 5), 400);
  CHECK(rho.zero_atom < 1e-9);
  REQUIRE(rho.atoms.size() == 1);
  CHECK(rho.atoms[0].location == doctest::Approx(1.0));
  CHECK(rho.atoms[0].mass == 1.0);
  CHECK(rho.density.maxCoeff() < 1e-6);
}

TEST_CASE("zero atom equals the inactive fraction") {
  // The kernel of a product of free elements has the largest kernel fraction.
  for (const auto& spec : {EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 4),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 2, 0.9),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 8, 0.9),
                           EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 3)}) {
    const auto rho = theory_density(spec, 2000);
    CHECK(rho.zero_atom == doctest::Approx(1.0 - spec.p).epsilon(2e-3));
    CHECK_NOTHROW(rho.validate());
  }
}

TEST_CASE("numeric moments match the Lagrange series") {
  for (const auto& spec : {EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 4),
                           EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 4),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 8, 0.9),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::gaussian, 3, 0.7)}) {
    const auto rho = theory_density(spec, 2000);
    const auto s = moments_lagrange(spec);
    CHECK(moment(rho, 1) == doctest::Approx(s.m1).epsilon(0.03));
    CHECK(moment(rho, 2) == doctest::Approx(s.m2).epsilon(0.03));
  }
}

TEST_CASE("two-layer linear Gaussian density matches the parametric form") {
  const auto rho = theory_density(EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 2), 2000);
  const auto param = linear_gaussian_density(2, 20000);
  for (double x : {0.1, 0.5, 1.0, 2.0, 4.0, 6.0}) {
    const double s = std::sqrt(x);
    const double expected = interpolate(param.abscissa, param.density, s) / (2.0 * s);
    CHECK(interpolate(rho.abscissa, rho.density, x) == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("nonlinear specs with all slopes active reduce to the linear ones") {
  const auto lin = theory_density(EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 3), 1000);
  const auto ht = theory_density(EnsembleSpec::critical_hardtanh_p(WeightEnsemble::gaussian, 3, 1.0), 1000);
  CHECK((lin.density - ht.density).abs().maxCoeff() < 1e-9);
  const auto orth = theory_density(EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 4, 1.0), 200);
  REQUIRE(orth.atoms.size() == 1);
  CHECK(orth.atoms[0].location == doctest::Approx(1.0));
  CHECK(orth.atoms[0].mass == 1.0);
}

TEST_CASE("theory density rejects bad grids") {
  Eigen::ArrayXd grid(3);
  grid << 1.0, 0.5, 2.0;
  CHECK_THROWS_AS(theory_density(mp_spec(), grid), DomainError);
  grid << -1.0, 0.5, 2.0;
  CHECK_THROWS_AS(theory_density(mp_spec(), grid), DomainError);
}

TEST_CASE("linear Gaussian parametric density") {
  const auto two = linear_gaussian_density(1, 2);
  CHECK(two.variable == free_prob::SpectralVariable::singular_value);
  // phi = pi/3 is the second sample.
  bool found = false;
  for (Eigen::Index i = 0; i < two.size(); ++i) {
    if (std::abs(two.abscissa[i] - 1.0) < 1e-12) {
      CHECK(two.density[i] == doctest::Approx(std::sqrt(3.0) / kPi).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
  for (int L : {1, 2, 5, 10}) {
    const auto rho = linear_gaussian_density(L, 20000);
    const double smax_sq = std::pow(L + 1.0, L + 1) / std::pow(double(L), L);
    CHECK(rho.abscissa[rho.size() - 1] * rho.abscissa[rho.size() - 1] == doctest::Approx(smax_sq).epsilon(1e-12));
    CHECK(rho.abscissa[0] < 1e-3);
    CHECK(rho.continuous_mass() == doctest::Approx(1.0).epsilon(2e-3));
    const Eigen::ArrayXd s2 = rho.abscissa.square();
    const double m1 = free_prob::trapezoid(rho.abscissa, rho.density * s2);
    const double m2 = free_prob::trapezoid(rho.abscissa, rho.density * s2 * s2);
    CHECK(m1 == doctest::Approx(1.0).epsilon(0.01));
    CHECK(m2 - m1 * m1 == doctest::Approx(double(L)).epsilon(0.02));
  }
  // Quarter circle at L = 1.
  const auto qc = linear_gaussian_density(1, 101);
  for (Eigen::Index i = 0; i < qc.size(); ++i) {
    const double s = qc.abscissa[i];
    CHECK(qc.density[i] == doctest::Approx(std::sqrt(std::max(0.0, 4.0 - s * s)) / kPi).epsilon(1e-10));
  }
  CHECK_THROWS_AS(linear_gaussian_density(0, 10), DomainError);
}

TEST_CASE("closed-form spectral edges") {
  CHECK(lambda_max(mp_spec()) == doctest::Approx(4.0));
  CHECK(lambda_max(EnsembleSpec::critical(WeightEnsemble::orthogonal, kLinear, 9)) == doctest::Approx(1.0));
  CHECK(lambda_max(EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 2)) == doctest::Approx(4.0));
  CHECK(lambda_max(EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 3)) ==
        doctest::Approx(256.0 / 27.0));
  // Gaussian edge: the larger root of L u^2 - (L+1) u + (1 - p), mapped through
  // lambda = sigma^{2L} u (u - 1 + p)^L / (u - 1).
  for (const auto& spec : {EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 1),
                           EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 7),
                           EnsembleSpec::critical_hardtanh_p(WeightEnsemble::gaussian, 20, 0.8)}) {
    const double L = spec.depth, c = 1.0 - spec.p;
    const double u = ((L + 1) + std::sqrt((L + 1) * (L + 1) - 4 * L * c)) / (2 * L);
    const double expected = std::pow(spec.sigma_w_sq, L) * u * std::pow(u - c, L) / (u - 1.0);
    CHECK(continuous_edge(spec) == doctest::Approx(expected).epsilon(1e-12));
  }
  // One relu layer is a Wishart with half its columns zeroed: MP at ratio 1/2 scaled by 2.
  CHECK(lambda_max(EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 1)) ==
        doctest::Approx(2.0 * 0.5 * std::pow(1.0 + std::sqrt(2.0), 2)));
}

TEST_CASE("orthogonal atom and continuous edge") {
  const auto spec = EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 2, 0.9);
  const auto atom = orthogonal_atom(spec);
  CHECK(atom.location == doctest::Approx(1.0 / 0.81));
  CHECK(atom.mass == doctest::Approx(0.8));
  CHECK(continuous_edge(spec) == doctest::Approx(4.0 / 9.0));
  CHECK(lambda_max(spec) == doctest::Approx(1.0 / 0.81));
  CHECK(orthogonal_atom(EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 2)).mass == 0.0);
  CHECK(orthogonal_atom(EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 2)).mass == 0.0);
}

TEST_CASE("numeric edges agree with closed forms") {
  CHECK(spectral_edge_numeric(mp_spec(), {3.5, 4.5}) == doctest::Approx(4.0).epsilon(1e-3));
  const auto ortho = EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, 2, 0.9);
  CHECK(spectral_edge_numeric(ortho, {0.4, 0.5}) == doctest::Approx(4.0 / 9.0).epsilon(1e-3));
  const auto relu = EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 2);
  CHECK(spectral_edge_numeric(relu, {3.6, 4.4}) == doctest::Approx(4.0).epsilon(5e-3));
  const auto g3 = EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 3);
  CHECK(spectral_edge_numeric(g3, {9.0, 10.0}) == doctest::Approx(256.0 / 27.0).epsilon(5e-3));
  const auto gr = EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 5);
  const double edge = continuous_edge(gr);
  CHECK(spectral_edge_numeric(gr, {0.9 * edge, 1.1 * edge}) == doctest::Approx(edge).epsilon(5e-3));
  CHECK_THROWS_AS(spectral_edge_numeric(mp_spec(), {1.0, 2.0}), NoRootError);
}

TEST_CASE("deep Gaussian relu edge approaches the asymptote") {
  const auto spec = EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 64);
  CHECK(lambda_max_asymptotic(spec) == doctest::Approx(2.0 * std::numbers::e * 64));
  const double edge = continuous_edge(spec);
  CHECK(edge == doctest::Approx(lambda_max_asymptotic(spec)).epsilon(0.05));
  CHECK(spectral_edge_numeric(spec, {0.95 * edge, 1.05 * edge}, 1e-6) == doctest::Approx(edge).epsilon(5e-3));
}

TEST_CASE("Lagrange moments") {
  const auto lin = moments_lagrange(EnsembleSpec::critical(WeightEnsemble::gaussian, kLinear, 5));
  CHECK(lin.m1 == doctest::Approx(1.0));
  CHECK(lin.variance == doctest::Approx(5.0));
  const auto relu = moments_lagrange(EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 10));
  CHECK(relu.variance == doctest::Approx(20.0));
  const auto iso = moments_lagrange(EnsembleSpec::critical(WeightEnsemble::orthogonal, kLinear, 6));
  CHECK(iso.variance == doctest::Approx(0.0).epsilon(1e-12));
  for (int L : {2, 5, 17}) {
    const auto spec = EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, L, 0.8);
    const auto s = moments_lagrange(spec);
    CHECK(s.variance == doctest::Approx(L * 0.2 / 0.8).epsilon(1e-9));
  }
  // Off criticality the first moment is chi^L.
  auto spec = EnsembleSpec::critical(WeightEnsemble::gaussian, kRelu, 7);
  spec.sigma_w_sq = 2.3;
  const auto s = moments_lagrange(spec);
  CHECK(s.m1 == doctest::Approx(s.chi_to_L).epsilon(1e-8));
  CHECK(s.m2 == doctest::Approx(std::pow(spec.chi(), 14) * (7 + 0.5) / 0.5).epsilon(1e-9));
  CHECK(s.s_max == doctest::Approx(std::sqrt(s.lambda_max)));
}

TEST_CASE("s_max sweep") {
  std::vector<EnsembleSpec> specs;
  for (int L : {4, 16, 64, 256}) specs.push_back(EnsembleSpec::critical_hardtanh_p(WeightEnsemble::orthogonal, L, 1.0 - 1.0 / L));
  const auto rows = smax_sweep(specs);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double lmax = rows[i].s_max * rows[i].s_max;
    CHECK(lmax > std::numbers::e);
    CHECK(lmax < std::numbers::e * (1.0 + 1.0 / rows[i].depth));
    if (i > 0) CHECK(rows[i].s_max < rows[i - 1].s_max);
  }
  const auto relu = EnsembleSpec::critical(WeightEnsemble::orthogonal, kRelu, 4000);
  CHECK(lambda_max(relu) / 4000 == doctest::Approx(std::numbers::e).epsilon(1e-3));
}
