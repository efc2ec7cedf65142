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

#include "jacospec/signal_prop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jacospec/errors.hpp"
#include "jacospec/special.hpp"

namespace jacospec::signal_prop {
namespace {

constexpr double kSqrt2OverPi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;

void require_nonnegative_q(double q, const char* who) {
  if (!(q >= 0.0)) throw DomainError(std::string(who) + ": variance must be nonnegative");
}

// E[clamp(sqrt(q) h, -1, 1)^2] for h ~ N(0, 1).
double hardtanh_second_moment(double q) {
  if (q == 0.0) return 0.0;
  const double a = 1.0 / std::sqrt(q);
  const double inner = std::erf(a / std::numbers::sqrt2) - kSqrt2OverPi * a * std::exp(-0.5 * a * a);
  return q * inner + std::erfc(a / std::numbers::sqrt2);
}

double tanh_second_moment(double q, const GaussianRule& quad) {
  const double s = std::sqrt(q);
  return quad.expect([s](double h) {
    const double t = std::tanh(s * h);
    return t * t;
  });
}

double tanh_slope_moment(double q, const GaussianRule& quad) {
  const double s = std::sqrt(q);
  return quad.expect([s](double h) {
    const double t = std::tanh(s * h);
    const double d = 1.0 - t * t;
    return d * d;
  });
}

// E[phi(sqrt(q) h)^2].
double activation_moment(Nonlinearity nl, double q, const GaussianRule& quad) {
  switch (nl.kind()) {
    case NonlinearityKind::linear: return q;
    case NonlinearityKind::relu: return 0.5 * q;
    case NonlinearityKind::hardtanh: return hardtanh_second_moment(q);
    case NonlinearityKind::tanh: return tanh_second_moment(q, quad);
  }
  return 0.0;
}

bool is_degenerate(Nonlinearity nl, const MeanFieldParams& params) {
  if (params.sigma_b_sq != 0.0) return false;
  switch (nl.kind()) {
    case NonlinearityKind::linear: return params.sigma_w_sq == 1.0;
    case NonlinearityKind::relu: return params.sigma_w_sq == 2.0;
    default: return false;
  }
}

std::optional<double> maybe_p(Nonlinearity nl, double q) {
  if (!nl.has_binary_slope()) return std::nullopt;
  return p_linear(nl, q);
}

}  // namespace

double Nonlinearity::value(double h) const {
  switch (kind_) {
    case NonlinearityKind::linear: return h;
    case NonlinearityKind::relu: return h > 0.0 ? h : 0.0;
    case NonlinearityKind::hardtanh: return std::clamp(h, -1.0, 1.0);
    case NonlinearityKind::tanh: return std::tanh(h);
  }
  return h;
}

double Nonlinearity::slope(double h) const {
  switch (kind_) {
    case NonlinearityKind::linear: return 1.0;
    case NonlinearityKind::relu: return h > 0.0 ? 1.0 : 0.0;
    case NonlinearityKind::hardtanh: return std::abs(h) < 1.0 ? 1.0 : 0.0;
    case NonlinearityKind::tanh: {
      const double t = std::tanh(h);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

std::string_view Nonlinearity::name() const {
  switch (kind_) {
    case NonlinearityKind::linear: return "linear";
    case NonlinearityKind::relu: return "relu";
    case NonlinearityKind::hardtanh: return "hardtanh";
    case NonlinearityKind::tanh: return "tanh";
  }
  return "linear";
}

Nonlinearity Nonlinearity::parse(std::string_view name) {
  if (name == "linear") return Nonlinearity(NonlinearityKind::linear);
  if (name == "relu") return Nonlinearity(NonlinearityKind::relu);
  if (name == "hardtanh") return Nonlinearity(NonlinearityKind::hardtanh);
  if (name == "tanh") return Nonlinearity(NonlinearityKind::tanh);
  throw DomainError("unknown nonlinearity '" + std::string(name) + "'");
}

void MeanFieldParams::validate() const {
  if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq))
    throw DomainError("sigma_w^2 must be positive");
  if (!(sigma_b_sq >= 0.0) || !std::isfinite(sigma_b_sq))
    throw DomainError("sigma_b^2 must be nonnegative");
}

const GaussianRule& default_rule() {
  static const GaussianRule rule = gauss_hermite<double>(101);
  return rule;
}

double q_step(double q_prev, Nonlinearity nl, const MeanFieldParams& params, const GaussianRule& quad) {
  require_nonnegative_q(q_prev, "q_step");
  const double q = params.sigma_w_sq * activation_moment(nl, q_prev, quad) + params.sigma_b_sq;
  if (!std::isfinite(q)) throw OverflowError("q_step: variance map overflowed");
  return q;
}

FixedPoint fixed_point(Nonlinearity nl, const MeanFieldParams& params, const FixedPointOptions& options,
                       const GaussianRule& quad) {
  params.validate();
  require_nonnegative_q(options.q0, "fixed_point");

  auto finish = [&](double q, int iterations, bool degenerate) {
    FixedPoint fp;
    fp.q_star = q;
    fp.chi = chi(nl, params, q, quad);
    fp.p_linear = maybe_p(nl, q);
    fp.iterations = iterations;
    fp.residual = std::abs(q_step(q, nl, params, quad) - q);
    fp.degenerate = degenerate;
    return fp;
  };

  if (is_degenerate(nl, params)) return finish(options.q0, 0, true);

  const double alpha = options.damping;
  auto damped = [&](double q) { return (1.0 - alpha) * q + alpha * q_step(q, nl, params, quad); };
  auto residual = [&](double q) { return std::abs(q_step(q, nl, params, quad) - q); };

  double q = options.q0;
  try {
    for (int it = 0; it <= options.max_iter; ++it) {
      if (residual(q) <= options.tol) return finish(q, it, false);
      if (it == options.max_iter) break;
      const double q1 = damped(q);
      const double q2 = damped(q1);
      const double curvature = q2 - 2.0 * q1 + q;
      double next = q2;
      if (curvature != 0.0) {
        const double aitken = q - (q1 - q) * (q1 - q) / curvature;
        if (std::isfinite(aitken) && aitken >= 0.0 && residual(aitken) < residual(q2)) next = aitken;
      }
      q = next;
    }
  } catch (const OverflowError&) {
    throw ConvergenceError("fixed_point: variance diverged", q);
  }
  throw ConvergenceError("fixed_point: no convergence within max_iter", q);
}

double chi(Nonlinearity nl, const MeanFieldParams& params, double q_star, const GaussianRule& quad) {
  require_nonnegative_q(q_star, "chi");
  switch (nl.kind()) {
    case NonlinearityKind::linear: return params.sigma_w_sq;
    case NonlinearityKind::relu:
    case NonlinearityKind::hardtanh: return params.sigma_w_sq * p_linear(nl, q_star);
    case NonlinearityKind::tanh: return params.sigma_w_sq * tanh_slope_moment(q_star, quad);
  }
  return params.sigma_w_sq;
}

double p_linear(Nonlinearity nl, double q_star) {
  require_nonnegative_q(q_star, "p_linear");
  switch (nl.kind()) {
    case NonlinearityKind::linear: return 1.0;
    case NonlinearityKind::relu: return 0.5;
    case NonlinearityKind::hardtanh:
      if (q_star == 0.0) return 1.0;
      return std::erf(1.0 / std::sqrt(2.0 * q_star));
    case NonlinearityKind::tanh: break;
  }
  throw UnsupportedError("p_linear: tanh slopes are not Bernoulli distributed");
}

double q_star_for_p(double target_p) {
  if (!(target_p > 0.0 && target_p < 1.0)) throw DomainError("q_star_for_p: target must lie in (0, 1)");
  // erf(a) = p with a = 1/sqrt(2 q); use the complement near p = 1.
  const double a = target_p > 0.5 ? erfc_inv(1.0 - target_p) : erf_inv(target_p);
  return 1.0 / (2.0 * a * a);
}

double log_saturated_fraction(double q_star) {
  require_nonnegative_q(q_star, "log_saturated_fraction");
  if (q_star == 0.0) return -std::numeric_limits<double>::infinity();
  const long double a = 1.0L / std::sqrt(2.0L * q_star);
  return static_cast<double>(std::log(std::erfc(a)));
}

double q_star_for_log_saturated(double log_one_minus_p) {
  if (!(log_one_minus_p < 0.0) || !std::isfinite(log_one_minus_p))
    throw DomainError("q_star_for_log_saturated: argument must be negative and finite");
  const double c = std::exp(log_one_minus_p);
  long double a;
  if (c > 1e-300) {
    a = erfc_inv(c);
  } else {
    const double t = -log_one_minus_p;
    a = std::sqrt(t - std::log(std::sqrt(t * std::numbers::pi)));
  }
  const long double two_over_sqrt_pi = 2.0L / std::sqrt(std::numbers::pi_v<long double>);
  for (int it = 0; it < 60; ++it) {
    const long double e = std::erfc(a);
    if (!(e > 0.0L)) throw DomainError("q_star_for_log_saturated: argument below long double range");
    const long double g = std::log(e) - log_one_minus_p;
    const long double dg = -two_over_sqrt_pi * std::exp(-a * a) / e;
    const long double step = g / dg;
    a -= step;
    if (std::abs(step) <= 1e-19L * a) break;
  }
  return static_cast<double>(1.0L / (2.0L * a * a));
}

MeanFieldParams critical_params_for_q_star(Nonlinearity nl, double q_star, const GaussianRule& quad) {
  require_nonnegative_q(q_star, "critical_params_for_q_star");
  switch (nl.kind()) {
    case NonlinearityKind::linear: return {1.0, 0.0};
    case NonlinearityKind::relu: return {2.0, 0.0};
    case NonlinearityKind::hardtanh:
    case NonlinearityKind::tanh: {
      const double slope_moment =
          nl.kind() == NonlinearityKind::hardtanh ? p_linear(nl, q_star) : tanh_slope_moment(q_star, quad);
      const double sw2 = 1.0 / slope_moment;
      double sb2 = q_star - sw2 * activation_moment(nl, q_star, quad);
      if (sb2 < 0.0) {
        if (sb2 > -1e-14 * std::max(1.0, q_star)) {
          sb2 = 0.0;
        } else {
          throw NoRootError("critical_params_for_q_star: q* requires a negative bias variance");
        }
      }
      return {sw2, sb2};
    }
  }
  return {1.0, 0.0};
}

std::vector<CriticalPoint> critical_line(Nonlinearity nl, std::span<const double> sigma_w_sq_grid, double tol,
                                         const GaussianRule& quad) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (nl.kind() == NonlinearityKind::linear) return {CriticalPoint{1.0, 0.0, nan, 1.0}};
  if (nl.kind() == NonlinearityKind::relu) return {CriticalPoint{2.0, 0.0, nan, 0.5}};

  std::vector<CriticalPoint> line;
  line.reserve(sigma_w_sq_grid.size());
  for (const double sw2 : sigma_w_sq_grid) {
    if (!(sw2 > 1.0)) {
      if (sw2 == 1.0) {
        line.push_back({1.0, 0.0, 0.0, maybe_p(nl, 0.0)});
        continue;
      }
      throw NoRootError("critical_line: chi < 1 for every bias at sigma_w^2 = " + std::to_string(sw2));
    }
    // chi depends on the bias only through q*, and decreases in q*; solve
    // chi(q*) = 1 for q*, then read the bias off the fixed-point equation.
    double q;
    if (nl.kind() == NonlinearityKind::hardtanh) {
      q = q_star_for_p(1.0 / sw2);
    } else {
      const MeanFieldParams probe{sw2, 0.0};
      auto excess = [&](double qq) { return chi(nl, probe, qq, quad) - 1.0; };
      double lo = 0.0, hi = 1.0;
      while (excess(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e8) throw NoRootError("critical_line: no critical q* below 1e8");
      }
      for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
      }
      q = 0.5 * (lo + hi);
    }
    const MeanFieldParams params = critical_params_for_q_star(nl, q, quad);
    if (std::abs(chi(nl, params, q, quad) - 1.0) > tol)
      throw NoRootError("critical_line: chi = 1 not reached within tolerance");
    line.push_back({params.sigma_w_sq, params.sigma_b_sq, q, maybe_p(nl, q)});
  }
  return line;
}

}  // namespace jacospec::signal_prop
