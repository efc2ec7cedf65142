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

#include "jacospec/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "jacospec/errors.hpp"

namespace jacospec {
namespace {

// Giles' single-precision approximation of erfinv, used as a starting
// point for Halley refinement.
double erf_inv_seed(double y) {
  double w = -std::log((1.0 - y) * (1.0 + y));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  return p * y;
}

constexpr double kTwoOverSqrtPi = 2.0 * std::numbers::inv_sqrtpi;

}  // namespace

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    if (y == 1.0) return std::numeric_limits<double>::infinity();
    if (y == -1.0) return -std::numeric_limits<double>::infinity();
    throw DomainError("erf_inv: argument outside (-1, 1)");
  }
  if (std::abs(y) > 0.5) {
    const double x = erfc_inv(1.0 - std::abs(y));
    return y < 0 ? -x : x;
  }
  double x = erf_inv_seed(y);
  for (int it = 0; it < 3; ++it) {
    const double f = std::erf(x) - y;
    const double fp = kTwoOverSqrtPi * std::exp(-x * x);
    x -= f / (fp + x * f);  // Halley: f'' = -2 x f'
  }
  return x;
}

double erfc_inv(double c) {
  if (!(c > 0.0 && c < 2.0)) {
    if (c == 0.0) return std::numeric_limits<double>::infinity();
    if (c == 2.0) return -std::numeric_limits<double>::infinity();
    throw DomainError("erfc_inv: argument outside (0, 2)");
  }
  if (c > 1.0) return -erfc_inv(2.0 - c);
  double x = erf_inv_seed(1.0 - c);
  if (c < 1e-7 || !std::isfinite(x)) {
    // Asymptotic start: erfc(x) ~ exp(-x^2) / (x sqrt(pi)).
    const double t = -std::log(c * std::sqrt(std::numbers::pi));
    x = std::sqrt(t - 0.5 * std::log(t));
  }
  for (int it = 0; it < 50; ++it) {
    const double f = std::erfc(x) - c;
    const double fp = -kTwoOverSqrtPi * std::exp(-x * x);
    if (fp == 0.0) break;
    // Halley on erfc: f'' = -2 x f'.
    const double step = f / (fp + x * f);
    x -= step;
    if (std::abs(step) <= 1e-16 * std::abs(x)) break;
  }
  return x;
}

}  // namespace jacospec
