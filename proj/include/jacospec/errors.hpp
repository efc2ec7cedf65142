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

#include <stdexcept>
#include <string>

namespace jacospec {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& what, int layer = -1)
      : Error(what), layer_(layer) {}
  /// Network layer at which the overflow happened, or -1.
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_iterate)
      : Error(what), last_iterate_(last_iterate) {}
  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

/// A bracketing search found no sign change.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// Tanh and other smooth slopes are not Bernoulli-distributed.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A slope law with no mass at one.
class DegenerateLawError : public Error {
 public:
  using Error::Error;
};

/// The physical root of a master polynomial could not be identified.
class BranchError : public Error {
 public:
  BranchError(const std::string& what, double lambda)
      : Error(what), lambda_(lambda) {}
  /// Spectral abscissa at which root selection failed.
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// Two spectra expressed in different variables were compared.
class VariableMismatchError : public Error {
 public:
  using Error::Error;
};

/// Too many Monte Carlo trials failed.
class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace jacospec
