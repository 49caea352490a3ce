// Copyright 2026 The msqkd-sim Authors.
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

namespace msqkd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix failed the unitarity check U†U = I.
class NonUnitaryError : public Error {
 public:
  using Error::Error;
};

/// A sampled measurement landed on a branch of (numerically) zero weight.
class DegenerateBranchError : public Error {
 public:
  using Error::Error;
};

/// Operands have incompatible dimensions.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// Attack parameters cannot be realised (non-normalised coefficients or
/// column images that do not extend to a unitary).
class InconsistentParamsError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples or branches to evaluate the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A sift or report was requested over zero rounds.
class EmptyRunError : public Error {
 public:
  using Error::Error;
};

/// A stored state violates finiteness or normalisation.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Configuration or command-line input could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace msqkd
