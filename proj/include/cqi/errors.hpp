// Copyright 2026 The cqi-sim Authors
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
#include <utility>

namespace cqi {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad factor index, non-unitary
// overlap matrix, unnormalized amplitudes, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numerical-regime validation failed: perturbativity, support leaking out of
// a readout region, failed normalization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An internal invariant that should hold by construction did not.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Malformed experiment configuration. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cqi
