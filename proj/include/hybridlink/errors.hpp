// Copyright 2026 The HybridLink Authors
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

namespace hybridlink {

// Bad input to a pure function: wrong dimensions, non-finite values, unknown
// names.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Query outside the valid range of a function (e.g. arclength past the tip).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numerically unreliable request, e.g. the SE(3) logarithm near a half turn.
class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or physically invalid model description; raised at load time.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear solve failure or residual check failure inside the dynamics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The integrator produced a non-finite state.
class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be parsed or lacks required columns / fields.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint does not match the network shapes it is loaded into.
class CheckpointIncompatible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric whose denominator is too small to be meaningful.
class UndefinedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hybridlink
