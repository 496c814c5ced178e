// Copyright 2026 The gridstab Authors
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

namespace gridstab {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A documented precondition on an argument does not hold (e.g. a
/// non-Hermitian operator passed where a Hermitian one is required).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// The Fock truncation is too small for the requested state.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, double tail_weight)
        : Error(what), tail_weight_(tail_weight) {}
    double tail_weight() const noexcept { return tail_weight_; }

private:
    double tail_weight_;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_time)
        : Error(what), last_time_(last_time) {}
    double last_time() const noexcept { return last_time_; }

private:
    double last_time_;
};

/// Step size fell below the configured floor.
class StiffFailure : public SolverError {
public:
    using SolverError::SolverError;
};

/// Trace, Hermiticity or positivity drifted beyond the abort threshold.
class InvariantBreach : public SolverError {
public:
    using SolverError::SolverError;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class FitFailure : public Error {
public:
    using Error::Error;
};

}  // namespace gridstab
