// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sphere_moments {

/// Argument outside the mathematical domain of an operation
/// (off-sphere point, evaluation on the interface, |a| > 1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller violated a precondition: mismatched sizes, insufficient grid
/// exactness, bad enum name, too few study rows.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The perturbation model cannot be handled by the requested assembly.
class UnsupportedModelError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace sphere_moments
