#pragma once

#include <stdexcept>
#include <string>

namespace ommap {

/// Bad arguments: dimension mismatch, non-positive radius, out-of-range index.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Model parameters outside their admissible set (e.g. tau <= 0 for Besov weights).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// A closed-form routine was asked for a value outside the regime where it holds.
class RegimeError : public std::domain_error {
public:
    explicit RegimeError(const std::string& what) : std::domain_error(what) {}
};

/// NaN / overflow produced during a computation.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ommap
