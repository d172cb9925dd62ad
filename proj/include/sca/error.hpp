#pragma once

#include <stdexcept>
#include <string>

namespace sca {

/// Bad input: malformed files, out-of-range parameters, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// The math failed: kernel underflow, eigensolver trouble, rank deficiency,
/// solver non-convergence.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sca
