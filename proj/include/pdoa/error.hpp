#pragma once

#include <stdexcept>
#include <string>

namespace pdoa {

/// Thrown when an input violates a documented precondition or type invariant.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a measurement matrix or vector carries no usable signal
/// (all-zero input, zero head subvector, singular normal equations).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace pdoa
