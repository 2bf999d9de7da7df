#pragma once

#include <stdexcept>
#include <string>

namespace roughpath {

/// Malformed or inconsistent input data (files, external level-2 fields).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values, failed evaluators, or iterations that did not converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape/dimension mismatch between operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

inline void require_arg(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

inline void require_index(bool ok, const std::string& what) {
    if (!ok) throw std::out_of_range(what);
}

} // namespace detail

} // namespace roughpath
