#pragma once

#include <stdexcept>
#include <string>

namespace ivsim {

/// Invalid argument or parameter value.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Degenerate geometry: coincident points, zero-length directions.
struct GeometryError : std::domain_error {
    using std::domain_error::domain_error;
};

/// The model itself is ill-defined for the inputs (e.g. zero SINR denominator).
struct ModelError : std::domain_error {
    using std::domain_error::domain_error;
};

/// The destination cone of a node contains no other point.
struct NoNeighborError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A hypothesis of the finiteness results (c1 < 1, delta < xi) does not hold.
struct ConditionViolation : std::domain_error {
    using std::domain_error::domain_error;
};

namespace detail {
inline void require(bool ok, const char* what) {
    if (!ok) throw ParameterError(what);
}
}  // namespace detail

}  // namespace ivsim
