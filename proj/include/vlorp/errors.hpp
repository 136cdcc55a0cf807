#pragma once

#include <stdexcept>
#include <string>

namespace vlorp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Element counts or matrix dimensions are incompatible.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// A matrix shape cannot be reshaped under the requested granularity factor
/// (n*c or m/c is not an integer).
struct GranularityMismatch : Error {
    using Error::Error;
};

/// A projected gradient is combined with a projection from a different
/// resampling epoch.
struct EpochMismatch : Error {
    using Error::Error;
};

/// Optimizer state shapes do not match the incoming gradient.
struct ShapeMismatch : Error {
    using Error::Error;
};

/// Smoothness constant must be strictly positive.
struct NonPositiveSmoothness : Error {
    using Error::Error;
};

/// Experiment configuration is inconsistent or unparseable.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace vlorp
