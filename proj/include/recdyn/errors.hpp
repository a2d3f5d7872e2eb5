#pragma once

#include <stdexcept>
#include <string>

namespace recdyn {

/// An integration or map iteration produced a non-finite value.
struct DivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training loss became non-finite.
struct DivergedTrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Series too short for the requested embedding or split.
struct TooShortError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix shapes do not agree.
struct ShapeMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A statistic is undefined on a (near-)constant series.
struct DegenerateSeriesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Delay-vector sequence has the wrong length.
struct SequenceLengthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Not enough reference data to fit a conditional regressor.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The closed-form delay map is singular at the requested point.
struct SingularDelayMapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration file or option value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace recdyn
