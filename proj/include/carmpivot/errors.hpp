#pragma once

#include <stdexcept>
#include <string>

namespace carmpivot {

/// Base class for all calibration-toolkit failures.
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data cannot support the requested fit (too few points, collinear,
/// coplanar, isotropic covariance, ...).
struct DegenerateInput : CalibrationError {
    using CalibrationError::CalibrationError;
};

/// A sign/direction choice has no usable signal (reference nearly
/// perpendicular, radially degenerate projected sets).
struct AmbiguousOrientation : CalibrationError {
    using CalibrationError::CalibrationError;
};

/// RANSAC could not find a model supported by enough inliers.
struct NoConsensus : CalibrationError {
    using CalibrationError::CalibrationError;
};

/// The observation bundle is structurally incomplete (missing tagged sets,
/// no x-axis sweep, ...).
struct InsufficientData : CalibrationError {
    using CalibrationError::CalibrationError;
};

/// Per-set sweep normals disagree beyond tolerance; usually mislabeled sets.
struct InconsistentNormals : CalibrationError {
    using CalibrationError::CalibrationError;
};

/// File parsing / format violations.
struct ParseError : CalibrationError {
    using CalibrationError::CalibrationError;
};

}  // namespace carmpivot
