#pragma once

#include <vector>

#include "carmpivot/fitting.hpp"
#include "carmpivot/simulator.hpp"

namespace carmpivot {

struct CalibrationDiagnostics {
    int inliers_required = 0;
    int inliers_detected = 0;
    double mean_inlier_residual_mm = 0.0;
    double mean_all_residual_mm = 0.0;
    double plane_rms_mm = 0.0;   // aggregated per-set plane fit residual
    double circle_rms_mm = 0.0;  // aggregated per-set circle fit residual
    int refinement_rounds = 0;
    bool spindle_degenerate = false;  // sphere-pivot branch taken (major radius ~ 0)
};

struct CalibrationResult {
    Vec3 torus_center = Vec3::Zero();      // mm, tracker frame
    Vec3 torus_normal = Vec3::UnitX();     // unit, tracker frame
    double major_radius = 0.0;             // mm
    Vec3 offset = Vec3::Zero();            // sensor -> pivot point, sensor-local frame, mm
    Mat3 orientation = Mat3::Identity();   // C-arm axes expressed in tracker frame
    Circle3D pivot_locus;                  // circle traced by the rotation center
    CalibrationDiagnostics diagnostics;
};

struct NormalEstimate {
    Vec3 normal = Vec3::UnitX();          // averaged, oriented by sweep order when possible
    Vec3 center_seed = Vec3::Zero();      // mean of per-set circle centers (on the axis)
    std::vector<Circle3D> per_set;        // one fitted circle per x-axis sweep
    double plane_rms_mm = 0.0;
    double circle_rms_mm = 0.0;
};

struct CenterEstimate {
    Vec3 center = Vec3::Zero();
    std::vector<Circle3D> per_set;        // one fitted circle per c-axis sweep
    Circle3D through_centers;             // circle fitted to the per-set centers
    bool degenerate = false;              // per-set centers nearly coincide
    double plane_rms_mm = 0.0;
    double circle_rms_mm = 0.0;
};

struct OrientationOffset {
    Mat3 orientation = Mat3::Identity();
    Vec3 offset = Vec3::Zero();           // sensor -> pivot point, sensor-local frame
};

/// Structural checks: >= 3 poses per set, >= 1 x-axis sweep, >= 3 c-axis
/// sweeps with alpha tags -90/0/+90 present exactly once each.
/// Throws DegenerateInput / InsufficientData naming the offending sets.
void validate_observations(const TrajectoryObservations& obs);

/// Per x-axis sweep: RANSAC plane then in-plane circle. The averaged plane
/// normal is the torus axis; its sign follows the ascending sweep order when
/// two or more distinct planes are available.
/// Throws InconsistentNormals when per-set normals disagree by > 30 degrees.
NormalEstimate estimate_normal(const std::vector<TrajectorySet>& x_sets, const RansacConfig& cfg);

/// Per c-axis sweep: RANSAC plane + circle; a fixed-normal circle through the
/// per-set centers plus the projected x-axis seed give the torus center.
/// When the per-set centers nearly coincide (spread below 10x the inlier
/// threshold) the estimate degenerates to their mean and is flagged.
CenterEstimate estimate_center(const std::vector<TrajectorySet>& c_sets, const Vec3& normal,
                               const Vec3& center_seed, const RansacConfig& cfg);

/// Mean perpendicular distance from the center to the per-set circle axes.
double estimate_major_radius(const Vec3& center, const std::vector<Circle3D>& per_set_circles);

/// Recovers the two in-plane axes from the tagged -90/0/+90 sweeps via an
/// orthogonality-constrained line pair, assembles a right-handed rotation,
/// and averages the per-pose offset to the known pivot points.
/// Throws AmbiguousOrientation on radially degenerate projections unless
/// allow_ambiguous_signs is set (degenerate spindle branch).
OrientationOffset estimate_orientation_offset(const std::vector<TrajectorySet>& c_sets,
                                              const Vec3& normal, const Vec3& center,
                                              double major_radius,
                                              bool allow_ambiguous_signs = false);

/// Full pipeline: normal, center, major radius, orientation + offset, then a
/// global refinement loop that rescores every pose against the implied sensor
/// surface and refits on the selected inliers (fixed point or 10 rounds).
/// Deterministic for a fixed cfg.rng_seed.
CalibrationResult calibrate(const TrajectoryObservations& obs, const RansacConfig& cfg);

/// Parameters of the algebraic pivot-circle energy: the offset maps every
/// pose onto a common circle (center, normal, radius).
struct PivotCircleParams {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    double radius = 0.0;
    Vec3 offset = Vec3::Zero();
};

/// Two residuals per pose: (|T_i(offset) - center| - radius) and
/// <T_i(offset) - center, normal>.
std::vector<double> pivot_circle_energy(const PivotCircleParams& params,
                                        const std::vector<Pose>& poses);

struct PivotCircleSolution {
    PivotCircleParams params;
    bool converged = false;
    int iterations = 0;
    double cost = 0.0;
    std::vector<double> accepted_costs;  // cost after every accepted step
};

/// Damped least squares on pivot_circle_energy with the normal constrained to
/// the unit sphere (two-parameter tangent chart). Stops on relative cost
/// decrease < 1e-12, step norm < 1e-10, or 200 iterations (flagged).
PivotCircleSolution solve_pivot_circle(const std::vector<Pose>& poses,
                                       const PivotCircleParams& initial);

/// Rigidly transforms every pose of the bundle (tracker-frame change).
TrajectoryObservations transform_observations(const TrajectoryObservations& obs, const Pose& w);

}  // namespace carmpivot
