#pragma once

#include <string>

#include "carmpivot/calibration.hpp"
#include "carmpivot/simulator.hpp"

namespace carmpivot {

/// Pose CSV, one record per pose:
///   set_id,axis_kind,alpha_tag_deg,order_index,r00..r22,tx,ty,tz
/// axis_kind is 'c' or 'x'; alpha_tag_deg is empty for untagged sets; numbers
/// are written with 17 significant digits so translations round-trip exactly.
void write_pose_csv(const std::string& path, const TrajectoryObservations& obs);

/// Parses and validates a pose CSV. Records grouped by set_id keep file
/// order; rotation blocks must be orthonormal within 1e-6 (rejected
/// otherwise) and are re-orthonormalized on load.
TrajectoryObservations read_pose_csv(const std::string& path);

/// Ground-truth sidecar: the scenario that produced a simulated pose file.
void write_scenario_json(const std::string& path, const ScenarioConfig& cfg);
ScenarioConfig read_scenario_json(const std::string& path);

/// Calibration result JSON with keys: center, normal, major_radius_mm,
/// offset_mm, orientation_row_major, diagnostics{inliers_required,
/// inliers_detected, mean_inlier_residual_mm, mean_all_residual_mm}.
void write_result_json(const std::string& path, const CalibrationResult& result);
CalibrationResult read_result_json(const std::string& path);

}  // namespace carmpivot
