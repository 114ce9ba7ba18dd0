#pragma once

#include <string>
#include <vector>

#include "carmpivot/calibration.hpp"

namespace carmpivot {

/// One calibration run inside a sweep.
struct ExperimentRow {
    std::string sweep_variable;  // "sigma_t_mm", "sigma_r_deg", "n_c_sets", "n_x_sets", "total_poses"
    double sweep_value = 0.0;
    double translation_error_mm = 0.0;
    double orientation_error_deg = 0.0;
    int inliers_required = 0;
    int inliers_detected = 0;
    double mean_inlier_residual_mm = 0.0;
    double mean_all_residual_mm = 0.0;
    double runtime_s = 0.0;
    std::uint64_t seed = 0;
    std::string status = "ok";  // or the failure kind
};

/// Mean over the non-failed repetitions of one sweep point.
struct SweepPointSummary {
    std::string sweep_variable;
    double sweep_value = 0.0;
    double mean_translation_error_mm = 0.0;
    double mean_orientation_error_deg = 0.0;
    double mean_detected_inliers = 0.0;
    int runs = 0;
    int failed = 0;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    /// Slope of the translation error per decade of pose count (density sweep).
    double trend_slope_per_decade = 0.0;

    std::vector<SweepPointSummary> summaries() const;
    void write_csv(const std::string& path) const;
    void write_summary_json(const std::string& path) const;
};

struct EvalConfig {
    int seeds_per_point = 5;
    std::uint64_t base_seed = 1;
    int ransac_iterations = 500;
    double inlier_threshold_mm = 1.0;
    double min_inlier_fraction = 0.05;
    // Scenario grid overrides; empty vectors keep the defaults.
    std::vector<double> c_alphas_deg, c_betas_deg, x_alphas_deg, x_betas_deg;
};

/// Translation error |offset_est - offset_true| (mm, sensor frame) and
/// orientation error in degrees against the scenario ground truth.
std::pair<double, double> error_metrics(const CalibrationResult& result,
                                        const ScenarioConfig& truth);

/// Gaussian noise sweeps over translation (sigma_r = 0) and rotation
/// (sigma_t = 0) noise. Empty grids default to 0..5 mm step 0.5 and
/// 0..0.5 deg step 0.05.
ExperimentReport run_noise_sweep(std::vector<double> sigmas_t_mm,
                                 std::vector<double> sigmas_r_deg, const EvalConfig& cfg);

/// Sweeps the number of c-axis sweeps (x count fixed) and of x-axis sweeps
/// (c count fixed) at sigma_t = 1 mm, sigma_r = 0.1 deg. Empty lists default
/// to 3..13 and 1..13. Counts below the structural minimum produce failed rows.
ExperimentReport run_trajectory_sweep(std::vector<int> n_c_sets, std::vector<int> n_x_sets,
                                      const EvalConfig& cfg);

/// Stride-decimates a 4x-dense pose grid (~40320 poses at factor 1) within
/// every trajectory, at sigma_t = 1 mm, sigma_r = 0.1 deg. Rows whose
/// decimation leaves a set with fewer than 3 poses fail with DegenerateInput.
ExperimentReport run_density_sweep(std::vector<int> decimation_factors, const EvalConfig& cfg);

/// Deterministic subgrid helpers used by the trajectory sweep.
std::vector<double> c_alpha_subset(int n);
std::vector<double> x_beta_grid(int n);

}  // namespace carmpivot
