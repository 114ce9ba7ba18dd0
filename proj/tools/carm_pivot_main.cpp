// Command-line front end: simulate sensor trajectories, calibrate pose files,
// and run the evaluation sweeps.
//
// Exit codes: 0 ok, 2 usage/config, 3 I/O, 4 insufficient data, 5 no consensus.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "carmpivot/evaluation.hpp"
#include "carmpivot/pose_io.hpp"

namespace {

using namespace carmpivot;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInsufficientData = 4;
constexpr int kExitNoConsensus = 5;

int cmd_simulate(const std::string& config_path, const std::string& out_path, double sigma_t,
                 double sigma_r, std::uint64_t seed, const std::string& truth_path) {
    if (sigma_t < 0.0 || sigma_r < 0.0) {
        std::cerr << "error: noise sigmas must be non-negative\n";
        return kExitUsage;
    }
    ScenarioConfig scenario;
    if (config_path.empty()) {
        scenario = random_scenario(seed);
    } else {
        try {
            scenario = read_scenario_json(config_path);
        } catch (const ParseError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const CalibrationError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitIo;
        }
    }

    TrajectoryObservations obs = generate(scenario);
    NoiseConfig noise;
    noise.sigma_translation = sigma_t;
    noise.sigma_rotation = sigma_r;
    noise.rng_seed = seed;
    obs = add_noise(obs, noise);

    const std::string truth = truth_path.empty() ? out_path + ".truth.json" : truth_path;
    try {
        write_pose_csv(out_path, obs);
        write_scenario_json(truth, scenario);
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    std::cout << "wrote " << obs.total_poses() << " poses to " << out_path << "\n"
              << "wrote ground truth to " << truth << "\n";
    return kExitOk;
}

int cmd_calibrate(const std::string& pose_path, const std::string& out_path, int iterations,
                  double inlier_mm, double min_inlier_fraction, std::uint64_t seed) {
    if (iterations < 1 || inlier_mm <= 0.0 || min_inlier_fraction <= 0.0 ||
        min_inlier_fraction > 1.0) {
        std::cerr << "error: invalid RANSAC settings\n";
        return kExitUsage;
    }
    TrajectoryObservations obs;
    try {
        obs = read_pose_csv(pose_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    RansacConfig cfg;
    cfg.iterations = iterations;
    cfg.inlier_threshold = inlier_mm;
    cfg.min_inlier_fraction = min_inlier_fraction;
    cfg.rng_seed = seed;

    CalibrationResult result;
    try {
        result = calibrate(obs, cfg);
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const NoConsensus& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConsensus;
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    }

    try {
        write_result_json(out_path, result);
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    std::printf("center        [%.6f, %.6f, %.6f] mm\n", result.torus_center.x(),
                result.torus_center.y(), result.torus_center.z());
    std::printf("normal        [%.6f, %.6f, %.6f]\n", result.torus_normal.x(),
                result.torus_normal.y(), result.torus_normal.z());
    std::printf("major radius  %.6f mm\n", result.major_radius);
    std::printf("offset        [%.6f, %.6f, %.6f] mm\n", result.offset.x(), result.offset.y(),
                result.offset.z());
    std::printf("inliers       %d / required %d (mean residual %.4f mm, all %.4f mm)\n",
                result.diagnostics.inliers_detected, result.diagnostics.inliers_required,
                result.diagnostics.mean_inlier_residual_mm,
                result.diagnostics.mean_all_residual_mm);
    std::cout << "wrote result to " << out_path << "\n";
    return kExitOk;
}

EvalConfig eval_config_from(const std::string& config_path, int seeds, std::uint64_t seed) {
    EvalConfig cfg;
    cfg.seeds_per_point = seeds;
    cfg.base_seed = seed;
    if (!config_path.empty()) {
        const ScenarioConfig sc = read_scenario_json(config_path);
        cfg.c_alphas_deg = sc.c_alphas_deg;
        cfg.c_betas_deg = sc.c_betas_deg;
        cfg.x_alphas_deg = sc.x_alphas_deg;
        cfg.x_betas_deg = sc.x_betas_deg;
    }
    return cfg;
}

void print_summary(const ExperimentReport& report) {
    std::printf("%-14s %10s %14s %14s %8s %7s\n", "sweep", "value", "trans err (mm)",
                "orient err (d)", "runs", "failed");
    for (const auto& s : report.summaries())
        std::printf("%-14s %10.4g %14.4f %14.4f %8d %7d\n", s.sweep_variable.c_str(),
                    s.sweep_value, s.mean_translation_error_mm, s.mean_orientation_error_deg,
                    s.runs, s.failed);
}

int cmd_eval(const std::string& sweep, const std::string& config_path, const std::string& out_csv,
             int seeds, std::uint64_t seed) {
    EvalConfig cfg;
    try {
        cfg = eval_config_from(config_path, seeds, seed);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    ExperimentReport report;
    if (sweep == "noise") {
        report = run_noise_sweep({}, {}, cfg);
    } else if (sweep == "trajectories") {
        report = run_trajectory_sweep({}, {}, cfg);
    } else if (sweep == "density") {
        report = run_density_sweep({}, cfg);
    } else {
        std::cerr << "error: unknown sweep '" << sweep << "' (noise|trajectories|density)\n";
        return kExitUsage;
    }

    try {
        report.write_csv(out_csv);
        report.write_summary_json(out_csv + ".summary.json");
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    print_summary(report);
    std::cout << "wrote report to " << out_csv << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radiation-free C-arm pivot calibration toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, truth_path, pose_path, sweep;
    double sigma_t = 0.0, sigma_r = 0.0, inlier_mm = 1.0, min_frac = 0.05;
    int iterations = 500, seeds = 5;
    std::uint64_t seed = 0;

    auto* simulate = app.add_subcommand("simulate", "Generate a simulated pose file");
    simulate->add_option("--config", config_path, "Scenario JSON (omit for a random scenario)");
    simulate->add_option("--out", out_path, "Output pose CSV")->required();
    simulate->add_option("--truth", truth_path, "Ground-truth sidecar (default <out>.truth.json)");
    simulate->add_option("--noise-sigma-t", sigma_t, "Translation noise std dev (mm)");
    simulate->add_option("--noise-sigma-r", sigma_r, "Rotation noise std dev (deg)");
    simulate->add_option("--seed", seed, "RNG seed");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate a pose file");
    calibrate_cmd->add_option("pose_file", pose_path, "Pose CSV")->required();
    calibrate_cmd->add_option("--out", out_path, "Output result JSON")->required();
    calibrate_cmd->add_option("--ransac-iters", iterations, "RANSAC iterations");
    calibrate_cmd->add_option("--inlier-mm", inlier_mm, "Inlier threshold (mm)");
    calibrate_cmd->add_option("--min-inlier-fraction", min_frac, "Consensus gate fraction");
    calibrate_cmd->add_option("--seed", seed, "RNG seed");

    auto* eval = app.add_subcommand("eval", "Run an evaluation sweep");
    eval->add_option("sweep", sweep, "noise | trajectories | density")->required();
    eval->add_option("--config", config_path, "Scenario JSON overriding the sweep grids");
    eval->add_option("--out", out_path, "Output report CSV")->required();
    eval->add_option("--seeds", seeds, "Repetitions per sweep point");
    eval->add_option("--seed", seed, "Base RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, out_path, sigma_t, sigma_r, seed, truth_path);
        if (calibrate_cmd->parsed())
            return cmd_calibrate(pose_path, out_path, iterations, inlier_mm, min_frac, seed);
        if (eval->parsed()) return cmd_eval(sweep, config_path, out_path, seeds, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
