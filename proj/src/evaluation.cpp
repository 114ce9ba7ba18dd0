#include "carmpivot/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace carmpivot {

namespace {

constexpr std::uint64_t kScenarioSalt = 0x5CE9;
constexpr std::uint64_t kNoiseSalt = 0x9015E;
constexpr std::uint64_t kRansacSalt = 0xA95AC;

std::vector<double> arange(double start, double stop_inclusive, double step) {
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double x = start + i * step;
        if (x > stop_inclusive + 1e-9) break;
        v.push_back(x);
    }
    return v;
}

ScenarioConfig scenario_for(const EvalConfig& cfg, int rep) {
    ScenarioConfig sc = random_scenario(detail::derive_seed(cfg.base_seed, kScenarioSalt,
                                                            static_cast<std::uint64_t>(rep)));
    if (!cfg.c_alphas_deg.empty()) sc.c_alphas_deg = cfg.c_alphas_deg;
    if (!cfg.c_betas_deg.empty()) sc.c_betas_deg = cfg.c_betas_deg;
    if (!cfg.x_alphas_deg.empty()) sc.x_alphas_deg = cfg.x_alphas_deg;
    if (!cfg.x_betas_deg.empty()) sc.x_betas_deg = cfg.x_betas_deg;
    return sc;
}

ExperimentRow run_point(const EvalConfig& cfg, const std::string& variable, double value,
                        int point_index, int rep, const ScenarioConfig& scenario, double sigma_t,
                        double sigma_r) {
    ExperimentRow row;
    row.sweep_variable = variable;
    row.sweep_value = value;
    row.seed = detail::derive_seed(cfg.base_seed, kNoiseSalt,
                                   static_cast<std::uint64_t>(point_index),
                                   static_cast<std::uint64_t>(rep));
    try {
        TrajectoryObservations obs = generate(scenario);
        NoiseConfig noise;
        noise.sigma_translation = sigma_t;
        noise.sigma_rotation = sigma_r;
        noise.rng_seed = row.seed;
        obs = add_noise(obs, noise);

        RansacConfig rc;
        rc.iterations = cfg.ransac_iterations;
        rc.inlier_threshold = cfg.inlier_threshold_mm;
        rc.min_inlier_fraction = cfg.min_inlier_fraction;
        rc.rng_seed = detail::derive_seed(cfg.base_seed, kRansacSalt,
                                          static_cast<std::uint64_t>(point_index),
                                          static_cast<std::uint64_t>(rep));

        const auto t0 = std::chrono::steady_clock::now();
        const CalibrationResult result = calibrate(obs, rc);
        const auto t1 = std::chrono::steady_clock::now();
        row.runtime_s = std::chrono::duration<double>(t1 - t0).count();

        const auto [terr, rerr] = error_metrics(result, scenario);
        row.translation_error_mm = terr;
        row.orientation_error_deg = rerr;
        row.inliers_required = result.diagnostics.inliers_required;
        row.inliers_detected = result.diagnostics.inliers_detected;
        row.mean_inlier_residual_mm = result.diagnostics.mean_inlier_residual_mm;
        row.mean_all_residual_mm = result.diagnostics.mean_all_residual_mm;
    } catch (const InsufficientData&) {
        row.status = "InsufficientData";
    } catch (const NoConsensus&) {
        row.status = "NoConsensus";
    } catch (const DegenerateInput&) {
        row.status = "DegenerateInput";
    } catch (const CalibrationError&) {
        row.status = "CalibrationError";
    }
    if (row.status != "ok") {
        row.translation_error_mm = std::numeric_limits<double>::quiet_NaN();
        row.orientation_error_deg = std::numeric_limits<double>::quiet_NaN();
        row.mean_inlier_residual_mm = std::numeric_limits<double>::quiet_NaN();
        row.mean_all_residual_mm = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

}  // namespace

std::pair<double, double> error_metrics(const CalibrationResult& result,
                                        const ScenarioConfig& truth) {
    const Vec3 true_offset = pivot_offset_in_sensor_frame(truth.r_min, truth.offset);
    const double terr = (result.offset - true_offset).norm();
    const double rerr = rotation_error_deg(truth.world.rotation, result.orientation);
    return {terr, rerr};
}

ExperimentReport run_noise_sweep(std::vector<double> sigmas_t_mm,
                                 std::vector<double> sigmas_r_deg, const EvalConfig& cfg) {
    if (sigmas_t_mm.empty()) sigmas_t_mm = arange(0.0, 5.0, 0.5);
    if (sigmas_r_deg.empty()) sigmas_r_deg = arange(0.0, 0.5, 0.05);

    ExperimentReport report;
    int point = 0;
    for (double sigma : sigmas_t_mm) {
        for (int rep = 0; rep < cfg.seeds_per_point; ++rep)
            report.rows.push_back(run_point(cfg, "sigma_t_mm", sigma, point, rep,
                                            scenario_for(cfg, rep), sigma, 0.0));
        ++point;
    }
    for (double sigma : sigmas_r_deg) {
        for (int rep = 0; rep < cfg.seeds_per_point; ++rep)
            report.rows.push_back(run_point(cfg, "sigma_r_deg", sigma, point, rep,
                                            scenario_for(cfg, rep), 0.0, sigma));
        ++point;
    }
    return report;
}

std::vector<double> c_alpha_subset(int n) {
    const std::vector<double> grid = [] {
        std::vector<double> g;
        for (int a = -90; a <= 90; a += 10) g.push_back(a);
        return g;
    }();
    std::vector<double> chosen;
    for (double a : {-90.0, 0.0, 90.0}) {
        if (static_cast<int>(chosen.size()) >= n) break;
        chosen.push_back(a);
    }
    // Fill greedily with the grid value farthest from everything chosen.
    while (static_cast<int>(chosen.size()) < n) {
        double best = 0.0, best_dist = -1.0;
        for (double a : grid) {
            double dist = std::numeric_limits<double>::infinity();
            for (double c : chosen) dist = std::min(dist, std::abs(a - c));
            if (dist > best_dist + 1e-12) {
                best_dist = dist;
                best = a;
            }
        }
        if (best_dist <= 0.0) break;  // grid exhausted
        chosen.push_back(best);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<double> x_beta_grid(int n) {
    std::vector<double> betas;
    if (n <= 1) {
        betas.push_back(0.0);
        return betas;
    }
    for (int i = 0; i < n; ++i) betas.push_back(160.0 * i / (n - 1));
    return betas;
}

ExperimentReport run_trajectory_sweep(std::vector<int> n_c_sets, std::vector<int> n_x_sets,
                                      const EvalConfig& cfg) {
    if (n_c_sets.empty())
        for (int n = 3; n <= 13; ++n) n_c_sets.push_back(n);
    if (n_x_sets.empty())
        for (int n = 1; n <= 13; ++n) n_x_sets.push_back(n);

    constexpr double kSigmaT = 1.0, kSigmaR = 0.1;
    ExperimentReport report;
    int point = 0;
    for (int n : n_c_sets) {
        for (int rep = 0; rep < cfg.seeds_per_point; ++rep) {
            ScenarioConfig sc = scenario_for(cfg, rep);
            sc.c_alphas_deg = c_alpha_subset(n);
            report.rows.push_back(
                run_point(cfg, "n_c_sets", n, point, rep, sc, kSigmaT, kSigmaR));
        }
        ++point;
    }
    for (int n : n_x_sets) {
        for (int rep = 0; rep < cfg.seeds_per_point; ++rep) {
            ScenarioConfig sc = scenario_for(cfg, rep);
            sc.x_betas_deg = x_beta_grid(n);
            report.rows.push_back(
                run_point(cfg, "n_x_sets", n, point, rep, sc, kSigmaT, kSigmaR));
        }
        ++point;
    }
    return report;
}

ExperimentReport run_density_sweep(std::vector<int> decimation_factors, const EvalConfig& cfg) {
    if (decimation_factors.empty())
        decimation_factors = {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16, 20, 24, 28, 32, 40, 48, 56};

    constexpr double kSigmaT = 1.0, kSigmaR = 0.1;
    ExperimentReport report;
    int point = 0;
    for (int k : decimation_factors) {
        for (int rep = 0; rep < cfg.seeds_per_point; ++rep) {
            ScenarioConfig sc = scenario_for(cfg, rep);
            // 4x-dense base grid, strided per trajectory.
            sc.c_betas_deg.clear();
            for (int i = 0; i * 0.25 <= 359.75 + 1e-9; i += k) sc.c_betas_deg.push_back(i * 0.25);
            sc.x_alphas_deg.clear();
            for (int i = 0; i * 0.25 <= 359.75 + 1e-9; i += k) sc.x_alphas_deg.push_back(i * 0.25);
            const double total = static_cast<double>(sc.total_poses());
            report.rows.push_back(
                run_point(cfg, "total_poses", total, point, rep, sc, kSigmaT, kSigmaR));
        }
        ++point;
    }

    // Trend of the translation error per decade of pose count.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& row : report.rows) {
        if (row.status != "ok") continue;
        const double x = std::log10(row.sweep_value);
        sx += x;
        sy += row.translation_error_mm;
        sxx += x * x;
        sxy += x * row.translation_error_mm;
        ++n;
    }
    if (n >= 2 && sxx * n - sx * sx > 1e-12)
        report.trend_slope_per_decade = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return report;
}

std::vector<SweepPointSummary> ExperimentReport::summaries() const {
    std::vector<SweepPointSummary> out;
    for (const auto& row : rows) {
        SweepPointSummary* s = nullptr;
        for (auto& existing : out)
            if (existing.sweep_variable == row.sweep_variable &&
                existing.sweep_value == row.sweep_value)
                s = &existing;
        if (!s) {
            out.push_back({row.sweep_variable, row.sweep_value, 0.0, 0.0, 0.0, 0, 0});
            s = &out.back();
        }
        ++s->runs;
        if (row.status != "ok") {
            ++s->failed;
            continue;
        }
        s->mean_translation_error_mm += row.translation_error_mm;
        s->mean_orientation_error_deg += row.orientation_error_deg;
        s->mean_detected_inliers += row.inliers_detected;
    }
    for (auto& s : out) {
        const int ok = s.runs - s.failed;
        if (ok > 0) {
            s.mean_translation_error_mm /= ok;
            s.mean_orientation_error_deg /= ok;
            s.mean_detected_inliers /= ok;
        }
    }
    return out;
}

void ExperimentReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot open report file: " + path);
    out << "sweep_variable,sweep_value,translation_error_mm,orientation_error_deg,"
           "inliers_required,inliers_detected,mean_inlier_residual_mm,mean_all_residual_mm,"
           "runtime_s,seed,status\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%.6g,%llu,%s\n",
                      r.sweep_variable.c_str(), r.sweep_value, r.translation_error_mm,
                      r.orientation_error_deg, r.inliers_required, r.inliers_detected,
                      r.mean_inlier_residual_mm, r.mean_all_residual_mm, r.runtime_s,
                      static_cast<unsigned long long>(r.seed), r.status.c_str());
        out << buf;
    }
}

void ExperimentReport::write_summary_json(const std::string& path) const {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& s : summaries()) {
        j["points"].push_back({{"sweep_variable", s.sweep_variable},
                               {"sweep_value", s.sweep_value},
                               {"mean_translation_error_mm", s.mean_translation_error_mm},
                               {"mean_orientation_error_deg", s.mean_orientation_error_deg},
                               {"runs", s.runs},
                               {"failed", s.failed}});
    }
    j["trend_slope_per_decade"] = trend_slope_per_decade;
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot open summary file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace carmpivot
