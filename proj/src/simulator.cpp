#include "carmpivot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "carmpivot/fitting.hpp"

namespace carmpivot {

namespace {

std::vector<double> arange(double start, double stop_inclusive, double step) {
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double x = start + i * step;
        if (x > stop_inclusive + 1e-9) break;
        v.push_back(x);
    }
    return v;
}

bool is_tagged_alpha(double alpha_deg, double tag) { return std::abs(alpha_deg - tag) < 1e-9; }

}  // namespace

std::size_t TrajectoryObservations::total_poses() const {
    std::size_t n = 0;
    for (const auto& s : x_sets) n += s.poses.size();
    for (const auto& s : c_sets) n += s.poses.size();
    return n;
}

ScenarioConfig ScenarioConfig::with_default_grids() {
    ScenarioConfig cfg;
    cfg.c_alphas_deg = arange(-90.0, 90.0, 10.0);   // 19 sweeps
    cfg.c_betas_deg = arange(0.0, 359.0, 1.0);      // 360 poses each
    cfg.x_alphas_deg = arange(0.0, 359.0, 1.0);     // 360 poses each
    cfg.x_betas_deg = arange(0.0, 160.0, 20.0);     // 9 sweeps
    return cfg;
}

TrajectoryObservations generate(const ScenarioConfig& cfg) {
    TrajectoryObservations obs;

    obs.c_sets.reserve(cfg.c_alphas_deg.size());
    for (std::size_t j = 0; j < cfg.c_alphas_deg.size(); ++j) {
        const double alpha_deg = cfg.c_alphas_deg[j];
        TrajectorySet set;
        set.axis_kind = AxisKind::CArmAxis;
        set.order_index = static_cast<int>(j);
        set.id = "c" + std::to_string(j);
        for (double tag : {-90.0, 0.0, 90.0})
            if (is_tagged_alpha(alpha_deg, tag)) set.alpha_tag_deg = tag;
        set.poses.reserve(cfg.c_betas_deg.size());
        for (double beta_deg : cfg.c_betas_deg)
            set.poses.push_back(pose_of_sensor(deg2rad(alpha_deg), deg2rad(beta_deg), cfg.r_min,
                                               cfg.r_maj, cfg.offset, cfg.world));
        obs.c_sets.push_back(std::move(set));
    }

    // The acquisition protocol orders x-axis sweeps by ascending position of
    // their circle plane along the torus axis; that order carries the axis
    // direction, so reproduce it here.
    const double b = std::hypot(cfg.r_min + cfg.offset.z, cfg.offset.x);
    const double gamma = std::atan2(cfg.offset.x, cfg.r_min + cfg.offset.z);
    std::vector<std::size_t> order(cfg.x_betas_deg.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t bdx) {
        return b * std::sin(deg2rad(cfg.x_betas_deg[a]) + gamma) <
               b * std::sin(deg2rad(cfg.x_betas_deg[bdx]) + gamma);
    });

    obs.x_sets.reserve(cfg.x_betas_deg.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const double beta_deg = cfg.x_betas_deg[order[rank]];
        TrajectorySet set;
        set.axis_kind = AxisKind::XAxis;
        set.order_index = static_cast<int>(rank);
        set.id = "x" + std::to_string(rank);
        set.poses.reserve(cfg.x_alphas_deg.size());
        for (double alpha_deg : cfg.x_alphas_deg)
            set.poses.push_back(pose_of_sensor(deg2rad(alpha_deg), deg2rad(beta_deg), cfg.r_min,
                                               cfg.r_maj, cfg.offset, cfg.world));
        obs.x_sets.push_back(std::move(set));
    }
    return obs;
}

TrajectoryObservations add_noise(const TrajectoryObservations& obs, const NoiseConfig& noise) {
    if (noise.sigma_translation == 0.0 && noise.sigma_rotation == 0.0) return obs;

    TrajectoryObservations out = obs;
    const double sigma_rot_rad = deg2rad(noise.sigma_rotation);

    auto perturb_set = [&](TrajectorySet& set, std::uint64_t set_index) {
        for (std::size_t i = 0; i < set.poses.size(); ++i) {
            std::mt19937_64 rng(detail::derive_seed(noise.rng_seed, set_index, i));
            std::normal_distribution<double> gauss(0.0, 1.0);
            Pose& pose = set.poses[i];
            if (noise.sigma_translation > 0.0) {
                pose.translation.x() += noise.sigma_translation * gauss(rng);
                pose.translation.y() += noise.sigma_translation * gauss(rng);
                pose.translation.z() += noise.sigma_translation * gauss(rng);
            }
            if (noise.sigma_rotation > 0.0) {
                const double ex = sigma_rot_rad * gauss(rng);
                const double ey = sigma_rot_rad * gauss(rng);
                const double ez = sigma_rot_rad * gauss(rng);
                Mat3 delta;
                if (noise.rotation_model == RotationNoiseModel::EulerXYZ) {
                    delta = rot_z(ez) * rot_y(ey) * rot_x(ex);
                } else {
                    const Vec3 w(ex, ey, ez);
                    const double angle = w.norm();
                    delta = angle > 0.0
                                ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                                : Mat3::Identity();
                }
                pose.rotation = pose.rotation * delta;
            }
        }
    };

    // Set indices span c-sets then x-sets so streams never collide.
    std::uint64_t set_index = 0;
    for (auto& set : out.c_sets) perturb_set(set, set_index++);
    for (auto& set : out.x_sets) perturb_set(set, set_index++);
    return out;
}

ScenarioConfig random_scenario(std::uint64_t rng_seed) {
    std::mt19937_64 rng(detail::derive_seed(rng_seed, 0x5C3A));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ScenarioConfig cfg = ScenarioConfig::with_default_grids();
    cfg.r_min = 600.0 + 200.0 * unit(rng);
    cfg.r_maj = 400.0 * (1.0 - unit(rng));  // (0, 400]
    cfg.offset.x = -200.0 + 400.0 * unit(rng);
    cfg.offset.y = -200.0 + 400.0 * unit(rng);
    cfg.offset.z = -200.0 + 400.0 * unit(rng);
    cfg.world.translation =
        Vec3(-1000.0 + 2000.0 * unit(rng), -1000.0 + 2000.0 * unit(rng),
             -1000.0 + 2000.0 * unit(rng));

    // Normalized 4-Gaussian quaternion is uniform over rotations.
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    cfg.world.rotation = q.toRotationMatrix();
    return cfg;
}

}  // namespace carmpivot
