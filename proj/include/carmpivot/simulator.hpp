#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carmpivot/geometry.hpp"

namespace carmpivot {

enum class AxisKind { CArmAxis, XAxis };

/// One observed sweep: poses recorded while rotating about a single axis.
struct TrajectorySet {
    std::string id;
    AxisKind axis_kind = AxisKind::CArmAxis;
    std::optional<double> alpha_tag_deg;  // set for the -90/0/+90 c-axis sweeps
    int order_index = 0;                  // x-axis sets: ascending along the axis
    std::vector<Pose> poses;
};

/// Labeled observation bundle fed to the calibration pipeline.
struct TrajectoryObservations {
    std::vector<TrajectorySet> x_sets;  // sorted by order_index, ascending along the axis
    std::vector<TrajectorySet> c_sets;

    std::size_t total_poses() const;
};

/// Ground-truth scenario: torus dimensions, pose of the torus frame in the
/// tracker world, sensor mounting offset, and the sweep grids.
struct ScenarioConfig {
    double r_min = 700.0;  // mm
    double r_maj = 300.0;  // mm
    Pose world;            // torus frame in tracker coordinates; axis = rotation.col(0)
    SensorOffset offset;
    std::vector<double> c_alphas_deg;  // one c-axis set per value
    std::vector<double> c_betas_deg;   // poses within each c-axis set
    std::vector<double> x_alphas_deg;  // poses within each x-axis set
    std::vector<double> x_betas_deg;   // one x-axis set per value

    static ScenarioConfig with_default_grids();
    std::size_t total_poses() const {
        return c_alphas_deg.size() * c_betas_deg.size() + x_alphas_deg.size() * x_betas_deg.size();
    }
};

enum class RotationNoiseModel { EulerXYZ, AxisAngle };

struct NoiseConfig {
    double sigma_translation = 0.0;  // mm, per component
    double sigma_rotation = 0.0;     // degrees, per perturbation angle
    std::uint64_t rng_seed = 0;
    RotationNoiseModel rotation_model = RotationNoiseModel::EulerXYZ;
};

/// Clean observation bundle for the scenario. c-axis sets carry alpha tags at
/// -90/0/+90 degrees when the grid contains them; x-axis sets are emitted in
/// ascending order of their plane position along the torus axis.
TrajectoryObservations generate(const ScenarioConfig& cfg);

/// Adds i.i.d. Gaussian noise to every pose translation component and
/// composes each rotation with a random perturbation. Zero sigmas are exact
/// no-ops per channel. RNG streams are derived per (set, pose) index.
TrajectoryObservations add_noise(const TrajectoryObservations& obs, const NoiseConfig& noise);

/// Random scenario with default grids: r_min in [600, 800] mm, r_maj in
/// (0, 400] mm, offset components in [-200, 200] mm, world translation in
/// [-1000, 1000]^3 mm, world rotation uniform over rotations.
ScenarioConfig random_scenario(std::uint64_t rng_seed);

}  // namespace carmpivot
