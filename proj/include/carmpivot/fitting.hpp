#pragma once

#include <cstdint>
#include <vector>

#include "carmpivot/geometry.hpp"

namespace carmpivot {

/// Least-squares plane through a point cloud.
struct Plane {
    Vec3 point = Vec3::Zero();   // centroid of the fitted points, mm
    Vec3 normal = Vec3::UnitZ(); // unit, sign not canonical

    double distance(const Vec3& p) const { return std::abs((p - point).dot(normal)); }
};

/// Circle in 3-D: center, unit plane normal (sign not canonical), radius.
struct Circle3D {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double radius = 0.0;

    /// Euclidean distance from p to the circle (curve, not disk).
    double distance(const Vec3& p) const;
};

struct Circle2D {
    Vec2 center = Vec2::Zero();
    double radius = 0.0;
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;

    double distance(const Vec3& p) const { return std::abs((p - center).norm() - radius); }
};

/// Orthogonal pair of 2-D line directions (unit), one per input set.
struct LinePair {
    Vec2 dir_a = Vec2::UnitX();
    Vec2 dir_b = Vec2::UnitY();
};

struct RansacConfig {
    int iterations = 500;
    double inlier_threshold = 1.0;     // mm
    double min_inlier_fraction = 0.05; // of the input size; consensus gate
    std::uint64_t rng_seed = 0;
};

template <typename Model>
struct RansacResult {
    Model model;
    std::vector<int> inlier_indices;
    double inlier_rms = 0.0;
};

/// Plane minimizing the sum of squared point-plane distances; the normal is
/// the smallest principal axis of the point covariance.
/// Throws DegenerateInput for fewer than 3 points or (near-)collinear input.
Plane fit_plane(const std::vector<Vec3>& points);

/// Algebraic least-squares circle (x^2 + y^2 + Dx + Ey + F = 0).
/// Throws DegenerateInput on collinear input.
Circle2D fit_circle_2d(const std::vector<Vec2>& points);

/// fit_plane + in-plane algebraic circle, lifted back to 3-D.
Circle3D fit_circle_3d(const std::vector<Vec3>& points);

/// In-plane circle with the plane orientation fixed to n; the plane passes
/// through the centroid of the points, and the returned normal is exactly n.
Circle3D fit_circle_3d_fixed_normal(const std::vector<Vec3>& points, const Vec3& n);

/// n or -n, whichever has non-negative dot product with reference_direction.
/// Throws AmbiguousOrientation if they are (numerically) perpendicular.
Vec3 orient_normal(const Vec3& n, const Vec3& reference_direction);

/// Two lines, one per set, through each set's centroid, constrained to be
/// exactly orthogonal, minimizing the total squared perpendicular residual.
LinePair fit_line_pair_orthogonal(const std::vector<Vec2>& points_a,
                                  const std::vector<Vec2>& points_b);

/// Algebraic least-squares sphere. Throws DegenerateInput on coplanar input.
Sphere fit_sphere(const std::vector<Vec3>& points);

/// Perpendicular distance from p to the line through line_point along the
/// unit direction line_dir.
double point_line_distance(const Vec3& p, const Vec3& line_point, const Vec3& line_dir);

/// RANSAC drivers. Hypotheses are drawn from minimal samples (plane/circle 3,
/// sphere 4) with per-iteration seed-derived RNG streams; degenerate samples
/// are redrawn and count against the iteration budget. The best model by
/// inlier count (ties by lower inlier RMS) is refit on its inliers.
/// Throws NoConsensus when the best count is below
/// max(minimal sample, min_inlier_fraction * N).
RansacResult<Plane> ransac_fit_plane(const std::vector<Vec3>& points, const RansacConfig& cfg);
RansacResult<Circle3D> ransac_fit_circle3d(const std::vector<Vec3>& points,
                                           const RansacConfig& cfg);
RansacResult<Circle3D> ransac_fit_circle3d_fixed_normal(const std::vector<Vec3>& points,
                                                        const Vec3& n, const RansacConfig& cfg);
RansacResult<Sphere> ransac_fit_sphere(const std::vector<Vec3>& points, const RansacConfig& cfg);

namespace detail {

/// SplitMix64 step; used to derive independent deterministic RNG streams.
std::uint64_t splitmix64(std::uint64_t& state);
/// Stable seed derivation for sub-streams (stage, set, iteration, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace detail

}  // namespace carmpivot
