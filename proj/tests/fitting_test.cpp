#include "carmpivot/fitting.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

namespace carmpivot {
namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    return Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng)).normalized()
        .toRotationMatrix();
}

std::vector<Vec3> circle_samples(const Vec3& center, const Vec3& normal, double radius, int n,
                                 double noise_sigma = 0.0, std::uint64_t seed = 0) {
    Vec3 e1, e2;
    plane_basis(normal.normalized(), e1, e2);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double a = 2 * kPi * i / n;
        Vec3 p = center + radius * (std::cos(a) * e1 + std::sin(a) * e2);
        if (noise_sigma > 0) p += Vec3(gauss(rng), gauss(rng), gauss(rng));
        pts.push_back(p);
    }
    return pts;
}

TEST(FitPlane, CoplanarSquare) {
    const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const Plane p = fit_plane(pts);
    EXPECT_NEAR(std::abs(p.normal.z()), 1.0, 1e-12);
    EXPECT_NEAR(p.point.z(), 0.0, 1e-12);
}

TEST(FitPlane, RandomPlaneZeroResidual) {
    // Points built from two in-plane basis vectors of x + y + z = 5.
    const Vec3 n = Vec3(1, 1, 1).normalized();
    const Vec3 origin = Vec3(5, 0, 0);
    Vec3 e1, e2;
    plane_basis(n, e1, e2);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10, 10);
    std::vector<Vec3> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(origin + u(rng) * e1 + u(rng) * e2);
    const Plane p = fit_plane(pts);
    double worst = 0;
    for (const auto& q : pts) worst = std::max(worst, p.distance(q));
    EXPECT_LT(worst, 1e-9);
    EXPECT_NEAR(std::abs(p.normal.dot(n)), 1.0, 1e-12);
}

TEST(FitPlane, ThreePointsExact) {
    const std::vector<Vec3> pts = {{0, 0, 1}, {2, 0, 3}, {0, 5, -1}};
    const Plane p = fit_plane(pts);
    for (const auto& q : pts) EXPECT_LT(p.distance(q), 1e-12);
}

TEST(FitPlane, DegenerateInputs) {
    EXPECT_THROW(fit_plane({{0, 0, 0}, {1, 1, 1}}), DegenerateInput);
    EXPECT_THROW(fit_plane({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}}), DegenerateInput);
}

TEST(FitCircle2D, UnitCircleFromThreePoints) {
    const Circle2D c = fit_circle_2d({{1, 0}, {0, 1}, {-1, 0}});
    EXPECT_LT(c.center.norm(), 1e-12);
    EXPECT_NEAR(c.radius, 1.0, 1e-12);
}

TEST(FitCircle2D, AxisAlignedSquarePoints) {
    const Circle2D c = fit_circle_2d({{3, 2}, {5, 4}, {3, 6}, {1, 4}});
    EXPECT_LT((c.center - Vec2(3, 4)).norm(), 1e-12);
    EXPECT_NEAR(c.radius, 2.0, 1e-12);
}

TEST(FitCircle2D, NoiseFreeParametricSamples) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-500, 500);
    std::uniform_real_distribution<double> rad(5, 400);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec2 center(u(rng), u(rng));
        const double radius = rad(rng);
        std::vector<Vec2> pts;
        for (int i = 0; i < 50; ++i) {
            const double a = 2 * kPi * i / 50;
            pts.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a));
        }
        const Circle2D c = fit_circle_2d(pts);
        EXPECT_LT((c.center - center).norm(), 1e-9);
        EXPECT_NEAR(c.radius, radius, 1e-9);
    }
}

TEST(FitCircle2D, CollinearThrows) {
    EXPECT_THROW(fit_circle_2d({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DegenerateInput);
}

TEST(FitCircle3D, UnitCircleInPlane) {
    const Circle3D c = fit_circle_3d(circle_samples(Vec3::Zero(), Vec3::UnitZ(), 1.0, 40));
    EXPECT_LT(c.center.norm(), 1e-9);
    EXPECT_NEAR(c.radius, 1.0, 1e-9);
    EXPECT_NEAR(std::abs(c.normal.z()), 1.0, 1e-9);
}

TEST(FitCircle3D, RecoversGeneratorExactly) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-800, 800);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 center(u(rng), u(rng), u(rng));
        const Vec3 normal = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const double radius = 20 + std::abs(u(rng));
        const Circle3D c = fit_circle_3d(circle_samples(center, normal, radius, 36));
        EXPECT_LT((c.center - center).norm(), 1e-8);
        EXPECT_NEAR(c.radius, radius, 1e-8);
        EXPECT_NEAR(std::abs(c.normal.dot(normal)), 1.0, 1e-11);
    }
}

TEST(FitCircle3DFixedNormal, ExactRecoveryAndConstraintCost) {
    const Vec3 normal = Vec3(0.2, -0.3, 0.93).normalized();
    const Vec3 center(40, -30, 120);
    const auto pts = circle_samples(center, normal, 75, 48, 0.2, 77);

    const Circle3D exact = fit_circle_3d_fixed_normal(circle_samples(center, normal, 75, 48), normal);
    EXPECT_LT((exact.center - center).norm(), 1e-9);
    EXPECT_NEAR(exact.radius, 75.0, 1e-9);
    EXPECT_LT((exact.normal - normal).norm(), 0.0 + 1e-15);  // returned normal is exactly n

    // Constraining to a tilted normal can never beat the unconstrained fit.
    const Vec3 tilted =
        (Eigen::AngleAxisd(deg2rad(5.0), Vec3::UnitX()) * normal).normalized();
    const Circle3D free_fit = fit_circle_3d(pts);
    const Circle3D constrained = fit_circle_3d_fixed_normal(pts, tilted);
    auto rms = [&](const Circle3D& c) {
        double ss = 0;
        for (const auto& p : pts) ss += c.distance(p) * c.distance(p);
        return std::sqrt(ss / pts.size());
    };
    EXPECT_GT(rms(constrained), 0.0);
    EXPECT_LE(rms(free_fit), rms(constrained) + 1e-12);
}

TEST(OrientNormal, FlipsKeepsThrows) {
    EXPECT_LT((orient_normal(Vec3(0, 0, 1), Vec3(0, 0, -3)) - Vec3(0, 0, -1)).norm(), 1e-15);
    EXPECT_LT((orient_normal(Vec3(0, 0, 1), Vec3(0, 0, 2)) - Vec3(0, 0, 1)).norm(), 1e-15);
    EXPECT_THROW(orient_normal(Vec3(0, 0, 1), Vec3(1, 0, 0)), AmbiguousOrientation);
}

TEST(FitLinePairOrthogonal, AxisAlignedSets) {
    std::vector<Vec2> a, b;
    for (int i = -5; i <= 5; ++i) {
        a.emplace_back(i, 0.0);
        b.emplace_back(0.0, i);
    }
    const LinePair lp = fit_line_pair_orthogonal(a, b);
    EXPECT_NEAR(std::abs(lp.dir_a.x()), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(lp.dir_b.y()), 1.0, 1e-12);
    EXPECT_NEAR(lp.dir_a.dot(lp.dir_b), 0.0, 1e-15);
}

TEST(FitLinePairOrthogonal, RotationEquivariance) {
    const double theta = deg2rad(30.0);
    const Eigen::Rotation2Dd rot(theta);
    std::vector<Vec2> a, b;
    for (int i = -5; i <= 5; ++i) {
        a.push_back(rot * Vec2(i, 0.0));
        b.push_back(rot * Vec2(0.0, i));
    }
    const LinePair lp = fit_line_pair_orthogonal(a, b);
    const Vec2 want_a = rot * Vec2(1, 0);
    EXPECT_NEAR(std::abs(lp.dir_a.dot(want_a)), 1.0, 1e-12);
    EXPECT_NEAR(lp.dir_a.dot(lp.dir_b), 0.0, 1e-15);
}

TEST(FitLinePairOrthogonal, NoisyMonteCarlo) {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::uniform_real_distribution<double> along(-100, 100);
    const double theta = deg2rad(20.0);
    const Eigen::Rotation2Dd rot(theta);
    std::vector<Vec2> a, b;
    for (int i = 0; i < 400; ++i) {
        a.push_back(rot * Vec2(along(rng), noise(rng)));
        b.push_back(rot * Vec2(noise(rng), along(rng)));
    }
    const LinePair lp = fit_line_pair_orthogonal(a, b);
    const Vec2 want = rot * Vec2(1, 0);
    const double angle = rad2deg(std::acos(std::min(1.0, std::abs(lp.dir_a.dot(want)))));
    EXPECT_LT(angle, 1.0);
}

TEST(FitLinePairOrthogonal, SingleRepeatedPointThrows) {
    const std::vector<Vec2> a = {{1, 1}, {1, 1}, {1, 1}};
    const std::vector<Vec2> b = {{0, 0}, {1, 0}, {2, 0}};
    EXPECT_THROW(fit_line_pair_orthogonal(a, b), DegenerateInput);
    EXPECT_THROW(fit_line_pair_orthogonal(b, {{2, 2}}), DegenerateInput);
}

TEST(FitSphere, AxisPointsOfUnitSphere) {
    const std::vector<Vec3> pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                   {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    const Sphere s = fit_sphere(pts);
    EXPECT_LT(s.center.norm(), 1e-12);
    EXPECT_NEAR(s.radius, 1.0, 1e-12);
}

TEST(FitSphere, TorusWithZeroMajorRadius) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j)
            pts.push_back(torus_point(2 * kPi * i / 12, 2 * kPi * j / 12 + 0.1, 700, 0));
    const Sphere s = fit_sphere(pts);
    EXPECT_LT(s.center.norm(), 1e-9);
    EXPECT_NEAR(s.radius, 700.0, 1e-9);
}

TEST(FitSphere, NoiseFreeRandomSpheres) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-500, 500);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 center(u(rng), u(rng), u(rng));
        const double radius = 30 + std::abs(u(rng));
        std::vector<Vec3> pts;
        for (int i = 0; i < 60; ++i) {
            const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
            pts.push_back(center + radius * dir);
        }
        const Sphere s = fit_sphere(pts);
        EXPECT_LT((s.center - center).norm(), 1e-9);
        EXPECT_NEAR(s.radius, radius, 1e-9);
    }
}

TEST(FitSphere, CoplanarThrows) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 10; ++i)
        pts.emplace_back(std::cos(0.6 * i), std::sin(0.6 * i), 2.0);
    EXPECT_THROW(fit_sphere(pts), DegenerateInput);
}

TEST(PointLineDistance, KnownAndBruteForce) {
    EXPECT_NEAR(point_line_distance({0, 1, 0}, {0, 0, 0}, {1, 0, 0}), 1.0, 1e-15);
    EXPECT_NEAR(point_line_distance({5, 0, 0}, {0, 0, 0}, {1, 0, 0}), 0.0, 1e-15);

    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-100, 100);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 p(u(rng), u(rng), u(rng));
        const Vec3 q(u(rng), u(rng), u(rng));
        const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        double brute = 1e300;
        for (double s = -500; s <= 500; s += 0.01)
            brute = std::min(brute, (p - (q + s * dir)).norm());
        EXPECT_NEAR(point_line_distance(p, q, dir), brute, 1e-4);
    }
}

// ---------------------------------------------------------------------------
// RANSAC
// ---------------------------------------------------------------------------

TEST(Ransac, NoiseFreeCircleAllInliers) {
    const auto pts = circle_samples(Vec3(10, 20, 30), Vec3(0, 0, 1), 50, 60);
    RansacConfig cfg;
    cfg.rng_seed = 99;
    const auto res = ransac_fit_circle3d(pts, cfg);
    EXPECT_EQ(res.inlier_indices.size(), pts.size());
    EXPECT_LT((res.model.center - Vec3(10, 20, 30)).norm(), 1e-9);
    EXPECT_NEAR(res.model.radius, 50.0, 1e-9);
}

TEST(Ransac, GrossOutliersExcluded) {
    auto pts = circle_samples(Vec3(10, 20, 30), Vec3(0.3, 0.2, 0.9).normalized(), 50, 70);
    const Circle3D clean = fit_circle_3d(pts);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-400, 400);
    const std::size_t n_clean = pts.size();
    for (int i = 0; i < 30; ++i) pts.push_back(Vec3(u(rng), u(rng), u(rng)) + Vec3(0, 0, 500));
    RansacConfig cfg;
    cfg.rng_seed = 5;
    const auto res = ransac_fit_circle3d(pts, cfg);
    EXPECT_EQ(res.inlier_indices.size(), n_clean);
    for (int idx : res.inlier_indices) EXPECT_LT(idx, static_cast<int>(n_clean));
    EXPECT_LT((res.model.center - clean.center).norm(), 1e-6);
    EXPECT_NEAR(res.model.radius, clean.radius, 1e-6);
}

TEST(Ransac, DeterministicForFixedSeed) {
    auto pts = circle_samples(Vec3(1, 2, 3), Vec3(0, 1, 0), 80, 50, 0.5, 3);
    RansacConfig cfg;
    cfg.rng_seed = 1234;
    const auto a = ransac_fit_circle3d(pts, cfg);
    const auto b = ransac_fit_circle3d(pts, cfg);
    EXPECT_EQ(a.inlier_indices, b.inlier_indices);
    EXPECT_EQ(std::memcmp(a.model.center.data(), b.model.center.data(), 3 * sizeof(double)), 0);
    EXPECT_EQ(a.model.radius, b.model.radius);
}

TEST(Ransac, InfiniteThresholdReducesToLeastSquares) {
    const auto pts = circle_samples(Vec3(5, -3, 8), Vec3(0.1, 0.9, 0.2).normalized(), 60, 45, 1.0, 21);
    RansacConfig cfg;
    cfg.inlier_threshold = 1e12;
    cfg.rng_seed = 7;
    const auto res = ransac_fit_circle3d(pts, cfg);
    const Circle3D plain = fit_circle_3d(pts);
    EXPECT_EQ(res.inlier_indices.size(), pts.size());
    EXPECT_LT((res.model.center - plain.center).norm(), 1e-12);
    EXPECT_NEAR(res.model.radius, plain.radius, 1e-12);
}

TEST(Ransac, NoConsensusOnScatter) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1000, 1000);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    RansacConfig cfg;
    cfg.inlier_threshold = 0.01;
    cfg.min_inlier_fraction = 0.5;
    cfg.rng_seed = 11;
    EXPECT_THROW(ransac_fit_circle3d(pts, cfg), NoConsensus);
}

TEST(Ransac, PlaneAndSphereDrivers) {
    // Plane with outliers.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-50, 50);
    std::vector<Vec3> plane_pts;
    for (int i = 0; i < 80; ++i) plane_pts.emplace_back(u(rng), u(rng), 7.0);
    for (int i = 0; i < 20; ++i) plane_pts.emplace_back(u(rng), u(rng), 7.0 + 100 + i);
    RansacConfig cfg;
    cfg.rng_seed = 17;
    const auto plane = ransac_fit_plane(plane_pts, cfg);
    EXPECT_EQ(plane.inlier_indices.size(), 80u);
    EXPECT_NEAR(std::abs(plane.model.normal.z()), 1.0, 1e-9);

    // Sphere with outliers.
    std::normal_distribution<double> gauss;
    std::vector<Vec3> sphere_pts;
    for (int i = 0; i < 100; ++i) {
        const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        sphere_pts.push_back(Vec3(4, 5, 6) + 90.0 * dir);
    }
    for (int i = 0; i < 25; ++i) sphere_pts.push_back(Vec3(400 + u(rng), u(rng), u(rng)));
    const auto sphere = ransac_fit_sphere(sphere_pts, cfg);
    EXPECT_EQ(sphere.inlier_indices.size(), 100u);
    EXPECT_LT((sphere.model.center - Vec3(4, 5, 6)).norm(), 1e-6);
}

TEST(RigidCovariance, FitsTransformWithTheData) {
    std::mt19937_64 rng(44);
    const Mat3 r = random_rotation(rng);
    const Vec3 shift(120, -40, 310);
    const Pose w{r, shift};

    const Vec3 normal = Vec3(0.4, 0.1, 0.9).normalized();
    const auto pts = circle_samples(Vec3(30, -20, 55), normal, 66, 40);
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(w.apply(p));

    const Circle3D c0 = fit_circle_3d(pts);
    const Circle3D c1 = fit_circle_3d(moved);
    EXPECT_LT((c1.center - w.apply(c0.center)).norm(), 1e-9);
    EXPECT_NEAR(std::abs(c1.normal.dot(r * c0.normal)), 1.0, 1e-12);
    EXPECT_NEAR(c1.radius, c0.radius, 1e-9);

    const Plane p0 = fit_plane(pts);
    const Plane p1 = fit_plane(moved);
    EXPECT_LT((p1.point - w.apply(p0.point)).norm(), 1e-9);
    EXPECT_NEAR(std::abs(p1.normal.dot(r * p0.normal)), 1.0, 1e-12);

    std::normal_distribution<double> gauss;
    std::vector<Vec3> sphere_pts;
    for (int i = 0; i < 50; ++i)
        sphere_pts.push_back(Vec3(9, 8, 7) +
                             120.0 * Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized());
    std::vector<Vec3> sphere_moved;
    for (const auto& p : sphere_pts) sphere_moved.push_back(w.apply(p));
    const Sphere s0 = fit_sphere(sphere_pts);
    const Sphere s1 = fit_sphere(sphere_moved);
    EXPECT_LT((s1.center - w.apply(s0.center)).norm(), 1e-9);
    EXPECT_NEAR(s1.radius, s0.radius, 1e-9);
}

}  // namespace
}  // namespace carmpivot
