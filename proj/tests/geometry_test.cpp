#include "carmpivot/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "carmpivot/fitting.hpp"

namespace carmpivot {
namespace {

// Independent route: the two-rotation matrix construction of the torus locus.
Vec3 torus_point_by_matrices(double alpha, double beta, double r_min, double r_maj) {
    return rot_x(alpha) * rot_y(beta) * Vec3(0, 0, r_min) + rot_x(alpha) * Vec3(0, 0, r_maj);
}

Vec3 sensor_point_by_matrices(double alpha, double beta, double r_min, double r_maj,
                              const SensorOffset& t) {
    return rot_x(alpha) * rot_y(beta) * Vec3(t.x, t.y, r_min + t.z) +
           rot_x(alpha) * Vec3(0, 0, r_maj);
}

TEST(TorusPoint, KnownValues) {
    EXPECT_LT((torus_point(0, 0, 700, 300) - Vec3(0, 0, 1000)).norm(), 1e-12);
    EXPECT_LT((torus_point(kPi / 2, 0, 700, 300) - Vec3(0, -1000, 0)).norm(), 1e-9);
}

TEST(TorusPoint, MatchesMatrixConstruction) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> angle(-2 * kPi, 2 * kPi);
    for (int i = 0; i < 1000; ++i) {
        const double a = angle(rng), b = angle(rng);
        const Vec3 closed = torus_point(a, b, 700, 300);
        const Vec3 matrix = torus_point_by_matrices(a, b, 700, 300);
        EXPECT_LT((closed - matrix).norm(), 1e-12);
    }
}

TEST(TorusPoint, ZeroMajorRadiusDegeneratesToSphere) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p = torus_point(angle(rng), angle(rng), 650, 0);
        EXPECT_NEAR(p.norm(), 650.0, 1e-9);
    }
}

TEST(SensorPoint, ZeroOffsetEqualsTorusPoint) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const double a = angle(rng), b = angle(rng);
        EXPECT_LT((sensor_point(a, b, 700, 300, {}) - torus_point(a, b, 700, 300)).norm(), 1e-12);
    }
}

TEST(SensorPoint, DirectSubstitution) {
    const Vec3 p = sensor_point(0, 0, 700, 300, {10, 20, 30});
    EXPECT_LT((p - Vec3(10, 20, 1030)).norm(), 1e-12);
}

TEST(SensorPoint, MatchesMatrixConstruction) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-2 * kPi, 2 * kPi);
    std::uniform_real_distribution<double> off(-200, 200);
    for (int i = 0; i < 1000; ++i) {
        const double a = angle(rng), b = angle(rng);
        const SensorOffset t{off(rng), off(rng), off(rng)};
        const Vec3 closed = sensor_point(a, b, 700, 300, t);
        const Vec3 matrix = sensor_point_by_matrices(a, b, 700, 300, t);
        EXPECT_LT((closed - matrix).norm(), 1e-12);
    }
}

TEST(SensorPointPhase, MatchesDirectFormOnRandomGrid) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> angle(-2 * kPi, 2 * kPi);
    std::uniform_real_distribution<double> off(-200, 200);
    std::uniform_real_distribution<double> rmin(600, 800);
    std::uniform_real_distribution<double> rmaj(0, 400);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double a = angle(rng), b = angle(rng);
        const double r = rmin(rng), R = rmaj(rng);
        const SensorOffset t{off(rng), off(rng), off(rng)};
        const Vec3 direct = sensor_point(a, b, r, R, t);
        const Vec3 phase = sensor_point_phase(a, b, r, R, t);
        worst = std::max(worst, (direct - phase).norm());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(SensorPointPhase, ZeroOffsetPhaseParams) {
    const PhaseParams p = phase_params(0.3, 700, 300, {});
    EXPECT_NEAR(p.b, 700.0, 1e-12);
    EXPECT_NEAR(p.gamma, 0.0, 1e-12);
}

TEST(SensorPointPhase, AxialComponentWithPureLateralOffset) {
    // t_x = t_z = 0 leaves the axial coordinate at r_min * sin(beta).
    const double beta = 0.735;
    const Vec3 p = sensor_point_phase(1.1, beta, 700, 300, {0, 50, 0});
    EXPECT_NEAR(p.x(), 700 * std::sin(beta), 1e-9);
}

TEST(SensorPointPhase, FlagsDegeneratePhase) {
    // t_y = 0 and the in-plane amplitude zero: b cos(beta+gamma) = -r_maj.
    const double r_min = 500, r_maj = 300;
    const SensorOffset t{0, 0, 0};  // b = 500, gamma = 0
    const double beta = std::acos(-r_maj / r_min);
    EXPECT_THROW(sensor_point_phase(0.5, beta, r_min, r_maj, t), DegenerateInput);
}

TEST(PoseOfSensor, IdentityFrameAtZeroAngles) {
    const Pose pose = pose_of_sensor(0, 0, 700, 300, {});
    EXPECT_LT((pose.translation - Vec3(0, 0, 1000)).norm(), 1e-12);
    EXPECT_LT((pose.rotation - Mat3::Identity()).norm(), 1e-12);
}

TEST(PoseOfSensor, InverseMapsOwnTranslationToOrigin) {
    const Pose pose = pose_of_sensor(0.7, -1.3, 650, 250, {15, -20, 40});
    EXPECT_LT(pose.apply_inverse(pose.translation).norm(), 1e-9);
    EXPECT_LT(pose.inverse().apply(pose.translation).norm(), 1e-9);
}

TEST(PoseOfSensor, PivotPointConstantInSensorFrame) {
    // The minor-circle center expressed in the sensor frame must not depend
    // on the minor sweep angle.
    Pose world;
    world.rotation = polar_rotation((Mat3() << 0.2, -0.5, 0.8, 0.9, 0.3, -0.1, 0.1, 0.8, 0.5)
                                        .finished());
    world.translation = Vec3(100, -50, 30);
    const SensorOffset t{25, -35, 60};
    const double alpha = 0.9;
    const Vec3 cc = pivot_point(alpha, 280, world);

    Vec3 first = Vec3::Zero();
    for (int i = 0; i < 24; ++i) {
        const double beta = 2 * kPi * i / 24;
        const Pose pose = pose_of_sensor(alpha, beta, 640, 280, t, world);
        const Vec3 local = pose.apply_inverse(cc);
        if (i == 0)
            first = local;
        else
            EXPECT_LT((local - first).norm(), 1e-9);
    }
    EXPECT_LT((first - pivot_offset_in_sensor_frame(640, t)).norm(), 1e-9);
}

TEST(RotationError, IdentityAndHalfTurn) {
    const Mat3 r = rot_z(0.4) * rot_x(-0.2);
    EXPECT_NEAR(rotation_error_deg(r, r), 0.0, 1e-12);
    const Mat3 flipped = r * Eigen::AngleAxisd(kPi, Vec3::UnitY()).toRotationMatrix();
    EXPECT_NEAR(rotation_error_deg(r, flipped), 180.0, 1e-9);
}

TEST(RotationError, AxisAngleConstruction) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 50; ++i) {
        const Mat3 base =
            Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng)).normalized()
                .toRotationMatrix();
        const Vec3 axis = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const Mat3 rotated =
            base * Eigen::AngleAxisd(deg2rad(10.0), axis).toRotationMatrix();
        EXPECT_NEAR(rotation_error_deg(base, rotated), 10.0, 1e-9);
        EXPECT_NEAR(rotation_error_deg(rotated, base), 10.0, 1e-9);  // symmetry
    }
}

TEST(FixedMajorSweep, MinorCircleAxisTangentsPivotLocus) {
    // For a fixed major angle the sensor sweep is a circle whose axis passes
    // through the pivot point, tangent to the pivot locus there.
    const double alpha = 0.65;
    const double r_min = 700, r_maj = 300;
    const SensorOffset t{40, -70, 20};
    std::vector<Vec3> pts;
    for (int i = 0; i < 90; ++i) pts.push_back(sensor_point(alpha, 2 * kPi * i / 90, r_min, r_maj, t));
    const Circle3D circle = fit_circle_3d(pts);

    const Vec3 cc = pivot_point(alpha, r_maj);
    EXPECT_LT(point_line_distance(cc, circle.center, circle.normal), 1e-9);

    const Vec3 tangent = Vec3::UnitX().cross(cc).normalized();  // locus tangent at cc
    EXPECT_NEAR(std::abs(tangent.dot(circle.normal)), 1.0, 1e-9);
}

TEST(SensorSurface, ZeroOnSurfaceAndExactOffAxis) {
    const double r_min = 700, r_maj = 300;
    const SensorOffset t{40, -70, 20};
    const SensorSurface surface = SensorSurface::from_pivot(
        Vec3::Zero(), Vec3::UnitX(), r_maj, pivot_offset_in_sensor_frame(r_min, t));
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> angle(0, 2 * kPi);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p = sensor_point(angle(rng), angle(rng), r_min, r_maj, t);
        EXPECT_LT(surface.distance(p), 1e-9);
    }
    // A pure axial displacement off the surface comes back as that distance.
    const Vec3 on = sensor_point(0.4, 1.2, r_min, r_maj, t);
    const double d = surface.distance(on + Vec3(0, 0, 0));
    EXPECT_LT(d, 1e-9);
}

TEST(SensorSurface, BruteForceDistanceOracle) {
    const double r_min = 640, r_maj = 260;
    const SensorOffset t{-30, 55, 80};
    const SensorSurface surface = SensorSurface::from_pivot(
        Vec3(10, 20, 30), Vec3(0.3, -0.4, 0.5).normalized(), r_maj,
        pivot_offset_in_sensor_frame(r_min, t));

    Pose frame;
    frame.translation = Vec3(10, 20, 30);
    Vec3 e1, e2;
    plane_basis(Vec3(0.3, -0.4, 0.5).normalized(), e1, e2);
    frame.rotation.col(0) = Vec3(0.3, -0.4, 0.5).normalized();
    frame.rotation.col(1) = e1;
    frame.rotation.col(2) = e2;

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> coord(-1200, 1200);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 p(coord(rng), coord(rng), coord(rng));
        auto at = [&](double a, double b) {
            return (frame.apply(sensor_point(a, b, r_min, r_maj, t)) - p).norm();
        };
        // Coarse parametric scan, then two local refinements around the best cell.
        double brute = 1e300, best_a = 0, best_b = 0;
        double step = 2 * kPi / 360;
        for (int i = 0; i < 360; ++i)
            for (int j = 0; j < 360; ++j) {
                const double d = at(i * step, j * step);
                if (d < brute) {
                    brute = d;
                    best_a = i * step;
                    best_b = j * step;
                }
            }
        for (int level = 0; level < 3; ++level) {
            const double lo_a = best_a - step, lo_b = best_b - step;
            const double fine = step / 20;
            for (int i = 0; i <= 40; ++i)
                for (int j = 0; j <= 40; ++j) {
                    const double d = at(lo_a + i * fine, lo_b + j * fine);
                    if (d < brute) {
                        brute = d;
                        best_a = lo_a + i * fine;
                        best_b = lo_b + j * fine;
                    }
                }
            step = fine;
        }
        EXPECT_NEAR(surface.distance(p), brute, 1e-4);
    }
}

}  // namespace
}  // namespace carmpivot
