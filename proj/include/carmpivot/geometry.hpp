#pragma once

#include <Eigen/Dense>

#include "carmpivot/errors.hpp"

namespace carmpivot {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rotation about the x-axis, [[1,0,0],[0,c,-s],[0,s,c]].
Mat3 rot_x(double angle_rad);
/// Rotation about the y-axis, [[c,0,s],[0,1,0],[-s,0,c]].
Mat3 rot_y(double angle_rad);
/// Rotation about the z-axis.
Mat3 rot_z(double angle_rad);

/// True if R is orthonormal with det +1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Nearest rotation matrix (polar factor, det forced to +1).
Mat3 polar_rotation(const Mat3& m);

/// Deterministic orthonormal basis (e1, e2) of the plane with unit normal n.
void plane_basis(const Vec3& n, Vec3& e1, Vec3& e2);

/// Rigid transform: p_world = rotation * p_local + translation. Units mm.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_inverse(const Vec3& p) const { return rotation.transpose() * (p - translation); }
    Pose inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
    Pose compose(const Pose& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }
    static Pose identity() { return {}; }
};

/// Fixed offset from the minor-circle reference point to the sensor,
/// expressed in the rotating frame the sensor is rigidly attached to. Units mm.
struct SensorOffset {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 vec() const { return {x, y, z}; }
    static SensorOffset from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

/// C-arm motion surface: a (possibly spindle) torus.
struct TorusModel {
    Vec3 center = Vec3::Zero();     // mm
    Vec3 normal = Vec3::UnitX();    // unit major-circle axis
    double major_radius = 0.0;      // mm, >= 0
    double minor_radius = 1.0;      // mm, > 0

    void validate() const;
};

/// Amplitude/phase coefficients of the phase-shift form of the sensor locus.
struct PhaseParams {
    double b = 0.0;      // mm, sqrt((r_min + t_z)^2 + t_x^2)
    double gamma = 0.0;  // rad, phase shift of the axial component
    double delta = 0.0;  // rad, phase shift of the in-plane component (depends on beta)
};

/// Phase coefficients for a given sweep angle beta.
PhaseParams phase_params(double beta, double r_min, double r_maj, const SensorOffset& t);

/// Point on the C-arm torus for rotation angles (alpha: major sweep,
/// beta: minor sweep), in the canonical frame (axis = x).
Vec3 torus_point(double alpha, double beta, double r_min, double r_maj);

/// Sensor position for the same angles when the sensor is mounted with
/// offset t from the minor-circle reference point.
Vec3 sensor_point(double alpha, double beta, double r_min, double r_maj, const SensorOffset& t);

/// Same locus evaluated through the single-sine phase-shift form.
/// Throws DegenerateInput when both t_y and the in-plane amplitude vanish.
Vec3 sensor_point_phase(double alpha, double beta, double r_min, double r_maj,
                        const SensorOffset& t);

/// Full sensor pose: rotation = torus_frame.rotation * Rx(alpha) * Ry(beta),
/// translation = sensor_point mapped through torus_frame. The torus axis is
/// torus_frame.rotation.col(0) and its center torus_frame.translation.
Pose pose_of_sensor(double alpha, double beta, double r_min, double r_maj,
                    const SensorOffset& t, const Pose& torus_frame = Pose::identity());

/// Center of the minor circle at major-sweep angle alpha (the pivot point).
Vec3 pivot_point(double alpha, double r_maj, const Pose& torus_frame = Pose::identity());

/// Constant offset from the sensor to the pivot point, in the sensor's local
/// frame: the quantity recovered by pivot calibration. For a sensor mounted
/// with offset t this is -(t_x, t_y, r_min + t_z).
Vec3 pivot_offset_in_sensor_frame(double r_min, const SensorOffset& t);

/// Angle between two rotations in degrees, in [0, 180].
double rotation_error_deg(const Mat3& r_a, const Mat3& r_b);

/// Surface of revolution traced by the sensor: axis (center, normal),
/// pivot-circle radius r_maj, sensor ring radius b at axial offset |t_y|.
/// Derived from an estimated pivot offset; used to score pose residuals.
struct SensorSurface {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    double major_radius = 0.0;  // r_maj
    double ring_radius = 0.0;   // b
    double axial_offset = 0.0;  // |t_y|

    static SensorSurface from_pivot(const Vec3& center, const Vec3& normal, double major_radius,
                                    const Vec3& pivot_offset_sensor_frame);

    /// Unsigned distance from p to the surface (numeric 1-D minimization
    /// over the generator angle, refined to ~1e-12).
    double distance(const Vec3& p) const;
};

}  // namespace carmpivot
