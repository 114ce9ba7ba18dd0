#include "carmpivot/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace carmpivot {

Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return r;
}

Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, 0, s,
         0, 1, 0,
        -s, 0, c;
    return r;
}

Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return r;
}

bool is_rotation(const Mat3& r, double tol) {
    const Mat3 rtr = r.transpose() * r;
    return (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 polar_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

void plane_basis(const Vec3& n, Vec3& e1, Vec3& e2) {
    // Pick the world axis least aligned with n, then Gram-Schmidt.
    Vec3 seed = Vec3::UnitX();
    const Vec3 a = n.cwiseAbs();
    if (a.y() <= a.x() && a.y() <= a.z())
        seed = Vec3::UnitY();
    else if (a.z() <= a.x() && a.z() <= a.y())
        seed = Vec3::UnitZ();
    e1 = (seed - seed.dot(n) * n).normalized();
    e2 = n.cross(e1);
}

void TorusModel::validate() const {
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw DegenerateInput("TorusModel: normal must be unit length");
    if (!(minor_radius > 0.0))
        throw DegenerateInput("TorusModel: minor radius must be positive");
    if (major_radius < 0.0)
        throw DegenerateInput("TorusModel: major radius must be non-negative");
}

Vec3 torus_point(double alpha, double beta, double r_min, double r_maj) {
    const double w = r_min * std::cos(beta) + r_maj;
    return {r_min * std::sin(beta), -w * std::sin(alpha), w * std::cos(alpha)};
}

PhaseParams phase_params(double beta, double r_min, double r_maj, const SensorOffset& t) {
    PhaseParams p;
    p.b = std::hypot(r_min + t.z, t.x);
    p.gamma = std::atan2(t.x, r_min + t.z);
    p.delta = std::atan2(p.b * std::cos(beta + p.gamma) + r_maj, t.y);
    return p;
}

Vec3 sensor_point(double alpha, double beta, double r_min, double r_maj, const SensorOffset& t) {
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    const double sb = std::sin(beta), cb = std::cos(beta);
    const double w = (r_min + t.z) * cb - t.x * sb + r_maj;
    return {(r_min + t.z) * sb + t.x * cb,
            t.y * ca - w * sa,
            t.y * sa + w * ca};
}

Vec3 sensor_point_phase(double alpha, double beta, double r_min, double r_maj,
                        const SensorOffset& t) {
    const PhaseParams p = phase_params(beta, r_min, r_maj, t);
    const double u = p.b * std::cos(beta + p.gamma) + r_maj;
    // Amplitude of the in-plane sine: u / sin(delta), evaluated as
    // hypot(t_y, u) which extends the expression through sin(delta) = 0.
    if (std::abs(t.y) < 1e-12 && std::abs(u) < 1e-12)
        throw DegenerateInput("sensor_point_phase: phase undefined (t_y and in-plane amplitude both vanish)");
    const double amp = std::hypot(t.y, u);
    return {p.b * std::sin(beta + p.gamma),
            amp * std::cos(alpha + p.delta),
            amp * std::sin(alpha + p.delta)};
}

Pose pose_of_sensor(double alpha, double beta, double r_min, double r_maj,
                    const SensorOffset& t, const Pose& torus_frame) {
    Pose pose;
    pose.rotation = torus_frame.rotation * rot_x(alpha) * rot_y(beta);
    pose.translation = torus_frame.apply(sensor_point(alpha, beta, r_min, r_maj, t));
    return pose;
}

Vec3 pivot_point(double alpha, double r_maj, const Pose& torus_frame) {
    return torus_frame.apply(rot_x(alpha) * Vec3(0, 0, r_maj));
}

Vec3 pivot_offset_in_sensor_frame(double r_min, const SensorOffset& t) {
    return {-t.x, -t.y, -(r_min + t.z)};
}

double rotation_error_deg(const Mat3& r_a, const Mat3& r_b) {
    const double tr = (r_a * r_b.transpose()).trace();
    const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
    return rad2deg(std::acos(arg));
}

SensorSurface SensorSurface::from_pivot(const Vec3& center, const Vec3& normal,
                                        double major_radius, const Vec3& pivot_offset) {
    SensorSurface s;
    s.center = center;
    s.normal = normal.normalized();
    s.major_radius = major_radius;
    s.ring_radius = std::hypot(pivot_offset.x(), pivot_offset.z());
    s.axial_offset = std::abs(pivot_offset.y());
    return s;
}

double SensorSurface::distance(const Vec3& p) const {
    // Generator curve in (axial, radial) half-plane coordinates:
    //   s(psi) = b sin(psi),  rho(psi) = sqrt(t_y^2 + (R + b cos(psi))^2)
    const Vec3 d = p - center;
    const double sp = d.dot(normal);
    const double rp = (d - sp * normal).norm();
    const double b = ring_radius;
    const double ty2 = axial_offset * axial_offset;
    const double rmaj = major_radius;

    auto dist2 = [&](double psi) {
        const double ds = sp - b * std::sin(psi);
        const double h = std::sqrt(ty2 + std::pow(rmaj + b * std::cos(psi), 2));
        const double dr = rp - h;
        return ds * ds + dr * dr;
    };

    // Coarse scan, then golden-section refinement around the best cell.
    constexpr int kGrid = 128;
    double best = dist2(0.0);
    int best_i = 0;
    for (int i = 1; i < kGrid; ++i) {
        const double v = dist2(2.0 * kPi * i / kGrid);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    double lo = 2.0 * kPi * (best_i - 1) / kGrid;
    double hi = 2.0 * kPi * (best_i + 1) / kGrid;
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = dist2(x1), f2 = dist2(x2);
    for (int it = 0; it < 60 && (hi - lo) > 1e-13; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = dist2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = dist2(x2);
        }
    }
    return std::sqrt(std::min({best, f1, f2}));
}

}  // namespace carmpivot
