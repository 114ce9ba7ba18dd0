#include "carmpivot/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace carmpivot {

namespace detail {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t s = seed;
    splitmix64(s);
    s ^= 0xA0761D6478BD642FULL * (a + 1);
    splitmix64(s);
    s ^= 0xE7037ED1A0B428DBULL * (b + 1);
    splitmix64(s);
    s ^= 0x8EBC6AF09C88C6E3ULL * (c + 1);
    return splitmix64(s);
}

// Unbiased-enough bounded draw (128-bit multiply).
static std::uint32_t bounded(std::uint64_t& state, std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<__uint128_t>(splitmix64(state)) * n) >> 64);
}

}  // namespace detail

double Circle3D::distance(const Vec3& p) const {
    const Vec3 d = p - center;
    const double axial = d.dot(normal);
    const double radial = (d - axial * normal).norm() - radius;
    return std::hypot(axial, radial);
}

double point_line_distance(const Vec3& p, const Vec3& line_point, const Vec3& line_dir) {
    const Vec3 d = p - line_point;
    return (d - d.dot(line_dir) * line_dir).norm();
}

Vec3 orient_normal(const Vec3& n, const Vec3& reference_direction) {
    const double dot = n.dot(reference_direction);
    if (std::abs(dot) < 1e-12 * n.norm() * reference_direction.norm())
        throw AmbiguousOrientation("orient_normal: reference direction perpendicular to normal");
    return dot >= 0 ? n : Vec3(-n);
}

Plane fit_plane(const std::vector<Vec3>& points) {
    if (points.size() < 3)
        throw DegenerateInput("fit_plane: need at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 evals = es.eigenvalues();  // ascending
    // Collinear input leaves the two smallest eigenvalues tied near zero;
    // isotropic input ties them as well. Both make the normal ill-defined.
    if (evals(1) - evals(0) <= 1e-12 * std::max(evals(2), 1e-300))
        throw DegenerateInput("fit_plane: points are collinear or isotropic");
    Plane plane;
    plane.point = centroid;
    plane.normal = es.eigenvectors().col(0).normalized();
    return plane;
}

Circle2D fit_circle_2d(const std::vector<Vec2>& points) {
    if (points.size() < 3)
        throw DegenerateInput("fit_circle_2d: need at least 3 points");
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : points) {
        const Vec2 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues()(0) <= 1e-14 * std::max(es.eigenvalues()(1), 1e-300))
        throw DegenerateInput("fit_circle_2d: points are collinear");

    // Algebraic fit on centered coordinates: x^2+y^2 + D x + E y + F = 0.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Vec3 atb = Vec3::Zero();
    for (const auto& p : points) {
        const Vec2 d = p - centroid;
        const Vec3 row(d.x(), d.y(), 1.0);
        ata += row * row.transpose();
        atb += row * (-d.squaredNorm());
    }
    const Vec3 sol = ata.ldlt().solve(atb);
    const Vec2 center_local(-sol(0) / 2.0, -sol(1) / 2.0);
    const double r2 = center_local.squaredNorm() - sol(2);
    if (!(r2 > 0.0))
        throw DegenerateInput("fit_circle_2d: non-positive squared radius");
    Circle2D c;
    c.center = center_local + centroid;
    c.radius = std::sqrt(r2);
    return c;
}

Circle3D fit_circle_3d(const std::vector<Vec3>& points) {
    const Plane plane = fit_plane(points);
    return fit_circle_3d_fixed_normal(points, plane.normal);
}

Circle3D fit_circle_3d_fixed_normal(const std::vector<Vec3>& points, const Vec3& n) {
    if (points.size() < 3)
        throw DegenerateInput("fit_circle_3d_fixed_normal: need at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Vec3 e1, e2;
    plane_basis(n, e1, e2);
    std::vector<Vec2> uv;
    uv.reserve(points.size());
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        uv.emplace_back(d.dot(e1), d.dot(e2));
    }
    const Circle2D c2 = fit_circle_2d(uv);
    Circle3D c;
    c.center = centroid + c2.center.x() * e1 + c2.center.y() * e2;
    c.normal = n;
    c.radius = c2.radius;
    return c;
}

LinePair fit_line_pair_orthogonal(const std::vector<Vec2>& points_a,
                                  const std::vector<Vec2>& points_b) {
    auto scatter = [](const std::vector<Vec2>& pts, const char* which) {
        if (pts.size() < 2)
            throw DegenerateInput(std::string("fit_line_pair_orthogonal: set ") + which +
                                  " needs at least 2 points");
        Vec2 centroid = Vec2::Zero();
        for (const auto& p : pts) centroid += p;
        centroid /= static_cast<double>(pts.size());
        Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
        double spread = 0.0;
        for (const auto& p : pts) {
            const Vec2 d = p - centroid;
            s += d * d.transpose();
            spread = std::max(spread, d.squaredNorm());
        }
        if (spread <= 0.0)
            throw DegenerateInput(std::string("fit_line_pair_orthogonal: set ") + which +
                                  " is a single repeated point");
        return s;
    };
    const Eigen::Matrix2d sa = scatter(points_a, "a");
    const Eigen::Matrix2d sb = scatter(points_b, "b");

    // With dir_b constrained to rot90(dir_a) both scatter objectives reduce
    // to a single quadratic form in dir_a.
    Eigen::Matrix2d m = sa;
    m(0, 0) += sb(1, 1);
    m(0, 1) -= sb(0, 1);
    m(1, 0) -= sb(1, 0);
    m(1, 1) += sb(0, 0);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    if (es.eigenvalues()(1) - es.eigenvalues()(0) <=
        1e-12 * std::max(std::abs(es.eigenvalues()(1)), 1e-300))
        throw DegenerateInput("fit_line_pair_orthogonal: direction is ambiguous");
    LinePair lp;
    lp.dir_a = es.eigenvectors().col(1).normalized();
    lp.dir_b = Vec2(-lp.dir_a.y(), lp.dir_a.x());
    return lp;
}

Sphere fit_sphere(const std::vector<Vec3>& points) {
    if (points.size() < 4)
        throw DegenerateInput("fit_sphere: need at least 4 points");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    if (es.eigenvalues()(0) <= 1e-14 * std::max(es.eigenvalues()(2), 1e-300))
        throw DegenerateInput("fit_sphere: points are coplanar");

    Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
    Eigen::Vector4d atb = Eigen::Vector4d::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        const Eigen::Vector4d row(d.x(), d.y(), d.z(), 1.0);
        ata += row * row.transpose();
        atb += row * (-d.squaredNorm());
    }
    const Eigen::Vector4d sol = ata.ldlt().solve(atb);
    const Vec3 center_local = -sol.head<3>() / 2.0;
    const double r2 = center_local.squaredNorm() - sol(3);
    if (!(r2 > 0.0))
        throw DegenerateInput("fit_sphere: non-positive squared radius");
    Sphere s;
    s.center = center_local + centroid;
    s.radius = std::sqrt(r2);
    return s;
}

// ---------------------------------------------------------------------------
// RANSAC
// ---------------------------------------------------------------------------

namespace {

// Minimal-sample exact fits. Return nullopt for degenerate samples.

std::optional<Plane> plane_from_3(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 u = b - a, v = c - a;
    const Vec3 n = u.cross(v);
    const double scale = std::max(u.norm(), v.norm());
    if (n.norm() <= 1e-12 * scale * scale) return std::nullopt;
    Plane p;
    p.point = (a + b + c) / 3.0;
    p.normal = n.normalized();
    return p;
}

std::optional<Circle3D> circle3d_from_3(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 u = a - c, v = b - c;
    const Vec3 n = u.cross(v);
    const double n2 = n.squaredNorm();
    const double scale = std::max(u.norm(), v.norm());
    if (n.norm() <= 1e-12 * scale * scale) return std::nullopt;
    const Vec3 center =
        c + ((u.squaredNorm() * v - v.squaredNorm() * u).cross(n)) / (2.0 * n2);
    Circle3D circ;
    circ.center = center;
    circ.normal = n.normalized();
    circ.radius = (a - center).norm();
    if (!(circ.radius > 0.0)) return std::nullopt;
    return circ;
}

std::optional<Circle3D> circle3d_fixed_normal_from_3(const Vec3& a, const Vec3& b, const Vec3& c,
                                                     const Vec3& n) {
    const Vec3 centroid = (a + b + c) / 3.0;
    Vec3 e1, e2;
    plane_basis(n, e1, e2);
    auto uv = [&](const Vec3& p) {
        const Vec3 d = p - centroid;
        return Vec2(d.dot(e1), d.dot(e2));
    };
    const Vec2 pa = uv(a), pb = uv(b), pc = uv(c);
    const double d = 2.0 * (pa.x() * (pb.y() - pc.y()) + pb.x() * (pc.y() - pa.y()) +
                            pc.x() * (pa.y() - pb.y()));
    const double scale2 = std::max({(pa - pb).squaredNorm(), (pa - pc).squaredNorm(),
                                    (pb - pc).squaredNorm()});
    if (std::abs(d) <= 1e-12 * scale2) return std::nullopt;
    const double ux = (pa.squaredNorm() * (pb.y() - pc.y()) + pb.squaredNorm() * (pc.y() - pa.y()) +
                       pc.squaredNorm() * (pa.y() - pb.y())) /
                      d;
    const double uy = (pa.squaredNorm() * (pc.x() - pb.x()) + pb.squaredNorm() * (pa.x() - pc.x()) +
                       pc.squaredNorm() * (pb.x() - pa.x())) /
                      d;
    Circle3D circ;
    circ.center = centroid + ux * e1 + uy * e2;
    circ.normal = n;
    circ.radius = (Vec2(ux, uy) - pa).norm();
    if (!(circ.radius > 0.0)) return std::nullopt;
    return circ;
}

std::optional<Sphere> sphere_from_4(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    Mat3 m;
    m.row(0) = 2.0 * (a - d).transpose();
    m.row(1) = 2.0 * (b - d).transpose();
    m.row(2) = 2.0 * (c - d).transpose();
    const Vec3 rhs(a.squaredNorm() - d.squaredNorm(), b.squaredNorm() - d.squaredNorm(),
                   c.squaredNorm() - d.squaredNorm());
    Eigen::FullPivLU<Mat3> lu(m);
    if (!lu.isInvertible()) return std::nullopt;
    Sphere s;
    s.center = lu.solve(rhs);
    s.radius = (a - s.center).norm();
    if (!(s.radius > 0.0)) return std::nullopt;
    return s;
}

template <typename Model, typename Hypothesis, typename Distance, typename Refit>
RansacResult<Model> ransac_generic(std::size_t n, int sample_size, const RansacConfig& cfg,
                                   Hypothesis&& hypothesis, Distance&& distance, Refit&& refit) {
    if (static_cast<int>(n) < sample_size)
        throw DegenerateInput("ransac: fewer points than the minimal sample");
    if (cfg.iterations < 1 || !(cfg.inlier_threshold > 0.0))
        throw DegenerateInput("ransac: invalid configuration");

    const int required =
        std::max(sample_size,
                 static_cast<int>(std::ceil(cfg.min_inlier_fraction * static_cast<double>(n))));

    bool have_best = false;
    Model best_model{};
    std::size_t best_count = 0;
    double best_rms = std::numeric_limits<double>::infinity();

    std::array<int, 4> idx{};
    for (int it = 0; it < cfg.iterations; ++it) {
        std::uint64_t state = detail::derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(it));
        // Sample without replacement.
        for (int k = 0; k < sample_size; ++k) {
            bool fresh = false;
            while (!fresh) {
                idx[k] = static_cast<int>(detail::bounded(state, static_cast<std::uint32_t>(n)));
                fresh = true;
                for (int j = 0; j < k; ++j)
                    if (idx[j] == idx[k]) fresh = false;
            }
        }
        auto model = hypothesis(idx);
        if (!model) continue;  // degenerate sample, budget consumed

        std::size_t count = 0;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = distance(*model, i);
            if (d < cfg.inlier_threshold) {
                ++count;
                ss += d * d;
            }
        }
        const double rms = count > 0 ? std::sqrt(ss / static_cast<double>(count))
                                     : std::numeric_limits<double>::infinity();
        if (!have_best || count > best_count || (count == best_count && rms < best_rms)) {
            have_best = true;
            best_model = *model;
            best_count = count;
            best_rms = rms;
        }
    }

    if (!have_best || best_count < static_cast<std::size_t>(required))
        throw NoConsensus("ransac: best consensus below the required inlier count");

    std::vector<int> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i)
        if (distance(best_model, i) < cfg.inlier_threshold) inliers.push_back(static_cast<int>(i));

    RansacResult<Model> result;
    result.model = refit(inliers);

    // Re-evaluate membership against the refit model.
    result.inlier_indices.clear();
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = distance(result.model, i);
        if (d < cfg.inlier_threshold) {
            result.inlier_indices.push_back(static_cast<int>(i));
            ss += d * d;
        }
    }
    if (result.inlier_indices.size() < static_cast<std::size_t>(required))
        throw NoConsensus("ransac: refit model lost consensus");
    result.inlier_rms =
        std::sqrt(ss / static_cast<double>(std::max<std::size_t>(result.inlier_indices.size(), 1)));
    return result;
}

template <typename Model>
std::vector<Vec3> gather(const std::vector<Vec3>& points, const std::vector<int>& idx) {
    std::vector<Vec3> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(points[i]);
    return out;
}

}  // namespace

RansacResult<Plane> ransac_fit_plane(const std::vector<Vec3>& points, const RansacConfig& cfg) {
    return ransac_generic<Plane>(
        points.size(), 3, cfg,
        [&](const std::array<int, 4>& s) {
            return plane_from_3(points[s[0]], points[s[1]], points[s[2]]);
        },
        [&](const Plane& m, std::size_t i) { return m.distance(points[i]); },
        [&](const std::vector<int>& inl) { return fit_plane(gather<Plane>(points, inl)); });
}

RansacResult<Circle3D> ransac_fit_circle3d(const std::vector<Vec3>& points,
                                           const RansacConfig& cfg) {
    return ransac_generic<Circle3D>(
        points.size(), 3, cfg,
        [&](const std::array<int, 4>& s) {
            return circle3d_from_3(points[s[0]], points[s[1]], points[s[2]]);
        },
        [&](const Circle3D& m, std::size_t i) { return m.distance(points[i]); },
        [&](const std::vector<int>& inl) { return fit_circle_3d(gather<Circle3D>(points, inl)); });
}

RansacResult<Circle3D> ransac_fit_circle3d_fixed_normal(const std::vector<Vec3>& points,
                                                        const Vec3& n, const RansacConfig& cfg) {
    return ransac_generic<Circle3D>(
        points.size(), 3, cfg,
        [&](const std::array<int, 4>& s) {
            return circle3d_fixed_normal_from_3(points[s[0]], points[s[1]], points[s[2]], n);
        },
        [&](const Circle3D& m, std::size_t i) { return m.distance(points[i]); },
        [&](const std::vector<int>& inl) {
            return fit_circle_3d_fixed_normal(gather<Circle3D>(points, inl), n);
        });
}

RansacResult<Sphere> ransac_fit_sphere(const std::vector<Vec3>& points, const RansacConfig& cfg) {
    return ransac_generic<Sphere>(
        points.size(), 4, cfg,
        [&](const std::array<int, 4>& s) {
            return sphere_from_4(points[s[0]], points[s[1]], points[s[2]], points[s[3]]);
        },
        [&](const Sphere& m, std::size_t i) { return m.distance(points[i]); },
        [&](const std::vector<int>& inl) { return fit_sphere(gather<Sphere>(points, inl)); });
}

}  // namespace carmpivot
