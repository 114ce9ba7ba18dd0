#include "carmpivot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace carmpivot {

namespace {

// Seed salts for the independent RANSAC streams.
enum Stage : std::uint64_t { kXPlane = 1, kXCircle, kCPlane, kCCircle, kSphere };

std::vector<Vec3> positions_of(const TrajectorySet& set) {
    std::vector<Vec3> p;
    p.reserve(set.poses.size());
    for (const auto& pose : set.poses) p.push_back(pose.translation);
    return p;
}

Vec3 mean_of(const std::vector<Vec3>& v) {
    Vec3 m = Vec3::Zero();
    for (const auto& x : v) m += x;
    return m / static_cast<double>(v.size());
}

RansacConfig stage_cfg(const RansacConfig& cfg, std::uint64_t stage, std::uint64_t set_index,
                       std::uint64_t round) {
    RansacConfig out = cfg;
    out.rng_seed = detail::derive_seed(cfg.rng_seed, stage, set_index, round);
    return out;
}

/// Plane + in-plane circle for one sweep, both under RANSAC.
struct SweepFit {
    Circle3D circle;
    double plane_rms = 0.0;
    double circle_rms = 0.0;
};

SweepFit fit_sweep(const std::vector<Vec3>& points, const RansacConfig& cfg_plane,
                   const RansacConfig& cfg_circle) {
    const auto plane = ransac_fit_plane(points, cfg_plane);
    std::vector<Vec3> on_plane;
    on_plane.reserve(plane.inlier_indices.size());
    for (int i : plane.inlier_indices) on_plane.push_back(points[i]);
    const auto circle = ransac_fit_circle3d_fixed_normal(on_plane, plane.model.normal, cfg_circle);
    SweepFit fit;
    fit.circle = circle.model;
    fit.plane_rms = plane.inlier_rms;
    fit.circle_rms = circle.inlier_rms;
    return fit;
}

const TrajectorySet* find_tagged(const std::vector<TrajectorySet>& sets, double tag) {
    for (const auto& s : sets)
        if (s.alpha_tag_deg && std::abs(*s.alpha_tag_deg - tag) < 1e-9) return &s;
    return nullptr;
}

}  // namespace

void validate_observations(const TrajectoryObservations& obs) {
    for (const auto* sets : {&obs.x_sets, &obs.c_sets})
        for (const auto& s : *sets)
            if (s.poses.size() < 3)
                throw DegenerateInput("observation set '" + s.id + "' has fewer than 3 poses");
    if (obs.x_sets.empty()) throw InsufficientData("no x-axis sweep in the observation bundle");
    if (obs.c_sets.size() < 3)
        throw InsufficientData("need at least 3 c-axis sweeps, got " +
                               std::to_string(obs.c_sets.size()));
    std::ostringstream missing;
    for (double tag : {-90.0, 0.0, 90.0}) {
        int count = 0;
        for (const auto& s : obs.c_sets)
            if (s.alpha_tag_deg && std::abs(*s.alpha_tag_deg - tag) < 1e-9) ++count;
        if (count != 1) {
            if (missing.tellp() > 0) missing << ", ";
            missing << (count == 0 ? "missing" : "duplicate") << " tagged c-axis sweep at alpha = "
                    << tag << " deg";
        }
    }
    if (missing.tellp() > 0) throw InsufficientData(missing.str());
}

NormalEstimate estimate_normal(const std::vector<TrajectorySet>& x_sets,
                               const RansacConfig& cfg) {
    if (x_sets.empty()) throw InsufficientData("estimate_normal: no x-axis sweep");

    std::vector<const TrajectorySet*> ordered;
    ordered.reserve(x_sets.size());
    for (const auto& s : x_sets) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const TrajectorySet* a, const TrajectorySet* b) {
                         return a->order_index < b->order_index;
                     });

    NormalEstimate est;
    est.per_set.reserve(ordered.size());
    double plane_ss = 0.0, circle_ss = 0.0;
    for (std::size_t j = 0; j < ordered.size(); ++j) {
        const auto fit = fit_sweep(positions_of(*ordered[j]), stage_cfg(cfg, kXPlane, j, 0),
                                   stage_cfg(cfg, kXCircle, j, 0));
        est.per_set.push_back(fit.circle);
        plane_ss += fit.plane_rms * fit.plane_rms;
        circle_ss += fit.circle_rms * fit.circle_rms;
    }
    est.plane_rms_mm = std::sqrt(plane_ss / static_cast<double>(ordered.size()));
    est.circle_rms_mm = std::sqrt(circle_ss / static_cast<double>(ordered.size()));

    // Make per-set normal signs mutually consistent, then check agreement.
    for (std::size_t j = 1; j < est.per_set.size(); ++j)
        if (est.per_set[j].normal.dot(est.per_set[0].normal) < 0.0)
            est.per_set[j].normal = -est.per_set[j].normal;
    for (std::size_t i = 0; i < est.per_set.size(); ++i)
        for (std::size_t j = i + 1; j < est.per_set.size(); ++j) {
            const double angle =
                rad2deg(std::acos(std::clamp(est.per_set[i].normal.dot(est.per_set[j].normal),
                                             -1.0, 1.0)));
            if (angle > 30.0)
                throw InconsistentNormals("x-axis sweep normals disagree by " +
                                          std::to_string(angle) + " deg; sets mislabeled?");
        }

    Vec3 n = Vec3::Zero();
    for (const auto& c : est.per_set) n += c.normal;
    n.normalize();

    // The acquisition order ascends along the axis; a positive correlation of
    // the circle-plane offsets with the order index fixes the sign. A single
    // sweep carries no signal; the sign is then settled during assembly of
    // the full orientation.
    double slope = 0.0, offset_scale = 0.0;
    const double mid = 0.5 * static_cast<double>(est.per_set.size() - 1);
    for (std::size_t j = 0; j < est.per_set.size(); ++j) {
        const double s = est.per_set[j].center.dot(n);
        slope += (static_cast<double>(j) - mid) * s;
        offset_scale = std::max(offset_scale, std::abs(s));
    }
    if (std::abs(slope) > 1e-9 * std::max(1.0, offset_scale) && slope < 0.0) n = -n;
    for (auto& c : est.per_set)
        if (c.normal.dot(n) < 0.0) c.normal = -c.normal;

    est.normal = n;
    std::vector<Vec3> centers;
    centers.reserve(est.per_set.size());
    for (const auto& c : est.per_set) centers.push_back(c.center);
    est.center_seed = mean_of(centers);
    return est;
}

CenterEstimate estimate_center(const std::vector<TrajectorySet>& c_sets, const Vec3& normal,
                               const Vec3& center_seed, const RansacConfig& cfg) {
    if (c_sets.size() < 3) throw InsufficientData("estimate_center: need at least 3 c-axis sweeps");

    CenterEstimate est;
    est.per_set.reserve(c_sets.size());
    double plane_ss = 0.0, circle_ss = 0.0;
    for (std::size_t j = 0; j < c_sets.size(); ++j) {
        auto fit = fit_sweep(positions_of(c_sets[j]), stage_cfg(cfg, kCPlane, j, 0),
                             stage_cfg(cfg, kCCircle, j, 0));
        // Point each sweep normal toward the axis seed; with the sensor on
        // the sweep plane the reference is perpendicular and the fitted sign
        // stands.
        try {
            fit.circle.normal = orient_normal(fit.circle.normal, center_seed - fit.circle.center);
        } catch (const AmbiguousOrientation&) {
        }
        est.per_set.push_back(fit.circle);
        plane_ss += fit.plane_rms * fit.plane_rms;
        circle_ss += fit.circle_rms * fit.circle_rms;
    }
    est.plane_rms_mm = std::sqrt(plane_ss / static_cast<double>(c_sets.size()));
    est.circle_rms_mm = std::sqrt(circle_ss / static_cast<double>(c_sets.size()));

    std::vector<Vec3> centers;
    centers.reserve(est.per_set.size());
    for (const auto& c : est.per_set) centers.push_back(c.center);

    double spread = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            spread = std::max(spread, (centers[i] - centers[j]).norm());
    if (spread < 10.0 * cfg.inlier_threshold) {
        // Spindle collapsed toward a sphere; the circle through the centers
        // is ill-conditioned.
        est.degenerate = true;
        est.center = mean_of(centers);
        return est;
    }

    est.through_centers = fit_circle_3d_fixed_normal(centers, normal);
    const Vec3 projected_seed =
        center_seed - (center_seed - est.through_centers.center).dot(normal) * normal;
    est.center = 0.5 * (est.through_centers.center + projected_seed);
    return est;
}

double estimate_major_radius(const Vec3& center, const std::vector<Circle3D>& per_set_circles) {
    double sum = 0.0;
    for (const auto& c : per_set_circles) sum += point_line_distance(center, c.center, c.normal);
    return sum / static_cast<double>(per_set_circles.size());
}

OrientationOffset estimate_orientation_offset(const std::vector<TrajectorySet>& c_sets,
                                              const Vec3& normal, const Vec3& center,
                                              double major_radius, bool allow_ambiguous_signs) {
    const TrajectorySet* set_neg = find_tagged(c_sets, -90.0);
    const TrajectorySet* set_zero = find_tagged(c_sets, 0.0);
    const TrajectorySet* set_pos = find_tagged(c_sets, 90.0);
    if (!set_neg || !set_zero || !set_pos)
        throw InsufficientData("estimate_orientation_offset: tagged -90/0/+90 sweeps required");

    Vec3 e1, e2;
    plane_basis(normal, e1, e2);
    auto project = [&](const TrajectorySet& set) {
        std::vector<Vec2> q;
        q.reserve(set.poses.size());
        for (const auto& pose : set.poses) {
            const Vec3 d = pose.translation - center;
            q.emplace_back(d.dot(e1), d.dot(e2));
        }
        return q;
    };
    auto centroid2 = [](const std::vector<Vec2>& q) {
        Vec2 m = Vec2::Zero();
        for (const auto& p : q) m += p;
        return Vec2(m / static_cast<double>(q.size()));
    };

    const std::vector<Vec2> q_zero = project(*set_zero);
    const std::vector<Vec2> q_neg = project(*set_neg);
    const std::vector<Vec2> q_pos = project(*set_pos);
    const Vec2 m_zero = centroid2(q_zero);
    const Vec2 m_neg = centroid2(q_neg);
    const Vec2 m_pos = centroid2(q_pos);

    // The two +/-90 sweeps project onto parallel lines; pool them about their
    // own centroids so a single shared direction fits both.
    std::vector<Vec2> pooled;
    pooled.reserve(q_neg.size() + q_pos.size());
    for (const auto& p : q_neg) pooled.push_back(p - m_neg);
    for (const auto& p : q_pos) pooled.push_back(p - m_pos);

    const LinePair lines = fit_line_pair_orthogonal(q_zero, pooled);

    // Signs: each axis points away from the center toward its pivot point.
    const double scale = std::max(1.0, std::abs(major_radius));
    const double sign_z = m_zero.dot(lines.dir_a);
    const double sign_y = (m_neg - m_pos).dot(lines.dir_b);
    if (!allow_ambiguous_signs &&
        (std::abs(sign_z) < 1e-9 * scale || std::abs(sign_y) < 1e-9 * scale))
        throw AmbiguousOrientation(
            "estimate_orientation_offset: projected sweeps are radially degenerate");
    const Vec2 z2 = sign_z < 0.0 ? Vec2(-lines.dir_a) : lines.dir_a;
    const Vec2 y2 = sign_y < 0.0 ? Vec2(-lines.dir_b) : lines.dir_b;

    const Vec3 z_axis = z2.x() * e1 + z2.y() * e2;
    const Vec3 y_axis = y2.x() * e1 + y2.y() * e2;
    const Vec3 x_axis = y_axis.cross(z_axis).dot(normal) >= 0.0 ? normal : Vec3(-normal);

    Mat3 frame;
    frame.col(0) = x_axis;
    frame.col(1) = y_axis;
    frame.col(2) = z_axis;
    OrientationOffset oo;
    oo.orientation = polar_rotation(frame);

    // Known pivot points of the tagged sweeps, then the constant local offset.
    const Vec3 pivot_zero = center + major_radius * oo.orientation.col(2);
    const Vec3 pivot_neg = center + major_radius * oo.orientation.col(1);
    const Vec3 pivot_pos = center - major_radius * oo.orientation.col(1);

    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    const std::pair<const TrajectorySet*, const Vec3*> tagged[] = {
        {set_zero, &pivot_zero}, {set_neg, &pivot_neg}, {set_pos, &pivot_pos}};
    for (const auto& [set, pivot] : tagged) {
        for (const auto& pose : set->poses) {
            sum += pose.rotation.transpose() * (*pivot - pose.translation);
            ++count;
        }
    }
    oo.offset = sum / static_cast<double>(count);
    return oo;
}

// ---------------------------------------------------------------------------
// Full pipeline with global refinement
// ---------------------------------------------------------------------------

namespace {

struct PipelineModel {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    double major_radius = 0.0;
    Mat3 orientation = Mat3::Identity();
    Vec3 offset = Vec3::Zero();
    double plane_rms = 0.0;
    double circle_rms = 0.0;
    bool degenerate = false;
};

PipelineModel run_steps(const TrajectoryObservations& obs, const RansacConfig& cfg,
                        std::uint64_t round) {
    RansacConfig rcfg = cfg;
    rcfg.rng_seed = detail::derive_seed(cfg.rng_seed, 0xB0D5, round);

    const NormalEstimate ne = estimate_normal(obs.x_sets, rcfg);
    const CenterEstimate ce = estimate_center(obs.c_sets, ne.normal, ne.center_seed, rcfg);

    PipelineModel model;
    model.degenerate = ce.degenerate;
    model.normal = ne.normal;
    model.plane_rms = std::hypot(ne.plane_rms_mm, ce.plane_rms_mm);
    model.circle_rms = std::hypot(ne.circle_rms_mm, ce.circle_rms_mm);

    if (ce.degenerate) {
        // Sphere pivot: every pose keeps a fixed distance to the stationary
        // rotation center.
        std::vector<Vec3> all;
        all.reserve(obs.total_poses());
        for (const auto* sets : {&obs.c_sets, &obs.x_sets})
            for (const auto& s : *sets)
                for (const auto& pose : s.poses) all.push_back(pose.translation);
        const auto sphere =
            ransac_fit_sphere(all, stage_cfg(rcfg, kSphere, 0, round));
        model.center = sphere.model.center;
        model.major_radius = 0.0;
    } else {
        model.center = ce.center;
        model.major_radius = estimate_major_radius(ce.center, ce.per_set);
    }

    const OrientationOffset oo = estimate_orientation_offset(
        obs.c_sets, model.normal, model.center, model.major_radius, ce.degenerate);
    model.orientation = oo.orientation;
    model.offset = oo.offset;
    if (model.normal.dot(model.orientation.col(0)) < 0.0) model.normal = -model.normal;
    return model;
}

std::vector<double> score_poses(const TrajectoryObservations& obs, const PipelineModel& model) {
    const SensorSurface surface = SensorSurface::from_pivot(model.center, model.normal,
                                                            model.major_radius, model.offset);
    std::vector<double> d;
    d.reserve(obs.total_poses());
    for (const auto* sets : {&obs.c_sets, &obs.x_sets})
        for (const auto& s : *sets)
            for (const auto& pose : s.poses) d.push_back(surface.distance(pose.translation));
    return d;
}

/// Keeps only the flagged poses (flat index over c-sets then x-sets); drops
/// sets left with fewer than 3 poses. Returns nullopt when the filtered
/// bundle loses a structurally required set.
std::optional<TrajectoryObservations> filter_observations(const TrajectoryObservations& obs,
                                                          const std::vector<char>& keep) {
    TrajectoryObservations out;
    std::size_t flat = 0;
    for (const auto& s : obs.c_sets) {
        TrajectorySet f = s;
        f.poses.clear();
        for (const auto& pose : s.poses) {
            if (keep[flat++]) f.poses.push_back(pose);
        }
        if (f.poses.size() >= 3)
            out.c_sets.push_back(std::move(f));
        else if (s.alpha_tag_deg)
            return std::nullopt;  // a tagged sweep must survive
    }
    for (const auto& s : obs.x_sets) {
        TrajectorySet f = s;
        f.poses.clear();
        for (const auto& pose : s.poses) {
            if (keep[flat++]) f.poses.push_back(pose);
        }
        if (f.poses.size() >= 3) out.x_sets.push_back(std::move(f));
    }
    if (out.x_sets.empty() || out.c_sets.size() < 3) return std::nullopt;
    return out;
}

}  // namespace

CalibrationResult calibrate(const TrajectoryObservations& obs, const RansacConfig& cfg) {
    validate_observations(obs);
    const std::size_t n = obs.total_poses();
    // The reported inlier test is a band of total width inlier_threshold
    // around the implied sensor surface.
    const double band = 0.5 * cfg.inlier_threshold;

    PipelineModel model = run_steps(obs, cfg, 0);

    std::vector<char> keep(n, 1);
    int rounds = 0;
    for (int round = 1; round <= 10; ++round) {
        const std::vector<double> d = score_poses(obs, model);
        std::vector<char> next(n, 0);
        for (std::size_t i = 0; i < n; ++i) next[i] = d[i] < band ? 1 : 0;
        if (next == keep) break;
        const auto filtered = filter_observations(obs, next);
        if (!filtered) break;
        try {
            model = run_steps(*filtered, cfg, static_cast<std::uint64_t>(round));
        } catch (const CalibrationError&) {
            break;  // keep the last consistent model
        }
        keep = std::move(next);
        rounds = round;
    }

    // Final scoring against the final model.
    const std::vector<double> d = score_poses(obs, model);
    std::size_t detected = 0;
    double sum_all = 0.0, sum_inlier = 0.0;
    for (double di : d) {
        sum_all += di;
        if (di < band) {
            ++detected;
            sum_inlier += di;
        }
    }
    const int required = std::max(
        12, static_cast<int>(std::ceil(cfg.min_inlier_fraction * static_cast<double>(n))));
    if (detected < static_cast<std::size_t>(required))
        throw NoConsensus("calibrate: only " + std::to_string(detected) + " of " +
                          std::to_string(n) + " poses support the model (required " +
                          std::to_string(required) + ")");

    CalibrationResult result;
    result.torus_center = model.center;
    result.torus_normal = model.normal;
    result.major_radius = model.major_radius;
    result.orientation = model.orientation;
    result.offset = model.offset;
    result.pivot_locus = Circle3D{model.center, model.normal, model.major_radius};
    result.diagnostics.inliers_required = required;
    result.diagnostics.inliers_detected = static_cast<int>(detected);
    result.diagnostics.mean_all_residual_mm = sum_all / static_cast<double>(n);
    result.diagnostics.mean_inlier_residual_mm =
        detected > 0 ? sum_inlier / static_cast<double>(detected) : 0.0;
    result.diagnostics.plane_rms_mm = model.plane_rms;
    result.diagnostics.circle_rms_mm = model.circle_rms;
    result.diagnostics.refinement_rounds = rounds;
    result.diagnostics.spindle_degenerate = model.degenerate;
    return result;
}

// ---------------------------------------------------------------------------
// Algebraic pivot-circle baseline
// ---------------------------------------------------------------------------

std::vector<double> pivot_circle_energy(const PivotCircleParams& params,
                                        const std::vector<Pose>& poses) {
    std::vector<double> r;
    r.reserve(2 * poses.size());
    for (const auto& pose : poses) {
        const Vec3 p = pose.apply(params.offset) - params.center;
        r.push_back(p.norm() - params.radius);
        r.push_back(p.dot(params.normal));
    }
    return r;
}

namespace {

double cost_of(const std::vector<double>& r) {
    double c = 0.0;
    for (double v : r) c += v * v;
    return c;
}

using ParamVec = Eigen::Matrix<double, 9, 1>;

/// Chart around a base state: (center 3, normal tangent 2, radius 1, offset 3).
PivotCircleParams apply_chart(const PivotCircleParams& base, const Vec3& u1, const Vec3& u2,
                              const ParamVec& delta) {
    PivotCircleParams p = base;
    p.center += delta.segment<3>(0);
    p.normal = (base.normal + delta(3) * u1 + delta(4) * u2).normalized();
    p.radius += delta(5);
    p.offset += delta.segment<3>(6);
    return p;
}

}  // namespace

PivotCircleSolution solve_pivot_circle(const std::vector<Pose>& poses,
                                       const PivotCircleParams& initial) {
    PivotCircleSolution sol;
    sol.params = initial;
    sol.params.normal.normalize();

    std::vector<double> residuals = pivot_circle_energy(sol.params, poses);
    double cost = cost_of(residuals);
    sol.accepted_costs.push_back(cost);
    if (cost <= 1e-20) {  // already at a (numerically) exact solution
        sol.converged = true;
        sol.cost = cost;
        return sol;
    }

    const int m = static_cast<int>(residuals.size());
    double lambda = 1e-3;
    const double h = 1e-5;

    for (int iter = 1; iter <= 200; ++iter) {
        sol.iterations = iter;
        Vec3 u1, u2;
        plane_basis(sol.params.normal, u1, u2);

        Eigen::MatrixXd jac(m, 9);
        ParamVec delta = ParamVec::Zero();
        for (int k = 0; k < 9; ++k) {
            delta(k) = h;
            const auto rp = pivot_circle_energy(apply_chart(sol.params, u1, u2, delta), poses);
            delta(k) = -h;
            const auto rm = pivot_circle_energy(apply_chart(sol.params, u1, u2, delta), poses);
            delta(k) = 0.0;
            for (int i = 0; i < m; ++i) jac(i, k) = (rp[i] - rm[i]) / (2.0 * h);
        }
        const Eigen::VectorXd rvec = Eigen::Map<const Eigen::VectorXd>(residuals.data(), m);
        const Eigen::Matrix<double, 9, 9> hess = jac.transpose() * jac;
        const ParamVec grad = jac.transpose() * rvec;

        bool accepted = false;
        while (lambda <= 1e12) {
            Eigen::Matrix<double, 9, 9> damped = hess;
            for (int k = 0; k < 9; ++k) damped(k, k) += lambda * std::max(hess(k, k), 1e-12);
            const ParamVec step = damped.ldlt().solve(-grad);
            const PivotCircleParams trial = apply_chart(sol.params, u1, u2, step);
            const auto trial_res = pivot_circle_energy(trial, poses);
            const double trial_cost = cost_of(trial_res);
            if (trial_cost < cost) {
                const double decrease = (cost - trial_cost) / std::max(cost, 1e-300);
                sol.params = trial;
                residuals = trial_res;
                cost = trial_cost;
                sol.accepted_costs.push_back(cost);
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (decrease < 1e-12 || step.norm() < 1e-10) {
                    sol.converged = true;
                    sol.cost = cost;
                    return sol;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step found at any damping: stationary.
            sol.converged = true;
            break;
        }
    }
    sol.cost = cost;
    if (!sol.converged) sol.converged = false;
    return sol;
}

TrajectoryObservations transform_observations(const TrajectoryObservations& obs, const Pose& w) {
    TrajectoryObservations out = obs;
    for (auto* sets : {&out.x_sets, &out.c_sets})
        for (auto& s : *sets)
            for (auto& pose : s.poses) pose = w.compose(pose);
    return out;
}

}  // namespace carmpivot
