#include "carmpivot/pose_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace carmpivot {

namespace {

constexpr const char* kPoseHeader =
    "set_id,axis_kind,alpha_tag_deg,order_index,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("pose file: bad " + what + " value '" + s + "'");
    }
}

void write_set(std::ofstream& out, const TrajectorySet& set) {
    const char kind = set.axis_kind == AxisKind::CArmAxis ? 'c' : 'x';
    const std::string tag = set.alpha_tag_deg ? fmt(*set.alpha_tag_deg) : "";
    for (const auto& pose : set.poses) {
        out << set.id << ',' << kind << ',' << tag << ',' << set.order_index;
        const Mat3& r = pose.rotation;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out << ',' << fmt(r(i, j));
        for (int i = 0; i < 3; ++i) out << ',' << fmt(pose.translation(i));
        out << '\n';
    }
}

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json mat_json(const Mat3& m) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.push_back(m(i, j));
    return out;
}

Mat3 mat_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 9) throw ParseError("expected a row-major 3x3 matrix");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) m(i, k) = j[3 * i + k].get<double>();
    return m;
}

}  // namespace

void write_pose_csv(const std::string& path, const TrajectoryObservations& obs) {
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot open pose file for writing: " + path);
    out << kPoseHeader << '\n';
    for (const auto& set : obs.c_sets) write_set(out, set);
    for (const auto& set : obs.x_sets) write_set(out, set);
    if (!out) throw CalibrationError("failed writing pose file: " + path);
}

TrajectoryObservations read_pose_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("cannot open pose file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("pose file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPoseHeader)
        throw ParseError("pose file header mismatch; expected '" + std::string(kPoseHeader) + "'");

    // Sets keep their order of first appearance.
    std::vector<TrajectorySet> sets;
    std::map<std::string, std::size_t> index_of;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 16)
            throw ParseError("pose file line " + std::to_string(line_no) + ": expected 16 fields, got " +
                             std::to_string(f.size()));

        AxisKind kind;
        if (f[1] == "c")
            kind = AxisKind::CArmAxis;
        else if (f[1] == "x")
            kind = AxisKind::XAxis;
        else
            throw ParseError("pose file line " + std::to_string(line_no) + ": axis_kind must be 'c' or 'x'");

        std::optional<double> tag;
        if (!f[2].empty()) tag = parse_double(f[2], "alpha_tag_deg");
        const int order = static_cast<int>(parse_double(f[3], "order_index"));

        Pose pose;
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = parse_double(f[4 + 3 * i + j], "rotation");
        if (!is_rotation(r, 1e-6))
            throw ParseError("pose file line " + std::to_string(line_no) +
                             ": rotation block is not orthonormal within 1e-6");
        pose.rotation = polar_rotation(r);
        for (int i = 0; i < 3; ++i) pose.translation(i) = parse_double(f[13 + i], "translation");

        auto it = index_of.find(f[0]);
        if (it == index_of.end()) {
            TrajectorySet set;
            set.id = f[0];
            set.axis_kind = kind;
            set.alpha_tag_deg = tag;
            set.order_index = order;
            index_of.emplace(f[0], sets.size());
            sets.push_back(std::move(set));
            it = index_of.find(f[0]);
        } else {
            const TrajectorySet& set = sets[it->second];
            const bool tag_matches =
                (set.alpha_tag_deg.has_value() == tag.has_value()) &&
                (!tag || std::abs(*set.alpha_tag_deg - *tag) < 1e-12);
            if (set.axis_kind != kind || set.order_index != order || !tag_matches)
                throw ParseError("pose file line " + std::to_string(line_no) +
                                 ": inconsistent metadata for set '" + f[0] + "'");
        }
        sets[it->second].poses.push_back(pose);
    }

    TrajectoryObservations obs;
    for (auto& set : sets) {
        if (set.axis_kind == AxisKind::CArmAxis)
            obs.c_sets.push_back(std::move(set));
        else
            obs.x_sets.push_back(std::move(set));
    }
    std::stable_sort(obs.x_sets.begin(), obs.x_sets.end(),
                     [](const TrajectorySet& a, const TrajectorySet& b) {
                         return a.order_index < b.order_index;
                     });
    return obs;
}

void write_scenario_json(const std::string& path, const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["r_min_mm"] = cfg.r_min;
    j["r_maj_mm"] = cfg.r_maj;
    j["world_rotation_row_major"] = mat_json(cfg.world.rotation);
    j["world_translation_mm"] = vec_json(cfg.world.translation);
    j["offset_mm"] = {cfg.offset.x, cfg.offset.y, cfg.offset.z};
    j["c_alphas_deg"] = cfg.c_alphas_deg;
    j["c_betas_deg"] = cfg.c_betas_deg;
    j["x_alphas_deg"] = cfg.x_alphas_deg;
    j["x_betas_deg"] = cfg.x_betas_deg;
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot open scenario file for writing: " + path);
    out << j.dump(2) << "\n";
}

ScenarioConfig read_scenario_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        ScenarioConfig cfg;
        cfg.r_min = j.at("r_min_mm").get<double>();
        cfg.r_maj = j.at("r_maj_mm").get<double>();
        cfg.world.rotation = mat_from(j.at("world_rotation_row_major"));
        if (!is_rotation(cfg.world.rotation, 1e-6))
            throw ParseError("scenario: world rotation is not orthonormal within 1e-6");
        cfg.world.rotation = polar_rotation(cfg.world.rotation);
        cfg.world.translation = vec_from(j.at("world_translation_mm"));
        cfg.offset = SensorOffset::from(vec_from(j.at("offset_mm")));
        cfg.c_alphas_deg = j.at("c_alphas_deg").get<std::vector<double>>();
        cfg.c_betas_deg = j.at("c_betas_deg").get<std::vector<double>>();
        cfg.x_alphas_deg = j.at("x_alphas_deg").get<std::vector<double>>();
        cfg.x_betas_deg = j.at("x_betas_deg").get<std::vector<double>>();
        if (!(cfg.r_min > 0.0)) throw ParseError("scenario: r_min_mm must be positive");
        if (cfg.r_maj < 0.0) throw ParseError("scenario: r_maj_mm must be non-negative");
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
}

void write_result_json(const std::string& path, const CalibrationResult& result) {
    nlohmann::json j;
    j["center"] = vec_json(result.torus_center);
    j["normal"] = vec_json(result.torus_normal);
    j["major_radius_mm"] = result.major_radius;
    j["offset_mm"] = vec_json(result.offset);
    j["orientation_row_major"] = mat_json(result.orientation);
    j["diagnostics"] = {
        {"inliers_required", result.diagnostics.inliers_required},
        {"inliers_detected", result.diagnostics.inliers_detected},
        {"mean_inlier_residual_mm", result.diagnostics.mean_inlier_residual_mm},
        {"mean_all_residual_mm", result.diagnostics.mean_all_residual_mm},
    };
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot open result file for writing: " + path);
    out << j.dump(2) << "\n";
}

CalibrationResult read_result_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("cannot open result file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        CalibrationResult r;
        r.torus_center = vec_from(j.at("center"));
        r.torus_normal = vec_from(j.at("normal"));
        r.major_radius = j.at("major_radius_mm").get<double>();
        r.offset = vec_from(j.at("offset_mm"));
        r.orientation = mat_from(j.at("orientation_row_major"));
        const auto& d = j.at("diagnostics");
        r.diagnostics.inliers_required = d.at("inliers_required").get<int>();
        r.diagnostics.inliers_detected = d.at("inliers_detected").get<int>();
        r.diagnostics.mean_inlier_residual_mm = d.at("mean_inlier_residual_mm").get<double>();
        r.diagnostics.mean_all_residual_mm = d.at("mean_all_residual_mm").get<double>();
        r.pivot_locus = Circle3D{r.torus_center, r.torus_normal, r.major_radius};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("result JSON: ") + e.what());
    }
}

}  // namespace carmpivot
