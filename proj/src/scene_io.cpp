#include "orpm/scene_io.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>

#include <json.hpp>

#include "orpm/error.hpp"

namespace orpm {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "orpm-scene";
constexpr int kVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw FormatError("scene file: " + path + ": " + what);
}

void check_object(const json& o, const std::string& path, std::initializer_list<const char*> allowed, bool strict)
{
    if (!o.is_object()) fail(path, "expected an object");
    if (!strict) return;
    for (const auto& [key, _] : o.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(path, "unknown field '" + key + "'");
    }
}

const json& field(const json& o, const char* key, const std::string& path)
{
    const auto it = o.find(key);
    if (it == o.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

double as_double(const json& v, const std::string& path)
{
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
}

int as_int(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
}

bool as_bool(const json& v, const std::string& path)
{
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path)
{
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path, std::optional<std::size_t> size = std::nullopt)
{
    if (!v.is_array()) fail(path, "expected an array");
    if (size && v.size() != *size)
        fail(path, "expected " + std::to_string(*size) + " entries, found " + std::to_string(v.size()));
    return v;
}

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }
std::string dot(const std::string& path, const char* key) { return path + "." + key; }

json vec(const Point2& p) { return json::array({p.x(), p.y()}); }
json vec(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point2 read_point2(const json& v, const std::string& path)
{
    as_array(v, path, 2);
    return {as_double(v[0], at(path, 0)), as_double(v[1], at(path, 1))};
}

Vec3 read_vec3(const json& v, const std::string& path)
{
    as_array(v, path, 3);
    return {as_double(v[0], at(path, 0)), as_double(v[1], at(path, 1)), as_double(v[2], at(path, 2))};
}

json pose_json(const Pose3D& p)
{
    json coords = json::array();
    for (const auto& c : p.coords) coords.push_back(vec(c));
    return {{"frame", std::string(frame_name(p.frame))}, {"coords", coords}};
}

Pose3D read_pose(const json& v, const std::string& path, bool strict)
{
    check_object(v, path, {"frame", "coords"}, strict);
    const auto fname = as_string(field(v, "frame", path), dot(path, "frame"));
    const auto f = frame_from_name(fname);
    if (!f) fail(dot(path, "frame"), "unknown frame tag '" + fname + "'");
    Pose3D p = zero_pose(*f);
    const auto& coords = as_array(field(v, "coords", path), dot(path, "coords"), kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) p.coords[j] = read_vec3(coords[j], at(dot(path, "coords"), j));
    return p;
}

json person_json(const PersonGT& p)
{
    json j2d = json::array(), occ = json::array();
    for (int j = 0; j < kNumJoints; ++j) {
        j2d.push_back(vec(p.p2d[j]));
        occ.push_back(bool(p.occluded[j]));
    }
    return {{"root_depth", p.root_depth}, {"pose", pose_json(p.pose3d_parent_rel)}, {"joints_2d", j2d},
            {"occluded", occ}};
}

PersonGT read_person(const json& v, const std::string& path, bool strict)
{
    check_object(v, path, {"root_depth", "pose", "joints_2d", "occluded"}, strict);
    PersonGT p;
    p.root_depth = as_double(field(v, "root_depth", path), dot(path, "root_depth"));
    if (!(p.root_depth > 0.0)) fail(dot(path, "root_depth"), "must be positive");
    p.pose3d_parent_rel = read_pose(field(v, "pose", path), dot(path, "pose"), strict);
    if (p.pose3d_parent_rel.frame != Frame::parent_relative) fail(dot(path, "pose.frame"), "must be parent_relative");
    const auto& j2d = as_array(field(v, "joints_2d", path), dot(path, "joints_2d"), kNumJoints);
    const auto& occ = as_array(field(v, "occluded", path), dot(path, "occluded"), kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) {
        p.p2d[j] = read_point2(j2d[j], at(dot(path, "joints_2d"), j));
        p.occluded[j] = as_bool(occ[j], at(dot(path, "occluded"), j));
    }
    return p;
}

json detection_json(const Detection2D& d)
{
    json joints = json::array(), conf = json::array();
    for (int j = 0; j < kNumJoints; ++j) {
        joints.push_back(d.joints[j] ? vec(*d.joints[j]) : json(nullptr));
        conf.push_back(d.confidence[j]);
    }
    return {{"joints", joints}, {"confidence", conf}};
}

Detection2D read_detection(const json& v, const std::string& path, bool strict)
{
    check_object(v, path, {"joints", "confidence"}, strict);
    Detection2D d;
    const auto& joints = as_array(field(v, "joints", path), dot(path, "joints"), kNumJoints);
    const auto& conf = as_array(field(v, "confidence", path), dot(path, "confidence"), kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) {
        d.confidence[j] = as_double(conf[j], at(dot(path, "confidence"), j));
        if (d.confidence[j] < 0.0 || d.confidence[j] > 1.0)
            fail(at(dot(path, "confidence"), j), "confidence must lie in [0,1]");
        if (!joints[j].is_null()) d.joints[j] = read_point2(joints[j], at(dot(path, "joints"), j));
        if (bool(d.joints[j]) != (d.confidence[j] > 0.0))
            fail(at(dot(path, "joints"), j), "a location is required exactly when confidence > 0");
    }
    return d;
}

json pose_result_json(const PoseResult& r)
{
    json prov = json::array();
    for (const auto& p : r.provenance) prov.push_back(p.to_string());
    return {{"detected", r.detected},
            {"pose", r.detected ? pose_json(r.pose) : json(nullptr)},
            {"provenance", prov},
            {"detection", detection_json(r.detection)}};
}

PoseResult read_pose_result(const json& v, const std::string& path, bool strict)
{
    check_object(v, path, {"detected", "pose", "provenance", "detection"}, strict);
    PoseResult r;
    r.detected = as_bool(field(v, "detected", path), dot(path, "detected"));
    const auto& pose = field(v, "pose", path);
    if (r.detected) {
        r.pose = read_pose(pose, dot(path, "pose"), strict);
        if (r.pose.frame != Frame::root_relative) fail(dot(path, "pose.frame"), "must be root_relative");
    } else if (!pose.is_null()) {
        fail(dot(path, "pose"), "must be null for an undetected person");
    }
    const auto& prov = as_array(field(v, "provenance", path), dot(path, "provenance"), kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) {
        const auto s = as_string(prov[j], at(dot(path, "provenance"), j));
        const auto p = Provenance::parse(s);
        if (!p) fail(at(dot(path, "provenance"), j), "unknown provenance '" + s + "'");
        r.provenance[j] = *p;
    }
    r.detection = read_detection(field(v, "detection", path), dot(path, "detection"), strict);
    return r;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

std::string serialize_scene(const SceneDoc& doc)
{
    json names = json::array();
    for (JointId j : all_joints()) names.push_back(std::string(joint_name(j)));

    json frames = json::array();
    for (const auto& f : doc.frames) {
        json persons = json::array();
        for (const auto& p : f.persons) persons.push_back(person_json(p));
        json fr = {{"id", f.id}, {"sequence", f.sequence}, {"persons", persons}};
        if (f.detections) {
            json dets = json::array();
            for (const auto& d : *f.detections) dets.push_back(detection_json(d));
            fr["detections"] = dets;
        }
        if (f.poses) {
            json poses = json::array();
            for (const auto& r : *f.poses) poses.push_back(pose_result_json(r));
            fr["poses"] = poses;
        }
        frames.push_back(fr);
    }

    json out = {{"format", kFormat},
                {"version", kVersion},
                {"joints", names},
                {"grid",
                 {{"input_w", doc.grid.input_w},
                  {"input_h", doc.grid.input_h},
                  {"stride_pose", doc.grid.stride_pose},
                  {"stride_paf", doc.grid.stride_paf}}},
                {"frames", frames}};
    return out.dump(1) + "\n";
}

SceneDoc parse_scene(std::string_view text, bool strict)
{
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("scene file: invalid JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
    check_object(root, "$", {"format", "version", "joints", "grid", "frames"}, strict);
    if (as_string(field(root, "format", "$"), "$.format") != kFormat) fail("$.format", "expected \"orpm-scene\"");
    if (as_int(field(root, "version", "$"), "$.version") != kVersion) fail("$.version", "unsupported version");

    const auto& names = as_array(field(root, "joints", "$"), "$.joints", kNumJoints);
    for (int j = 0; j < kNumJoints; ++j)
        if (as_string(names[j], at("$.joints", j)) != joint_name(joint_at(j)))
            fail(at("$.joints", j), "joint order differs from the canonical 17-joint list");

    SceneDoc doc;
    const auto& grid = field(root, "grid", "$");
    check_object(grid, "$.grid", {"input_w", "input_h", "stride_pose", "stride_paf"}, strict);
    doc.grid.input_w = as_int(field(grid, "input_w", "$.grid"), "$.grid.input_w");
    doc.grid.input_h = as_int(field(grid, "input_h", "$.grid"), "$.grid.input_h");
    doc.grid.stride_pose = as_int(field(grid, "stride_pose", "$.grid"), "$.grid.stride_pose");
    doc.grid.stride_paf = as_int(field(grid, "stride_paf", "$.grid"), "$.grid.stride_paf");
    try {
        doc.grid.validate();
    } catch (const ContractViolation& e) {
        fail("$.grid", e.what());
    }

    const auto& frames = as_array(field(root, "frames", "$"), "$.frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string fp = at("$.frames", i);
        const auto& fr = frames[i];
        check_object(fr, fp, {"id", "sequence", "persons", "detections", "poses"}, strict);
        SceneFrame f;
        f.id = as_int(field(fr, "id", fp), dot(fp, "id"));
        f.sequence = as_string(field(fr, "sequence", fp), dot(fp, "sequence"));
        const auto& persons = as_array(field(fr, "persons", fp), dot(fp, "persons"));
        for (std::size_t k = 0; k < persons.size(); ++k)
            f.persons.push_back(read_person(persons[k], at(dot(fp, "persons"), k), strict));
        if (fr.contains("detections")) {
            const auto& dets = as_array(fr["detections"], dot(fp, "detections"));
            f.detections.emplace();
            for (std::size_t k = 0; k < dets.size(); ++k)
                f.detections->push_back(read_detection(dets[k], at(dot(fp, "detections"), k), strict));
        }
        if (fr.contains("poses")) {
            const auto& poses = as_array(fr["poses"], dot(fp, "poses"));
            f.poses.emplace();
            for (std::size_t k = 0; k < poses.size(); ++k)
                f.poses->push_back(read_pose_result(poses[k], at(dot(fp, "poses"), k), strict));
        }
        doc.frames.push_back(std::move(f));
    }
    return doc;
}

std::vector<EvalGt> eval_ground_truth(const SceneDoc& doc, std::size_t frame)
{
    std::vector<EvalGt> out;
    for (const auto& p : doc.frames.at(frame).persons) {
        EvalGt g;
        g.pose = to_root_relative(p.pose3d_parent_rel);
        g.joints_2d = p.visible_joints(doc.grid);
        g.occluded = p.occluded;
        out.push_back(g);
    }
    return out;
}

std::string report_to_json(const EvalReport& r, const EvalOptions& opts)
{
    json per_joint = json::object();
    for (const auto& [j, v] : r.per_joint) per_joint[std::string(joint_name(j))] = v;
    json per_seq = json::object();
    for (const auto& [name, s] : r.per_sequence)
        per_seq[name] = {{"pck", s.pck}, {"pck_matched", opt(s.pck_matched)}, {"persons", s.persons},
                         {"matched", s.matched}};

    json out = {{"pck_total", r.pck_total},
                {"auc", r.auc},
                {"pck_matched", opt(r.pck_matched)},
                {"mpjpe_matched", opt(r.mpjpe_matched)},
                {"detection_rate", r.detection_rate},
                {"persons", r.persons},
                {"matched", r.matched},
                {"occluded_pck", opt(r.occluded_pck)},
                {"unoccluded_pck", opt(r.unoccluded_pck)},
                {"occluded_joints", r.occluded_joints},
                {"unoccluded_joints", r.unoccluded_joints},
                {"per_joint", per_joint},
                {"per_sequence", per_seq},
                {"settings",
                 {{"radius_mm", opts.radius_mm},
                  {"thresholds_mm", opts.thresholds_mm},
                  {"match_radius_px", opts.match_radius_px},
                  {"retarget", opts.retarget}}}};
    return out.dump(1) + "\n";
}

std::string report_to_table(const EvalReport& r)
{
    auto num = [](std::optional<double> v) {
        if (!v) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", *v);
        return std::string(buf);
    };
    std::string out = "sequence\tpersons\tmatched\tpck\tpck_matched\n";
    for (const auto& [name, s] : r.per_sequence)
        out += name + "\t" + std::to_string(s.persons) + "\t" + std::to_string(s.matched) + "\t" + num(s.pck) + "\t" +
               num(s.pck_matched) + "\n";
    out += "total\t" + std::to_string(r.persons) + "\t" + std::to_string(r.matched) + "\t" + num(r.pck_total) + "\t" +
           num(r.pck_matched) + "\n";
    return out;
}

} // namespace orpm
