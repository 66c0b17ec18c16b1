#include "orpm/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Geometry>

#include "orpm/error.hpp"

namespace orpm {

std::size_t mask_area(const Mask& m)
{
    return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](auto v) { return v != 0; }));
}

Point2 project(const Vec3& p, const Camera& cam)
{
    if (!(p.z() > 0.0)) throw ContractViolation("project: point must lie in front of the camera (z > 0)");
    return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

Vec3 unproject(const Point2& px, double z, const Camera& cam)
{
    return {(px.x() - cam.cx) * z / cam.fx, (px.y() - cam.cy) * z / cam.fy, z};
}

std::array<Point2, kNumJoints> PersonRecord::joints_2d() const
{
    std::array<Point2, kNumJoints> out;
    for (int j = 0; j < kNumJoints; ++j) out[j] = project(joints_cam[j], camera);
    return out;
}

Pose3D pose_from_camera_joints(const std::array<Vec3, kNumJoints>& joints_cam)
{
    Pose3D rel = zero_pose(Frame::root_relative);
    const Vec3& root = joints_cam[index(JointId::pelvis)];
    for (int j = 0; j < kNumJoints; ++j) rel.coords[j] = joints_cam[j] - root;
    return to_parent_relative(rel);
}

PersonRecord augment(const PersonRecord& rec, const AugmentParams& params)
{
    if (!(params.scale > 0.0)) throw ContractViolation("augment: scale must be positive");
    if (params.is_identity()) return rec;

    const Camera& cam = rec.camera;
    const double th = params.rotation_deg * M_PI / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const Point2 center(cam.cx, cam.cy);

    PersonRecord out = rec;
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec3& p = rec.joints_cam[j];
        Vec3 q(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z() / params.scale);
        q.x() += params.jitter.x() * q.z() / cam.fx;
        q.y() += params.jitter.y() * q.z() / cam.fy;
        out.joints_cam[j] = q;
    }
    out.pose3d_parent_rel = pose_from_camera_joints(out.joints_cam);

    // Inverse-map every destination pixel center; nearest source pixel.
    Mask m(rec.mask.width, rec.mask.height, 0);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            const Point2 d = (Point2(x + 0.5, y + 0.5) - params.jitter - center) / params.scale;
            const Point2 src = center + Point2(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
            const int sx = int(std::floor(src.x())), sy = int(std::floor(src.y()));
            if (rec.mask.contains(sx, sy)) m.at(x, y) = rec.mask.at(sx, sy);
        }
    }
    out.mask = std::move(m);
    return out;
}

void ComposeConfig::validate() const
{
    if (stride_pose < 1 || stride_paf < 1) throw ContractViolation("compose: strides must be >= 1");
    if (!(depth_min > 0.0) || depth_max < depth_min) throw ContractViolation("compose: invalid depth range");
    if (!(scale_min > 0.0) || scale_max < scale_min) throw ContractViolation("compose: invalid scale range");
    if (rotation_deg_max < 0.0 || jitter_px_max < 0.0 || margin_px < 0.0 || min_site_cells < 0.0)
        throw ContractViolation("compose: ranges must be non-negative");
    if (max_tries < 1) throw ContractViolation("compose: max_tries must be >= 1");
}

namespace {

std::vector<int> far_to_near(const std::vector<PersonRecord>& persons)
{
    std::vector<int> order(persons.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = persons[a].root_depth(), db = persons[b].root_depth();
        if (da != db) return da > db;
        return a > b;
    });
    return order;
}

bool in_frame(const Point2& p, int w, int h) { return p.x() >= 0 && p.y() >= 0 && p.x() < w && p.y() < h; }

} // namespace

LabelRaster paint_layers(const std::vector<PersonRecord>& persons, std::vector<int>* order_out)
{
    if (persons.empty()) throw ContractViolation("paint_layers: no persons");
    const int w = persons.front().mask.width, h = persons.front().mask.height;
    LabelRaster labels(w, h, 0);
    const auto order = far_to_near(persons);
    for (int i : order) {
        const Mask& m = persons[i].mask;
        for (std::size_t k = 0; k < m.data.size(); ++k)
            if (m.data[k]) labels.data[k] = static_cast<std::uint8_t>(i + 1);
    }
    if (order_out) *order_out = order;
    return labels;
}

std::vector<std::array<bool, kNumJoints>> annotate_occlusion(const ComposedScene& scene)
{
    const auto& persons = scene.persons;
    const LabelRaster& labels = scene.composite_mask;
    std::vector<std::array<bool, kNumJoints>> out(persons.size());
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const auto p2d = persons[i].joints_2d();
        for (int j = 0; j < kNumJoints; ++j) {
            const Point2& p = p2d[j];
            if (!in_frame(p, labels.width, labels.height)) {
                out[i][j] = true;
                continue;
            }
            const int label = labels.at(int(std::floor(p.x())), int(std::floor(p.y())));
            if (label == 0 || std::size_t(label - 1) == i) continue;
            out[i][j] = persons[label - 1].root_depth() < persons[i].root_depth();
        }
    }
    return out;
}

ComposedScene assemble_scene(std::vector<PersonRecord> persons, int stride_pose, int stride_paf)
{
    if (persons.empty()) throw ContractViolation("compose: no persons");
    ComposedScene scene;
    scene.persons = std::move(persons);
    scene.composite_mask = paint_layers(scene.persons, &scene.layers);

    scene.scene_gt.grid = {scene.composite_mask.width, scene.composite_mask.height, stride_pose, stride_paf};
    const auto occluded = annotate_occlusion(scene);
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const PersonRecord& r = scene.persons[i];
        PersonGT p;
        p.pose3d_parent_rel = r.pose3d_parent_rel;
        p.p2d = r.joints_2d();
        p.root_depth = r.root_depth();
        p.occluded = occluded[i];
        scene.scene_gt.persons.push_back(p);
    }
    return scene;
}

double min_cross_person_site_cells(const SceneGT& scene)
{
    const GridSpec& g = scene.grid;
    std::vector<Joints2D> visible;
    for (const auto& p : scene.persons) visible.push_back(p.visible_joints(g));

    double best = std::numeric_limits<double>::infinity();
    for (JointId j : all_joints()) {
        std::vector<std::vector<Eigen::Vector2i>> cells(visible.size());
        for (std::size_t i = 0; i < visible.size(); ++i)
            for (const Point2& s : available_readout_sites(visible[i], j))
                cells[i].push_back(pixel_to_cell(s, g.stride_pose));
        for (std::size_t a = 0; a < cells.size(); ++a)
            for (std::size_t b = a + 1; b < cells.size(); ++b)
                for (const auto& ca : cells[a])
                    for (const auto& cb : cells[b]) best = std::min(best, (ca - cb).cast<double>().norm());
    }
    return best;
}

bool has_occlusion(const SceneGT& scene)
{
    for (const auto& p : scene.persons)
        if (std::any_of(p.occluded.begin(), p.occluded.end(), [](bool b) { return b; })) return true;
    return false;
}

ComposedScene compose_scene(const std::vector<PersonRecord>& records, std::uint64_t seed, const ComposeConfig& cfg)
{
    cfg.validate();
    if (records.empty()) throw ContractViolation("compose: at least one person record is required");
    if (records.size() > 4) throw ContractViolation("compose: at most 4 person records are supported");
    const int w = records.front().mask.width, h = records.front().mask.height;
    for (const auto& r : records) {
        if (r.mask.width != w || r.mask.height != h)
            throw ContractViolation("compose: all person masks must share one raster size");
        if (mask_area(r.mask) == 0) throw ContractViolation("compose: empty person mask");
    }
    GridSpec{w, h, cfg.stride_pose, cfg.stride_paf}.validate();

    Rng rng(seed);
    for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
        std::vector<PersonRecord> placed;
        bool ok = true;
        for (const auto& r : records) {
            const double rot = rng.uniform(-cfg.rotation_deg_max, cfg.rotation_deg_max);
            const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
            const Point2 jitter(rng.uniform(-cfg.jitter_px_max, cfg.jitter_px_max),
                                rng.uniform(-cfg.jitter_px_max, cfg.jitter_px_max));
            PersonRecord rec = augment(r, {rot, scale, Point2::Zero()});
            if (cfg.place) {
                const double z = rng.uniform(cfg.depth_min, cfg.depth_max);
                const Point2 target(rng.uniform(cfg.margin_px, w - cfg.margin_px),
                                    rng.uniform(cfg.margin_px, h - cfg.margin_px));
                const double s = rec.root_depth() / z;
                const Point2 c(rec.camera.cx, rec.camera.cy);
                const Point2 pelvis = project(rec.joints_cam[index(JointId::pelvis)], rec.camera);
                rec = augment(rec, {0.0, s, target + jitter - (c + s * (pelvis - c))});
            } else {
                rec = augment(rec, {0.0, 1.0, jitter});
            }
            if (!in_frame(project(rec.joints_cam[index(JointId::pelvis)], rec.camera), w, h)) {
                ok = false;
                break;
            }
            placed.push_back(std::move(rec));
        }
        if (!ok) continue;

        ComposedScene scene = assemble_scene(std::move(placed), cfg.stride_pose, cfg.stride_paf);
        if (cfg.require_unoccluded && has_occlusion(scene.scene_gt)) continue;
        if (cfg.min_site_cells > 0.0 && min_cross_person_site_cells(scene.scene_gt) < cfg.min_site_cells) continue;
        return scene;
    }
    throw ContractViolation("compose: no admissible layout found in " + std::to_string(cfg.max_tries) + " tries");
}

namespace {

Vec3 random_unit(Rng& rng)
{
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    return n > 0.0 ? Vec3(v / n) : Vec3(0, 1, 0);
}

Vec3 perturbed(const Vec3& dir, double amount, Rng& rng) { return (dir + amount * random_unit(rng)).normalized(); }

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b)
{
    const Point2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

void paint_capsule(Mask& m, const Point2& a, const Point2& b, double r)
{
    const int x0 = std::max(0, int(std::floor(std::min(a.x(), b.x()) - r)));
    const int x1 = std::min(m.width - 1, int(std::ceil(std::max(a.x(), b.x()) + r)));
    const int y0 = std::max(0, int(std::floor(std::min(a.y(), b.y()) - r)));
    const int y1 = std::min(m.height - 1, int(std::ceil(std::max(a.y(), b.y()) + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (point_segment_distance({x + 0.5, y + 0.5}, a, b) <= r) m.at(x, y) = 1;
}

// Silhouette radius (meters) of the bone ending at each joint.
constexpr std::array<double, kNumJoints> kBoneRadius = {
    0.0,  0.14, 0.13, 0.09, 0.10, // pelvis spine neck head head_top
    0.07, 0.07, 0.055, 0.055, 0.045, 0.045, // shoulders elbows wrists
    0.10, 0.10, 0.08, 0.08, 0.06, 0.06, // hips knees ankles
};

} // namespace

PersonRecord synthesize_person(Rng& rng, const SynthParams& params)
{
    const double k = rng.uniform(params.bone_scale_min, params.bone_scale_max);
    const Vec3 down(0, 1, 0);

    // Root-relative joints in the body frame; +x is the person's left when
    // facing the camera.
    std::array<Vec3, kNumJoints> rel;
    auto set = [&](JointId j, const Vec3& offset) { rel[index(j)] = rel[index(*parent(j))] + offset; };
    rel[index(JointId::pelvis)].setZero();
    set(JointId::spine, k * Vec3(0, -0.24, 0));
    set(JointId::neck, k * Vec3(0, -0.26, 0));
    const Vec3 head_dir = perturbed(-down, 0.25, rng);
    set(JointId::head, 0.11 * k * head_dir);
    set(JointId::head_top, 0.12 * k * perturbed(head_dir, 0.1, rng));
    for (int side : {0, 1}) {
        const double sx = side == 0 ? 1.0 : -1.0;
        const JointId shoulder = side == 0 ? JointId::shoulder_l : JointId::shoulder_r;
        const JointId elbow = side == 0 ? JointId::elbow_l : JointId::elbow_r;
        const JointId wrist = side == 0 ? JointId::wrist_l : JointId::wrist_r;
        const JointId hip = side == 0 ? JointId::hip_l : JointId::hip_r;
        const JointId knee = side == 0 ? JointId::knee_l : JointId::knee_r;
        const JointId ankle = side == 0 ? JointId::ankle_l : JointId::ankle_r;

        set(shoulder, k * Vec3(0.17 * sx, 0.02, 0));
        const Vec3 upper = random_unit(rng);
        set(elbow, 0.29 * k * upper);
        set(wrist, 0.26 * k * perturbed(upper, 1.2, rng));

        set(hip, k * Vec3(0.11 * sx, 0.03, 0));
        const Vec3 thigh = perturbed(down, 0.6, rng);
        set(knee, 0.44 * k * thigh);
        set(ankle, 0.42 * k * perturbed(thigh, 0.6, rng));
    }

    const double yaw = rng.uniform(-params.yaw_deg_max, params.yaw_deg_max) * M_PI / 180.0;
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();

    PersonRecord rec;
    rec.camera = {params.focal, params.focal, params.image_w / 2.0, params.image_h / 2.0};
    const Vec3 root(0, 0, params.depth);
    for (int j = 0; j < kNumJoints; ++j) rec.joints_cam[j] = root + rot * rel[j];
    rec.pose3d_parent_rel = pose_from_camera_joints(rec.joints_cam);

    rec.mask = Mask(params.image_w, params.image_h, 0);
    const auto p2d = rec.joints_2d();
    for (JointId j : all_joints()) {
        const auto par = parent(j);
        if (!par) continue;
        const double z = 0.5 * (rec.joints_cam[index(j)].z() + rec.joints_cam[index(*par)].z());
        paint_capsule(rec.mask, p2d[index(j)], p2d[index(*par)], params.focal * kBoneRadius[index(j)] / z);
    }
    return rec;
}

ComposedScene generate_scene(int count, std::uint64_t seed, const SynthParams& synth, const ComposeConfig& cfg)
{
    if (count < 1 || count > 4) throw ContractViolation("generate: person count must be in [1, 4]");
    Rng rng(Rng::derive(seed, 0));
    std::vector<PersonRecord> records;
    for (int i = 0; i < count; ++i) records.push_back(synthesize_person(rng, synth));
    return compose_scene(records, Rng::derive(seed, 1), cfg);
}

} // namespace orpm
