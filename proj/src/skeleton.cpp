#include "orpm/skeleton.hpp"

#include <algorithm>

#include "orpm/error.hpp"

namespace orpm {

namespace {

constexpr std::array<JointId, kNumJoints> kAllJoints = {
    JointId::pelvis,     JointId::spine,      JointId::neck,    JointId::head,
    JointId::head_top,   JointId::shoulder_l, JointId::shoulder_r, JointId::elbow_l,
    JointId::elbow_r,    JointId::wrist_l,    JointId::wrist_r, JointId::hip_l,
    JointId::hip_r,      JointId::knee_l,     JointId::knee_r,  JointId::ankle_l,
    JointId::ankle_r,
};

constexpr std::array<std::string_view, kNumJoints> kNames = {
    "pelvis",  "spine",   "neck",    "head",  "head_top", "shoulder_l",
    "shoulder_r", "elbow_l", "elbow_r", "wrist_l", "wrist_r", "hip_l",
    "hip_r",   "knee_l",  "knee_r",  "ankle_l", "ankle_r",
};

// -1 marks the root. Parents always precede children in index order.
constexpr std::array<int, kNumJoints> kParent = {
    -1,                                   // pelvis
    index(JointId::pelvis),               // spine
    index(JointId::spine),                // neck
    index(JointId::neck),                 // head
    index(JointId::head),                 // head_top
    index(JointId::neck),                 // shoulder_l
    index(JointId::neck),                 // shoulder_r
    index(JointId::shoulder_l),           // elbow_l
    index(JointId::shoulder_r),           // elbow_r
    index(JointId::elbow_l),              // wrist_l
    index(JointId::elbow_r),              // wrist_r
    index(JointId::pelvis),               // hip_l
    index(JointId::pelvis),               // hip_r
    index(JointId::hip_l),                // knee_l
    index(JointId::hip_r),                // knee_r
    index(JointId::knee_l),               // ankle_l
    index(JointId::knee_r),               // ankle_r
};

constexpr std::array<JointId, 14> kEvalSubset = {
    JointId::head,    JointId::neck,    JointId::shoulder_l, JointId::shoulder_r,
    JointId::elbow_l, JointId::elbow_r, JointId::wrist_l,    JointId::wrist_r,
    JointId::hip_l,   JointId::hip_r,   JointId::knee_l,     JointId::knee_r,
    JointId::ankle_l, JointId::ankle_r,
};

const std::array<Limb, kNumLimbs> kLimbs = {{
    {LimbId::arm_l, {JointId::shoulder_l, JointId::elbow_l, JointId::wrist_l}},
    {LimbId::arm_r, {JointId::shoulder_r, JointId::elbow_r, JointId::wrist_r}},
    {LimbId::leg_l, {JointId::hip_l, JointId::knee_l, JointId::ankle_l}},
    {LimbId::leg_r, {JointId::hip_r, JointId::knee_r, JointId::ankle_r}},
    {LimbId::head, {JointId::head}},
}};

void push_unique(std::vector<Point2>& out, const Point2& p)
{
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
}

} // namespace

std::span<const JointId, kNumJoints> all_joints() { return kAllJoints; }

std::string_view joint_name(JointId j) { return kNames[index(j)]; }

std::optional<JointId> joint_from_name(std::string_view name)
{
    for (int i = 0; i < kNumJoints; ++i)
        if (kNames[i] == name) return joint_at(i);
    return std::nullopt;
}

std::optional<JointId> parent(JointId j)
{
    const int p = kParent[index(j)];
    if (p < 0) return std::nullopt;
    return joint_at(p);
}

const std::array<Limb, kNumLimbs>& limbs() { return kLimbs; }

std::string_view limb_name(LimbId l)
{
    static constexpr std::array<std::string_view, kNumLimbs> names = {
        "arm_l", "arm_r", "leg_l", "leg_r", "head"};
    return names[static_cast<int>(l)];
}

const Limb* limb_of(JointId j)
{
    for (const auto& l : kLimbs)
        if (std::find(l.members.begin(), l.members.end(), j) != l.members.end()) return &l;
    return nullptr;
}

std::span<const JointId> eval_subset() { return kEvalSubset; }

bool in_eval_subset(JointId j)
{
    return std::find(kEvalSubset.begin(), kEvalSubset.end(), j) != kEvalSubset.end();
}

std::vector<Point2> readout_sites(const Joints2D& p2d, JointId j)
{
    if (!p2d[index(JointId::neck)] || !p2d[index(JointId::pelvis)])
        throw ContractViolation("readout_sites: neck and pelvis locations are required");
    return available_readout_sites(p2d, j);
}

std::vector<Point2> available_readout_sites(const Joints2D& p2d, JointId j)
{
    std::vector<Point2> out;
    out.reserve(5);
    for (JointId t : {JointId::neck, JointId::pelvis})
        if (const auto& loc = p2d[index(t)]) push_unique(out, *loc);
    if (const Limb* l = limb_of(j))
        for (JointId m : l->members)
            if (const auto& loc = p2d[index(m)]) push_unique(out, *loc);
    return out;
}

std::string_view frame_name(Frame f)
{
    return f == Frame::parent_relative ? "parent_relative" : "root_relative";
}

std::optional<Frame> frame_from_name(std::string_view name)
{
    if (name == "parent_relative") return Frame::parent_relative;
    if (name == "root_relative") return Frame::root_relative;
    return std::nullopt;
}

bool Pose3D::is_finite() const
{
    return std::all_of(coords.begin(), coords.end(), [](const Vec3& v) { return v.allFinite(); });
}

Pose3D zero_pose(Frame f)
{
    Pose3D p;
    for (auto& c : p.coords) c.setZero();
    p.frame = f;
    return p;
}

Pose3D to_root_relative(const Pose3D& p)
{
    if (p.frame != Frame::parent_relative)
        throw ContractViolation("to_root_relative: pose is not parent-relative");
    if (!p.is_finite()) throw ContractViolation("to_root_relative: non-finite coordinates");

    Pose3D out = zero_pose(Frame::root_relative);
    for (int i = 1; i < kNumJoints; ++i) out.coords[i] = out.coords[kParent[i]] + p.coords[i];
    return out;
}

Pose3D to_parent_relative(const Pose3D& p)
{
    if (p.frame != Frame::root_relative)
        throw ContractViolation("to_parent_relative: pose is not root-relative");
    if (!p.is_finite()) throw ContractViolation("to_parent_relative: non-finite coordinates");

    Pose3D out = zero_pose(Frame::parent_relative);
    for (int i = 1; i < kNumJoints; ++i) out.coords[i] = p.coords[i] - p.coords[kParent[i]];
    return out;
}

std::array<double, kNumJoints> bone_lengths(const Pose3D& root_relative)
{
    std::array<double, kNumJoints> out{};
    for (int i = 1; i < kNumJoints; ++i)
        out[i] = (root_relative.coords[i] - root_relative.coords[kParent[i]]).norm();
    return out;
}

} // namespace orpm
