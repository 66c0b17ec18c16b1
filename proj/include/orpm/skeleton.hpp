#pragma once

/// \file skeleton.hpp
/// \brief Joint taxonomy, kinematic tree, limb decomposition and read-out sites.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace orpm {

constexpr int kNumJoints = 17;

enum class JointId : std::uint8_t {
    pelvis = 0,
    spine,
    neck,
    head,
    head_top,
    shoulder_l,
    shoulder_r,
    elbow_l,
    elbow_r,
    wrist_l,
    wrist_r,
    hip_l,
    hip_r,
    knee_l,
    knee_r,
    ankle_l,
    ankle_r,
};

constexpr int index(JointId j) { return static_cast<int>(j); }
constexpr JointId joint_at(int i) { return static_cast<JointId>(i); }

/// All joints in index order.
std::span<const JointId, kNumJoints> all_joints();

std::string_view joint_name(JointId j);
/// Inverse of joint_name; empty for unknown names.
std::optional<JointId> joint_from_name(std::string_view name);

/// Kinematic parent; empty for the pelvis (tree root).
std::optional<JointId> parent(JointId j);

inline bool is_torso_site(JointId j) { return j == JointId::neck || j == JointId::pelvis; }

enum class LimbId : std::uint8_t { arm_l = 0, arm_r, leg_l, leg_r, head };
constexpr int kNumLimbs = 5;

struct Limb {
    LimbId id;
    std::vector<JointId> members; // proximal -> distal
    JointId extremity() const { return members.back(); }
};

/// Limbs in read-out order: arm_l, arm_r, leg_l, leg_r, head.
const std::array<Limb, kNumLimbs>& limbs();
std::string_view limb_name(LimbId l);

/// The limb containing j, or nullptr for pelvis, spine, neck and head_top.
const Limb* limb_of(JointId j);

/// The 14 joints scored by the evaluation metrics.
std::span<const JointId> eval_subset();
bool in_eval_subset(JointId j);

using Point2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Eigen vectors are not zeroed by default construction.
template <typename V>
std::array<V, kNumJoints> zero_joints()
{
    std::array<V, kNumJoints> a;
    a.fill(V::Zero());
    return a;
}

/// Per-joint optional 2D locations of one person (pixels).
using Joints2D = std::array<std::optional<Point2>, kNumJoints>;

/// Read-out site set of joint j: neck and pelvis locations plus the locations
/// of every member of j's limb, deduplicated, in that order.
/// Throws ContractViolation if the neck or pelvis location is missing.
std::vector<Point2> readout_sites(const Joints2D& p2d, JointId j);

/// Same set, but silently skips any location that is missing. Used for other
/// people's detections, which may be incomplete.
std::vector<Point2> available_readout_sites(const Joints2D& p2d, JointId j);

enum class Frame : std::uint8_t { parent_relative, root_relative };
std::string_view frame_name(Frame f);
std::optional<Frame> frame_from_name(std::string_view name);

struct Pose3D {
    std::array<Vec3, kNumJoints> coords = zero_joints<Vec3>();
    Frame frame = Frame::root_relative;

    Vec3& operator[](JointId j) { return coords[index(j)]; }
    const Vec3& operator[](JointId j) const { return coords[index(j)]; }

    bool is_finite() const;
    bool operator==(const Pose3D&) const = default;
};

Pose3D zero_pose(Frame f);

/// Sums parent-relative offsets along each chain. Throws on non-finite
/// input or a pose that is not parent-relative.
Pose3D to_root_relative(const Pose3D& p);
/// Inverse: each joint minus its parent. Pelvis keeps its (zero) position.
Pose3D to_parent_relative(const Pose3D& p);

/// Length of the bone joint -> parent, indexed by child joint; 0 for pelvis.
std::array<double, kNumJoints> bone_lengths(const Pose3D& root_relative);

} // namespace orpm
