#pragma once

/// \file readout.hpp
/// \brief Hierarchical, occlusion-aware 3D pose read-out from ORPMs.
///
/// A base pose is read at the neck (or the pelvis when the neck is not a
/// valid read-out location). Each limb is then refined at its most distal
/// valid joint; if none of its joints is valid the base values are kept.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "orpm/association.hpp"

namespace orpm {

struct ReadoutConfig {
    double t_c = 0.1;          ///< confidence threshold, in (0,1)
    double t_d = 8.0;          ///< isolation distance in pixels
    bool torso_only = false;   ///< skip limb refinement

    /// Isolation tied to map resolution: two pose cells.
    static ReadoutConfig for_grid(const GridSpec& g);
    void validate() const;
};

struct Provenance {
    enum class Kind : std::uint8_t { torso_base, limb_at_joint, undetected_person };
    Kind kind = Kind::undetected_person;
    /// Joint whose 2D location was sampled (neck/pelvis for torso_base).
    JointId site = JointId::pelvis;

    bool operator==(const Provenance&) const = default;
    std::string to_string() const;
    static std::optional<Provenance> parse(std::string_view s);
};

struct PoseResult {
    bool detected = false;
    Pose3D pose = zero_pose(Frame::root_relative); ///< meaningful only when detected
    std::array<Provenance, kNumJoints> provenance{};
    Detection2D detection;

    bool operator==(const PoseResult&) const = default;
};

/// Valid read-out location: confident enough and at least t_d away from every
/// read-out site of joint j of every other detection.
bool is_valid_readout(std::size_t person, const std::vector<Detection2D>& dets, JointId j,
                      const ReadoutConfig& cfg);

struct BasePose {
    Pose3D pose; ///< parent-relative
    JointId site;
};

/// All 17 joints sampled at the neck, else the pelvis; empty if neither is valid.
std::optional<BasePose> read_base_pose(std::size_t person, const std::vector<Detection2D>& dets,
                                       const MapStack& maps, const ReadoutConfig& cfg);

/// Walks the limb from its extremity toward the torso and, at the first valid
/// joint, overwrites every limb member with the values sampled at that joint.
/// Returns the joint used, or empty if the base pose was kept.
std::optional<JointId> refine_limb(Pose3D& base, std::array<Provenance, kNumJoints>& provenance,
                                   std::size_t person, const std::vector<Detection2D>& dets,
                                   const MapStack& maps, const Limb& limb, const ReadoutConfig& cfg);

/// Full read-out for every detection, in detection order.
/// Throws ContractViolation if the map shapes disagree with the grid spec.
std::vector<PoseResult> infer_poses(const MapStack& maps, const std::vector<Detection2D>& dets,
                                    const ReadoutConfig& cfg);

} // namespace orpm
