#pragma once

/// \file metrics.hpp
/// \brief 3DPCK, AUC and MPJPE with prediction-to-annotation matching,
/// occlusion splits and bone-length retargeting.
///
/// An annotated person without a matched prediction counts every one of its
/// joints as incorrect in PCK and AUC and is left out of MPJPE.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orpm/readout.hpp"

namespace orpm {

struct EvalPair {
    std::optional<Pose3D> pred; ///< present iff matched
    Pose3D gt;                  ///< root-relative
    std::array<bool, kNumJoints> occluded{};
    std::string sequence;

    bool matched() const { return pred.has_value(); }
};

struct JointTally {
    std::size_t correct = 0;
    std::size_t total = 0;
    std::optional<double> percent() const
    {
        if (total == 0) return std::nullopt;
        return 100.0 * double(correct) / double(total);
    }
};

/// Joints to score; defaults to the 14-joint evaluation subset.
using JointFilter = std::span<const JointId>;

/// Throws ContractViolation if any compared pose is not root-relative or there
/// are no joints to score.
double pck3d(const std::vector<EvalPair>& pairs, double radius_mm = 150.0, JointFilter subset = eval_subset());

/// 0..150 mm in 5 mm steps.
std::vector<double> default_auc_thresholds();
/// Mean PCK over the threshold grid. Throws on an empty grid.
double auc(const std::vector<EvalPair>& pairs, const std::vector<double>& thresholds_mm = default_auc_thresholds(),
           JointFilter subset = eval_subset());

/// Millimeters over matched pairs only. Throws if nothing is matched.
double mpjpe(const std::vector<EvalPair>& pairs, JointFilter subset = eval_subset());

struct OcclusionSplit {
    JointTally occluded;
    JointTally unoccluded;
};
OcclusionSplit occlusion_breakdown(const std::vector<EvalPair>& pairs, double radius_mm = 150.0,
                                   JointFilter subset = eval_subset());

struct EvalGt {
    Pose3D pose; ///< root-relative
    Joints2D joints_2d{}; ///< missing = truncated
    std::array<bool, kNumJoints> occluded{};
};

/// Fraction of the ground truth's visible subset joints that the prediction
/// places within radius_px.
double agreement_2d(const Detection2D& pred, const EvalGt& gt, double radius_px, JointFilter subset = eval_subset());

/// Greedy one-to-one matching by descending agreement (> 0 required); ties
/// by (gt index, pred index). Undetected predictions never match.
/// Result is indexed by ground truth.
std::vector<std::optional<std::size_t>> match_predictions(const std::vector<PoseResult>& preds,
                                                          const std::vector<EvalGt>& gts, double radius_px = 40.0);

/// Rescales each bone to the given length (indexed by child joint),
/// preserving its direction. Zero-length bones take the parent bone's
/// direction; the root's children fall back to -y.
Pose3D retarget_bones(const Pose3D& pred, const std::array<double, kNumJoints>& gt_bone_lengths);

struct EvalFrame {
    std::string sequence;
    std::vector<PoseResult> preds;
    std::vector<EvalGt> gts;
};

struct EvalOptions {
    double radius_mm = 150.0;
    std::vector<double> thresholds_mm = default_auc_thresholds();
    double match_radius_px = 40.0;
    bool retarget = false;
};

struct SequenceReport {
    double pck = 0.0;
    std::optional<double> pck_matched;
    std::size_t persons = 0;
    std::size_t matched = 0;
};

struct EvalReport {
    double pck_total = 0.0;
    double auc = 0.0;
    std::optional<double> pck_matched;
    std::optional<double> mpjpe_matched;
    double detection_rate = 0.0;
    std::size_t persons = 0;
    std::size_t matched = 0;
    std::map<std::string, SequenceReport> per_sequence;
    std::vector<std::pair<JointId, double>> per_joint;
    std::optional<double> occluded_pck;
    std::optional<double> unoccluded_pck;
    std::size_t occluded_joints = 0;
    std::size_t unoccluded_joints = 0;
};

/// Matches every frame, builds the pairs and aggregates all metrics.
std::vector<EvalPair> build_pairs(const std::vector<EvalFrame>& frames, const EvalOptions& opts = {});
EvalReport evaluate(const std::vector<EvalFrame>& frames, const EvalOptions& opts = {});

} // namespace orpm
