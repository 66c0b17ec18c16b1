#pragma once

/// \file scene_io.hpp
/// \brief Structured-text (JSON) documents: scenes with ground truth,
/// detections and pose results, and evaluation reports.
///
/// Scene document:
///
///     { "format": "orpm-scene", "version": 1,
///       "joints": [17 joint names in index order],
///       "grid": {"input_w", "input_h", "stride_pose", "stride_paf"},
///       "frames": [ { "id", "sequence",
///                     "persons":    [ {"root_depth", "pose": {"frame", "coords": 17x3},
///                                      "joints_2d": 17x2, "occluded": 17 bools} ],
///                     "detections": [ {"joints": 17 x ([u,v] | null), "confidence": 17} ],   optional
///                     "poses":      [ {"detected", "pose": {...} | null,
///                                      "provenance": 17 strings, "detection": {...}} ]     optional
///                   } ] }
///
/// Occlusion flags cover inter-person occlusion and truncation only.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orpm/metrics.hpp"

namespace orpm {

struct SceneFrame {
    int id = 0;
    std::string sequence = "S1";
    std::vector<PersonGT> persons;
    std::optional<std::vector<Detection2D>> detections;
    std::optional<std::vector<PoseResult>> poses;

    bool operator==(const SceneFrame&) const = default;
};

struct SceneDoc {
    GridSpec grid;
    std::vector<SceneFrame> frames;

    SceneGT scene_gt(std::size_t frame) const { return {grid, frames.at(frame).persons}; }
    bool operator==(const SceneDoc&) const = default;
};

std::string serialize_scene(const SceneDoc& doc);
/// Strict mode rejects unknown fields. Throws FormatError naming the field path.
SceneDoc parse_scene(std::string_view text, bool strict = true);

/// Ground truth of one frame in the form the metrics consume.
std::vector<EvalGt> eval_ground_truth(const SceneDoc& doc, std::size_t frame);

/// Report with a stable field order.
std::string report_to_json(const EvalReport& r, const EvalOptions& opts);
/// Per-sequence table (tab separated), one row per sequence plus a total row.
std::string report_to_table(const EvalReport& r);

} // namespace orpm
