#pragma once

/// \file association.hpp
/// \brief Heatmap peak extraction and part-affinity-field grouping of joint
/// detections into people.

#include <array>
#include <vector>

#include "orpm/maps.hpp"

namespace orpm {

struct Peak {
    Eigen::Vector2i cell;
    double confidence = 0.0;
    bool operator==(const Peak&) const = default;
};

/// Per joint type, peaks in row-major scan order.
using PeakSet = std::array<std::vector<Peak>, kNumJoints>;

/// One person's 2D joints. A joint with confidence 0 has no location;
/// locations are input-pixel coordinates of the detecting cell's center.
struct Detection2D {
    Joints2D joints{};
    std::array<double, kNumJoints> confidence{};

    bool has(JointId j) const { return joints[index(j)].has_value() && confidence[index(j)] > 0.0; }
    const Point2& at(JointId j) const { return *joints[index(j)]; }
    double total_confidence() const;
    /// Drops the location and zeroes the confidence of j.
    void clear(JointId j);
    bool operator==(const Detection2D&) const = default;
};

struct AssociationParams {
    double threshold = 0.1;
    int paf_samples = 10;
};

/// Cells strictly greater than all in-grid 8-neighbors and >= threshold.
PeakSet extract_peaks(const std::array<MapGrid, kNumJoints>& heatmaps, double threshold);
std::vector<Peak> extract_peaks(const MapGrid& heatmap, double threshold);

/// Mean agreement between the field and the unit direction child -> parent,
/// sampled at `samples` equidistant points including both ends. Points are
/// in input pixels; the field lives on a grid of the given stride.
/// Coincident points score 0.
double paf_score(const Point2& child_px, const Point2& parent_px, const MapGrid& paf, int stride_paf,
                 int samples = 10);

/// Greedy per-bone matching on PAF scores followed by connected components.
/// Detections are ordered by descending total confidence.
std::vector<Detection2D> group_persons(const PeakSet& peaks, const MapStack& maps,
                                       const AssociationParams& params = {});

/// Convenience: extract_peaks + group_persons on a map stack.
std::vector<Detection2D> associate(const MapStack& maps, const AssociationParams& params = {});

} // namespace orpm
