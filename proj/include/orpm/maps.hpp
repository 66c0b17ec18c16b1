#pragma once

/// \file maps.hpp
/// \brief Ground-truth map stack: heatmaps, part affinity fields and
/// occlusion-robust pose-maps (ORPMs), plus the per-pixel training losses.
///
/// The encoders here stand in for the network: they paint exactly what a
/// perfectly trained model would output for a known scene. Every map of one
/// kind has the same shape regardless of the number of people.

#include <array>
#include <cstdint>
#include <vector>

#include "orpm/skeleton.hpp"

namespace orpm {

struct GridSpec {
    int input_w = 0;
    int input_h = 0;
    int stride_pose = 4; ///< heatmaps and ORPMs
    int stride_paf = 8;

    int pose_w() const { return input_w / stride_pose; }
    int pose_h() const { return input_h / stride_pose; }
    int paf_w() const { return input_w / stride_paf; }
    int paf_h() const { return input_h / stride_paf; }

    /// Throws ContractViolation unless strides are >= 1 and divide the input size.
    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

/// Fixed constants of the oracle encoder and the losses, in grid cells.
struct EncoderParams {
    double heatmap_sigma = 2.0;
    double heatmap_support = 6.0; ///< 3 sigma
    double orpm_radius = 2.0;
    double paf_half_width = 1.0;
    double loss_sigma = 2.0;
    double loss_support = 6.0;
};

/// Dense row-major grid with interleaved channels, stored as 32-bit floats.
struct MapGrid {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    MapGrid() = default;
    MapGrid(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0.0f) {}

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    float& at(int x, int y, int c = 0) { return data[(std::size_t(y) * width + x) * channels + c]; }
    float at(int x, int y, int c = 0) const { return data[(std::size_t(y) * width + x) * channels + c]; }
    bool same_shape(const MapGrid& o) const
    {
        return width == o.width && height == o.height && channels == o.channels;
    }
    bool operator==(const MapGrid&) const = default;
};

struct MapStack {
    GridSpec grid;
    std::array<MapGrid, kNumJoints> heatmaps; ///< 1 channel, pose resolution
    std::array<MapGrid, kNumJoints> orpms;    ///< 3 channels (meters, parent-relative), pose resolution
    std::array<MapGrid, kNumJoints> pafs;     ///< 2 channels, paf resolution

    /// Zero-filled stack with the canonical shapes for `grid`.
    static MapStack zeros(const GridSpec& grid);
    bool same_shape(const MapStack& o) const;
    bool operator==(const MapStack&) const = default;
};

struct PersonGT {
    Pose3D pose3d_parent_rel = zero_pose(Frame::parent_relative);
    std::array<Point2, kNumJoints> p2d = zero_joints<Point2>(); ///< pixels; may lie outside the frame (truncated)
    double root_depth = 1.0;              ///< meters
    std::array<bool, kNumJoints> occluded{};

    bool truncated(JointId j, const GridSpec& g) const;
    /// p2d with truncated joints removed.
    Joints2D visible_joints(const GridSpec& g) const;
    bool operator==(const PersonGT&) const = default;
};

struct SceneGT {
    GridSpec grid;
    std::vector<PersonGT> persons;

    /// Throws ContractViolation when the scene breaks the encoder preconditions.
    void validate() const;
    bool operator==(const SceneGT&) const = default;
};

/// Grid cell of a pixel location (floor division by stride). Not bounds checked.
Eigen::Vector2i pixel_to_cell(const Point2& px, int stride);
/// Pixel coordinates of the center of a cell.
Point2 cell_center_px(const Eigen::Vector2i& cell, int stride);

/// Nearest-cell lookup of a pixel location; returns all channels of the cell.
/// Throws ContractViolation when the location falls outside the grid.
std::vector<float> sample_map(const MapGrid& grid, const Point2& loc_px, int stride);
Vec3 sample_orpm(const MapGrid& orpm, const Point2& loc_px, int stride);

std::array<MapGrid, kNumJoints> heatmap_target(const SceneGT& scene, const EncoderParams& params = {});
std::array<MapGrid, kNumJoints> paf_target(const SceneGT& scene, const EncoderParams& params = {});

struct OrpmEncoding {
    std::array<MapGrid, kNumJoints> orpms;
    /// Per joint, per pose cell: index of the person whose value is stored, -1 if none.
    std::array<std::vector<int>, kNumJoints> writer;
};

/// Paints persons far-to-near (ties: lower index wins) so nearer people own
/// contested cells.
OrpmEncoding encode_orpm(const SceneGT& scene, const EncoderParams& params = {});

/// All three target families in one stack.
MapStack encode_scene(const SceneGT& scene, const EncoderParams& params = {});

/// Squared ORPM error around every read-out site of every person, weighted
/// by a truncated Gaussian centered on the site. Throws on shape mismatch.
double orpm_loss(const MapStack& pred, const MapStack& target, const SceneGT& scene,
                 const EncoderParams& params = {});
/// Plain per-pixel L2 over all heatmaps.
double heatmap_loss(const MapStack& pred, const MapStack& target);
/// Plain per-pixel L2 over all part affinity fields.
double paf_loss(const MapStack& pred, const MapStack& target);

} // namespace orpm
