#pragma once

/// \file compositor.hpp
/// \brief Depth-aware compositing of single-person records into annotated
/// multi-person scenes, with in-plane geometric augmentation.
///
/// Only inter-person occlusion and truncation by the frame are annotated;
/// masks carry no information about self-occlusion.

#include <cstdint>
#include <vector>

#include "orpm/maps.hpp"
#include "orpm/random.hpp"

namespace orpm {

template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    T& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    const T& at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    bool operator==(const Raster&) const = default;
};

using Mask = Raster<std::uint8_t>;
using LabelRaster = Raster<std::uint8_t>;

std::size_t mask_area(const Mask& m);

struct Camera {
    double fx = 500.0, fy = 500.0, cx = 0.0, cy = 0.0;
    bool operator==(const Camera&) const = default;
};

/// Pinhole projection. Throws ContractViolation for z <= 0.
Point2 project(const Vec3& p, const Camera& cam);
Vec3 unproject(const Point2& px, double z, const Camera& cam);

struct PersonRecord {
    Mask mask;
    Pose3D pose3d_parent_rel = zero_pose(Frame::parent_relative);
    std::array<Vec3, kNumJoints> joints_cam = zero_joints<Vec3>(); ///< meters, camera frame (x right, y down, z forward)
    Camera camera;

    std::array<Point2, kNumJoints> joints_2d() const;
    double root_depth() const { return joints_cam[index(JointId::pelvis)].z(); }
    bool operator==(const PersonRecord&) const = default;
};

/// Parent-relative pose implied by camera-space joints.
Pose3D pose_from_camera_joints(const std::array<Vec3, kNumJoints>& joints_cam);

struct AugmentParams {
    double rotation_deg = 0.0; ///< about the principal point, image plane
    double scale = 1.0;        ///< about the principal point
    Point2 jitter = Point2::Zero();

    bool is_identity() const { return rotation_deg == 0.0 && scale == 1.0 && jitter.isZero(0.0); }
};

/// In-plane similarity applied to mask and projected joints. The 3D joints are
/// rotated about the optical axis, have their depths divided by the scale and
/// are sheared by the jitter so that projection commutes exactly with the 2D
/// transform (rotation is exact for fx == fy). Truncation is allowed.
PersonRecord augment(const PersonRecord& rec, const AugmentParams& params);

struct ComposeConfig {
    int stride_pose = 4;
    int stride_paf = 8;
    bool place = true;              ///< resample root depth and image position
    double depth_min = 5.0, depth_max = 9.0;
    double margin_px = 16.0;        ///< pelvis placement margin from the frame
    double rotation_deg_max = 0.0;
    double scale_min = 1.0, scale_max = 1.0;
    double jitter_px_max = 0.0;
    /// Reject layouts with any inter-person occlusion or truncation.
    bool require_unoccluded = false;
    /// Reject layouts where two people's same-map read-out sites are closer
    /// than this many pose cells (0 disables).
    double min_site_cells = 0.0;
    int max_tries = 200;

    void validate() const;
};

struct ComposedScene {
    std::vector<PersonRecord> persons; ///< after augmentation and placement, input order
    std::vector<int> layers;           ///< person indices, far to near
    LabelRaster composite_mask;        ///< 0 background, i+1 for person i
    SceneGT scene_gt;
};

/// Composites 1-4 records. Deterministic given the seed.
/// Throws ContractViolation for an empty or oversized list, mismatched
/// raster sizes, or when no admissible layout is found within max_tries.
ComposedScene compose_scene(const std::vector<PersonRecord>& records, std::uint64_t seed,
                            const ComposeConfig& cfg = {});

/// Layers already-placed persons: paints labels, annotates occlusion and
/// fills the scene ground truth. No sampling.
ComposedScene assemble_scene(std::vector<PersonRecord> persons, int stride_pose = 4, int stride_paf = 8);

/// Paints labels far-to-near by root depth (ties: lower index on top).
LabelRaster paint_layers(const std::vector<PersonRecord>& persons, std::vector<int>* order = nullptr);

/// Per person, per joint: outside the frame, or covered by a strictly nearer person.
std::vector<std::array<bool, kNumJoints>> annotate_occlusion(const ComposedScene& scene);

/// Smallest pose-cell distance between read-out sites that share a map but
/// belong to different people; +inf for a single person.
double min_cross_person_site_cells(const SceneGT& scene);
bool has_occlusion(const SceneGT& scene);

struct SynthParams {
    int image_w = 512;
    int image_h = 384;
    double focal = 500.0;
    double depth = 7.0;
    double yaw_deg_max = 60.0;
    double bone_scale_min = 0.9, bone_scale_max = 1.1;
};

/// Random articulated person, rooted on the optical axis at params.depth,
/// with a capsule-union silhouette.
PersonRecord synthesize_person(Rng& rng, const SynthParams& params = {});

/// Convenience for the generator: `count` synthetic people composed with one seed.
ComposedScene generate_scene(int count, std::uint64_t seed, const SynthParams& synth = {},
                             const ComposeConfig& cfg = {});

} // namespace orpm
