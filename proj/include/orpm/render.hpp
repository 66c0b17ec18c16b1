#pragma once

/// \file render.hpp
/// \brief Static overlay of masks, 2D skeletons and read-out sites as a PPM.
///
/// Style: mask labels tint the background; bones are 1 px lines in the
/// person's color; visible joints are filled 5x5 squares in the person's
/// color; occluded joints are hollow 5x5 white outlines whose center pixel is
/// left untouched; read-out sites of pose results are 5 px yellow crosses.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orpm/compositor.hpp"
#include "orpm/readout.hpp"

namespace orpm {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Image(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h, Rgb{0, 0, 0}) {}
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    Rgb& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

constexpr Rgb kOccludedColor = {255, 255, 255};
constexpr Rgb kSiteColor = {255, 220, 0};
Rgb person_color(std::size_t person);

struct RenderStats {
    int bones = 0;
    int joints = 0;
    int occluded_joints = 0;
    int sites = 0;
};

/// Throws ContractViolation for a scene without persons.
Image render_overlay(const SceneGT& scene, const LabelRaster* labels, const std::vector<PoseResult>* poses,
                     RenderStats* stats = nullptr);

/// Binary P6 PPM.
std::string encode_ppm(const Image& img);

} // namespace orpm
