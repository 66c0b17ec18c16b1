#pragma once

/// \file raster_io.hpp
/// \brief Binary container for named float rasters.
///
/// Layout (all integers little-endian):
///
///     "ORPM"  u16 version  u16 map_count
///     per map: u16 name_len, name bytes (UTF-8), u32 width, u32 height,
///              u8 channels, width*height*channels f32 (row-major,
///              channels interleaved per cell)

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "orpm/maps.hpp"

namespace orpm {

constexpr std::uint16_t kRasterVersion = 1;

struct NamedMap {
    std::string name;
    MapGrid grid;
    bool operator==(const NamedMap&) const = default;
};

struct RasterContainer {
    std::vector<NamedMap> maps;

    const NamedMap* find(std::string_view name) const;
    bool operator==(const RasterContainer&) const = default;
};

/// Throws ContractViolation for duplicate names or oversized fields.
std::string write_container(const RasterContainer& c);
/// Throws FormatError naming the field and byte offset of the first violation.
RasterContainer read_container(std::string_view bytes);

/// Map names used for one frame's stack: "<prefix>heatmap/<joint>",
/// "<prefix>orpm/<joint>", "<prefix>paf/<joint>".
void append_stack(RasterContainer& c, const MapStack& s, const std::string& prefix);
/// Rebuilds a stack from the container; the grid spec supplies the strides.
/// Throws FormatError for missing maps and ContractViolation for shapes that
/// disagree with the grid.
MapStack extract_stack(const RasterContainer& c, const std::string& prefix, const GridSpec& grid);

/// Prefixes "frame<k>/" present in the container, in order of first appearance.
std::vector<std::string> frame_prefixes(const RasterContainer& c);

} // namespace orpm
