#include "orpm/raster_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <set>

#include "orpm/error.hpp"

namespace orpm {

const NamedMap* RasterContainer::find(std::string_view name) const
{
    for (const auto& m : maps)
        if (m.name == name) return &m;
    return nullptr;
}

namespace {

template <typename T>
void put(std::string& out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view b) : bytes_(b) {}

    template <typename T>
    T get(const char* field)
    {
        need(sizeof(T), field);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    std::string_view take(std::size_t n, const char* field)
    {
        need(n, field);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what, std::size_t at) const
    {
        throw FormatError("raster container: " + what + " at byte offset " + std::to_string(at));
    }

private:
    void need(std::size_t n, const char* field) const
    {
        if (remaining() < n) fail(std::string("truncated field '") + field + "'", pos_);
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string prefix_of(const std::string& name)
{
    const auto slash = name.find('/');
    return slash == std::string::npos ? std::string() : name.substr(0, slash + 1);
}

} // namespace

std::string write_container(const RasterContainer& c)
{
    if (c.maps.size() > std::numeric_limits<std::uint16_t>::max())
        throw ContractViolation("raster container: too many maps");
    std::set<std::string> names;
    std::size_t payload = 0;
    for (const auto& m : c.maps) {
        if (!names.insert(m.name).second) throw ContractViolation("raster container: duplicate map name " + m.name);
        if (m.name.size() > std::numeric_limits<std::uint16_t>::max())
            throw ContractViolation("raster container: map name too long");
        if (m.grid.channels < 1 || m.grid.channels > 255 || m.grid.width < 0 || m.grid.height < 0)
            throw ContractViolation("raster container: invalid shape for " + m.name);
        if (m.grid.data.size() != std::size_t(m.grid.width) * m.grid.height * m.grid.channels)
            throw ContractViolation("raster container: data size mismatch for " + m.name);
        payload += m.name.size() + 11 + 4 * m.grid.data.size();
    }

    std::string out;
    out.reserve(8 + payload);
    out.append("ORPM");
    put<std::uint16_t>(out, kRasterVersion);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(c.maps.size()));
    for (const auto& m : c.maps) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(m.name.size()));
        out.append(m.name);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.width));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.height));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(m.grid.channels));
        for (float f : m.grid.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

RasterContainer read_container(std::string_view bytes)
{
    Reader r(bytes);
    if (r.take(4, "magic") != "ORPM") r.fail("bad magic (expected \"ORPM\")", 0);
    const std::size_t version_at = r.pos();
    const auto version = r.get<std::uint16_t>("version");
    if (version != kRasterVersion) r.fail("unsupported version " + std::to_string(version), version_at);
    const auto count = r.get<std::uint16_t>("map_count");

    RasterContainer c;
    std::set<std::string> names;
    for (std::uint16_t i = 0; i < count; ++i) {
        const std::size_t at = r.pos();
        const auto name_len = r.get<std::uint16_t>("name_len");
        std::string name(r.take(name_len, "name"));
        if (!names.insert(name).second) r.fail("duplicate map name '" + name + "'", at);
        const std::size_t shape_at = r.pos();
        const auto w = r.get<std::uint32_t>("width");
        const auto h = r.get<std::uint32_t>("height");
        const auto ch = r.get<std::uint8_t>("channels");
        if (ch == 0) r.fail("zero channels in map '" + name + "'", shape_at + 8);
        const std::uint64_t n = std::uint64_t(w) * h * ch;
        if (n > r.remaining() / 4) r.fail("truncated data of map '" + name + "'", r.pos());
        if (w > std::uint32_t(std::numeric_limits<int>::max()) || h > std::uint32_t(std::numeric_limits<int>::max()))
            r.fail("oversized map '" + name + "'", shape_at);

        NamedMap m{std::move(name), MapGrid(int(w), int(h), ch)};
        const auto raw = r.take(std::size_t(n) * 4, "data");
        for (std::size_t k = 0; k < n; ++k) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b) u |= std::uint32_t(static_cast<unsigned char>(raw[4 * k + b])) << (8 * b);
            m.grid.data[k] = std::bit_cast<float>(u);
        }
        c.maps.push_back(std::move(m));
    }
    if (r.remaining()) r.fail(std::to_string(r.remaining()) + " trailing bytes", r.pos());
    return c;
}

void append_stack(RasterContainer& c, const MapStack& s, const std::string& prefix)
{
    for (JointId j : all_joints())
        c.maps.push_back({prefix + "heatmap/" + std::string(joint_name(j)), s.heatmaps[index(j)]});
    for (JointId j : all_joints())
        c.maps.push_back({prefix + "orpm/" + std::string(joint_name(j)), s.orpms[index(j)]});
    for (JointId j : all_joints())
        c.maps.push_back({prefix + "paf/" + std::string(joint_name(j)), s.pafs[index(j)]});
}

MapStack extract_stack(const RasterContainer& c, const std::string& prefix, const GridSpec& grid)
{
    MapStack s;
    s.grid = grid;
    auto fetch = [&](const char* kind, JointId j) -> const MapGrid& {
        const std::string name = prefix + kind + "/" + std::string(joint_name(j));
        const NamedMap* m = c.find(name);
        if (!m) throw FormatError("raster container: missing map '" + name + "'");
        return m->grid;
    };
    for (JointId j : all_joints()) {
        s.heatmaps[index(j)] = fetch("heatmap", j);
        s.orpms[index(j)] = fetch("orpm", j);
        s.pafs[index(j)] = fetch("paf", j);
    }
    grid.validate();
    if (!s.same_shape(MapStack::zeros(grid)))
        throw ContractViolation("raster container: map shapes of '" + prefix +
                                "' disagree with the grid strides (check --grid-stride/--paf-stride)");
    return s;
}

std::vector<std::string> frame_prefixes(const RasterContainer& c)
{
    std::vector<std::string> out;
    for (const auto& m : c.maps) {
        const std::string p = prefix_of(m.name);
        if (p.rfind("frame", 0) != 0) continue;
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
}

} // namespace orpm
