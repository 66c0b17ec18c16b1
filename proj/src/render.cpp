#include "orpm/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "orpm/error.hpp"

namespace orpm {

Rgb person_color(std::size_t person)
{
    static constexpr std::array<Rgb, 6> palette = {{
        {230, 60, 60}, {60, 140, 230}, {60, 200, 90}, {200, 90, 220}, {240, 150, 40}, {40, 200, 200},
    }};
    return palette[person % palette.size()];
}

namespace {

void put(Image& img, int x, int y, const Rgb& c)
{
    if (img.contains(x, y)) img.at(x, y) = c;
}

// Bresenham between rounded endpoints.
void line(Image& img, const Point2& a, const Point2& b, const Rgb& c)
{
    int x0 = int(std::floor(a.x())), y0 = int(std::floor(a.y()));
    const int x1 = int(std::floor(b.x())), y1 = int(std::floor(b.y()));
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        put(img, x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void square(Image& img, const Point2& p, const Rgb& c, bool hollow)
{
    const int cx = int(std::floor(p.x())), cy = int(std::floor(p.y()));
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            if (!hollow || std::abs(dx) == 2 || std::abs(dy) == 2) put(img, cx + dx, cy + dy, c);
}

void cross(Image& img, const Point2& p, const Rgb& c)
{
    const int cx = int(std::floor(p.x())), cy = int(std::floor(p.y()));
    for (int d = -2; d <= 2; ++d) {
        put(img, cx + d, cy, c);
        put(img, cx, cy + d, c);
    }
}

} // namespace

Image render_overlay(const SceneGT& scene, const LabelRaster* labels, const std::vector<PoseResult>* poses,
                     RenderStats* stats)
{
    if (scene.persons.empty()) throw ContractViolation("render: scene has no persons");
    const GridSpec& g = scene.grid;
    Image img(g.input_w, g.input_h);
    RenderStats st;

    if (labels) {
        if (labels->width != g.input_w || labels->height != g.input_h)
            throw ContractViolation("render: label raster size differs from the scene");
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const int l = labels->at(x, y);
                if (!l) continue;
                const Rgb c = person_color(std::size_t(l - 1));
                img.at(x, y) = {std::uint8_t(c[0] / 4), std::uint8_t(c[1] / 4), std::uint8_t(c[2] / 4)};
            }
        }
    }

    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const PersonGT& p = scene.persons[i];
        const Rgb c = person_color(i);
        for (JointId j : all_joints()) {
            const auto par = parent(j);
            if (!par) continue;
            line(img, p.p2d[index(j)], p.p2d[index(*par)], c);
            ++st.bones;
        }
    }
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const PersonGT& p = scene.persons[i];
        for (JointId j : all_joints()) {
            const bool occ = p.occluded[index(j)];
            square(img, p.p2d[index(j)], occ ? kOccludedColor : person_color(i), occ);
            ++st.joints;
            st.occluded_joints += occ;
        }
    }

    if (poses) {
        for (const auto& r : *poses) {
            if (!r.detected) continue;
            std::vector<JointId> sites;
            for (const auto& pv : r.provenance)
                if (std::find(sites.begin(), sites.end(), pv.site) == sites.end()) sites.push_back(pv.site);
            for (JointId s : sites) {
                if (!r.detection.has(s)) continue;
                cross(img, r.detection.at(s), kSiteColor);
                ++st.sites;
            }
        }
    }

    if (stats) *stats = st;
    return img;
}

std::string encode_ppm(const Image& img)
{
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.pixels.size() * 3);
    for (const auto& p : img.pixels) out.append(reinterpret_cast<const char*>(p.data()), 3);
    return out;
}

} // namespace orpm
