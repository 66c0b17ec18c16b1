#include "orpm/maps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "orpm/error.hpp"

namespace orpm {

void GridSpec::validate() const
{
    if (stride_pose < 1 || stride_paf < 1) throw ContractViolation("grid: strides must be >= 1");
    if (input_w <= 0 || input_h <= 0) throw ContractViolation("grid: input size must be positive");
    if (input_w % stride_pose || input_h % stride_pose || input_w % stride_paf || input_h % stride_paf)
        throw ContractViolation("grid: strides must divide the input size (" + std::to_string(input_w) +
                                "x" + std::to_string(input_h) + ")");
}

MapStack MapStack::zeros(const GridSpec& grid)
{
    grid.validate();
    MapStack s;
    s.grid = grid;
    for (int j = 0; j < kNumJoints; ++j) {
        s.heatmaps[j] = MapGrid(grid.pose_w(), grid.pose_h(), 1);
        s.orpms[j] = MapGrid(grid.pose_w(), grid.pose_h(), 3);
        s.pafs[j] = MapGrid(grid.paf_w(), grid.paf_h(), 2);
    }
    return s;
}

bool MapStack::same_shape(const MapStack& o) const
{
    for (int j = 0; j < kNumJoints; ++j) {
        if (!heatmaps[j].same_shape(o.heatmaps[j]) || !orpms[j].same_shape(o.orpms[j]) ||
            !pafs[j].same_shape(o.pafs[j]))
            return false;
    }
    return true;
}

bool PersonGT::truncated(JointId j, const GridSpec& g) const
{
    const Point2& p = p2d[index(j)];
    return !(p.x() >= 0.0 && p.y() >= 0.0 && p.x() < g.input_w && p.y() < g.input_h);
}

Joints2D PersonGT::visible_joints(const GridSpec& g) const
{
    Joints2D out;
    for (JointId j : all_joints())
        if (!truncated(j, g)) out[index(j)] = p2d[index(j)];
    return out;
}

void SceneGT::validate() const
{
    grid.validate();
    if (persons.empty()) throw ContractViolation("scene: at least one person is required");
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const auto& p = persons[i];
        if (!(p.root_depth > 0.0) || !std::isfinite(p.root_depth))
            throw ContractViolation("scene: person " + std::to_string(i) + " has non-positive root depth");
        if (p.pose3d_parent_rel.frame != Frame::parent_relative)
            throw ContractViolation("scene: person " + std::to_string(i) + " pose is not parent-relative");
        if (!p.pose3d_parent_rel.is_finite())
            throw ContractViolation("scene: person " + std::to_string(i) + " pose is not finite");
        for (const auto& q : p.p2d)
            if (!q.allFinite())
                throw ContractViolation("scene: person " + std::to_string(i) + " has non-finite 2D joints");
    }
}

Eigen::Vector2i pixel_to_cell(const Point2& px, int stride)
{
    return {static_cast<int>(std::floor(px.x() / stride)), static_cast<int>(std::floor(px.y() / stride))};
}

Point2 cell_center_px(const Eigen::Vector2i& cell, int stride)
{
    return {(cell.x() + 0.5) * stride, (cell.y() + 0.5) * stride};
}

std::vector<float> sample_map(const MapGrid& grid, const Point2& loc_px, int stride)
{
    const Eigen::Vector2i c = pixel_to_cell(loc_px, stride);
    if (!loc_px.allFinite() || !grid.contains(c.x(), c.y()))
        throw ContractViolation("sample_map: location (" + std::to_string(loc_px.x()) + ", " +
                                std::to_string(loc_px.y()) + ") is outside the grid");
    std::vector<float> out(grid.channels);
    for (int k = 0; k < grid.channels; ++k) out[k] = grid.at(c.x(), c.y(), k);
    return out;
}

Vec3 sample_orpm(const MapGrid& orpm, const Point2& loc_px, int stride)
{
    const auto v = sample_map(orpm, loc_px, stride);
    return {v[0], v[1], v[2]};
}

namespace {

// Calls f(x, y, squared_distance) for every in-grid cell within `radius` of `center`.
template <typename F>
void for_disc(const MapGrid& g, const Eigen::Vector2i& center, double radius, F&& f)
{
    const int r = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const int x = center.x() + dx, y = center.y() + dy;
            const double d2 = double(dx * dx + dy * dy);
            if (d2 > r2 || !g.contains(x, y)) continue;
            f(x, y, d2);
        }
    }
}

// Distinct in-grid cells of a person's read-out sites for joint j.
std::vector<Eigen::Vector2i> site_cells(const PersonGT& p, JointId j, const GridSpec& g)
{
    std::vector<Eigen::Vector2i> cells;
    for (const Point2& s : available_readout_sites(p.visible_joints(g), j)) {
        const Eigen::Vector2i c = pixel_to_cell(s, g.stride_pose);
        if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
    }
    return cells;
}

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b)
{
    const Point2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

} // namespace

std::array<MapGrid, kNumJoints> heatmap_target(const SceneGT& scene, const EncoderParams& params)
{
    scene.validate();
    const GridSpec& g = scene.grid;
    std::array<MapGrid, kNumJoints> maps;
    for (auto& m : maps) m = MapGrid(g.pose_w(), g.pose_h(), 1);

    const double inv_2s2 = 1.0 / (2.0 * params.heatmap_sigma * params.heatmap_sigma);
    for (const auto& person : scene.persons) {
        for (JointId j : all_joints()) {
            if (person.truncated(j, g)) continue;
            MapGrid& m = maps[index(j)];
            const Eigen::Vector2i c = pixel_to_cell(person.p2d[index(j)], g.stride_pose);
            for_disc(m, c, params.heatmap_support, [&](int x, int y, double d2) {
                const float v = static_cast<float>(std::exp(-d2 * inv_2s2));
                m.at(x, y) = std::max(m.at(x, y), v);
            });
        }
    }
    return maps;
}

std::array<MapGrid, kNumJoints> paf_target(const SceneGT& scene, const EncoderParams& params)
{
    scene.validate();
    const GridSpec& g = scene.grid;
    const int w = g.paf_w(), h = g.paf_h();
    const double stride = g.stride_paf;

    std::array<MapGrid, kNumJoints> maps;
    for (int j = 0; j < kNumJoints; ++j) {
        maps[j] = MapGrid(w, h, 2);
        const auto par = parent(joint_at(j));
        if (!par) continue;

        std::vector<Eigen::Vector2d> sum(std::size_t(w) * h, Eigen::Vector2d::Zero());
        std::vector<int> count(std::size_t(w) * h, 0);
        for (const auto& person : scene.persons) {
            if (person.truncated(joint_at(j), g) || person.truncated(*par, g)) continue;
            const Point2 a = person.p2d[j] / stride;
            const Point2 b = person.p2d[index(*par)] / stride;
            const double len = (b - a).norm();
            const Eigen::Vector2d dir = len > 0.0 ? Eigen::Vector2d((b - a) / len) : Eigen::Vector2d::Zero();

            const double hw = params.paf_half_width;
            const int x0 = std::max(0, int(std::floor(std::min(a.x(), b.x()) - hw - 1)));
            const int x1 = std::min(w - 1, int(std::ceil(std::max(a.x(), b.x()) + hw + 1)));
            const int y0 = std::max(0, int(std::floor(std::min(a.y(), b.y()) - hw - 1)));
            const int y1 = std::min(h - 1, int(std::ceil(std::max(a.y(), b.y()) + hw + 1)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (distance_to_segment({x + 0.5, y + 0.5}, a, b) > hw) continue;
                    const std::size_t k = std::size_t(y) * w + x;
                    sum[k] += dir;
                    ++count[k];
                }
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t k = std::size_t(y) * w + x;
                if (!count[k]) continue;
                const Eigen::Vector2d v = sum[k] / count[k];
                maps[j].at(x, y, 0) = static_cast<float>(v.x());
                maps[j].at(x, y, 1) = static_cast<float>(v.y());
            }
        }
    }
    return maps;
}

OrpmEncoding encode_orpm(const SceneGT& scene, const EncoderParams& params)
{
    scene.validate();
    const GridSpec& g = scene.grid;
    OrpmEncoding enc;
    for (int j = 0; j < kNumJoints; ++j) {
        enc.orpms[j] = MapGrid(g.pose_w(), g.pose_h(), 3);
        enc.writer[j].assign(std::size_t(g.pose_w()) * g.pose_h(), -1);
    }

    // Far-to-near; among equal depths the lower index is painted last and wins.
    std::vector<int> order(scene.persons.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = scene.persons[a].root_depth, db = scene.persons[b].root_depth;
        if (da != db) return da > db;
        return a > b;
    });

    for (int i : order) {
        const PersonGT& person = scene.persons[i];
        for (JointId j : all_joints()) {
            MapGrid& m = enc.orpms[index(j)];
            auto& writer = enc.writer[index(j)];
            const Vec3& v = person.pose3d_parent_rel[j];
            for (const auto& cell : site_cells(person, j, g)) {
                for_disc(m, cell, params.orpm_radius, [&](int x, int y, double) {
                    m.at(x, y, 0) = static_cast<float>(v.x());
                    m.at(x, y, 1) = static_cast<float>(v.y());
                    m.at(x, y, 2) = static_cast<float>(v.z());
                    writer[std::size_t(y) * m.width + x] = i;
                });
            }
        }
    }
    return enc;
}

MapStack encode_scene(const SceneGT& scene, const EncoderParams& params)
{
    MapStack s;
    s.grid = scene.grid;
    s.heatmaps = heatmap_target(scene, params);
    s.pafs = paf_target(scene, params);
    s.orpms = encode_orpm(scene, params).orpms;
    return s;
}

double orpm_loss(const MapStack& pred, const MapStack& target, const SceneGT& scene, const EncoderParams& params)
{
    if (!pred.same_shape(target)) throw ContractViolation("orpm_loss: prediction and target shapes differ");
    if (!(pred.grid == scene.grid) || !(target.grid == scene.grid))
        throw ContractViolation("orpm_loss: grid spec does not match the scene");

    const double inv_2s2 = 1.0 / (2.0 * params.loss_sigma * params.loss_sigma);
    double loss = 0.0;
    for (JointId j : all_joints()) {
        const MapGrid& p = pred.orpms[index(j)];
        const MapGrid& t = target.orpms[index(j)];
        for (const auto& person : scene.persons) {
            for (const auto& cell : site_cells(person, j, scene.grid)) {
                for_disc(p, cell, params.loss_support, [&](int x, int y, double d2) {
                    double sq = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        const double d = double(p.at(x, y, c)) - double(t.at(x, y, c));
                        sq += d * d;
                    }
                    loss += std::exp(-d2 * inv_2s2) * sq;
                });
            }
        }
    }
    return loss;
}

namespace {

double l2(const std::array<MapGrid, kNumJoints>& a, const std::array<MapGrid, kNumJoints>& b)
{
    double loss = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
        if (!a[j].same_shape(b[j])) throw ContractViolation("loss: prediction and target shapes differ");
        for (std::size_t k = 0; k < a[j].data.size(); ++k) {
            const double d = double(a[j].data[k]) - double(b[j].data[k]);
            loss += d * d;
        }
    }
    return loss;
}

} // namespace

double heatmap_loss(const MapStack& pred, const MapStack& target) { return l2(pred.heatmaps, target.heatmaps); }
double paf_loss(const MapStack& pred, const MapStack& target) { return l2(pred.pafs, target.pafs); }

} // namespace orpm
