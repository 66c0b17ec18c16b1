#include "orpm/association.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace orpm {

double Detection2D::total_confidence() const
{
    return std::accumulate(confidence.begin(), confidence.end(), 0.0);
}

void Detection2D::clear(JointId j)
{
    joints[index(j)].reset();
    confidence[index(j)] = 0.0;
}

std::vector<Peak> extract_peaks(const MapGrid& heatmap, double threshold)
{
    std::vector<Peak> out;
    for (int y = 0; y < heatmap.height; ++y) {
        for (int x = 0; x < heatmap.width; ++x) {
            const float v = heatmap.at(x, y);
            if (!(v >= threshold)) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx || dy) && heatmap.contains(x + dx, y + dy) && !(v > heatmap.at(x + dx, y + dy))) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) out.push_back({{x, y}, double(v)});
        }
    }
    return out;
}

PeakSet extract_peaks(const std::array<MapGrid, kNumJoints>& heatmaps, double threshold)
{
    PeakSet out;
    for (int j = 0; j < kNumJoints; ++j) out[j] = extract_peaks(heatmaps[j], threshold);
    return out;
}

double paf_score(const Point2& child_px, const Point2& parent_px, const MapGrid& paf, int stride_paf, int samples)
{
    const Point2 d = parent_px - child_px;
    const double len = d.norm();
    if (len == 0.0 || samples < 1) return 0.0;
    const Point2 dir = d / len;

    double sum = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? 0.5 : double(k) / (samples - 1);
        const Eigen::Vector2i c = pixel_to_cell(child_px + t * d, stride_paf);
        if (!paf.contains(c.x(), c.y())) continue;
        sum += paf.at(c.x(), c.y(), 0) * dir.x() + paf.at(c.x(), c.y(), 1) * dir.y();
    }
    return sum / samples;
}

namespace {

struct Candidate {
    double score;
    int child;
    int parent;
};

struct DisjointSet {
    std::vector<int> up;
    explicit DisjointSet(int n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int a)
    {
        while (up[a] != a) a = up[a] = up[up[a]];
        return a;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) up[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::vector<Detection2D> group_persons(const PeakSet& peaks, const MapStack& maps, const AssociationParams& params)
{
    const int stride_pose = maps.grid.stride_pose;

    // Global node ids, type-major.
    std::array<int, kNumJoints> offset{};
    int n_nodes = 0;
    for (int j = 0; j < kNumJoints; ++j) {
        offset[j] = n_nodes;
        n_nodes += static_cast<int>(peaks[j].size());
    }
    if (n_nodes == 0) return {};

    auto location = [&](int j, int k) { return cell_center_px(peaks[j][k].cell, stride_pose); };

    DisjointSet sets(n_nodes);
    for (JointId child : all_joints()) {
        const auto par = parent(child);
        if (!par) continue;
        const int cj = index(child), pj = index(*par);
        const auto& cs = peaks[cj];
        const auto& ps = peaks[pj];

        std::vector<Candidate> cands;
        for (int a = 0; a < int(cs.size()); ++a) {
            for (int b = 0; b < int(ps.size()); ++b) {
                const double s = paf_score(location(cj, a), location(pj, b), maps.pafs[cj], maps.grid.stride_paf,
                                           params.paf_samples);
                if (s > 0.0) cands.push_back({s, a, b});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
            if (x.score != y.score) return x.score > y.score;
            return std::tie(x.child, x.parent) < std::tie(y.child, y.parent);
        });

        std::vector<bool> child_used(cs.size(), false), parent_used(ps.size(), false);
        for (const auto& c : cands) {
            if (child_used[c.child] || parent_used[c.parent]) continue;
            child_used[c.child] = parent_used[c.parent] = true;
            sets.unite(offset[cj] + c.child, offset[pj] + c.parent);
        }
    }

    // Components in order of their smallest node id.
    std::vector<int> comp_of_root(n_nodes, -1);
    std::vector<Detection2D> dets;
    std::vector<int> sizes;
    std::vector<bool> has_torso;
    for (int j = 0; j < kNumJoints; ++j) {
        for (int k = 0; k < int(peaks[j].size()); ++k) {
            const int root = sets.find(offset[j] + k);
            if (comp_of_root[root] < 0) {
                comp_of_root[root] = static_cast<int>(dets.size());
                dets.emplace_back();
                sizes.push_back(0);
                has_torso.push_back(false);
            }
            const int c = comp_of_root[root];
            dets[c].joints[j] = location(j, k);
            dets[c].confidence[j] = peaks[j][k].confidence;
            ++sizes[c];
            if (is_torso_site(joint_at(j))) has_torso[c] = true;
        }
    }

    std::vector<Detection2D> out;
    for (std::size_t c = 0; c < dets.size(); ++c)
        if (sizes[c] > 1 || has_torso[c]) out.push_back(dets[c]);
    std::stable_sort(out.begin(), out.end(), [](const Detection2D& a, const Detection2D& b) {
        return a.total_confidence() > b.total_confidence();
    });
    return out;
}

std::vector<Detection2D> associate(const MapStack& maps, const AssociationParams& params)
{
    return group_persons(extract_peaks(maps.heatmaps, params.threshold), maps, params);
}

} // namespace orpm
