#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "orpm/association.hpp"

using namespace orpm;

namespace {

const GridSpec kGrid{320, 256, 4, 8};

MapGrid gaussians(int w, int h, const std::vector<Eigen::Vector2i>& centers)
{
    MapGrid m(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (const auto& c : centers)
                m.at(x, y) = std::max(m.at(x, y), float(oracle::gaussian(double((x - c.x()) * (x - c.x()) + (y - c.y()) * (y - c.y())), 2.0, 6.0)));
    return m;
}

// Exhaustive neighborhood scan.
std::vector<Eigen::Vector2i> brute_peaks(const MapGrid& m, double threshold)
{
    std::vector<Eigen::Vector2i> out;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.at(x, y) < threshold) continue;
            int greater = 0, neighbors = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!(dx || dy) || !m.contains(x + dx, y + dy)) continue;
                    ++neighbors;
                    greater += m.at(x, y) > m.at(x + dx, y + dy);
                }
            if (greater == neighbors) out.emplace_back(x, y);
        }
    }
    return out;
}

// A bone whose ends fall in one pose cell has no direction to score.
bool bones_resolvable(const SceneGT& s)
{
    for (const auto& p : s.persons)
        for (int j = 1; j < kNumJoints; ++j)
            if (oracle::cell_of(p.p2d[j], s.grid.stride_pose) == oracle::cell_of(p.p2d[oracle::kParent[j]], s.grid.stride_pose))
                return false;
    return true;
}

} // namespace

TEST_CASE("extract_peaks")
{
    const MapGrid one = gaussians(20, 20, {{8, 8}});
    const auto p = extract_peaks(one, 0.1);
    REQUIRE(p.size() == 1);
    CHECK(p[0].cell == Eigen::Vector2i(8, 8));
    CHECK(p[0].confidence == 1.0);

    CHECK(extract_peaks(MapGrid(20, 20, 1), 0.1).empty());

    const MapGrid two = gaussians(20, 10, {{4, 4}, {12, 4}});
    const auto q = extract_peaks(two, 0.1);
    REQUIRE(q.size() == 2);
    const auto want = brute_peaks(two, 0.1);
    REQUIRE(want.size() == 2);
    CHECK(q[0].cell == want[0]);
    CHECK(q[1].cell == want[1]);
}

TEST_CASE("plateaus and weak maxima are not peaks")
{
    MapGrid m(6, 6, 1);
    m.at(2, 2) = m.at(3, 2) = 0.8f;
    m.at(5, 5) = 0.05f;
    CHECK(extract_peaks(m, 0.1).empty());
    CHECK(extract_peaks(m, 0.01).size() == 1);
    m.at(0, 0) = 0.1f;
    CHECK(extract_peaks(m, 0.1).size() == 1);
}

TEST_CASE("peak extraction matches the brute-force scan on random fields")
{
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        MapGrid m(12, 9, 1);
        for (float& v : m.data) v = float(rng.uniform_int(0, 5)) / 5.0f;
        const auto got = extract_peaks(m, 0.3);
        const auto want = brute_peaks(m, 0.3);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].cell == want[k]);
            CHECK(got[k].confidence >= 0.3);
        }
    }
}

TEST_CASE("paf_score")
{
    MapGrid f(10, 10, 2);
    const Point2 a(4, 4), b(4, 76); // one column of cells, pointing +y
    for (int y = 0; y < 10; ++y) f.at(0, y, 1) = 1.0f;
    CHECK(paf_score(a, b, f, 8) == doctest::Approx(1.0));
    CHECK(paf_score(a, a, f, 8) == 0.0);

    MapGrid g(10, 10, 2);
    for (int y = 0; y < 10; ++y) g.at(0, y, 0) = 1.0f;
    CHECK(paf_score(a, b, g, 8) == 0.0);

    MapGrid h(10, 10, 2);
    int aligned = 0;
    for (int k = 0; k < 10; ++k) {
        const Point2 s = a + (double(k) / 9) * (b - a);
        if (k % 2 == 0) {
            h.at(int(s.x() / 8), int(s.y() / 8), 1) = 1.0f;
            ++aligned;
        }
    }
    double want = 0.0;
    for (int k = 0; k < 10; ++k) {
        const Point2 s = a + (double(k) / 9) * (b - a);
        want += h.at(int(s.x() / 8), int(s.y() / 8), 1);
    }
    CHECK(paf_score(a, b, h, 8) == doctest::Approx(want / 10));
    CHECK(aligned == 5);
}

TEST_CASE("paf_score is antisymmetric under field negation")
{
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        MapGrid f(10, 10, 2);
        for (float& v : f.data) v = float(rng.uniform(-1, 1));
        MapGrid neg = f;
        for (float& v : neg.data) v = -v;
        const Point2 a(rng.uniform(0, 80), rng.uniform(0, 80)), b(rng.uniform(0, 80), rng.uniform(0, 80));
        CHECK(paf_score(a, b, neg, 8) == doctest::Approx(-paf_score(a, b, f, 8)));
    }
}

TEST_CASE("grouping one person recovers all joints")
{
    const SceneGT s{kGrid, {oracle::place_template({160, 120}, 6.0)}};
    const MapStack maps = encode_scene(s);
    const auto dets = associate(maps);
    REQUIRE(dets.size() == 1);
    for (int j = 0; j < kNumJoints; ++j) {
        REQUIRE(dets[0].has(joint_at(j)));
        const auto c = oracle::cell_of(s.persons[0].p2d[j], 4);
        CHECK(dets[0].at(joint_at(j)) == Point2((c.x() + 0.5) * 4, (c.y() + 0.5) * 4));
        CHECK(dets[0].confidence[j] == 1.0);
    }
}

TEST_CASE("grouping two disjoint persons")
{
    const SceneGT s{kGrid, {oracle::place_template({90, 120}, 6.0), oracle::place_template({230, 130}, 5.0)}};
    const auto dets = associate(encode_scene(s));
    REQUIRE(dets.size() == 2);
    for (const auto& d : dets) {
        // Every joint belongs to the person whose pelvis it was grouped with.
        const int owner = d.at(JointId::pelvis).x() < 160 ? 0 : 1;
        for (int j = 0; j < kNumJoints; ++j) {
            REQUIRE(d.has(joint_at(j)));
            CHECK(oracle::cell_of(d.at(joint_at(j)), 4) == oracle::cell_of(s.persons[owner].p2d[j], 4));
        }
    }
}

TEST_CASE("empty peak set")
{
    const MapStack maps = MapStack::zeros(kGrid);
    CHECK(group_persons(PeakSet{}, maps).empty());
    CHECK(associate(maps).empty());
}

TEST_CASE("isolated peak of a limb joint is dropped, lone torso peak kept")
{
    MapStack maps = MapStack::zeros(kGrid);
    PeakSet peaks;
    peaks[index(JointId::wrist_l)].push_back({{10, 10}, 0.9});
    CHECK(group_persons(peaks, maps).empty());
    peaks[index(JointId::neck)].push_back({{40, 10}, 0.9});
    const auto dets = group_persons(peaks, maps);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].has(JointId::neck));
    CHECK_FALSE(dets[0].has(JointId::wrist_l));
}

TEST_CASE("round-trip association on separated scenes")
{
    ComposeConfig cfg;
    cfg.require_unoccluded = true;
    cfg.min_site_cells = 3.0;
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 60; ++seed) {
        const int m = 1 + int(seed % 4);
        const SceneGT s = generate_scene(m, seed, {}, cfg).scene_gt;
        if (!bones_resolvable(s)) continue;
        ++checked;
        const auto dets = associate(encode_scene(s));
        REQUIRE(dets.size() == std::size_t(m));

        // Each detection is exactly one person's quantized joints.
        std::set<int> owners;
        for (const auto& d : dets) {
            int owner = -1;
            for (int i = 0; i < m; ++i)
                if (oracle::cell_of(d.at(JointId::pelvis), 4) == oracle::cell_of(s.persons[i].p2d[0], 4)) owner = i;
            REQUIRE(owner >= 0);
            owners.insert(owner);
            for (int j = 0; j < kNumJoints; ++j) {
                REQUIRE(d.has(joint_at(j)));
                CHECK(oracle::cell_of(d.at(joint_at(j)), 4) == oracle::cell_of(s.persons[owner].p2d[j], 4));
            }
        }
        CHECK(owners.size() == std::size_t(m));
    }
}

TEST_CASE("a bone collapsed into one cell splits off a torso-less fragment")
{
    SceneGT s{kGrid, {oracle::place_template({160, 120}, 6.0)}};
    auto& p = s.persons[0];
    p.p2d[index(JointId::wrist_r)] = p.p2d[index(JointId::elbow_r)] + Point2(0.5, 0.5);
    const auto c = oracle::cell_of(p.p2d[index(JointId::elbow_r)], 4);
    p.p2d[index(JointId::elbow_r)] = Point2(c.x() * 4 + 1.0, c.y() * 4 + 1.0);
    p.p2d[index(JointId::wrist_r)] = Point2(c.x() * 4 + 3.0, c.y() * 4 + 3.0);
    const auto dets = associate(encode_scene(s));
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].has(JointId::elbow_r));
    CHECK_FALSE(dets[0].has(JointId::wrist_r));
}

TEST_CASE("each peak is used by at most one detection; output is ordered and deterministic")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const MapStack maps = encode_scene(generate_scene(2 + int(seed % 3), seed).scene_gt);
        const auto dets = associate(maps);
        CHECK(dets == associate(maps));
        for (std::size_t k = 1; k < dets.size(); ++k)
            CHECK(dets[k - 1].total_confidence() >= dets[k].total_confidence());
        for (int j = 0; j < kNumJoints; ++j) {
            std::set<std::pair<double, double>> used;
            for (const auto& d : dets) {
                if (!d.has(joint_at(j))) continue;
                CHECK(used.insert({d.at(joint_at(j)).x(), d.at(joint_at(j)).y()}).second);
            }
        }
    }
}

TEST_CASE("detection clear")
{
    Detection2D d;
    d.joints[3] = Point2(1, 2);
    d.confidence[3] = 0.5;
    CHECK(d.has(JointId::head));
    d.clear(JointId::head);
    CHECK_FALSE(d.has(JointId::head));
    CHECK(d.total_confidence() == 0.0);
}
