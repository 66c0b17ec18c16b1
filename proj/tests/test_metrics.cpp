#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "orpm/error.hpp"
#include "orpm/metrics.hpp"

using namespace orpm;

namespace {

Pose3D gt_pose() { return oracle::template_pose(); }

Pose3D random_pose(Rng& rng)
{
    Pose3D p = zero_pose(Frame::parent_relative);
    for (int j = 1; j < kNumJoints; ++j) p.coords[j] = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.2;
    return to_root_relative(p);
}

EvalPair pair(const Pose3D& gt, std::optional<Pose3D> pred)
{
    EvalPair p;
    p.gt = gt;
    p.pred = std::move(pred);
    return p;
}

Pose3D displaced(Pose3D p, int j, double mm)
{
    p.coords[j] += Vec3(0, 0, mm / 1000.0);
    return p;
}

PoseResult detected(const Pose3D& pose, const EvalGt& gt)
{
    PoseResult r;
    r.detected = true;
    r.pose = pose;
    for (int j = 0; j < kNumJoints; ++j) {
        r.detection.joints[j] = gt.joints_2d[j];
        r.detection.confidence[j] = gt.joints_2d[j] ? 1.0 : 0.0;
    }
    return r;
}

EvalGt eval_gt(const Pose3D& pose, const Point2& offset)
{
    EvalGt g;
    g.pose = pose;
    for (int j = 0; j < kNumJoints; ++j) g.joints_2d[j] = offset + 100.0 * pose.coords[j].head<2>();
    return g;
}

} // namespace

TEST_CASE("pck3d")
{
    const Pose3D g = gt_pose();
    CHECK(pck3d({pair(g, g)}) == 100.0);
    CHECK(pck3d({pair(g, displaced(g, 9, 149.0))}) == 100.0);
    CHECK(pck3d({pair(g, displaced(g, 9, 151.0))}) == doctest::Approx(100.0 * 13 / 14));

    Pose3D half = g;
    for (int k = 0; k < 7; ++k) half = displaced(half, oracle::subset()[k], 200.0);
    CHECK(pck3d({pair(g, half)}) == 50.0);

    // Joints outside the subset are ignored.
    CHECK(pck3d({pair(g, displaced(g, index(JointId::head_top), 900.0))}) == 100.0);

    CHECK(pck3d({pair(g, std::nullopt), pair(g, g)}) == 50.0);
    CHECK_THROWS_AS(pck3d({pair(g, zero_pose(Frame::parent_relative))}), ContractViolation);
    CHECK_THROWS_AS(pck3d({}), ContractViolation);
}

TEST_CASE("auc")
{
    const Pose3D g = gt_pose();
    CHECK(auc({pair(g, g)}) == 100.0);
    CHECK(default_auc_thresholds().size() == 31);

    const Pose3D origin = zero_pose(Frame::root_relative);
    Pose3D shifted = origin;
    for (auto& c : shifted.coords) c = Vec3(0.075, 0, 0);
    const std::vector<EvalPair> pairs = {pair(origin, shifted)};
    int at_least = 0;
    for (int k = 0; k <= 30; ++k) at_least += 5 * k >= 75;
    CHECK(auc(pairs) == doctest::Approx(100.0 * at_least / 31.0).epsilon(1e-12));
    CHECK(std::abs(auc(pairs) - oracle::auc31(pairs)) <= 1e-9);
    CHECK_THROWS_AS(auc({pair(g, g)}, {}), ContractViolation);
}

TEST_CASE("mpjpe")
{
    const Pose3D g = gt_pose();
    CHECK(mpjpe({pair(g, g)}) == 0.0);
    Pose3D p = g;
    for (auto& c : p.coords) c += Vec3(0.03, 0.04, 0);
    CHECK(mpjpe({pair(g, p), pair(g, std::nullopt)}) == doctest::Approx(50.0));
    CHECK_THROWS_AS(mpjpe({pair(g, std::nullopt)}), ContractViolation);
}

TEST_CASE("metrics agree with brute-force oracles on random pairs")
{
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<EvalPair> pairs;
        const int n = rng.uniform_int(1, 5);
        for (int k = 0; k < n; ++k) {
            const Pose3D g = random_pose(rng);
            Pose3D p = g;
            for (auto& c : p.coords) c += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.08;
            p.coords[0].setZero();
            pairs.push_back(pair(g, rng.uniform() < 0.2 ? std::nullopt : std::optional<Pose3D>(p)));
            for (auto& o : pairs.back().occluded) o = rng.uniform() < 0.3;
        }
        CHECK(pck3d(pairs) == doctest::Approx(oracle::pck(pairs, 150.0)).epsilon(1e-12));
        CHECK(std::abs(auc(pairs) - oracle::auc31(pairs)) <= 1e-9);
        CHECK(auc(pairs) <= pck3d(pairs, 150.0) + 1e-12);
        if (std::any_of(pairs.begin(), pairs.end(), [](const EvalPair& p) { return p.matched(); }))
            CHECK(mpjpe(pairs) == doctest::Approx(oracle::mpjpe(pairs)).epsilon(1e-12));

        double prev = -1.0;
        for (double r = 0; r <= 300; r += 10) {
            const double v = pck3d(pairs, r);
            CHECK(v >= prev);
            CHECK((v >= 0.0 && v <= 100.0));
            prev = v;
        }

        const auto split = occlusion_breakdown(pairs);
        CHECK(split.occluded.total + split.unoccluded.total == std::size_t(14 * n));
        CHECK(split.occluded.correct + split.unoccluded.correct ==
              std::size_t(std::lround(pck3d(pairs) * 14 * n / 100.0)));
        const double recombined = (double(split.occluded.total) * split.occluded.percent().value_or(0.0) +
                                   double(split.unoccluded.total) * split.unoccluded.percent().value_or(0.0)) /
                                  double(14 * n);
        CHECK(recombined == doctest::Approx(pck3d(pairs)).epsilon(1e-12));

        // Order of persons does not matter.
        auto rev = pairs;
        std::reverse(rev.begin(), rev.end());
        CHECK(pck3d(rev) == pck3d(pairs));
        CHECK(auc(rev) == doctest::Approx(auc(pairs)).epsilon(1e-14));
    }
}

TEST_CASE("occlusion split edge cases")
{
    const Pose3D g = gt_pose();
    EvalPair p = pair(g, displaced(g, 9, 400.0));
    auto s = occlusion_breakdown({p});
    CHECK_FALSE(s.occluded.percent().has_value());
    CHECK(s.unoccluded.percent() == pck3d({p}));
    p.occluded.fill(true);
    s = occlusion_breakdown({p});
    CHECK_FALSE(s.unoccluded.percent().has_value());
    CHECK(s.occluded.percent() == pck3d({p}));
}

TEST_CASE("matching")
{
    const Pose3D g = gt_pose();
    const EvalGt a = eval_gt(g, {100, 100});
    CHECK(match_predictions({detected(g, a)}, {a}) == std::vector<std::optional<std::size_t>>{0});
    CHECK(agreement_2d(detected(g, a).detection, a, 40.0) == 1.0);

    PoseResult miss = detected(g, a);
    miss.detected = false;
    CHECK(match_predictions({miss}, {a}) == std::vector<std::optional<std::size_t>>{std::nullopt});

    const std::vector<EvalGt> two = {a, eval_gt(g, {300, 100})};
    CHECK(match_predictions({}, two) == std::vector<std::optional<std::size_t>>{std::nullopt, std::nullopt});
    const EvalReport r = evaluate({{"S1", {}, two}});
    CHECK(r.detection_rate == 0.0);
    CHECK(r.pck_total == 0.0);
    CHECK_FALSE(r.mpjpe_matched.has_value());
}

TEST_CASE("matching recovers permutations of a 3-person scene")
{
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EvalGt> gts;
        for (int k = 0; k < 3; ++k) gts.push_back(eval_gt(random_pose(rng), {120.0 * k + rng.uniform(0, 20), 200}));
        std::array<std::size_t, 3> perm = {0, 1, 2};
        for (int s = rng.uniform_int(0, 5); s > 0; --s) std::next_permutation(perm.begin(), perm.end());
        std::vector<PoseResult> preds(3);
        for (int k = 0; k < 3; ++k) {
            EvalGt noisy = gts[perm[k]];
            for (auto& q : noisy.joints_2d) *q += Point2(rng.normal(), rng.normal()) * 5.0;
            preds[k] = detected(gts[perm[k]].pose, noisy);
        }

        // Exhaustive assignment oracle: the permutation with the highest total agreement.
        std::array<std::size_t, 3> best{}, cand = {0, 1, 2};
        double best_score = -1;
        do {
            double sc = 0;
            for (int g = 0; g < 3; ++g) sc += agreement_2d(preds[cand[g]].detection, gts[g], 40.0);
            if (sc > best_score) {
                best_score = sc;
                best = cand;
            }
        } while (std::next_permutation(cand.begin(), cand.end()));

        const auto m = match_predictions(preds, gts);
        for (std::size_t g = 0; g < 3; ++g) {
            REQUIRE(m[g].has_value());
            CHECK(*m[g] == best[g]);
            CHECK(perm[*m[g]] == g);
        }
    }
}

TEST_CASE("unmatched person is all wrong")
{
    const Pose3D g1 = gt_pose();
    Pose3D g2 = gt_pose();
    for (auto& c : g2.coords) c *= 1.1;
    const std::vector<EvalGt> gts = {eval_gt(g1, {100, 150}), eval_gt(g2, {350, 150})};
    const EvalReport full = evaluate({{"S1", {detected(g1, gts[0]), detected(g2, gts[1])}, gts}});
    CHECK(full.pck_total == 100.0);
    const EvalReport one = evaluate({{"S1", {detected(g2, gts[1])}, gts}});
    CHECK(one.pck_total == 50.0);
    CHECK(one.detection_rate == 0.5);
    CHECK(one.pck_matched == 100.0);
    CHECK(one.mpjpe_matched == 0.0);
}

TEST_CASE("retargeting")
{
    const Pose3D g = gt_pose();
    const auto len = bone_lengths(g);
    const Pose3D same = retarget_bones(g, len);
    for (int j = 0; j < kNumJoints; ++j) CHECK((same.coords[j] - g.coords[j]).norm() <= 1e-12);

    Pose3D twice = g;
    for (auto& c : twice.coords) c *= 2.0;
    const Pose3D back = retarget_bones(twice, len);
    for (int j = 0; j < kNumJoints; ++j) CHECK((back.coords[j] - g.coords[j]).norm() <= 1e-9);

    Rng rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pose3D p = random_pose(rng);
        const auto want = bone_lengths(random_pose(rng));
        const Pose3D r = retarget_bones(p, want);
        const auto got = bone_lengths(r);
        for (int j = 1; j < kNumJoints; ++j) REQUIRE(std::abs(got[j] - want[j]) <= 1e-9);
        const Pose3D again = retarget_bones(r, want);
        for (int j = 0; j < kNumJoints; ++j) REQUIRE((again.coords[j] - r.coords[j]).norm() <= 1e-9);
    }

    SUBCASE("zero-length bone takes the parent's direction")
    {
        Pose3D z = g;
        z[JointId::wrist_l] = z[JointId::elbow_l];
        const Pose3D r = retarget_bones(z, len);
        const Vec3 upper = (r[JointId::elbow_l] - r[JointId::shoulder_l]).normalized();
        const Vec3 fore = r[JointId::wrist_l] - r[JointId::elbow_l];
        CHECK(fore.norm() == doctest::Approx(len[index(JointId::wrist_l)]));
        CHECK((fore.normalized() - upper).norm() <= 1e-12);
    }
    CHECK_THROWS_AS(retarget_bones(zero_pose(Frame::parent_relative), len), ContractViolation);
}

TEST_CASE("evaluate report breakdowns")
{
    const Pose3D g = gt_pose();
    std::vector<EvalFrame> frames;
    for (int f = 0; f < 4; ++f) {
        EvalGt gt = eval_gt(g, {150, 150});
        gt.occluded[index(JointId::wrist_r)] = f % 2 == 0;
        const Pose3D pred = f == 3 ? displaced(g, index(JointId::wrist_r), 300.0) : g;
        frames.push_back({f < 2 ? "S1" : "S2", {detected(pred, gt)}, {gt}});
    }
    const EvalReport r = evaluate(frames);
    CHECK(r.persons == 4);
    CHECK(r.matched == 4);
    CHECK(r.per_sequence.at("S1").pck == 100.0);
    CHECK(r.per_sequence.at("S2").pck == doctest::Approx(100.0 * 27 / 28));
    CHECK(r.per_joint.size() == 14);
    for (const auto& [j, v] : r.per_joint) CHECK(v == (j == JointId::wrist_r ? 75.0 : 100.0));
    CHECK(r.occluded_joints == 2);
    CHECK(r.occluded_pck == 100.0);
    CHECK(r.unoccluded_pck == doctest::Approx(100.0 * 53 / 54));
    CHECK_THROWS_AS(evaluate({}), ContractViolation);

    EvalOptions opts;
    opts.retarget = true;
    Pose3D big = g;
    for (auto& c : big.coords) c *= 1.5;
    const EvalGt gt = eval_gt(g, {150, 150});
    CHECK(evaluate({{"S1", {detected(big, gt)}, {gt}}}, opts).mpjpe_matched.value() <= 1e-6);
}
