#include "orpm/metrics.hpp"

#include <algorithm>
#include <tuple>

#include "orpm/error.hpp"

namespace orpm {

namespace {

void check_frames(const EvalPair& p)
{
    if (p.gt.frame != Frame::root_relative || (p.pred && p.pred->frame != Frame::root_relative))
        throw ContractViolation("metrics: poses must be root-relative");
}

double error_mm(const EvalPair& p, JointId j) { return 1000.0 * ((*p.pred)[j] - p.gt[j]).norm(); }

template <typename Keep>
JointTally tally(const std::vector<EvalPair>& pairs, double radius_mm, JointFilter subset, Keep keep)
{
    JointTally t;
    for (const auto& p : pairs) {
        check_frames(p);
        for (JointId j : subset) {
            if (!keep(p, j)) continue;
            ++t.total;
            if (p.matched() && error_mm(p, j) <= radius_mm) ++t.correct;
        }
    }
    return t;
}

double require(const JointTally& t)
{
    const auto v = t.percent();
    if (!v) throw ContractViolation("metrics: no joints to score");
    return *v;
}

} // namespace

double pck3d(const std::vector<EvalPair>& pairs, double radius_mm, JointFilter subset)
{
    return require(tally(pairs, radius_mm, subset, [](const EvalPair&, JointId) { return true; }));
}

std::vector<double> default_auc_thresholds()
{
    std::vector<double> t;
    for (int mm = 0; mm <= 150; mm += 5) t.push_back(mm);
    return t;
}

double auc(const std::vector<EvalPair>& pairs, const std::vector<double>& thresholds_mm, JointFilter subset)
{
    if (thresholds_mm.empty()) throw ContractViolation("auc: empty threshold grid");
    double sum = 0.0;
    for (double t : thresholds_mm) sum += pck3d(pairs, t, subset);
    return sum / double(thresholds_mm.size());
}

double mpjpe(const std::vector<EvalPair>& pairs, JointFilter subset)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : pairs) {
        check_frames(p);
        if (!p.matched()) continue;
        for (JointId j : subset) {
            sum += error_mm(p, j);
            ++n;
        }
    }
    if (n == 0) throw ContractViolation("mpjpe: no matched predictions");
    return sum / double(n);
}

OcclusionSplit occlusion_breakdown(const std::vector<EvalPair>& pairs, double radius_mm, JointFilter subset)
{
    return {
        tally(pairs, radius_mm, subset, [](const EvalPair& p, JointId j) { return p.occluded[index(j)]; }),
        tally(pairs, radius_mm, subset, [](const EvalPair& p, JointId j) { return !p.occluded[index(j)]; }),
    };
}

double agreement_2d(const Detection2D& pred, const EvalGt& gt, double radius_px, JointFilter subset)
{
    std::size_t visible = 0, hit = 0;
    for (JointId j : subset) {
        const auto& g = gt.joints_2d[index(j)];
        if (!g) continue;
        ++visible;
        if (pred.has(j) && (pred.at(j) - *g).norm() <= radius_px) ++hit;
    }
    return visible ? double(hit) / double(visible) : 0.0;
}

std::vector<std::optional<std::size_t>> match_predictions(const std::vector<PoseResult>& preds,
                                                          const std::vector<EvalGt>& gts, double radius_px)
{
    struct Cand {
        double score;
        std::size_t gt, pred;
    };
    std::vector<Cand> cands;
    for (std::size_t g = 0; g < gts.size(); ++g) {
        for (std::size_t p = 0; p < preds.size(); ++p) {
            if (!preds[p].detected) continue;
            const double s = agreement_2d(preds[p].detection, gts[g], radius_px);
            if (s > 0.0) cands.push_back({s, g, p});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.gt, a.pred) < std::tie(b.gt, b.pred);
    });

    std::vector<std::optional<std::size_t>> match(gts.size());
    std::vector<bool> pred_used(preds.size(), false);
    for (const auto& c : cands) {
        if (match[c.gt] || pred_used[c.pred]) continue;
        match[c.gt] = c.pred;
        pred_used[c.pred] = true;
    }
    return match;
}

Pose3D retarget_bones(const Pose3D& pred, const std::array<double, kNumJoints>& gt_bone_lengths)
{
    if (pred.frame != Frame::root_relative) throw ContractViolation("retarget: pose must be root-relative");

    Pose3D out = pred;
    std::array<Vec3, kNumJoints> dir;
    dir[index(JointId::pelvis)] = Vec3(0, -1, 0);
    for (JointId j : all_joints()) {
        const auto par = parent(j);
        if (!par) continue;
        const Vec3 bone = pred[j] - pred[*par];
        const double len = bone.norm();
        dir[index(j)] = len > 0.0 ? Vec3(bone / len) : dir[index(*par)];
        out[j] = out[*par] + gt_bone_lengths[index(j)] * dir[index(j)];
    }
    return out;
}

std::vector<EvalPair> build_pairs(const std::vector<EvalFrame>& frames, const EvalOptions& opts)
{
    std::vector<EvalPair> pairs;
    for (const auto& f : frames) {
        const auto match = match_predictions(f.preds, f.gts, opts.match_radius_px);
        for (std::size_t g = 0; g < f.gts.size(); ++g) {
            EvalPair p;
            p.gt = f.gts[g].pose;
            p.occluded = f.gts[g].occluded;
            p.sequence = f.sequence;
            if (match[g]) {
                Pose3D pred = f.preds[*match[g]].pose;
                if (opts.retarget) pred = retarget_bones(pred, bone_lengths(p.gt));
                p.pred = pred;
            }
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

EvalReport evaluate(const std::vector<EvalFrame>& frames, const EvalOptions& opts)
{
    const auto pairs = build_pairs(frames, opts);
    if (pairs.empty()) throw ContractViolation("evaluate: no annotated persons");

    EvalReport r;
    r.pck_total = pck3d(pairs, opts.radius_mm);
    r.auc = auc(pairs, opts.thresholds_mm);
    r.persons = pairs.size();

    std::vector<EvalPair> matched;
    for (const auto& p : pairs)
        if (p.matched()) matched.push_back(p);
    r.matched = matched.size();
    r.detection_rate = double(r.matched) / double(r.persons);
    if (!matched.empty()) {
        r.pck_matched = pck3d(matched, opts.radius_mm);
        r.mpjpe_matched = mpjpe(matched);
    }

    std::map<std::string, std::vector<EvalPair>> by_seq;
    for (const auto& p : pairs) by_seq[p.sequence].push_back(p);
    for (const auto& [name, seq] : by_seq) {
        SequenceReport s;
        s.pck = pck3d(seq, opts.radius_mm);
        s.persons = seq.size();
        std::vector<EvalPair> m;
        for (const auto& p : seq)
            if (p.matched()) m.push_back(p);
        s.matched = m.size();
        if (!m.empty()) s.pck_matched = pck3d(m, opts.radius_mm);
        r.per_sequence[name] = s;
    }

    for (JointId j : eval_subset()) {
        const std::array<JointId, 1> one = {j};
        r.per_joint.emplace_back(j, pck3d(pairs, opts.radius_mm, one));
    }

    const auto split = occlusion_breakdown(pairs, opts.radius_mm);
    r.occluded_pck = split.occluded.percent();
    r.unoccluded_pck = split.unoccluded.percent();
    r.occluded_joints = split.occluded.total;
    r.unoccluded_joints = split.unoccluded.total;
    return r;
}

} // namespace orpm
