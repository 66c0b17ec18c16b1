#include "orpm/readout.hpp"

#include "orpm/error.hpp"

namespace orpm {

ReadoutConfig ReadoutConfig::for_grid(const GridSpec& g)
{
    ReadoutConfig cfg;
    cfg.t_d = 2.0 * g.stride_pose;
    return cfg;
}

void ReadoutConfig::validate() const
{
    if (!(t_c > 0.0 && t_c < 1.0)) throw ContractViolation("readout: t_c must lie in (0,1)");
    if (!(t_d >= 0.0)) throw ContractViolation("readout: t_d must be >= 0");
}

std::string Provenance::to_string() const
{
    switch (kind) {
    case Kind::torso_base: return "torso_base@" + std::string(joint_name(site));
    case Kind::limb_at_joint: return "limb_at_joint@" + std::string(joint_name(site));
    case Kind::undetected_person: break;
    }
    return "undetected_person";
}

std::optional<Provenance> Provenance::parse(std::string_view s)
{
    if (s == "undetected_person") return Provenance{};
    const auto at = s.find('@');
    if (at == std::string_view::npos) return std::nullopt;
    const auto kind = s.substr(0, at);
    const auto joint = joint_from_name(s.substr(at + 1));
    if (!joint) return std::nullopt;
    if (kind == "torso_base" && is_torso_site(*joint)) return Provenance{Kind::torso_base, *joint};
    if (kind == "limb_at_joint" && limb_of(*joint)) return Provenance{Kind::limb_at_joint, *joint};
    return std::nullopt;
}

bool is_valid_readout(std::size_t person, const std::vector<Detection2D>& dets, JointId j, const ReadoutConfig& cfg)
{
    const Detection2D& det = dets.at(person);
    if (!det.has(j) || !(det.confidence[index(j)] > cfg.t_c)) return false;
    const Point2& p = det.at(j);
    for (std::size_t other = 0; other < dets.size(); ++other) {
        if (other == person) continue;
        for (const Point2& a : available_readout_sites(dets[other].joints, j))
            if ((a - p).norm() < cfg.t_d) return false;
    }
    return true;
}

namespace {

Vec3 read(const MapStack& maps, JointId j, const Point2& loc)
{
    return sample_orpm(maps.orpms[index(j)], loc, maps.grid.stride_pose);
}

void check_shapes(const MapStack& maps)
{
    maps.grid.validate();
    const MapStack ref = MapStack::zeros(maps.grid);
    if (!maps.same_shape(ref)) throw ContractViolation("infer: map shapes do not match the grid spec");
}

} // namespace

std::optional<BasePose> read_base_pose(std::size_t person, const std::vector<Detection2D>& dets, const MapStack& maps,
                                       const ReadoutConfig& cfg)
{
    for (JointId site : {JointId::neck, JointId::pelvis}) {
        if (!is_valid_readout(person, dets, site, cfg)) continue;
        const Point2& loc = dets[person].at(site);
        BasePose base{zero_pose(Frame::parent_relative), site};
        for (JointId j : all_joints()) base.pose[j] = read(maps, j, loc);
        return base;
    }
    return std::nullopt;
}

std::optional<JointId> refine_limb(Pose3D& base, std::array<Provenance, kNumJoints>& provenance, std::size_t person,
                                   const std::vector<Detection2D>& dets, const MapStack& maps, const Limb& limb,
                                   const ReadoutConfig& cfg)
{
    for (auto it = limb.members.rbegin(); it != limb.members.rend(); ++it) {
        if (!is_valid_readout(person, dets, *it, cfg)) continue;
        const Point2& loc = dets[person].at(*it);
        for (JointId m : limb.members) {
            base[m] = read(maps, m, loc);
            provenance[index(m)] = {Provenance::Kind::limb_at_joint, *it};
        }
        return *it;
    }
    return std::nullopt;
}

std::vector<PoseResult> infer_poses(const MapStack& maps, const std::vector<Detection2D>& dets,
                                    const ReadoutConfig& cfg)
{
    cfg.validate();
    check_shapes(maps);

    std::vector<PoseResult> out(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        PoseResult& r = out[i];
        r.detection = dets[i];
        auto base = read_base_pose(i, dets, maps, cfg);
        if (!base) continue;

        r.provenance.fill({Provenance::Kind::torso_base, base->site});
        if (!cfg.torso_only)
            for (const Limb& l : limbs()) refine_limb(base->pose, r.provenance, i, dets, maps, l, cfg);
        r.pose = to_root_relative(base->pose);
        r.detected = true;
    }
    return out;
}

} // namespace orpm
