#include "orpm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "orpm/association.hpp"
#include "orpm/compositor.hpp"
#include "orpm/error.hpp"
#include "orpm/metrics.hpp"
#include "orpm/raster_io.hpp"
#include "orpm/readout.hpp"
#include "orpm/render.hpp"
#include "orpm/scene_io.hpp"

namespace orpm::cli {

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must only touch slot i.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string frame_prefix(int id) { return "frame" + std::to_string(id) + "/"; }

int frame_id_of(const std::string& prefix)
{
    try {
        return std::stoi(prefix.substr(5, prefix.size() - 6));
    } catch (const std::exception&) {
        throw FormatError("raster container: bad frame prefix '" + prefix + "'");
    }
}

std::vector<double> parse_threshold_grid(const std::string& spec)
{
    std::vector<double> out;
    try {
        if (spec.find(':') != std::string::npos) {
            std::stringstream ss(spec);
            std::string a, b, c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            const double lo = std::stod(a), hi = std::stod(b), step = std::stod(c);
            if (!(step > 0.0) || hi < lo) throw UsageError("--threshold-grid: expected start:stop:step with step > 0");
            const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
            for (long k = 0; k <= n; ++k) out.push_back(lo + double(k) * step);
        } else {
            std::stringstream ss(spec);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
        }
    } catch (const std::invalid_argument&) {
        throw UsageError("--threshold-grid: cannot parse '" + spec + "'");
    } catch (const std::out_of_range&) {
        throw UsageError("--threshold-grid: value out of range in '" + spec + "'");
    }
    if (out.empty()) throw UsageError("--threshold-grid: empty grid");
    return out;
}

struct CommonFlags {
    bool lenient = false;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonFlags& c)
{
    sub->add_flag("--strict", "Reject unknown fields in input documents (default)");
    sub->add_flag("--lenient", c.lenient, "Ignore unknown fields in input documents");
    sub->add_option("--jobs", c.jobs, "Worker threads for per-frame processing")->check(CLI::PositiveNumber);
}

SceneDoc load_scene(const std::string& path, const CommonFlags& c) { return parse_scene(read_file(path), !c.lenient); }

// ---------------------------------------------------------------- compose

struct ComposeFlags {
    CommonFlags common;
    int count = 1;
    std::uint64_t seed = 0;
    int frames = 1;
    std::string sequence = "S1";
    int width = 512, height = 384;
    double focal = 500.0;
    double depth_min = 5.0, depth_max = 9.0;
    double rotation = 0.0;
    double scale_min = 1.0, scale_max = 1.0;
    double jitter = 0.0;
    int grid_stride = 4, paf_stride = 8;
    bool unoccluded = false;
    double min_site_cells = 0.0;
    std::string out, masks_out;
};

int cmd_compose(const ComposeFlags& f, std::ostream& out)
{
    if (f.count < 1 || f.count > 4) throw UsageError("--count must be in [1, 4]");
    if (f.frames < 1) throw UsageError("--frames must be >= 1");
    if (!(f.depth_min > 0.0) || f.depth_max < f.depth_min) throw UsageError("--depth-min/--depth-max: invalid range");
    if (!(f.scale_min > 0.0) || f.scale_max < f.scale_min) throw UsageError("--scale-min/--scale-max: invalid range");
    if (f.rotation < 0.0 || f.jitter < 0.0) throw UsageError("--rotation and --jitter must be >= 0");

    SynthParams synth;
    synth.image_w = f.width;
    synth.image_h = f.height;
    synth.focal = f.focal;
    synth.depth = 0.5 * (f.depth_min + f.depth_max);

    ComposeConfig cfg;
    cfg.stride_pose = f.grid_stride;
    cfg.stride_paf = f.paf_stride;
    cfg.depth_min = f.depth_min;
    cfg.depth_max = f.depth_max;
    cfg.rotation_deg_max = f.rotation;
    cfg.scale_min = f.scale_min;
    cfg.scale_max = f.scale_max;
    cfg.jitter_px_max = f.jitter;
    cfg.require_unoccluded = f.unoccluded;
    cfg.min_site_cells = f.min_site_cells;
    GridSpec{f.width, f.height, f.grid_stride, f.paf_stride}.validate();

    std::vector<ComposedScene> scenes(f.frames);
    parallel_for(scenes.size(), f.common.jobs, [&](std::size_t k) {
        // A few independent layouts per frame before giving up.
        constexpr int kAttempts = 50;
        for (int a = 0; a < kAttempts; ++a) {
            try {
                scenes[k] = generate_scene(f.count, Rng::derive(Rng::derive(f.seed, k), a), synth, cfg);
                return;
            } catch (const ContractViolation&) {
                if (a + 1 == kAttempts) throw;
            }
        }
    });

    SceneDoc doc;
    doc.grid = scenes.front().scene_gt.grid;
    RasterContainer masks;
    for (int k = 0; k < f.frames; ++k) {
        SceneFrame fr;
        fr.id = k;
        fr.sequence = f.sequence;
        fr.persons = scenes[k].scene_gt.persons;
        doc.frames.push_back(std::move(fr));

        const auto& lab = scenes[k].composite_mask;
        MapGrid g(lab.width, lab.height, 1);
        for (std::size_t i = 0; i < lab.data.size(); ++i) g.data[i] = float(lab.data[i]);
        masks.maps.push_back({frame_prefix(k) + "labels", std::move(g)});
    }
    write_file_atomic(f.out, serialize_scene(doc));
    if (!f.masks_out.empty()) write_file_atomic(f.masks_out, write_container(masks));
    out << "composed " << f.frames << " frame(s) with " << f.count << " person(s)\n";
    return kOk;
}

// ---------------------------------------------------------------- encode

struct EncodeFlags {
    CommonFlags common;
    std::string scene, out;
};

int cmd_encode(const EncodeFlags& f, std::ostream& out)
{
    const SceneDoc doc = load_scene(f.scene, f.common);
    std::vector<MapStack> stacks(doc.frames.size());
    parallel_for(stacks.size(), f.common.jobs, [&](std::size_t k) { stacks[k] = encode_scene(doc.scene_gt(k)); });

    RasterContainer c;
    for (std::size_t k = 0; k < stacks.size(); ++k) append_stack(c, stacks[k], frame_prefix(doc.frames[k].id));
    write_file_atomic(f.out, write_container(c));
    out << "encoded " << stacks.size() << " frame(s), " << c.maps.size() << " maps\n";
    return kOk;
}

// ---------------------------------------------------------------- infer

struct InferFlags {
    CommonFlags common;
    std::string maps, detections, out;
    int grid_stride = 4, paf_stride = 8;
    double tc = 0.1;
    std::optional<double> td;
    double peak_threshold = 0.1;
    bool torso_only = false;
};

int cmd_infer(const InferFlags& f, std::ostream& out)
{
    const RasterContainer c = read_container(read_file(f.maps));
    const auto prefixes = frame_prefixes(c);

    std::optional<SceneDoc> det_doc;
    if (!f.detections.empty()) det_doc = load_scene(f.detections, f.common);

    SceneDoc doc;
    doc.frames.resize(prefixes.size());
    parallel_for(prefixes.size(), f.common.jobs, [&](std::size_t k) {
        const std::string& prefix = prefixes[k];
        const NamedMap* hm = c.find(prefix + "heatmap/pelvis");
        if (!hm) throw FormatError("raster container: missing map '" + prefix + "heatmap/pelvis'");
        const GridSpec grid{hm->grid.width * f.grid_stride, hm->grid.height * f.grid_stride, f.grid_stride,
                            f.paf_stride};
        const MapStack maps = extract_stack(c, prefix, grid);

        SceneFrame& fr = doc.frames[k];
        fr.id = frame_id_of(prefix);
        std::vector<Detection2D> dets;
        if (det_doc) {
            const auto it = std::find_if(det_doc->frames.begin(), det_doc->frames.end(),
                                         [&](const SceneFrame& d) { return d.id == fr.id; });
            if (it == det_doc->frames.end() || !it->detections)
                throw FormatError("detections file: no detections for frame " + std::to_string(fr.id));
            fr.sequence = it->sequence;
            dets = *it->detections;
        } else {
            dets = associate(maps, {f.peak_threshold, 10});
        }

        ReadoutConfig cfg = ReadoutConfig::for_grid(grid);
        cfg.t_c = f.tc;
        if (f.td) cfg.t_d = *f.td;
        cfg.torso_only = f.torso_only;
        fr.poses = infer_poses(maps, dets, cfg);
        fr.detections = std::move(dets);
    });

    if (!doc.frames.empty()) {
        const NamedMap* hm = c.find(prefixes.front() + "heatmap/pelvis");
        doc.grid = {hm->grid.width * f.grid_stride, hm->grid.height * f.grid_stride, f.grid_stride, f.paf_stride};
    } else {
        doc.grid = {f.grid_stride * f.paf_stride, f.grid_stride * f.paf_stride, f.grid_stride, f.paf_stride};
    }
    write_file_atomic(f.out, serialize_scene(doc));

    std::size_t detected = 0, total = 0;
    for (const auto& fr : doc.frames)
        for (const auto& p : *fr.poses) {
            ++total;
            detected += p.detected;
        }
    out << "inferred " << detected << "/" << total << " detection(s) over " << doc.frames.size() << " frame(s)\n";
    return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
    CommonFlags common;
    std::string pred, gt, out;
    std::string threshold_grid = "0:150:5";
    double radius = 150.0;
    double match_radius = 40.0;
    bool retarget = false;
    bool table = false;
};

int cmd_eval(const EvalFlags& f, std::ostream& out)
{
    EvalOptions opts;
    opts.thresholds_mm = parse_threshold_grid(f.threshold_grid);
    opts.radius_mm = f.radius;
    opts.match_radius_px = f.match_radius;
    opts.retarget = f.retarget;

    const SceneDoc gt = load_scene(f.gt, f.common);
    const SceneDoc pred = load_scene(f.pred, f.common);

    std::vector<EvalFrame> frames;
    for (std::size_t k = 0; k < gt.frames.size(); ++k) {
        EvalFrame ef;
        ef.sequence = gt.frames[k].sequence;
        ef.gts = eval_ground_truth(gt, k);
        for (const auto& p : pred.frames)
            if (p.id == gt.frames[k].id && p.poses) ef.preds = *p.poses;
        frames.push_back(std::move(ef));
    }
    const EvalReport report = evaluate(frames, opts);
    write_file_atomic(f.out, f.table ? report_to_table(report) : report_to_json(report, opts));

    char line[160];
    std::snprintf(line, sizeof line, "3DPCK %.2f  AUC %.2f  detection rate %.3f\n", report.pck_total, report.auc,
                  report.detection_rate);
    out << line;
    return kOk;
}

// ---------------------------------------------------------------- render

struct RenderFlags {
    CommonFlags common;
    std::string scene, masks, poses, out;
    int frame = 0;
};

int cmd_render(const RenderFlags& f, std::ostream& out)
{
    const SceneDoc doc = load_scene(f.scene, f.common);
    if (f.frame < 0 || std::size_t(f.frame) >= doc.frames.size())
        throw ContractViolation("render: frame index " + std::to_string(f.frame) + " not in scene file");
    const SceneFrame& fr = doc.frames[f.frame];
    if (fr.persons.empty()) throw ContractViolation("render: frame has no persons to paint");

    std::optional<LabelRaster> labels;
    if (!f.masks.empty()) {
        const RasterContainer c = read_container(read_file(f.masks));
        const std::string name = frame_prefix(fr.id) + "labels";
        const NamedMap* m = c.find(name);
        if (!m) throw FormatError("mask container: missing map '" + name + "'");
        labels.emplace(m->grid.width, m->grid.height, 0);
        for (std::size_t i = 0; i < m->grid.data.size(); ++i)
            labels->data[i] = static_cast<std::uint8_t>(std::clamp(m->grid.data[i], 0.0f, 255.0f));
    }

    std::optional<std::vector<PoseResult>> poses;
    if (!f.poses.empty()) {
        const SceneDoc pd = load_scene(f.poses, f.common);
        for (const auto& p : pd.frames)
            if (p.id == fr.id && p.poses) poses = *p.poses;
    }

    RenderStats st;
    const Image img = render_overlay(doc.scene_gt(f.frame), labels ? &*labels : nullptr, poses ? &*poses : nullptr, &st);
    write_file_atomic(f.out, encode_ppm(img));
    out << "rendered " << st.bones << " bones, " << st.joints << " joints (" << st.occluded_joints << " occluded), "
        << st.sites << " read-out sites\n";
    return kOk;
}

} // namespace

void write_file_atomic(const std::string& path, const std::string& bytes)
{
    if (path.empty()) throw UsageError("missing output path");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw UsageError("cannot write '" + tmp + "'");
        os.write(bytes.data(), std::streamsize(bytes.size()));
        if (!os) throw UsageError("failed writing '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw UsageError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Occlusion-robust pose-map toolkit: compose, encode, infer, eval, render", "orpm"};
    app.require_subcommand(1);

    ComposeFlags compose;
    auto* c = app.add_subcommand("compose", "Composite synthetic multi-person scenes");
    add_common(c, compose.common);
    c->add_option("--count", compose.count, "Persons per scene (1-4)");
    c->add_option("--seed", compose.seed, "Base seed");
    c->add_option("--frames", compose.frames, "Number of scenes");
    c->add_option("--sequence", compose.sequence, "Sequence name recorded in every frame");
    c->add_option("--width", compose.width, "Image width (px)");
    c->add_option("--height", compose.height, "Image height (px)");
    c->add_option("--focal", compose.focal, "Focal length (px)");
    c->add_option("--depth-min", compose.depth_min, "Minimum root depth (m)");
    c->add_option("--depth-max", compose.depth_max, "Maximum root depth (m)");
    c->add_option("--rotation", compose.rotation, "Max in-plane rotation (deg)");
    c->add_option("--scale-min", compose.scale_min, "Min augmentation scale");
    c->add_option("--scale-max", compose.scale_max, "Max augmentation scale");
    c->add_option("--jitter", compose.jitter, "Max placement jitter (px)");
    c->add_option("--grid-stride", compose.grid_stride, "Heatmap/ORPM down-sampling");
    c->add_option("--paf-stride", compose.paf_stride, "PAF down-sampling");
    c->add_flag("--unoccluded", compose.unoccluded, "Reject layouts with any occlusion or truncation");
    c->add_option("--min-site-cells", compose.min_site_cells,
                  "Reject layouts whose people share read-out sites closer than this (pose cells)");
    c->add_option("--out", compose.out, "Scene file to write")->required();
    c->add_option("--masks-out", compose.masks_out, "Raster container for the composite label masks");

    EncodeFlags encode;
    auto* e = app.add_subcommand("encode", "Encode ground-truth map stacks");
    add_common(e, encode.common);
    e->add_option("--scene", encode.scene, "Scene file")->required();
    e->add_option("--out", encode.out, "Raster container to write")->required();

    InferFlags infer;
    auto* i = app.add_subcommand("infer", "Associate joints and read out 3D poses");
    add_common(i, infer.common);
    i->add_option("--maps", infer.maps, "Raster container with map stacks")->required();
    i->add_option("--detections", infer.detections, "Scene file with detections (skips association)");
    i->add_option("--grid-stride", infer.grid_stride, "Heatmap/ORPM down-sampling")->check(CLI::PositiveNumber);
    i->add_option("--paf-stride", infer.paf_stride, "PAF down-sampling")->check(CLI::PositiveNumber);
    i->add_option("--tc", infer.tc, "Read-out confidence threshold");
    i->add_option("--td", infer.td, "Read-out isolation distance (px); default 2 x grid stride");
    i->add_option("--peak-threshold", infer.peak_threshold, "Heatmap peak threshold");
    i->add_flag("--torso-only", infer.torso_only, "Skip limb refinement");
    i->add_option("--out", infer.out, "Scene file with poses to write")->required();

    EvalFlags evalf;
    auto* v = app.add_subcommand("eval", "Score predictions against ground truth");
    add_common(v, evalf.common);
    v->add_option("--pred", evalf.pred, "Scene file with poses")->required();
    v->add_option("--gt", evalf.gt, "Ground-truth scene file")->required();
    v->add_option("--threshold-grid", evalf.threshold_grid, "AUC grid: start:stop:step or a,b,c (mm)");
    v->add_option("--radius", evalf.radius, "PCK radius (mm)");
    v->add_option("--match-radius", evalf.match_radius, "2D matching radius (px)");
    v->add_flag("--retarget", evalf.retarget, "Retarget predictions to ground-truth bone lengths");
    v->add_flag("--table", evalf.table, "Write the per-sequence table instead of JSON");
    v->add_option("--out", evalf.out, "Report to write")->required();

    RenderFlags render;
    auto* r = app.add_subcommand("render", "Write a PPM overlay of a scene");
    add_common(r, render.common);
    r->add_option("--scene", render.scene, "Scene file")->required();
    r->add_option("--frame", render.frame, "Frame index");
    r->add_option("--masks", render.masks, "Label mask container from compose");
    r->add_option("--poses", render.poses, "Scene file with pose results");
    r->add_option("--out", render.out, "Image to write")->required();

    std::vector<std::string> storage = {"orpm"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "orpm: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (c->parsed()) return cmd_compose(compose, out);
        if (e->parsed()) return cmd_encode(encode, out);
        if (i->parsed()) return cmd_infer(infer, out);
        if (v->parsed()) return cmd_eval(evalf, out);
        if (r->parsed()) return cmd_render(render, out);
    } catch (const UsageError& ex) {
        err << "orpm: " << ex.what() << "\n";
        return kUsage;
    } catch (const FormatError& ex) {
        err << "orpm: format error: " << ex.what() << "\n";
        return kFormat;
    } catch (const ContractViolation& ex) {
        err << "orpm: contract violation: " << ex.what() << "\n";
        return kContract;
    }
    return kUsage;
}

} // namespace orpm::cli
