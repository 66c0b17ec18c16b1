#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "oracles.hpp"
#include "orpm/cli.hpp"
#include "orpm/raster_io.hpp"
#include "orpm/readout.hpp"
#include "orpm/scene_io.hpp"

using namespace orpm;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("orpm_cli_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("usage errors")
{
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"--help"}).code == cli::kOk);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"compose"}).code == cli::kUsage);
    TempDir t;
    CHECK(run({"compose", "--count", "5", "--out", t / "s.json"}).code == cli::kUsage);
    CHECK(run({"compose", "--count", "0", "--out", t / "s.json"}).code == cli::kUsage);
    CHECK(run({"encode", "--scene", t / "missing.json", "--out", t / "m.orpm"}).code == cli::kUsage);
    CHECK(run({"eval", "--pred", t / "a", "--gt", t / "b", "--out", t / "c", "--threshold-grid", "x:y"}).code ==
          cli::kUsage);
    CHECK_FALSE(fs::exists(t / "s.json"));
}

TEST_CASE("end-to-end on separated scenes scores 100")
{
    TempDir t;
    REQUIRE(run({"compose", "--count", "3", "--seed", "11", "--frames", "3", "--unoccluded", "--min-site-cells", "3",
                 "--out", t / "gt.json", "--masks-out", t / "masks.orpm"})
                .code == 0);
    REQUIRE(run({"encode", "--scene", t / "gt.json", "--out", t / "maps.orpm"}).code == 0);
    REQUIRE(run({"infer", "--maps", t / "maps.orpm", "--out", t / "pred.json"}).code == 0);
    const Run e = run({"eval", "--pred", t / "pred.json", "--gt", t / "gt.json", "--out", t / "report.json"});
    REQUIRE(e.code == 0);
    const std::string report = cli::read_file(t / "report.json");
    CHECK(report.find("\"pck_total\": 100.0") != std::string::npos);
    CHECK(report.find("\"detection_rate\": 1.0") != std::string::npos);
    CHECK(e.out.find("3DPCK 100.00") != std::string::npos);

    REQUIRE(run({"eval", "--pred", t / "pred.json", "--gt", t / "gt.json", "--out", t / "report.tsv", "--table"}).code == 0);
    CHECK(cli::read_file(t / "report.tsv").find("total\t9\t9\t100.0\t100.0") != std::string::npos);

    SUBCASE("files equal the in-process pipeline")
    {
        const SceneDoc gt = parse_scene(cli::read_file(t / "gt.json"));
        const SceneDoc pred = parse_scene(cli::read_file(t / "pred.json"));
        for (std::size_t k = 0; k < gt.frames.size(); ++k) {
            const MapStack maps = encode_scene(gt.scene_gt(k));
            const auto dets = associate(maps);
            CHECK(*pred.frames[k].detections == dets);
            CHECK(*pred.frames[k].poses == infer_poses(maps, dets, ReadoutConfig::for_grid(gt.grid)));
        }
        const RasterContainer c = read_container(cli::read_file(t / "maps.orpm"));
        CHECK(extract_stack(c, "frame1/", gt.grid) == encode_scene(gt.scene_gt(1)));
    }
    SUBCASE("stage-by-stage detections")
    {
        REQUIRE(run({"infer", "--maps", t / "maps.orpm", "--detections", t / "pred.json", "--out", t / "pred2.json"})
                    .code == 0);
        const SceneDoc a = parse_scene(cli::read_file(t / "pred.json"));
        const SceneDoc b = parse_scene(cli::read_file(t / "pred2.json"));
        for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(a.frames[k].poses == b.frames[k].poses);
    }
    SUBCASE("torso-only")
    {
        REQUIRE(run({"infer", "--maps", t / "maps.orpm", "--torso-only", "--out", t / "torso.json"}).code == 0);
        for (const auto& f : parse_scene(cli::read_file(t / "torso.json")).frames)
            for (const auto& p : *f.poses)
                for (const auto& pv : p.provenance) CHECK(pv.kind == Provenance::Kind::torso_base);
    }
    SUBCASE("render")
    {
        const Run r = run({"render", "--scene", t / "gt.json", "--masks", t / "masks.orpm", "--poses", t / "pred.json",
                           "--frame", "2", "--out", t / "a.ppm"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("48 bones") != std::string::npos);
        CHECK(cli::read_file(t / "a.ppm").rfind("P6\n512 384\n255\n", 0) == 0);
        CHECK(run({"render", "--scene", t / "gt.json", "--frame", "9", "--out", t / "b.ppm"}).code == cli::kContract);
    }
}

TEST_CASE("empty predictions score zero")
{
    TempDir t;
    REQUIRE(run({"compose", "--count", "2", "--seed", "3", "--out", t / "gt.json"}).code == 0);
    SceneDoc empty = parse_scene(cli::read_file(t / "gt.json"));
    for (auto& f : empty.frames) {
        f.persons.clear();
        f.poses.emplace();
    }
    cli::write_file_atomic(t / "pred.json", serialize_scene(empty));
    REQUIRE(run({"eval", "--pred", t / "pred.json", "--gt", t / "gt.json", "--out", t / "r.json"}).code == 0);
    const std::string r = cli::read_file(t / "r.json");
    CHECK(r.find("\"detection_rate\": 0.0") != std::string::npos);
    CHECK(r.find("\"pck_total\": 0.0") != std::string::npos);
}

TEST_CASE("format and contract errors map to exit codes")
{
    TempDir t;
    REQUIRE(run({"compose", "--seed", "1", "--out", t / "gt.json"}).code == 0);
    REQUIRE(run({"encode", "--scene", t / "gt.json", "--out", t / "maps.orpm"}).code == 0);

    std::string bytes = cli::read_file(t / "maps.orpm");
    cli::write_file_atomic(t / "bad.orpm", bytes.substr(0, bytes.size() / 2));
    const Run r = run({"infer", "--maps", t / "bad.orpm", "--out", t / "p.json"});
    CHECK(r.code == cli::kFormat);
    CHECK(r.err.find("byte offset") != std::string::npos);

    cli::write_file_atomic(t / "bad.json", "{\"format\": 3}");
    CHECK(run({"encode", "--scene", t / "bad.json", "--out", t / "x.orpm"}).code == cli::kFormat);

    std::string extra = cli::read_file(t / "gt.json");
    extra.insert(extra.find("\"grid\""), "\"note\": 1,\n ");
    cli::write_file_atomic(t / "extra.json", extra);
    CHECK(run({"encode", "--scene", t / "extra.json", "--out", t / "x.orpm"}).code == cli::kFormat);
    CHECK(run({"encode", "--scene", t / "extra.json", "--out", t / "x.orpm", "--lenient"}).code == 0);

    CHECK(run({"infer", "--maps", t / "maps.orpm", "--paf-stride", "3", "--out", t / "p.json"}).code == cli::kContract);
    CHECK(run({"infer", "--maps", t / "maps.orpm", "--tc", "1.5", "--out", t / "p.json"}).code == cli::kContract);
    CHECK_FALSE(fs::exists(t / "p.json"));
}

TEST_CASE("commands are byte-reproducible and independent of the worker count")
{
    TempDir t;
    for (const char* jobs : {"1", "4"}) {
        const std::string j = jobs;
        REQUIRE(run({"compose", "--count", "4", "--seed", "99", "--frames", "4", "--rotation", "15", "--scale-min", "0.9",
                     "--scale-max", "1.1", "--jitter", "8", "--jobs", j, "--out", t / ("gt" + j + ".json"),
                     "--masks-out", t / ("m" + j + ".orpm")})
                    .code == 0);
        REQUIRE(run({"encode", "--scene", t / ("gt" + j + ".json"), "--jobs", j, "--out", t / ("maps" + j + ".orpm")}).code == 0);
        REQUIRE(run({"infer", "--maps", t / ("maps" + j + ".orpm"), "--jobs", j, "--out", t / ("p" + j + ".json")}).code == 0);
    }
    for (const char* name : {"gt", "m", "maps", "p"}) {
        const std::string ext = std::string(name) == "m" || std::string(name) == "maps" ? ".orpm" : ".json";
        CHECK(cli::read_file(t / (name + std::string("1") + ext)) == cli::read_file(t / (name + std::string("4") + ext)));
    }
}
