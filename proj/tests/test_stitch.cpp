#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "ppstitch/stitch.hpp"

using namespace ppstitch;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "ppstitch_stitch_tests";
    fs::create_directories(dir);
    return dir;
}

ImageBuffer pattern_image(int width, int height, double fx, double fy) {
    ImageBuffer img = ImageBuffer::create(width, height, 1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img.at(x, y, 0) = static_cast<float>(
                0.5 + 0.25 * std::sin(fx * x) + 0.25 * std::cos(fy * y));
        }
    }
    return img;
}

CorrespondenceSet identity_grid_matches(int width, int height) {
    CorrespondenceSet set;
    set.target_width = width;
    set.target_height = height;
    set.reference_width = width;
    set.reference_height = height;
    int id = 0;
    for (int j = 0; j < 8; ++j) {
        for (int i = 0; i < 8; ++i) {
            Correspondence c;
            c.target = Point2(10.0 + i * (width - 20.0) / 7.0,
                              10.0 + j * (height - 20.0) / 7.0);
            c.reference = c.target;
            c.id = id++;
            set.pairs.push_back(c);
        }
    }
    return set;
}

int quantized(float v) {
    return static_cast<int>(std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(PPSTITCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

StitchConfig small_grid_config() {
    StitchConfig config;
    config.grid_cols = 10;
    config.grid_rows = 8;
    return config;
}

}  // namespace

TEST_CASE("stitch: identity pair reproduces the input image") {
    const int w = 160, h = 120;
    const ImageBuffer img = pattern_image(w, h, 0.05, 0.07);
    const CorrespondenceSet set = identity_grid_matches(w, h);
    StitchConfig config = small_grid_config();

    const StitchResult result = stitch(img, img, set, config);
    CHECK_FALSE(result.artifacts.blending_active);  // identity motion is affine
    REQUIRE(result.canvas.bounds.width >= w);
    REQUIRE(result.canvas.bounds.height >= h);

    const int ox = result.canvas.bounds.offset_x;
    const int oy = result.canvas.bounds.offset_y;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx =
                static_cast<std::size_t>(y + oy) * result.canvas.bounds.width + (x + ox);
            REQUIRE(result.canvas.coverage[idx] >= 1);
            REQUIRE(quantized(result.canvas.image.at(x + ox, y + oy, 0)) ==
                    quantized(img.at(x, y, 0)));
        }
    }
}

TEST_CASE("stitch: declared sizes must match the images") {
    const ImageBuffer img = pattern_image(64, 64, 0.1, 0.1);
    CorrespondenceSet set = identity_grid_matches(64, 64);
    set.target_width = 60;
    CHECK_THROWS_AS(stitch(img, img, set, StitchConfig{}), DimensionMismatch);
}

TEST_CASE("run_eval: proposed beats the baselines on the two-plane fixture") {
    const LabeledScene scene = generate_scene(standard_scene("two-plane"));
    const std::vector<ModeEval> evals = run_eval(scene, small_grid_config());
    REQUIRE(evals.size() == 3);
    const EvalReport& proposed = evals[0].report;
    const EvalReport& mdlt = evals[1].report;
    const EvalReport& global = evals[2].report;

    CHECK(global.overlap_rmse > proposed.overlap_rmse);
    CHECK(proposed.nonoverlap_similarity_gap < mdlt.nonoverlap_similarity_gap);
}

TEST_CASE("run_eval: byte-identical reports under a fixed seed") {
    const SceneSpec spec = standard_scene("two-plane");
    const StitchConfig config = small_grid_config();
    const std::string a = format_eval_reports(run_eval(spec, config));
    const std::string b = format_eval_reports(run_eval(spec, config));
    CHECK(a == b);
    CHECK(a.find("mode=proposed") != std::string::npos);
    CHECK(a.find("global-only.overlap_rmse=") != std::string::npos);
}

TEST_CASE("stitch: end-to-end determinism of composite bytes") {
    const LabeledScene scene = generate_scene(standard_scene("two-plane"));
    const ImageBuffer target = pattern_image(500, 400, 0.03, 0.05);
    const ImageBuffer reference = pattern_image(500, 400, 0.04, 0.02);
    const StitchConfig config = small_grid_config();

    const fs::path out_a = temp_dir() / "det_a.png";
    const fs::path out_b = temp_dir() / "det_b.png";
    write_image(stitch(target, reference, scene.set, config).canvas.image, out_a.string());
    write_image(stitch(target, reference, scene.set, config).canvas.image, out_b.string());
    CHECK(slurp(out_a) == slurp(out_b));
    CHECK(!slurp(out_a).empty());
}

TEST_CASE("group report and mode names") {
    CHECK(parse_mode("proposed") == StitchMode::proposed);
    CHECK(parse_mode("mdlt-only") == StitchMode::mdlt_only);
    CHECK(parse_mode("global-only") == StitchMode::global_only);
    CHECK_THROWS_AS(parse_mode("bogus"), ParseError);
    CHECK(mode_name(StitchMode::global_only) == "global-only");

    const LabeledScene scene = generate_scene(standard_scene("two-plane"));
    const PipelineArtifacts art = build_warp_field(scene.set, small_grid_config());
    const std::string report = format_group_report(art);
    CHECK(report.find("groups=2") != std::string::npos);
    CHECK(report.find("selected=yes") != std::string::npos);
}

TEST_CASE("labels: save and reload by pair id") {
    const LabeledScene scene = generate_scene(standard_scene("two-plane"));
    const fs::path path = temp_dir() / "labels.txt";
    save_labels(scene, path.string());
    const std::vector<int> back = load_labels(path.string(), scene.set);
    CHECK(back == scene.labels);

    CorrespondenceSet extra = scene.set;
    Correspondence c;
    c.target = Point2(1, 1);
    c.reference = Point2(1, 1);
    c.id = 100000;
    extra.pairs.push_back(c);
    CHECK_THROWS_AS(load_labels(path.string(), extra), ParseError);
}

TEST_CASE("cli: stitch, eval, and error exit codes") {
    const fs::path dir = temp_dir();
    const fs::path target_path = dir / "target.png";
    const fs::path reference_path = dir / "reference.png";
    const fs::path matches_path = dir / "matches.txt";
    const fs::path scene_path = dir / "scene.txt";

    const int w = 160, h = 120;
    write_image(pattern_image(w, h, 0.05, 0.07), target_path.string());
    write_image(pattern_image(w, h, 0.05, 0.07), reference_path.string());
    save_correspondences(identity_grid_matches(w, h), matches_path.string());
    save_scene_spec(standard_scene("two-plane"), scene_path.string());

    const fs::path out = dir / "composite.png";
    const std::string stitch_args = "stitch " + target_path.string() + " " +
                                    reference_path.string() + " " + matches_path.string() +
                                    " --grid 8x8 --out " + out.string();
    CHECK(run_cli(stitch_args) == 0);
    CHECK(fs::exists(out));

    CHECK(run_cli(stitch_args + " --diagnostics") == 0);
    CHECK(fs::exists(dir / "composite_weight_local.png"));
    CHECK(fs::exists(dir / "composite_weight_similarity.png"));
    CHECK(fs::exists(dir / "composite_mesh.png"));
    CHECK(fs::exists(dir / "composite_groups.txt"));

    const fs::path report = dir / "report.txt";
    CHECK(run_cli("eval " + scene_path.string() + " --grid 8x8 --out " + report.string() +
                  " --dump " + (dir / "dump").string()) == 0);
    CHECK(fs::exists(report));
    CHECK(fs::exists(dir / "dump.matches.txt"));
    CHECK(fs::exists(dir / "dump.labels.txt"));
    CHECK(slurp(report).find("mdlt-only.nonoverlap_similarity_gap=") != std::string::npos);

    CHECK(run_cli("stitch missing_positionals.png") == 2);  // usage
    CHECK(run_cli("--bogus-flag") == 2);                    // usage
    CHECK(run_cli("stitch a.png b.png missing.txt") == 3);  // data error
    const std::string bad_grid = "stitch " + target_path.string() + " " +
                                 reference_path.string() + " " + matches_path.string() +
                                 " --grid banana";
    CHECK(run_cli(bad_grid) == 2);
}
