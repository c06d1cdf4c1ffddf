#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ppstitch/stitch.hpp"

namespace {

struct CliOptions {
    ppstitch::StitchConfig config;
    std::string grid = "40x40";
    std::string mode = "proposed";
    std::string out;
    std::string truth;
    std::string dump_prefix;
    std::string target_path, reference_path, matches_path, scene_path;
};

void add_shared_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--sigma", opt.config.sigma, "Gaussian scale of the moving-DLT weights")
        ->capture_default_str();
    cmd->add_option("--eta", opt.config.eta, "Weight floor in [0, 1]")->capture_default_str();
    cmd->add_option("--grid", opt.grid, "Mesh resolution as RxC, e.g. 40x40")
        ->capture_default_str();
    cmd->add_option("--ransac-thresh", opt.config.ransac_threshold,
                    "Inlier threshold in normalized units")
        ->capture_default_str();
    cmd->add_option("--min-inliers", opt.config.min_inliers,
                    "Smallest consensus kept as a group")
        ->capture_default_str();
    cmd->add_option("--max-iterations", opt.config.max_iterations,
                    "RANSAC iteration cap per group")
        ->capture_default_str();
    cmd->add_option("--seed", opt.config.rng_seed, "RANSAC / scene RNG seed")
        ->capture_default_str();
    cmd->add_option("--mode", opt.mode, "proposed | mdlt-only | global-only")
        ->capture_default_str();
    cmd->set_config("--config", "", "Read options from a key=value file");
}

void apply_shared_options(CliOptions& opt) {
    int rows = 0, cols = 0;
    if (std::sscanf(opt.grid.c_str(), "%dx%d", &rows, &cols) != 2 || rows <= 0 || cols <= 0) {
        throw CLI::ValidationError(
            "--grid", "expects RxC with positive integers, got '" + opt.grid + "'");
    }
    opt.config.grid_rows = rows;
    opt.config.grid_cols = cols;
    try {
        opt.config.mode = ppstitch::parse_mode(opt.mode);
    } catch (const ppstitch::ParseError& e) {
        throw CLI::ValidationError("--mode", e.what());
    }
}

std::string strip_extension(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    const std::size_t slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw ppstitch::IoError("cannot open for writing: " + path);
    }
    out << text;
    out.flush();
    if (!out) {
        throw ppstitch::IoError("failed while writing: " + path);
    }
}

int run_stitch(CliOptions& opt) {
    using namespace ppstitch;
    apply_shared_options(opt);

    const ImageBuffer target = read_image(opt.target_path);
    const ImageBuffer reference = read_image(opt.reference_path);
    const CorrespondenceSet set = load_correspondences(opt.matches_path);

    const StitchResult result = stitch(target, reference, set, opt.config);
    write_image(result.canvas.image, opt.out);
    std::cout << "wrote " << opt.out << " (" << result.canvas.bounds.width << "x"
              << result.canvas.bounds.height << " canvas)\n";

    if (opt.config.diagnostics) {
        const std::string base = strip_extension(opt.out);
        const auto maps = export_weight_maps(result.artifacts.weights,
                                             result.artifacts.field.mesh);
        write_image(maps.first, base + "_weight_local.png");
        write_image(maps.second, base + "_weight_similarity.png");
        write_image(render_mesh_overlay(result.canvas, result.artifacts.field),
                    base + "_mesh.png");
        write_text(base + "_groups.txt", format_group_report(result.artifacts));
        std::cout << "wrote diagnostics " << base << "_{weight_local,weight_similarity,mesh}.png"
                  << " and " << base << "_groups.txt\n";
    }

    if (!opt.truth.empty()) {
        const std::vector<int> labels = load_labels(opt.truth, set);
        const EvalReport report = evaluate_warp(result.artifacts.field, set, labels);
        const std::string text = format_report(report, mode_name(opt.config.mode) + ".");
        const std::string path = strip_extension(opt.out) + "_eval.txt";
        write_text(path, text);
        std::cout << text;
    }
    return 0;
}

int run_eval_cmd(CliOptions& opt) {
    using namespace ppstitch;
    apply_shared_options(opt);

    const SceneSpec spec = load_scene_spec(opt.scene_path);
    const LabeledScene scene = generate_scene(spec);
    const std::vector<ModeEval> evals = run_eval(scene, opt.config);
    const std::string text = format_eval_reports(evals);
    write_text(opt.out, text);
    std::cout << text;

    if (!opt.dump_prefix.empty()) {
        save_correspondences(scene.set, opt.dump_prefix + ".matches.txt");
        save_labels(scene, opt.dump_prefix + ".labels.txt");
        std::cout << "wrote " << opt.dump_prefix << ".{matches,labels}.txt\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perspective-preserving image stitching"};
    app.require_subcommand(1);

    CliOptions stitch_opt;
    CLI::App* stitch_cmd =
        app.add_subcommand("stitch", "Warp and composite an image pair");
    stitch_cmd->add_option("target", stitch_opt.target_path, "Target image (warped)")
        ->required();
    stitch_cmd->add_option("reference", stitch_opt.reference_path, "Reference image")
        ->required();
    stitch_cmd->add_option("matches", stitch_opt.matches_path, "Correspondence file")
        ->required();
    stitch_opt.out = "stitched.png";
    stitch_cmd->add_option("--out", stitch_opt.out, "Composite output path")
        ->capture_default_str();
    stitch_cmd->add_flag("--diagnostics", stitch_opt.config.diagnostics,
                         "Write weight maps, mesh overlay and group report");
    stitch_cmd->add_option("--truth", stitch_opt.truth,
                           "Ground-truth labels file; writes an evaluation report");
    add_shared_options(stitch_cmd, stitch_opt);

    CliOptions eval_opt;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Generate a synthetic scene and compare all modes");
    eval_cmd->add_option("scene", eval_opt.scene_path, "Scene spec file (key=value)")
        ->required();
    eval_opt.out = "eval_report.txt";
    eval_cmd->add_option("--out", eval_opt.out, "Report output path")->capture_default_str();
    eval_cmd->add_option("--dump", eval_opt.dump_prefix,
                         "Also write <prefix>.matches.txt and <prefix>.labels.txt");
    add_shared_options(eval_cmd, eval_opt);

    try {
        app.parse(argc, argv);
        if (stitch_cmd->parsed()) return run_stitch(stitch_opt);
        if (eval_cmd->parsed()) return run_eval_cmd(eval_opt);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const ppstitch::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const ppstitch::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
