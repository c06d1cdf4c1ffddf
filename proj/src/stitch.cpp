#include "ppstitch/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ppstitch {

namespace {

BlendWeights unit_alpha(std::size_t cells) {
    BlendWeights w;
    w.alpha.assign(cells, 1.0);
    w.beta.assign(cells, 0.0);
    return w;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
    if (img.channels == 3) return img;
    ImageBuffer out = ImageBuffer::create(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const float v = img.at(x, y, 0);
            out.at(x, y, 0) = v;
            out.at(x, y, 1) = v;
            out.at(x, y, 2) = v;
        }
    }
    return out;
}

void draw_edge(ImageBuffer& img, const CanvasBounds& bounds, const Homography& warp,
               const Point2& a, const Point2& b) {
    const int steps = std::max(2, static_cast<int>(std::ceil(2.0 * (b - a).norm())));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        Point2 mapped;
        try {
            mapped = apply_homography(warp, a + t * (b - a));
        } catch (const AtInfinity&) {
            continue;
        }
        const int px = static_cast<int>(std::lround(mapped.x())) + bounds.offset_x;
        const int py = static_cast<int>(std::lround(mapped.y())) + bounds.offset_y;
        if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
        img.at(px, py, 0) = 0.0f;
        img.at(px, py, 1) = 1.0f;
        img.at(px, py, 2) = 0.0f;
    }
}

}  // namespace

StitchMode parse_mode(const std::string& name) {
    if (name == "proposed") return StitchMode::proposed;
    if (name == "mdlt-only") return StitchMode::mdlt_only;
    if (name == "global-only") return StitchMode::global_only;
    throw ParseError("unknown mode '" + name +
                     "' (expected proposed, mdlt-only or global-only)");
}

std::string mode_name(StitchMode mode) {
    switch (mode) {
        case StitchMode::proposed: return "proposed";
        case StitchMode::mdlt_only: return "mdlt-only";
        case StitchMode::global_only: return "global-only";
    }
    return "unknown";
}

PipelineArtifacts build_warp_field(const CorrespondenceSet& set, const StitchConfig& config) {
    const GridMesh mesh =
        build_mesh(set.target_width, set.target_height, config.grid_cols, config.grid_rows);
    MdltConfig mdlt_config;
    mdlt_config.sigma = config.sigma;
    mdlt_config.eta = config.eta;
    mdlt_config.grid_cols = config.grid_cols;
    mdlt_config.grid_rows = config.grid_rows;
    RansacConfig ransac_config;
    ransac_config.threshold_d = config.ransac_threshold;
    ransac_config.min_inliers_delta = config.min_inliers;
    ransac_config.max_iterations = config.max_iterations;
    ransac_config.rng_seed = config.rng_seed;

    PipelineArtifacts art;
    if (config.mode == StitchMode::proposed) {
        const LocalWarpField local = estimate_local_warps(set, mesh, mdlt_config);
        art.groups = segment_correspondences(set, ransac_config);
        art.selected_group = optimal_group_index(art.groups);
        const SimilarityTransform sim = art.groups[art.selected_group].similarity;
        const Homography global = solve_dlt(build_dlt_system(set.pairs));
        art.frame = build_u_axis(global, mesh, set);
        art.weights = blend_weights(art.frame, mesh);
        art.field = combine_warps(local, sim, art.weights);
        art.blending_active = !art.frame.no_distortion_axis;
        return art;
    }

    // Baseline modes keep the reference untouched; the similarity is still
    // estimated when possible so distortion metrics stay comparable.
    SimilarityTransform sim;
    try {
        art.groups = segment_correspondences(set, ransac_config);
        art.selected_group = optimal_group_index(art.groups);
        sim = art.groups[art.selected_group].similarity;
    } catch (const DataError&) {
        art.groups.clear();
        art.selected_group = -1;
    }

    LocalWarpField local;
    if (config.mode == StitchMode::mdlt_only) {
        local = estimate_local_warps(set, mesh, mdlt_config);
    } else {
        local.mesh = mesh;
        local.warps.assign(mesh.centers.size(), solve_dlt(build_dlt_system(set.pairs)));
    }
    art.weights = unit_alpha(mesh.centers.size());
    art.field = combine_warps(local, sim, art.weights);
    return art;
}

StitchResult stitch(const ImageBuffer& target, const ImageBuffer& reference,
                    const CorrespondenceSet& set, const StitchConfig& config) {
    if (set.target_width != target.width || set.target_height != target.height) {
        throw DimensionMismatch("stitch: declared target size " +
                                std::to_string(set.target_width) + "x" +
                                std::to_string(set.target_height) +
                                " does not match the target image");
    }
    if (set.reference_width != reference.width || set.reference_height != reference.height) {
        throw DimensionMismatch("stitch: declared reference size does not match the image");
    }

    StitchResult result;
    result.artifacts = build_warp_field(set, config);
    const CombinedWarpField& field = result.artifacts.field;

    result.canvas.bounds = compute_canvas(field, target.width, target.height,
                                          reference.width, reference.height);
    const std::vector<std::int32_t> index_map = build_cell_index_map(
        field.mesh, field.target_warps, result.canvas.bounds, /*extend=*/true);

    const bool rgb = target.channels == 3 || reference.channels == 3;
    const ImageBuffer& t = rgb && target.channels == 1 ? to_rgb(target) : target;
    const ImageBuffer& r = rgb && reference.channels == 1 ? to_rgb(reference) : reference;

    const MaskedImage warped_target =
        warp_image(t, field.target_warps, index_map, result.canvas.bounds);
    const MaskedImage warped_reference =
        warp_image(r, field.reference_warps, index_map, result.canvas.bounds);
    result.canvas.image =
        blend_average(warped_target, warped_reference, &result.canvas.coverage);
    return result;
}

std::vector<ModeEval> run_eval(const LabeledScene& scene, const StitchConfig& base) {
    std::vector<ModeEval> evals;
    for (StitchMode mode :
         {StitchMode::proposed, StitchMode::mdlt_only, StitchMode::global_only}) {
        StitchConfig config = base;
        config.mode = mode;
        const PipelineArtifacts art = build_warp_field(scene.set, config);
        evals.push_back({mode, evaluate_warp(art.field, scene.set, scene.labels)});
    }
    return evals;
}

std::vector<ModeEval> run_eval(const SceneSpec& spec, const StitchConfig& base) {
    return run_eval(generate_scene(spec), base);
}

std::string format_eval_reports(const std::vector<ModeEval>& evals) {
    std::string out;
    for (const ModeEval& e : evals) {
        out += "mode=" + mode_name(e.mode) + "\n";
        out += format_report(e.report, mode_name(e.mode) + ".");
    }
    return out;
}

std::string format_group_report(const PipelineArtifacts& artifacts) {
    std::ostringstream out;
    out << "groups=" << artifacts.groups.size() << '\n';
    char buf[160];
    for (std::size_t i = 0; i < artifacts.groups.size(); ++i) {
        const InlierGroup& g = artifacts.groups[i];
        std::snprintf(buf, sizeof(buf), "group=%zu size=%zu rotation_rad=%.17g selected=%s\n",
                      i + 1, g.member_ids.size(), g.rotation_magnitude,
                      static_cast<int>(i) == artifacts.selected_group ? "yes" : "no");
        out << buf;
    }
    return out.str();
}

ImageBuffer render_mesh_overlay(const Canvas& canvas, const CombinedWarpField& field) {
    ImageBuffer img = to_rgb(canvas.image);
    const GridMesh& mesh = field.mesh;
    for (std::size_t i = 0; i < field.target_warps.size(); ++i) {
        double x0, y0, x1, y1;
        mesh.cell_rect(static_cast<int>(i), x0, y0, x1, y1);
        const Homography& warp = field.target_warps[i];
        draw_edge(img, canvas.bounds, warp, {x0, y0}, {x1, y0});
        draw_edge(img, canvas.bounds, warp, {x0, y0}, {x0, y1});
        const int r = static_cast<int>(i) / mesh.cols;
        const int c = static_cast<int>(i) % mesh.cols;
        if (c + 1 == mesh.cols) draw_edge(img, canvas.bounds, warp, {x1, y0}, {x1, y1});
        if (r + 1 == mesh.rows) draw_edge(img, canvas.bounds, warp, {x0, y1}, {x1, y1});
    }
    return img;
}

std::vector<int> load_labels(const std::string& path, const CorrespondenceSet& set) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open labels file: " + path);
    }
    std::unordered_map<int, int> by_id;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char ch : line) {
            if (ch == '#') break;
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                blank = false;
                break;
            }
        }
        if (blank) continue;
        std::istringstream ss(line);
        int id = 0, label = 0;
        if (!(ss >> id >> label)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'id label'");
        }
        by_id[id] = label;
    }
    std::vector<int> labels;
    labels.reserve(set.pairs.size());
    for (const auto& pr : set.pairs) {
        auto it = by_id.find(pr.id);
        if (it == by_id.end()) {
            throw ParseError(path + ": no label for pair id " + std::to_string(pr.id));
        }
        labels.push_back(it->second);
    }
    return labels;
}

void save_labels(const LabeledScene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    for (std::size_t i = 0; i < scene.set.pairs.size(); ++i) {
        out << scene.set.pairs[i].id << ' ' << scene.labels[i] << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing: " + path);
    }
}

}  // namespace ppstitch
