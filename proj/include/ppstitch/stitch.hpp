#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppstitch/correspondence.hpp"
#include "ppstitch/mdlt.hpp"
#include "ppstitch/raster.hpp"
#include "ppstitch/similarity_select.hpp"
#include "ppstitch/synthetic.hpp"
#include "ppstitch/warp_combine.hpp"

namespace ppstitch {

enum class StitchMode {
    proposed,     // blended local warps + compensating reference warps
    mdlt_only,    // local warps only, reference untouched
    global_only,  // one homography for the whole target
};

StitchMode parse_mode(const std::string& name);
std::string mode_name(StitchMode mode);

struct StitchConfig {
    double sigma = 8.5;
    double eta = 0.01;
    int grid_cols = 40;
    int grid_rows = 40;
    double ransac_threshold = 0.01;
    int min_inliers = 50;
    int max_iterations = 2000;
    std::uint64_t rng_seed = 1;
    StitchMode mode = StitchMode::proposed;
    bool diagnostics = false;
};

/// Everything the geometric pipeline produces before any pixel is touched.
struct PipelineArtifacts {
    CombinedWarpField field;
    std::vector<InlierGroup> groups;
    int selected_group = -1;  // -1 when no segmentation was available
    UAxisFrame frame;
    BlendWeights weights;
    bool blending_active = false;
};

/// Run the geometric pipeline for the configured mode.
PipelineArtifacts build_warp_field(const CorrespondenceSet& set, const StitchConfig& config);

struct StitchResult {
    Canvas canvas;
    PipelineArtifacts artifacts;
};

/// Full pipeline: warp the target by the blended field, the reference by
/// the compensating field, and average the two on a shared canvas.
StitchResult stitch(const ImageBuffer& target, const ImageBuffer& reference,
                    const CorrespondenceSet& set, const StitchConfig& config);

struct ModeEval {
    StitchMode mode = StitchMode::proposed;
    EvalReport report;
};

/// Evaluate all three modes on one labeled scene.
std::vector<ModeEval> run_eval(const LabeledScene& scene, const StitchConfig& base);
std::vector<ModeEval> run_eval(const SceneSpec& spec, const StitchConfig& base);

/// Key=value rendering of a mode comparison.
std::string format_eval_reports(const std::vector<ModeEval>& evals);

/// Per-group segmentation summary (size, rotation, selected flag).
std::string format_group_report(const PipelineArtifacts& artifacts);

/// Composite with the forward-warped mesh boundaries drawn on top.
ImageBuffer render_mesh_overlay(const Canvas& canvas, const CombinedWarpField& field);

/// Ground-truth labels aligned with the pair order of `set` (file lines:
/// `id label`). Every pair id must be covered.
std::vector<int> load_labels(const std::string& path, const CorrespondenceSet& set);
void save_labels(const LabeledScene& scene, const std::string& path);

}  // namespace ppstitch
