#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppstitch/correspondence.hpp"
#include "ppstitch/geometry.hpp"
#include "ppstitch/warp_combine.hpp"

namespace ppstitch {

/// One scene plane: a generating homography and the target-image rectangle
/// the plane's points are drawn from.
struct PlaneSpec {
    Homography h;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

struct SceneSpec {
    std::vector<PlaneSpec> planes;
    int points_per_plane = 60;
    double noise_sigma = 0.0;       // pixels, added to the reference point
    double outlier_fraction = 0.0;  // fraction of the total set
    std::uint64_t rng_seed = 1;
    int target_width = 0, target_height = 0;
    int reference_width = 0, reference_height = 0;
};

/// Correspondences plus ground-truth labels (plane index, -1 for outliers).
struct LabeledScene {
    CorrespondenceSet set;
    std::vector<int> labels;
};

struct EvalReport {
    double overlap_rmse = 0.0;
    double overlap_max_error = 0.0;
    double nonoverlap_scale_spread = 1.0;
    double nonoverlap_similarity_gap = 0.0;
};

/// Sample labeled correspondences from the scene. Deterministic under the
/// spec's seed. Throws InvalidSpec for contradictory specs.
LabeledScene generate_scene(const SceneSpec& spec);

/// Score a warp field against a labeled scene: alignment residuals over the
/// inlier pairs and distortion statistics over the cells without matches.
EvalReport evaluate_warp(const CombinedWarpField& field, const CorrespondenceSet& set,
                         const std::vector<int>& labels);

/// Plain-text key=value scene description; `plane=` lines carry nine
/// row-major homography entries followed by the region rectangle x0 y0 x1 y1.
SceneSpec load_scene_spec(const std::string& path);
void save_scene_spec(const SceneSpec& spec, const std::string& path);

/// Built-in fixture scenes: "single-plane", "two-plane", "two-plane-dense".
SceneSpec standard_scene(const std::string& name);

/// Machine-readable key=value rendering of a report.
std::string format_report(const EvalReport& report, const std::string& prefix);

}  // namespace ppstitch
