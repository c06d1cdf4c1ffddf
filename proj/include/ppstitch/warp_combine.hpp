#pragma once

#include <utility>
#include <vector>

#include "ppstitch/mdlt.hpp"
#include "ppstitch/raster.hpp"
#include "ppstitch/similarity_select.hpp"

namespace ppstitch {

/// Distortion axis of the global projective transform, expressed in target
/// image coordinates with the image center as origin. projections[i] is the
/// signed length of cell center i along u_dir. When the global transform is
/// affine there is no distortion axis and the frame is flagged.
struct UAxisFrame {
    Point2 origin = Point2::Zero();
    double theta = 0.0;
    Eigen::Vector2d u_dir = Eigen::Vector2d::UnitX();
    std::vector<double> projections;
    int i_min = 0;
    int i_max = 0;
    bool no_distortion_axis = false;
};

/// Per-cell blend coefficients with alpha + beta = 1.
struct BlendWeights {
    std::vector<double> alpha;
    std::vector<double> beta;
};

/// Blended per-cell warps: target_warps move the target image into the
/// reference frame; reference_warps are the compensating warps that keep
/// pairs aligned by the local model aligned after blending.
struct CombinedWarpField {
    GridMesh mesh;
    std::vector<Homography> target_warps;     // blended local warps
    std::vector<Homography> reference_warps;  // compensating warps
    SimilarityTransform similarity;
};

/// Build the distortion axis from the global homography. The sign of u_dir
/// is fixed so the mean projection of the target-side match points lies
/// nearer the i_min end (the overlap keeps the local-warp weight).
UAxisFrame build_u_axis(const Homography& global_h, const GridMesh& mesh,
                        const CorrespondenceSet& set);

/// beta ramps linearly in the u-axis projection from 0 at i_min to 1 at
/// i_max; alpha = 1 - beta. A flagged frame yields beta = 0 everywhere.
/// Throws DegenerateAxis when all projections coincide.
BlendWeights blend_weights(const UAxisFrame& frame, const GridMesh& mesh);

/// Elementwise blend of canonical matrices, alpha*H_i + beta*S, followed by
/// re-canonicalization; reference warp T_i = H'_i * H_i^-1 is stored
/// unscaled so T_i * H_i reproduces H'_i exactly. Throws SingularBlend when
/// a blended matrix is not invertible.
CombinedWarpField combine_warps(const LocalWarpField& local, const SimilarityTransform& sim,
                                const BlendWeights& weights);

/// Grayscale weight maps at mesh resolution (one pixel per cell):
/// first the local-warp map (alpha), then the similarity map (beta).
std::pair<ImageBuffer, ImageBuffer> export_weight_maps(const BlendWeights& weights,
                                                       const GridMesh& mesh);

/// Cell owning a reference-image point: among the cells whose local warp
/// maps their rectangle over the point, the one with the nearest warped
/// center; falls back to the nearest warped center when no cell contains
/// the point.
int reference_cell(const CombinedWarpField& field, const Point2& reference_point);

}  // namespace ppstitch
