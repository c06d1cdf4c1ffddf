#include "ppstitch/warp_combine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ppstitch {

UAxisFrame build_u_axis(const Homography& global_h, const GridMesh& mesh,
                        const CorrespondenceSet& set) {
    const ProjectiveDecomposition dec = decompose_homography(global_h);

    UAxisFrame frame;
    frame.origin = Point2(mesh.image_width / 2.0, mesh.image_height / 2.0);
    frame.no_distortion_axis = dec.c == 0.0;
    frame.theta = dec.theta;
    frame.u_dir = Eigen::Vector2d(std::cos(dec.theta), std::sin(dec.theta));

    frame.projections.resize(mesh.centers.size());
    for (std::size_t i = 0; i < mesh.centers.size(); ++i) {
        frame.projections[i] = (mesh.centers[i] - frame.origin).dot(frame.u_dir);
    }
    auto minmax = std::minmax_element(frame.projections.begin(), frame.projections.end());
    frame.i_min = static_cast<int>(minmax.first - frame.projections.begin());
    frame.i_max = static_cast<int>(minmax.second - frame.projections.begin());

    if (frame.no_distortion_axis) {
        return frame;
    }

    // Orient the axis so the overlap (where the matches live) sits at the
    // low-projection end.
    Point2 mean_match = Point2::Zero();
    for (const auto& pr : set.pairs) mean_match += pr.target;
    mean_match /= static_cast<double>(set.pairs.size());
    const double match_proj = (mean_match - frame.origin).dot(frame.u_dir);
    if (std::abs(match_proj - frame.projections[frame.i_max]) <
        std::abs(match_proj - frame.projections[frame.i_min])) {
        frame.u_dir = -frame.u_dir;
        for (double& d : frame.projections) d = -d;
        std::swap(frame.i_min, frame.i_max);
    }
    return frame;
}

BlendWeights blend_weights(const UAxisFrame& frame, const GridMesh& mesh) {
    const std::size_t n = mesh.centers.size();
    if (frame.projections.size() != n) {
        throw DimensionMismatch("blend_weights: frame and mesh cell counts differ");
    }
    BlendWeights w;
    w.alpha.resize(n);
    w.beta.resize(n);
    if (frame.no_distortion_axis) {
        std::fill(w.alpha.begin(), w.alpha.end(), 1.0);
        std::fill(w.beta.begin(), w.beta.end(), 0.0);
        return w;
    }

    const double d_min = frame.projections[frame.i_min];
    const double span = frame.projections[frame.i_max] - d_min;
    if (span < 1e-9) {
        throw DegenerateAxis("blend_weights: all cell projections coincide");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double b = std::clamp((frame.projections[i] - d_min) / span, 0.0, 1.0);
        w.beta[i] = b;
        w.alpha[i] = 1.0 - b;
    }
    return w;
}

CombinedWarpField combine_warps(const LocalWarpField& local, const SimilarityTransform& sim,
                                const BlendWeights& weights) {
    const std::size_t n = local.warps.size();
    if (weights.alpha.size() != n || weights.beta.size() != n) {
        throw DimensionMismatch("combine_warps: weights and warp field cell counts differ");
    }
    const Eigen::Matrix3d s = sim.matrix();

    CombinedWarpField field;
    field.mesh = local.mesh;
    field.similarity = sim;
    field.target_warps.reserve(n);
    field.reference_warps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!local.warps[i].canonical) {
            throw NumericError("combine_warps: local warp " + std::to_string(i) +
                               " is not canonical");
        }
        const Eigen::Matrix3d blended =
            weights.alpha[i] * local.warps[i].m + weights.beta[i] * s;
        const Homography combined = Homography::from_matrix(blended);
        if (!combined.invertible()) {
            throw SingularBlend("combine_warps: blended warp at cell " + std::to_string(i) +
                                " is singular");
        }
        field.target_warps.push_back(combined);
        field.reference_warps.push_back(
            Homography::raw(combined.m * local.warps[i].m.inverse()));
    }
    return field;
}

std::pair<ImageBuffer, ImageBuffer> export_weight_maps(const BlendWeights& weights,
                                                       const GridMesh& mesh) {
    const std::size_t n = mesh.centers.size();
    if (weights.alpha.size() != n) {
        throw DimensionMismatch("export_weight_maps: weights and mesh cell counts differ");
    }
    ImageBuffer local_map = ImageBuffer::create(mesh.cols, mesh.rows, 1);
    ImageBuffer sim_map = ImageBuffer::create(mesh.cols, mesh.rows, 1);
    for (int r = 0; r < mesh.rows; ++r) {
        for (int c = 0; c < mesh.cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * mesh.cols + c;
            local_map.at(c, r, 0) = static_cast<float>(weights.alpha[i]);
            sim_map.at(c, r, 0) = static_cast<float>(weights.beta[i]);
        }
    }
    return {std::move(local_map), std::move(sim_map)};
}

int reference_cell(const CombinedWarpField& field, const Point2& reference_point) {
    const GridMesh& mesh = field.mesh;
    const std::size_t n = field.target_warps.size();

    // A cell is a candidate when its local warp's pre-image of the point
    // falls inside the cell rectangle. Warped regions of nearby cells
    // overlap, so multiple cells can claim a point; claims are ranked by
    // the distance from the warped cell center, which keeps the assignment
    // on the cell whose local model actually explains the point. Points
    // outside every warped cell take the nearest warped center outright.
    int best_candidate = -1, best_any = 0;
    double candidate_d = std::numeric_limits<double>::infinity();
    double any_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        // local H_i = T'_i^-1 * H'_i, so H_i^-1 = H'_i^-1 * T'_i.
        const Eigen::Matrix3d inv_local =
            field.target_warps[i].m.inverse() * field.reference_warps[i].m;
        const double w = inv_local(2, 0) * reference_point.x() +
                         inv_local(2, 1) * reference_point.y() + inv_local(2, 2);
        if (std::abs(w) < kSingularityFloor) continue;
        const double x = (inv_local(0, 0) * reference_point.x() +
                          inv_local(0, 1) * reference_point.y() + inv_local(0, 2)) / w;
        const double y = (inv_local(1, 0) * reference_point.x() +
                          inv_local(1, 1) * reference_point.y() + inv_local(1, 2)) / w;

        const Eigen::Matrix3d local =
            field.reference_warps[i].m.inverse() * field.target_warps[i].m;
        const Point2& c = mesh.centers[i];
        const double wc = local(2, 0) * c.x() + local(2, 1) * c.y() + local(2, 2);
        if (std::abs(wc) < kSingularityFloor) continue;
        const Point2 mapped((local(0, 0) * c.x() + local(0, 1) * c.y() + local(0, 2)) / wc,
                            (local(1, 0) * c.x() + local(1, 1) * c.y() + local(1, 2)) / wc);
        const double d = (mapped - reference_point).squaredNorm();
        if (d < any_d) {
            any_d = d;
            best_any = static_cast<int>(i);
        }

        double x0, y0, x1, y1;
        mesh.cell_rect(static_cast<int>(i), x0, y0, x1, y1);
        if (x >= x0 - 1e-9 && x <= x1 + 1e-9 && y >= y0 - 1e-9 && y <= y1 + 1e-9 &&
            d < candidate_d) {
            candidate_d = d;
            best_candidate = static_cast<int>(i);
        }
    }
    return best_candidate >= 0 ? best_candidate : best_any;
}

}  // namespace ppstitch
