#pragma once

#include <cstdint>
#include <vector>

#include "ppstitch/correspondence.hpp"
#include "ppstitch/geometry.hpp"

namespace ppstitch {

struct RansacConfig {
    /// Inlier residual threshold. Interpreted in normalized units (all
    /// coordinates divided by the largest declared image extent) unless
    /// normalize_residuals is false, in which case it is raw pixels.
    double threshold_d = 0.01;
    int min_inliers_delta = 50;
    int max_iterations = 2000;
    std::uint64_t rng_seed = 1;
    bool normalize_residuals = true;
};

/// One extracted consensus set, interpreted as a scene plane.
struct InlierGroup {
    std::vector<int> member_ids;
    Homography model;               // refit on all members
    SimilarityTransform similarity; // least-squares fit on all members
    double rotation_magnitude = 0.0;  // |similarity.angle| in [0, pi]
};

/// Iterated homography-RANSAC segmentation: extract the largest consensus
/// set, remove it, and repeat until the best consensus drops below
/// min_inliers_delta. Throws NoStructureFound when the very first pass
/// cannot reach the threshold.
std::vector<InlierGroup> segment_correspondences(const CorrespondenceSet& set,
                                                 const RansacConfig& config);

/// Closed-form least-squares similarity minimizing
/// sum ||S(target_i) - reference_i||^2. Throws DegenerateConfiguration when
/// the target points (or their images) coincide.
SimilarityTransform fit_similarity(const std::vector<Correspondence>& pairs);

/// Index of the group with smallest rotation magnitude; ties break to the
/// larger group, then to extraction order.
int optimal_group_index(const std::vector<InlierGroup>& groups);

/// The similarity of the group picked by optimal_group_index.
SimilarityTransform select_optimal_similarity(const std::vector<InlierGroup>& groups);

}  // namespace ppstitch
