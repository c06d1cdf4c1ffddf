#include "ppstitch/similarity_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ppstitch/random.hpp"

namespace ppstitch {

namespace {

constexpr int kSampleSize = 4;
constexpr double kConfidence = 0.99;

// Root-mean symmetric transfer error of one pair, +inf when either mapping
// lands at infinity.
double symmetric_transfer(const Eigen::Matrix3d& h, const Eigen::Matrix3d& h_inv,
                          const Correspondence& pr) {
    const Point2& p = pr.target;
    const Point2& q = pr.reference;
    const double wf = h(2, 0) * p.x() + h(2, 1) * p.y() + h(2, 2);
    const double wb = h_inv(2, 0) * q.x() + h_inv(2, 1) * q.y() + h_inv(2, 2);
    if (std::abs(wf) < kSingularityFloor || std::abs(wb) < kSingularityFloor) {
        return std::numeric_limits<double>::infinity();
    }
    const double fx = (h(0, 0) * p.x() + h(0, 1) * p.y() + h(0, 2)) / wf - q.x();
    const double fy = (h(1, 0) * p.x() + h(1, 1) * p.y() + h(1, 2)) / wf - q.y();
    const double bx = (h_inv(0, 0) * q.x() + h_inv(0, 1) * q.y() + h_inv(0, 2)) / wb - p.x();
    const double by = (h_inv(1, 0) * q.x() + h_inv(1, 1) * q.y() + h_inv(1, 2)) / wb - p.y();
    return std::sqrt(0.5 * (fx * fx + fy * fy + bx * bx + by * by));
}

int adaptive_iterations(double inlier_ratio, int cap) {
    if (inlier_ratio <= 0.0) return cap;
    if (inlier_ratio >= 1.0) return 1;
    const double denom = std::log(1.0 - std::pow(inlier_ratio, kSampleSize));
    if (std::abs(denom) < 1e-300) return cap;
    const double n = std::log(1.0 - kConfidence) / denom;
    if (!(n > 0.0)) return 1;
    return std::min(cap, static_cast<int>(std::ceil(n)));
}

// Largest consensus over the remaining pair indices. Ties keep the earlier
// hypothesis.
std::vector<std::size_t> largest_consensus(const CorrespondenceSet& set,
                                           const std::vector<std::size_t>& remaining,
                                           const RansacConfig& config, double scale,
                                           RandomStream& rng) {
    std::vector<std::size_t> best;
    std::vector<std::size_t> scratch(remaining);
    const double threshold = config.threshold_d * scale;

    int needed = config.max_iterations;
    for (int it = 0; it < needed; ++it) {
        // Partial Fisher-Yates: first kSampleSize entries form the sample.
        for (int k = 0; k < kSampleSize; ++k) {
            const std::size_t j = k + rng.index(scratch.size() - k);
            std::swap(scratch[k], scratch[j]);
        }
        std::vector<Correspondence> sample;
        sample.reserve(kSampleSize);
        for (int k = 0; k < kSampleSize; ++k) sample.push_back(set.pairs[scratch[k]]);

        Homography h;
        try {
            h = solve_dlt(build_dlt_system(sample, Conditioning::normalized));
        } catch (const NumericError&) {
            continue;  // degenerate minimal sample
        }
        const Eigen::Matrix3d h_inv = h.m.inverse();

        std::vector<std::size_t> inliers;
        for (std::size_t idx : remaining) {
            if (symmetric_transfer(h.m, h_inv, set.pairs[idx]) < threshold) {
                inliers.push_back(idx);
            }
        }
        if (inliers.size() > best.size()) {
            best = std::move(inliers);
            const double ratio =
                static_cast<double>(best.size()) / static_cast<double>(remaining.size());
            needed = std::min(config.max_iterations,
                              std::max(it + 1, adaptive_iterations(ratio, config.max_iterations)));
        }
    }
    return best;
}

std::vector<Correspondence> collect(const CorrespondenceSet& set,
                                    const std::vector<std::size_t>& indices) {
    std::vector<Correspondence> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(set.pairs[i]);
    return out;
}

}  // namespace

std::vector<InlierGroup> segment_correspondences(const CorrespondenceSet& set,
                                                 const RansacConfig& config) {
    if (config.threshold_d <= 0.0) {
        throw InvalidSpec("segment_correspondences: threshold must be positive");
    }
    if (config.min_inliers_delta < kSampleSize) {
        throw InvalidSpec("segment_correspondences: min_inliers_delta must be >= 4");
    }
    const std::size_t delta = static_cast<std::size_t>(config.min_inliers_delta);
    if (set.pairs.size() < delta) {
        throw TooFewCorrespondences("segment_correspondences: " +
                                    std::to_string(set.pairs.size()) + " pairs, need >= " +
                                    std::to_string(delta));
    }

    const double scale =
        config.normalize_residuals
            ? static_cast<double>(std::max({set.target_width, set.target_height,
                                            set.reference_width, set.reference_height}))
            : 1.0;

    RandomStream rng(config.rng_seed);
    std::vector<std::size_t> remaining(set.pairs.size());
    std::iota(remaining.begin(), remaining.end(), 0);

    std::vector<InlierGroup> groups;
    while (remaining.size() >= delta) {
        std::vector<std::size_t> consensus =
            largest_consensus(set, remaining, config, scale, rng);
        if (consensus.size() < delta) {
            if (groups.empty()) {
                throw NoStructureFound("segment_correspondences: best consensus " +
                                       std::to_string(consensus.size()) + " < " +
                                       std::to_string(delta));
            }
            break;
        }

        const std::vector<Correspondence> members = collect(set, consensus);
        InlierGroup group;
        group.member_ids.reserve(members.size());
        for (const auto& m : members) group.member_ids.push_back(m.id);
        group.model = solve_dlt(build_dlt_system(members, Conditioning::normalized));
        group.similarity = fit_similarity(members);
        group.rotation_magnitude = std::abs(group.similarity.angle);
        groups.push_back(std::move(group));

        std::vector<std::size_t> next;
        next.reserve(remaining.size() - consensus.size());
        std::size_t k = 0;
        for (std::size_t idx : remaining) {
            if (k < consensus.size() && consensus[k] == idx) {
                ++k;
            } else {
                next.push_back(idx);
            }
        }
        remaining = std::move(next);
    }
    return groups;
}

SimilarityTransform fit_similarity(const std::vector<Correspondence>& pairs) {
    if (pairs.size() < 2) {
        throw TooFewCorrespondences("fit_similarity: need at least 2 pairs");
    }
    Point2 mean_t = Point2::Zero();
    Point2 mean_r = Point2::Zero();
    for (const auto& pr : pairs) {
        mean_t += pr.target;
        mean_r += pr.reference;
    }
    const double n = static_cast<double>(pairs.size());
    mean_t /= n;
    mean_r /= n;

    double dot_sum = 0.0;   // sum of <t~, r~>
    double cross_sum = 0.0; // sum of t~ x r~
    double den = 0.0;       // sum of ||t~||^2
    for (const auto& pr : pairs) {
        const Point2 t = pr.target - mean_t;
        const Point2 r = pr.reference - mean_r;
        dot_sum += t.x() * r.x() + t.y() * r.y();
        cross_sum += t.x() * r.y() - t.y() * r.x();
        den += t.squaredNorm();
    }
    if (den < kSingularityFloor) {
        throw DegenerateConfiguration("fit_similarity: target points coincide");
    }
    const double norm = std::hypot(dot_sum, cross_sum);
    if (norm < kSingularityFloor) {
        throw DegenerateConfiguration("fit_similarity: no rotation/scale signal");
    }

    SimilarityTransform s;
    s.angle = std::atan2(cross_sum, dot_sum);
    s.scale = norm / den;
    const double c = s.scale * std::cos(s.angle);
    const double sn = s.scale * std::sin(s.angle);
    s.tx = mean_r.x() - (c * mean_t.x() - sn * mean_t.y());
    s.ty = mean_r.y() - (sn * mean_t.x() + c * mean_t.y());
    return s;
}

int optimal_group_index(const std::vector<InlierGroup>& groups) {
    if (groups.empty()) {
        throw EmptyInput("select_optimal_similarity: no groups");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < groups.size(); ++i) {
        if (groups[i].rotation_magnitude < groups[best].rotation_magnitude ||
            (groups[i].rotation_magnitude == groups[best].rotation_magnitude &&
             groups[i].member_ids.size() > groups[best].member_ids.size())) {
            best = i;
        }
    }
    return static_cast<int>(best);
}

SimilarityTransform select_optimal_similarity(const std::vector<InlierGroup>& groups) {
    return groups[static_cast<std::size_t>(optimal_group_index(groups))].similarity;
}

}  // namespace ppstitch
