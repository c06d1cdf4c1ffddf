#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ppstitch/errors.hpp"

namespace ppstitch {

struct Correspondence;

using Point2 = Eigen::Vector2d;

/// Guard against division by (near-)zero homogeneous coordinates and
/// against projective denominators on the line mapped to infinity.
constexpr double kSingularityFloor = 1e-12;

/// 3x3 projective transform with the lower-right entry as scale anchor.
///
/// `canonical` is true when the matrix has been rescaled so m(2,2) == 1.
/// When the lower-right entry vanishes (relative magnitude below
/// kSingularityFloor in the unit-Frobenius gauge) the matrix is kept at
/// unit Frobenius norm instead and flagged non-canonical.
struct Homography {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    bool canonical = true;

    static Homography identity() { return {}; }

    /// Canonicalize an arbitrary nonzero matrix.
    static Homography from_matrix(const Eigen::Matrix3d& raw);

    /// Keep the matrix exactly as given (no rescaling).
    static Homography raw(const Eigen::Matrix3d& m_in);

    Homography inverse() const;
    bool invertible(double floor = kSingularityFloor) const;
};

/// Rotation + uniform scale + translation. Never introduces perspective.
struct SimilarityTransform {
    double scale = 1.0;
    double angle = 0.0;  // radians
    double tx = 0.0;
    double ty = 0.0;

    Eigen::Matrix3d matrix() const;
    Point2 apply(const Point2& p) const;
};

enum class Conditioning { none, normalized };

/// Stacked cross-product constraint rows (two per correspondence) plus the
/// point-conditioning transforms needed to map a solution back to pixels.
struct DltSystem {
    Eigen::MatrixXd rows;  // 2N x 9
    Eigen::Matrix3d t_target = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d t_reference = Eigen::Matrix3d::Identity();
    Conditioning conditioning = Conditioning::none;
};

/// Rotated-frame split of a homography into affine and projective parts.
/// q = qa * qp, with qa affine (bottom row 0 0 1) and qp identity except
/// qp(2,0) = -c. ka is the determinant of qa's upper-left 2x2 block.
struct ProjectiveDecomposition {
    double theta = 0.0;  // rotation aligning the distortion direction
    double c = 0.0;      // sqrt(h7^2 + h8^2); 0 for affine input
    Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d qa = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d qp = Eigen::Matrix3d::Identity();
    double ka = 1.0;
};

Eigen::Matrix3d rotation_matrix(double theta);

/// Assemble the 2Nx9 constraint matrix from point correspondences.
/// Throws TooFewCorrespondences (N < 4) or NonFiniteInput.
DltSystem build_dlt_system(const std::vector<Correspondence>& pairs,
                           Conditioning conditioning = Conditioning::normalized);

/// Minimize ||A h|| subject to ||h|| = 1 via SVD, de-condition and
/// canonicalize. Throws DegenerateConfiguration when the solution is not
/// unique (ratio of the two smallest singular values <= 1 + 1e-8).
Homography solve_dlt(const DltSystem& system);

/// Weighted variant: row pair 2i, 2i+1 is scaled by weights[i] before the
/// solve. weights.size() must equal the number of correspondences.
Homography solve_dlt(const DltSystem& system, const Eigen::VectorXd& weights);

/// Split h into rotation + affine/projective parts. Requires a canonical
/// homography; affine input (h7 = h8 = 0) yields theta = 0, c = 0.
ProjectiveDecomposition decompose_homography(const Homography& h);

/// Jacobian determinant of the rotated transform at a point expressed in
/// the rotated (u, v) frame: ka / (1 - c*u)^3. Throws AtInfinity when the
/// denominator is below the singularity floor.
double local_scale_change(const ProjectiveDecomposition& d, const Point2& p);

/// Apply h to a point; throws AtInfinity when the homogeneous coordinate
/// falls below the singularity floor.
Point2 apply_homography(const Homography& h, const Point2& p);
Point2 apply_homography(const Eigen::Matrix3d& m, const Point2& p);

}  // namespace ppstitch
