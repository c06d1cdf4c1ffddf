#include "ppstitch/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "ppstitch/correspondence.hpp"

namespace ppstitch {

namespace {

// Zero-mean, RMS-distance-sqrt(2) conditioning transform for a point cloud.
Eigen::Matrix3d conditioning_transform(const std::vector<Correspondence>& pairs,
                                       bool reference_side) {
    Point2 mean = Point2::Zero();
    for (const auto& pr : pairs) {
        mean += reference_side ? pr.reference : pr.target;
    }
    mean /= static_cast<double>(pairs.size());

    double mean_sq = 0.0;
    for (const auto& pr : pairs) {
        const Point2& p = reference_side ? pr.reference : pr.target;
        mean_sq += (p - mean).squaredNorm();
    }
    mean_sq /= static_cast<double>(pairs.size());

    const double rms = std::sqrt(mean_sq);
    const double scale = rms > kSingularityFloor ? std::sqrt(2.0) / rms : 1.0;

    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = scale;
    t(1, 1) = scale;
    t(0, 2) = -scale * mean.x();
    t(1, 2) = -scale * mean.y();
    return t;
}

Point2 condition_point(const Eigen::Matrix3d& t, const Point2& p) {
    return {t(0, 0) * p.x() + t(0, 2), t(1, 1) * p.y() + t(1, 2)};
}

Homography solve_dlt_impl(const DltSystem& system, const Eigen::VectorXd* weights) {
    const Eigen::Index n = system.rows.rows() / 2;
    Eigen::MatrixXd a = system.rows;
    if (weights != nullptr) {
        if (weights->size() != n) {
            throw DimensionMismatch("solve_dlt: expected " + std::to_string(n) +
                                    " weights, got " + std::to_string(weights->size()));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            a.row(2 * i) *= (*weights)(i);
            a.row(2 * i + 1) *= (*weights)(i);
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();

    // Conceptually A has 9 singular values; those beyond min(2N, 9) are zero.
    const double s0 = sv(0);
    const double s7 = sv.size() > 7 ? sv(7) : 0.0;
    const double s8 = sv.size() > 8 ? sv(8) : 0.0;
    // Unique solution needs rank 8: the 8th singular value must clear both
    // the 9th and the numerical rank floor.
    if (!(s7 > (1.0 + 1e-8) * s8) || s7 < 1e-10 * s0) {
        throw DegenerateConfiguration(
            "solve_dlt: solution is not unique (two smallest singular values coincide)");
    }

    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d m;
    m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

    if (system.conditioning == Conditioning::normalized) {
        m = system.t_reference.inverse() * m * system.t_target;
    }

    Homography result = Homography::from_matrix(m);
    if (!result.invertible()) {
        throw DegenerateConfiguration("solve_dlt: recovered matrix is singular");
    }
    return result;
}

}  // namespace

Homography Homography::from_matrix(const Eigen::Matrix3d& raw) {
    const double f = raw.norm();
    if (!(f > 0.0) || !std::isfinite(f)) {
        throw NonFiniteInput("Homography::from_matrix: matrix has no finite norm");
    }
    if (std::abs(raw(2, 2)) / f >= kSingularityFloor) {
        Homography h;
        h.m = raw / raw(2, 2);
        h.canonical = true;
        return h;
    }
    Homography h;
    h.m = raw / f;
    h.canonical = false;
    return h;
}

Homography Homography::raw(const Eigen::Matrix3d& m_in) {
    Homography h;
    h.m = m_in;
    h.canonical = m_in(2, 2) == 1.0;
    return h;
}

Homography Homography::inverse() const {
    return Homography::raw(m.inverse());
}

bool Homography::invertible(double floor) const {
    return std::abs(m.determinant()) > floor;
}

Eigen::Matrix3d SimilarityTransform::matrix() const {
    const double c = scale * std::cos(angle);
    const double s = scale * std::sin(angle);
    Eigen::Matrix3d m;
    m << c, -s, tx, s, c, ty, 0.0, 0.0, 1.0;
    return m;
}

Point2 SimilarityTransform::apply(const Point2& p) const {
    const double c = scale * std::cos(angle);
    const double s = scale * std::sin(angle);
    return {c * p.x() - s * p.y() + tx, s * p.x() + c * p.y() + ty};
}

Eigen::Matrix3d rotation_matrix(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix3d r;
    r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return r;
}

DltSystem build_dlt_system(const std::vector<Correspondence>& pairs,
                           Conditioning conditioning) {
    if (pairs.size() < 4) {
        throw TooFewCorrespondences("build_dlt_system: need at least 4 correspondences, got " +
                                    std::to_string(pairs.size()));
    }
    for (const auto& pr : pairs) {
        if (!pr.target.allFinite() || !pr.reference.allFinite()) {
            throw NonFiniteInput("build_dlt_system: non-finite coordinate in pair id " +
                                 std::to_string(pr.id));
        }
    }

    DltSystem system;
    system.conditioning = conditioning;
    if (conditioning == Conditioning::normalized) {
        system.t_target = conditioning_transform(pairs, false);
        system.t_reference = conditioning_transform(pairs, true);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
    system.rows.resize(2 * n, 9);
    for (Eigen::Index i = 0; i < n; ++i) {
        Point2 p = pairs[i].target;
        Point2 q = pairs[i].reference;
        if (conditioning == Conditioning::normalized) {
            p = condition_point(system.t_target, p);
            q = condition_point(system.t_reference, q);
        }
        const double x = p.x(), y = p.y();
        const double xp = q.x(), yp = q.y();
        system.rows.row(2 * i) << 0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp;
        system.rows.row(2 * i + 1) << x, y, 1.0, 0.0, 0.0, 0.0, -xp * x, -xp * y, -xp;
    }
    return system;
}

Homography solve_dlt(const DltSystem& system) {
    return solve_dlt_impl(system, nullptr);
}

Homography solve_dlt(const DltSystem& system, const Eigen::VectorXd& weights) {
    return solve_dlt_impl(system, &weights);
}

ProjectiveDecomposition decompose_homography(const Homography& h) {
    if (!h.canonical) {
        throw NumericError("decompose_homography: input must be canonical");
    }
    const double h7 = h.m(2, 0);
    const double h8 = h.m(2, 1);

    ProjectiveDecomposition d;
    d.c = std::hypot(h7, h8);
    if (d.c < kSingularityFloor) {
        // Affine input: no projective part.
        d.theta = 0.0;
        d.c = 0.0;
        d.q = h.m;
        d.qp = Eigen::Matrix3d::Identity();
        d.qa = h.m;
    } else {
        // The branch with q(2,0) = -c keeps c nonnegative and makes the
        // scale-change law below hold with the (1 - c*u) denominator.
        d.theta = std::atan2(-h8, -h7);
        d.q = h.m * rotation_matrix(d.theta);
        d.qp = Eigen::Matrix3d::Identity();
        d.qp(2, 0) = -d.c;
        d.qa = d.q;
        d.qa(0, 0) = d.q(0, 0) + d.c * d.q(0, 2);
        d.qa(1, 0) = d.q(1, 0) + d.c * d.q(1, 2);
        d.qa(2, 0) = 0.0;
        d.qa(2, 1) = 0.0;
        d.qa(2, 2) = 1.0;
    }
    d.ka = d.qa(0, 0) * d.qa(1, 1) - d.qa(0, 1) * d.qa(1, 0);
    return d;
}

double local_scale_change(const ProjectiveDecomposition& d, const Point2& p) {
    const double denom = 1.0 - d.c * p.x();
    if (std::abs(denom) < kSingularityFloor) {
        throw AtInfinity("local_scale_change: point lies on the line mapped to infinity");
    }
    return d.ka / (denom * denom * denom);
}

Point2 apply_homography(const Eigen::Matrix3d& m, const Point2& p) {
    const double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
    if (std::abs(w) < kSingularityFloor) {
        throw AtInfinity("apply_homography: homogeneous coordinate vanished");
    }
    return {(m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / w,
            (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / w};
}

Point2 apply_homography(const Homography& h, const Point2& p) {
    return apply_homography(h.m, p);
}

}  // namespace ppstitch
