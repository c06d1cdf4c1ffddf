#include "ppstitch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ppstitch/random.hpp"

namespace ppstitch {

namespace {

bool regions_overlap(const PlaneSpec& a, const PlaneSpec& b) {
    const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    return w > 1e-9 && h > 1e-9;
}

void validate_spec(const SceneSpec& spec) {
    if (spec.planes.empty()) {
        throw InvalidSpec("scene: at least one plane required");
    }
    if (spec.points_per_plane <= 0) {
        throw InvalidSpec("scene: points_per_plane must be positive");
    }
    if (spec.noise_sigma < 0.0) {
        throw InvalidSpec("scene: noise_sigma must be nonnegative");
    }
    if (spec.outlier_fraction < 0.0 || spec.outlier_fraction >= 1.0) {
        throw InvalidSpec("scene: outlier_fraction must lie in [0, 1)");
    }
    if (spec.target_width <= 0 || spec.target_height <= 0 || spec.reference_width <= 0 ||
        spec.reference_height <= 0) {
        throw InvalidSpec("scene: image sizes must be positive");
    }
    for (std::size_t i = 0; i < spec.planes.size(); ++i) {
        const PlaneSpec& p = spec.planes[i];
        if (!(p.x0 < p.x1) || !(p.y0 < p.y1)) {
            throw InvalidSpec("scene: plane " + std::to_string(i) + " region is empty");
        }
        if (p.x0 < 0.0 || p.y0 < 0.0 || p.x1 > spec.target_width ||
            p.y1 > spec.target_height) {
            throw InvalidSpec("scene: plane " + std::to_string(i) +
                              " region exceeds the target image");
        }
        for (std::size_t j = i + 1; j < spec.planes.size(); ++j) {
            if (regions_overlap(p, spec.planes[j])) {
                throw InvalidSpec("scene: plane regions " + std::to_string(i) + " and " +
                                  std::to_string(j) + " overlap");
            }
        }
    }
}

Homography make_plane_homography(double scale, double angle, double tx, double ty,
                                 double h7, double h8) {
    SimilarityTransform s;
    s.scale = scale;
    s.angle = angle;
    s.tx = tx;
    s.ty = ty;
    Eigen::Matrix3d m = s.matrix();
    m(2, 0) = h7;
    m(2, 1) = h8;
    return Homography::raw(m);
}

}  // namespace

LabeledScene generate_scene(const SceneSpec& spec) {
    validate_spec(spec);
    RandomStream rng(spec.rng_seed);

    LabeledScene scene;
    scene.set.target_width = spec.target_width;
    scene.set.target_height = spec.target_height;
    scene.set.reference_width = spec.reference_width;
    scene.set.reference_height = spec.reference_height;

    int next_id = 0;
    for (std::size_t pi = 0; pi < spec.planes.size(); ++pi) {
        const PlaneSpec& plane = spec.planes[pi];
        int placed = 0;
        long attempts = 0;
        const long max_attempts = 10000L * spec.points_per_plane;
        while (placed < spec.points_per_plane) {
            if (++attempts > max_attempts) {
                throw InvalidSpec("scene: plane " + std::to_string(pi) +
                                  " maps outside the reference image too often");
            }
            Correspondence c;
            c.target.x() = rng.uniform(plane.x0, plane.x1);
            c.target.y() = rng.uniform(plane.y0, plane.y1);
            Point2 ref;
            try {
                ref = apply_homography(plane.h, c.target);
            } catch (const AtInfinity&) {
                continue;
            }
            ref.x() += spec.noise_sigma * rng.gauss();
            ref.y() += spec.noise_sigma * rng.gauss();
            if (ref.x() < 0.0 || ref.x() > spec.reference_width || ref.y() < 0.0 ||
                ref.y() > spec.reference_height) {
                continue;
            }
            c.reference = ref;
            c.id = next_id++;
            scene.set.pairs.push_back(c);
            scene.labels.push_back(static_cast<int>(pi));
            ++placed;
        }
    }

    const double f = spec.outlier_fraction;
    const long n_inliers = static_cast<long>(scene.set.pairs.size());
    const long n_outliers = std::lround(f / (1.0 - f) * static_cast<double>(n_inliers));
    for (long k = 0; k < n_outliers; ++k) {
        Correspondence c;
        c.target.x() = rng.uniform(0.0, spec.target_width);
        c.target.y() = rng.uniform(0.0, spec.target_height);
        c.reference.x() = rng.uniform(0.0, spec.reference_width);
        c.reference.y() = rng.uniform(0.0, spec.reference_height);
        c.id = next_id++;
        scene.set.pairs.push_back(c);
        scene.labels.push_back(-1);
    }
    return scene;
}

EvalReport evaluate_warp(const CombinedWarpField& field, const CorrespondenceSet& set,
                         const std::vector<int>& labels) {
    if (labels.size() != set.pairs.size()) {
        throw DimensionMismatch("evaluate_warp: labels and pairs differ in size");
    }
    const GridMesh& mesh = field.mesh;
    EvalReport report;

    // Alignment residuals over the inlier pairs.
    double sum_sq = 0.0;
    double max_err = 0.0;
    std::size_t count = 0;
    std::vector<std::uint8_t> overlap_cell(mesh.centers.size(), 0);
    for (std::size_t k = 0; k < set.pairs.size(); ++k) {
        if (labels[k] < 0) continue;
        const Correspondence& pr = set.pairs[k];
        const int i = mesh.cell_of(pr.target);
        overlap_cell[static_cast<std::size_t>(i)] = 1;
        const int j = reference_cell(field, pr.reference);
        double err;
        try {
            const Point2 a = apply_homography(field.target_warps[i], pr.target);
            const Point2 b = apply_homography(field.reference_warps[j], pr.reference);
            err = (a - b).norm();
        } catch (const AtInfinity&) {
            err = std::numeric_limits<double>::infinity();
        }
        sum_sq += err * err;
        max_err = std::max(max_err, err);
        ++count;
    }
    if (count > 0) {
        report.overlap_rmse = std::sqrt(sum_sq / static_cast<double>(count));
        report.overlap_max_error = max_err;
    }

    // Distortion axis for the far-cell gap metric; fall back to all cells
    // when the global fit is affine or unavailable.
    std::vector<std::uint8_t> far_cell(mesh.centers.size(), 1);
    try {
        const Homography global = solve_dlt(build_dlt_system(set.pairs));
        const UAxisFrame frame = build_u_axis(global, mesh, set);
        if (!frame.no_distortion_axis) {
            const double d_min = frame.projections[frame.i_min];
            const double span = frame.projections[frame.i_max] - d_min;
            if (span > 1e-9) {
                for (std::size_t i = 0; i < far_cell.size(); ++i) {
                    far_cell[i] = frame.projections[i] >= d_min + 0.8 * span ? 1 : 0;
                }
            }
        }
    } catch (const NumericError&) {
    }

    const Eigen::Matrix3d s = field.similarity.matrix();
    double gap = 0.0;
    for (std::size_t i = 0; i < far_cell.size(); ++i) {
        if (!far_cell[i]) continue;
        gap = std::max(gap, (field.target_warps[i].m - s).norm());
    }
    report.nonoverlap_similarity_gap = gap;

    // Local scale spread over the cells without matches.
    bool any_nonoverlap = false;
    for (std::size_t i = 0; i < overlap_cell.size(); ++i) {
        if (!overlap_cell[i]) {
            any_nonoverlap = true;
            break;
        }
    }
    double min_scale = std::numeric_limits<double>::infinity();
    double max_scale = 0.0;
    for (std::size_t i = 0; i < mesh.centers.size(); ++i) {
        if (any_nonoverlap && overlap_cell[i]) continue;
        try {
            const ProjectiveDecomposition dec = decompose_homography(field.target_warps[i]);
            const Point2& center = mesh.centers[i];
            const double u = std::cos(dec.theta) * center.x() + std::sin(dec.theta) * center.y();
            const double v = -std::sin(dec.theta) * center.x() + std::cos(dec.theta) * center.y();
            const double det_j = std::abs(local_scale_change(dec, Point2(u, v)));
            min_scale = std::min(min_scale, det_j);
            max_scale = std::max(max_scale, det_j);
        } catch (const NumericError&) {
        }
    }
    if (max_scale > 0.0 && std::isfinite(min_scale)) {
        report.nonoverlap_scale_spread = min_scale > 0.0
                                             ? max_scale / min_scale
                                             : std::numeric_limits<double>::infinity();
    }
    return report;
}

SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scene spec: " + path);
    }
    SceneSpec spec;
    bool saw_any = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = true;
        for (char ch : line) {
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                blank = false;
                break;
            }
        }
        if (blank) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.pop_back();
        };
        trim(key);
        trim(value);
        saw_any = true;

        std::istringstream vs(value);
        if (key == "target_width") {
            vs >> spec.target_width;
        } else if (key == "target_height") {
            vs >> spec.target_height;
        } else if (key == "reference_width") {
            vs >> spec.reference_width;
        } else if (key == "reference_height") {
            vs >> spec.reference_height;
        } else if (key == "points_per_plane") {
            vs >> spec.points_per_plane;
        } else if (key == "noise_sigma") {
            vs >> spec.noise_sigma;
        } else if (key == "outlier_fraction") {
            vs >> spec.outlier_fraction;
        } else if (key == "seed") {
            vs >> spec.rng_seed;
        } else if (key == "plane") {
            double e[13];
            for (double& x : e) {
                if (!(vs >> x)) {
                    throw ParseError(path + ":" + std::to_string(line_no) +
                                     ": plane needs 13 numbers (9 matrix entries + region)");
                }
            }
            PlaneSpec plane;
            Eigen::Matrix3d m;
            m << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
            plane.h = Homography::from_matrix(m);
            plane.x0 = e[9];
            plane.y0 = e[10];
            plane.x1 = e[11];
            plane.y1 = e[12];
            spec.planes.push_back(plane);
            continue;
        } else {
            throw ParseError(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                             "'");
        }
        if (vs.fail()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad value for '" +
                             key + "'");
        }
    }
    if (!saw_any) {
        throw ParseError(path + ": empty scene spec");
    }
    validate_spec(spec);
    return spec;
}

void save_scene_spec(const SceneSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << "target_width=" << spec.target_width << '\n'
        << "target_height=" << spec.target_height << '\n'
        << "reference_width=" << spec.reference_width << '\n'
        << "reference_height=" << spec.reference_height << '\n'
        << "points_per_plane=" << spec.points_per_plane << '\n';
    char buf[512];
    std::snprintf(buf, sizeof(buf), "noise_sigma=%.17g\noutlier_fraction=%.17g\n",
                  spec.noise_sigma, spec.outlier_fraction);
    out << buf << "seed=" << spec.rng_seed << '\n';
    for (const PlaneSpec& p : spec.planes) {
        const Eigen::Matrix3d& m = p.h.m;
        std::snprintf(buf, sizeof(buf),
                      "plane=%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                      "%.17g %.17g %.17g %.17g\n",
                      m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1),
                      m(2, 2), p.x0, p.y0, p.x1, p.y1);
        out << buf;
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing: " + path);
    }
}

SceneSpec standard_scene(const std::string& name) {
    SceneSpec spec;
    spec.target_width = 500;
    spec.target_height = 400;
    spec.reference_width = 500;
    spec.reference_height = 400;
    spec.noise_sigma = 0.5;
    spec.outlier_fraction = 0.0;

    if (name == "single-plane") {
        spec.points_per_plane = 120;
        spec.rng_seed = 7;
        PlaneSpec p;
        p.h = make_plane_homography(0.95, 0.01, 4.0, 3.0, -1.2e-4, 4e-5);
        p.x0 = 10.0;
        p.y0 = 10.0;
        p.x1 = 490.0;
        p.y1 = 390.0;
        spec.planes.push_back(p);
        return spec;
    }
    if (name == "two-plane") {
        spec.points_per_plane = 60;
        spec.rng_seed = 11;
        PlaneSpec a;
        a.h = make_plane_homography(1.0, 0.02, 255.0, 5.0, 2.8e-4, 3e-5);
        a.x0 = 10.0;
        a.y0 = 10.0;
        a.x1 = 120.0;
        a.y1 = 390.0;
        PlaneSpec b;
        b.h = make_plane_homography(0.98, 0.13, 215.0, -10.0, 2.2e-4, -4e-5);
        b.x0 = 130.0;
        b.y0 = 10.0;
        b.x1 = 240.0;
        b.y1 = 390.0;
        spec.planes.push_back(a);
        spec.planes.push_back(b);
        return spec;
    }
    if (name == "two-plane-dense") {
        spec.points_per_plane = 60;
        spec.rng_seed = 13;
        spec.reference_width = 820;
        spec.reference_height = 420;
        PlaneSpec a;
        a.h = make_plane_homography(1.0, 0.02, 255.0, 5.0, 2.8e-4, 3e-5);
        a.x0 = 10.0;
        a.y0 = 10.0;
        a.x1 = 240.0;
        a.y1 = 390.0;
        PlaneSpec b1;
        b1.h = make_plane_homography(0.98, 0.13, 235.0, -10.0, 2.2e-4, -4e-5);
        b1.x0 = 250.0;
        b1.y0 = 10.0;
        b1.x1 = 370.0;
        b1.y1 = 390.0;
        PlaneSpec b2 = b1;
        b2.x0 = 370.0;
        b2.x1 = 490.0;
        spec.planes.push_back(a);
        spec.planes.push_back(b1);
        spec.planes.push_back(b2);
        return spec;
    }
    throw InvalidSpec("unknown standard scene '" + name + "'");
}

std::string format_report(const EvalReport& report, const std::string& prefix) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%soverlap_rmse=%.17g\n"
                  "%soverlap_max_error=%.17g\n"
                  "%snonoverlap_scale_spread=%.17g\n"
                  "%snonoverlap_similarity_gap=%.17g\n",
                  prefix.c_str(), report.overlap_rmse, prefix.c_str(),
                  report.overlap_max_error, prefix.c_str(), report.nonoverlap_scale_spread,
                  prefix.c_str(), report.nonoverlap_similarity_gap);
    return buf;
}

}  // namespace ppstitch
