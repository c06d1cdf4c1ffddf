#include "ppstitch/mdlt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppstitch {

void GridMesh::cell_rect(int index, double& x0, double& y0, double& x1, double& y1) const {
    const int r = index / cols;
    const int c = index % cols;
    x0 = c * cell_width;
    y0 = r * cell_height;
    x1 = (c + 1 == cols) ? image_width : (c + 1) * cell_width;
    y1 = (r + 1 == rows) ? image_height : (r + 1) * cell_height;
}

int GridMesh::cell_of(const Point2& p) const {
    int c = static_cast<int>(std::floor(p.x() / cell_width));
    int r = static_cast<int>(std::floor(p.y() / cell_height));
    c = std::clamp(c, 0, cols - 1);
    r = std::clamp(r, 0, rows - 1);
    return cell_index(r, c);
}

GridMesh build_mesh(int image_width, int image_height, int cols, int rows) {
    if (cols <= 0 || rows <= 0) {
        throw InvalidGrid("build_mesh: grid dimensions must be positive");
    }
    if (image_width <= 0 || image_height <= 0) {
        throw InvalidGrid("build_mesh: image dimensions must be positive");
    }
    GridMesh mesh;
    mesh.cols = cols;
    mesh.rows = rows;
    mesh.image_width = image_width;
    mesh.image_height = image_height;
    mesh.cell_width = std::floor(static_cast<double>(image_width) / cols);
    mesh.cell_height = std::floor(static_cast<double>(image_height) / rows);
    if (mesh.cell_width < 1.0 || mesh.cell_height < 1.0) {
        throw InvalidGrid("build_mesh: grid finer than the image");
    }
    mesh.centers.reserve(static_cast<std::size_t>(cols) * rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            mesh.centers.emplace_back((c + 0.5) * mesh.cell_width,
                                      (r + 0.5) * mesh.cell_height);
        }
    }
    return mesh;
}

Eigen::VectorXd mdlt_weights(const Point2& center, const CorrespondenceSet& set,
                             const MdltConfig& config) {
    const double inv_sigma_sq = 1.0 / (config.sigma * config.sigma);
    Eigen::VectorXd w(static_cast<Eigen::Index>(set.pairs.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double d2 = (center - set.pairs[i].target).squaredNorm();
        w(i) = std::max(std::exp(-d2 * inv_sigma_sq), config.eta);
    }
    return w;
}

LocalWarpField estimate_local_warps(const CorrespondenceSet& set, const GridMesh& mesh,
                                    const MdltConfig& config) {
    const DltSystem system = build_dlt_system(set.pairs, Conditioning::normalized);

    LocalWarpField field;
    field.mesh = mesh;
    field.warps.reserve(mesh.centers.size());
    for (std::size_t i = 0; i < mesh.centers.size(); ++i) {
        const Eigen::VectorXd weights = mdlt_weights(mesh.centers[i], set, config);
        try {
            field.warps.push_back(solve_dlt(system, weights));
        } catch (const DegenerateConfiguration& e) {
            const int r = static_cast<int>(i) / mesh.cols;
            const int c = static_cast<int>(i) % mesh.cols;
            throw DegenerateConfiguration("cell (" + std::to_string(r) + ", " +
                                          std::to_string(c) + "): " + e.what());
        }
    }
    return field;
}

}  // namespace ppstitch
