#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ppstitch/correspondence.hpp"
#include "ppstitch/geometry.hpp"

namespace ppstitch {

/// Uniform cell partition of the target image. Cell sizes are
/// floor(extent / count); the last row/column absorbs remainder pixels.
/// Centers follow the uniform formula ((c+0.5)*cell_width, (r+0.5)*cell_height).
struct GridMesh {
    int cols = 0;
    int rows = 0;
    double cell_width = 0.0;
    double cell_height = 0.0;
    int image_width = 0;
    int image_height = 0;
    std::vector<Point2> centers;  // row-major

    int cell_count() const { return cols * rows; }
    int cell_index(int row, int col) const { return row * cols + col; }

    /// Closed-open pixel rectangle of a cell; the last row/column extends
    /// to the image edge.
    void cell_rect(int index, double& x0, double& y0, double& x1, double& y1) const;

    /// Cell owning a point of the target image (clamped at the edges).
    int cell_of(const Point2& p) const;
};

struct MdltConfig {
    double sigma = 8.5;
    double eta = 0.01;
    int grid_cols = 40;
    int grid_rows = 40;
};

/// One estimated homography per mesh cell.
struct LocalWarpField {
    GridMesh mesh;
    std::vector<Homography> warps;  // row-major, one per cell
};

GridMesh build_mesh(int image_width, int image_height, int cols, int rows);

/// Gaussian falloff weights, floored at eta: max(exp(-||center - t_i||^2 / sigma^2), eta).
/// Distances are measured against the target-image point of each pair, in
/// the raw units of the input coordinates.
Eigen::VectorXd mdlt_weights(const Point2& center, const CorrespondenceSet& set,
                             const MdltConfig& config);

/// Per-cell weighted DLT estimate. One shared conditioned constraint table
/// is reused across cells; only the weights change.
LocalWarpField estimate_local_warps(const CorrespondenceSet& set, const GridMesh& mesh,
                                    const MdltConfig& config);

}  // namespace ppstitch
