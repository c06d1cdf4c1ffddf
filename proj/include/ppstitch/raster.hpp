#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppstitch/mdlt.hpp"

namespace ppstitch {

struct CombinedWarpField;

/// Row-major interleaved image with samples in [0, 1].
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 or 3
    std::vector<float> pixels;

    static ImageBuffer create(int width, int height, int channels, float fill = 0.0f);

    float at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

struct MaskedImage {
    ImageBuffer image;
    std::vector<std::uint8_t> mask;  // 1 where the sample is valid
};

/// Canvas geometry in the reference frame. Canvas pixel (px, py) sits at
/// frame point (px - offset_x, py - offset_y).
struct CanvasBounds {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
    int offset_x = 0, offset_y = 0;
    int width = 0, height = 0;
};

/// Composite container: blended image plus per-pixel source count (0-2).
struct Canvas {
    CanvasBounds bounds;
    ImageBuffer image;
    std::vector<std::uint8_t> coverage;
};

/// Axis-aligned hull of the warped target cell corners and the warped
/// reference corners. Throws UnboundedCanvas when a corner maps within the
/// singularity floor of infinity (or the hull is absurdly large).
CanvasBounds compute_canvas(const CombinedWarpField& field, int target_width,
                            int target_height, int reference_width, int reference_height);

/// Per-canvas-pixel owning cell (-1 where unowned). Ownership: the lowest
/// cell index whose inverse warp maps the pixel into that cell's rectangle.
/// With extend = true, unowned pixels inherit the nearest owner by
/// breadth-first fill, so the whole canvas is covered.
std::vector<std::int32_t> build_cell_index_map(const GridMesh& mesh,
                                               const std::vector<Homography>& cell_warps,
                                               const CanvasBounds& bounds, bool extend);

/// Inverse-map every owned canvas pixel through its cell's warp and
/// bilinear-sample the source. The mask marks exactly the pixels whose
/// pre-image lies inside [0, w-1] x [0, h-1] of the source.
MaskedImage warp_image(const ImageBuffer& src, const std::vector<Homography>& cell_warps,
                       const std::vector<std::int32_t>& index_map,
                       const CanvasBounds& bounds);

/// Intensity average where both inputs are valid, pass-through where one
/// is, black where neither. Optionally reports per-pixel source counts.
ImageBuffer blend_average(const MaskedImage& a, const MaskedImage& b,
                          std::vector<std::uint8_t>* coverage = nullptr);

/// 8-bit PNG (gray or RGB) and binary PPM/PGM (maxval 255), chosen by file
/// extension. Samples map linearly between [0, 255] and [0, 1].
ImageBuffer read_image(const std::string& path);
void write_image(const ImageBuffer& image, const std::string& path);

}  // namespace ppstitch
