#include "ppstitch/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>

#include <png.h>

#include "ppstitch/warp_combine.hpp"

namespace ppstitch {

namespace {

void grow_hull(const Point2& p, double& min_x, double& min_y, double& max_x, double& max_y) {
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
}

Point2 map_corner(const Homography& h, const Point2& p) {
    try {
        const Point2 mapped = apply_homography(h, p);
        if (!mapped.allFinite()) {
            throw AtInfinity("non-finite corner");
        }
        return mapped;
    } catch (const AtInfinity&) {
        throw UnboundedCanvas("compute_canvas: corner (" + std::to_string(p.x()) + ", " +
                              std::to_string(p.y()) + ") maps to infinity");
    }
}

double bilinear(const ImageBuffer& src, double x, double y, int c) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, src.width - 1);
    int y1 = std::min(y0 + 1, src.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = src.at(x0, y0, c);
    const double v10 = src.at(x1, y0, c);
    const double v01 = src.at(x0, y1, c);
    const double v11 = src.at(x1, y1, c);
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

std::string lower_extension(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return {};
    std::string ext = path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

std::uint8_t quantize(float v) {
    const float clamped = std::min(1.0f, std::max(0.0f, v));
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

// ---- PNM (binary PPM/PGM, maxval 255) ----

int pnm_next_int(std::istream& in, const std::string& path) {
    // Skip whitespace and '#' comments.
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch)) {
        throw ParseError(path + ": malformed header");
    }
    int value = 0;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        ch = in.get();
    }
    return value;
}

ImageBuffer read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image: " + path);
    }
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
        throw UnsupportedFormat(path + ": expected binary PGM (P5) or PPM (P6)");
    }
    const int channels = magic[1] == '5' ? 1 : 3;
    const int width = pnm_next_int(in, path);
    const int height = pnm_next_int(in, path);
    const int maxval = pnm_next_int(in, path);
    if (width <= 0 || height <= 0) {
        throw ParseError(path + ": invalid dimensions");
    }
    if (maxval != 255) {
        throw UnsupportedFormat(path + ": only maxval 255 is supported");
    }
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) {
        throw ParseError(path + ": truncated pixel data");
    }
    ImageBuffer img = ImageBuffer::create(width, height, channels);
    for (std::size_t i = 0; i < count; ++i) {
        img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    return img;
}

void write_pnm(const ImageBuffer& img, const std::string& path, int channels) {
    if (channels == 1 && img.channels != 1) {
        throw UnsupportedFormat(path + ": PGM requires a single-channel image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << (channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << '\n'
        << 255 << '\n';
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(img.width) * img.height * channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (channels == 3 && img.channels == 1) {
                const std::uint8_t v = quantize(img.at(x, y, 0));
                raw.push_back(v);
                raw.push_back(v);
                raw.push_back(v);
            } else {
                for (int c = 0; c < channels; ++c) raw.push_back(quantize(img.at(x, y, c)));
            }
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    out.flush();
    if (!out) {
        throw IoError("failed while writing: " + path);
    }
}

// ---- PNG ----

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngReadGuard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) std::fclose(file);
    }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngWriteGuard() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file) std::fclose(file);
    }
};

ImageBuffer read_png_file(const std::string& path) {
    PngReadGuard g;
    g.file = std::fopen(path.c_str(), "rb");
    if (!g.file) {
        throw IoError("cannot open image: " + path);
    }
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, g.file) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw UnsupportedFormat(path + ": not a PNG file");
    }
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw IoError(path + ": libpng init failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw IoError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(g.png))) {
        throw ParseError(path + ": corrupt PNG data");
    }
    png_init_io(g.png, g.file);
    png_set_sig_bytes(g.png, 8);
    png_read_info(g.png, g.info);

    const png_uint_32 width = png_get_image_width(g.png, g.info);
    const png_uint_32 height = png_get_image_height(g.png, g.info);
    const int color = png_get_color_type(g.png, g.info);
    const int depth = png_get_bit_depth(g.png, g.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
    if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
    if (depth == 16) png_set_strip_16(g.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(g.png);
    png_read_update_info(g.png, g.info);

    const int channels = png_get_channels(g.png, g.info);
    if (channels != 1 && channels != 3) {
        throw UnsupportedFormat(path + ": unsupported PNG channel layout");
    }

    ImageBuffer img =
        ImageBuffer::create(static_cast<int>(width), static_cast<int>(height), channels);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(g.png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); ++i) {
            img.pixels[static_cast<std::size_t>(y) * row.size() + i] =
                static_cast<float>(row[i]) / 255.0f;
        }
    }
    png_read_end(g.png, nullptr);
    return img;
}

void write_png_file(const ImageBuffer& img, const std::string& path) {
    PngWriteGuard g;
    g.file = std::fopen(path.c_str(), "wb");
    if (!g.file) {
        throw IoError("cannot open for writing: " + path);
    }
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw IoError(path + ": libpng init failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw IoError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(g.png))) {
        throw IoError(path + ": libpng write failed");
    }
    png_init_io(g.png, g.file);
    png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);

    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                row[static_cast<std::size_t>(x) * img.channels + c] = quantize(img.at(x, y, c));
            }
        }
        png_write_row(g.png, row.data());
    }
    png_write_end(g.png, nullptr);
}

}  // namespace

ImageBuffer ImageBuffer::create(int width, int height, int channels, float fill) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
        throw DimensionMismatch("ImageBuffer::create: invalid dimensions");
    }
    ImageBuffer img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(width) * height * channels, fill);
    return img;
}

CanvasBounds compute_canvas(const CombinedWarpField& field, int target_width,
                            int target_height, int reference_width, int reference_height) {
    (void)target_width;
    (void)target_height;
    const GridMesh& mesh = field.mesh;
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < field.target_warps.size(); ++i) {
        double x0, y0, x1, y1;
        mesh.cell_rect(static_cast<int>(i), x0, y0, x1, y1);
        const Point2 corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
        for (const Point2& p : corners) {
            grow_hull(map_corner(field.target_warps[i], p), min_x, min_y, max_x, max_y);
        }
    }

    const Point2 ref_corners[4] = {{0.0, 0.0},
                                   {static_cast<double>(reference_width), 0.0},
                                   {static_cast<double>(reference_width),
                                    static_cast<double>(reference_height)},
                                   {0.0, static_cast<double>(reference_height)}};
    for (const Point2& p : ref_corners) {
        const int cell = reference_cell(field, p);
        grow_hull(map_corner(field.reference_warps[cell], p), min_x, min_y, max_x, max_y);
    }

    CanvasBounds b;
    b.min_x = min_x;
    b.min_y = min_y;
    b.max_x = max_x;
    b.max_y = max_y;
    b.offset_x = -static_cast<int>(std::floor(min_x));
    b.offset_y = -static_cast<int>(std::floor(min_y));
    b.width = static_cast<int>(std::ceil(max_x)) + b.offset_x;
    b.height = static_cast<int>(std::ceil(max_y)) + b.offset_y;
    if (b.width <= 0 || b.height <= 0 || b.width > 32768 || b.height > 32768 ||
        static_cast<long long>(b.width) * b.height > (1LL << 28)) {
        throw UnboundedCanvas("compute_canvas: canvas size " + std::to_string(b.width) +
                              "x" + std::to_string(b.height) + " out of range");
    }
    return b;
}

std::vector<std::int32_t> build_cell_index_map(const GridMesh& mesh,
                                               const std::vector<Homography>& cell_warps,
                                               const CanvasBounds& bounds, bool extend) {
    if (cell_warps.size() != mesh.centers.size()) {
        throw DimensionMismatch("build_cell_index_map: warp/mesh cell counts differ");
    }
    std::vector<std::int32_t> map(static_cast<std::size_t>(bounds.width) * bounds.height, -1);

    for (std::size_t i = 0; i < cell_warps.size(); ++i) {
        double x0, y0, x1, y1;
        mesh.cell_rect(static_cast<int>(i), x0, y0, x1, y1);
        const Point2 corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
        double cmin_x = std::numeric_limits<double>::infinity();
        double cmin_y = cmin_x;
        double cmax_x = -cmin_x;
        double cmax_y = -cmin_x;
        bool ok = true;
        for (const Point2& p : corners) {
            try {
                grow_hull(apply_homography(cell_warps[i], p), cmin_x, cmin_y, cmax_x, cmax_y);
            } catch (const AtInfinity&) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        const Eigen::Matrix3d inv = cell_warps[i].m.inverse();
        const int px0 = std::max(0, static_cast<int>(std::floor(cmin_x)) + bounds.offset_x);
        const int py0 = std::max(0, static_cast<int>(std::floor(cmin_y)) + bounds.offset_y);
        const int px1 =
            std::min(bounds.width - 1, static_cast<int>(std::ceil(cmax_x)) + bounds.offset_x);
        const int py1 =
            std::min(bounds.height - 1, static_cast<int>(std::ceil(cmax_y)) + bounds.offset_y);
        for (int py = py0; py <= py1; ++py) {
            for (int px = px0; px <= px1; ++px) {
                std::int32_t& slot = map[static_cast<std::size_t>(py) * bounds.width + px];
                if (slot >= 0) continue;
                const double fx = px - bounds.offset_x;
                const double fy = py - bounds.offset_y;
                const double w = inv(2, 0) * fx + inv(2, 1) * fy + inv(2, 2);
                if (std::abs(w) < kSingularityFloor) continue;
                const double sx = (inv(0, 0) * fx + inv(0, 1) * fy + inv(0, 2)) / w;
                const double sy = (inv(1, 0) * fx + inv(1, 1) * fy + inv(1, 2)) / w;
                if (sx >= x0 - 1e-9 && sx <= x1 + 1e-9 && sy >= y0 - 1e-9 &&
                    sy <= y1 + 1e-9) {
                    slot = static_cast<std::int32_t>(i);
                }
            }
        }
    }

    if (extend) {
        // Deterministic multi-source BFS: unowned pixels inherit the
        // nearest owner (first writer wins, scanline seed order).
        std::deque<std::int64_t> queue;
        for (std::size_t idx = 0; idx < map.size(); ++idx) {
            if (map[idx] >= 0) queue.push_back(static_cast<std::int64_t>(idx));
        }
        const int w = bounds.width;
        const int h = bounds.height;
        while (!queue.empty()) {
            const std::int64_t idx = queue.front();
            queue.pop_front();
            const int px = static_cast<int>(idx % w);
            const int py = static_cast<int>(idx / w);
            const std::int32_t owner = map[static_cast<std::size_t>(idx)];
            const int nx[4] = {px, px - 1, px + 1, px};
            const int ny[4] = {py - 1, py, py, py + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                std::int32_t& slot = map[static_cast<std::size_t>(ny[k]) * w + nx[k]];
                if (slot < 0) {
                    slot = owner;
                    queue.push_back(static_cast<std::int64_t>(ny[k]) * w + nx[k]);
                }
            }
        }
    }
    return map;
}

MaskedImage warp_image(const ImageBuffer& src, const std::vector<Homography>& cell_warps,
                       const std::vector<std::int32_t>& index_map,
                       const CanvasBounds& bounds) {
    if (index_map.size() != static_cast<std::size_t>(bounds.width) * bounds.height) {
        throw DimensionMismatch("warp_image: index map does not match canvas");
    }
    std::vector<Eigen::Matrix3d> inverses(cell_warps.size());
    for (std::size_t i = 0; i < cell_warps.size(); ++i) {
        inverses[i] = cell_warps[i].m.inverse();
    }

    MaskedImage out;
    out.image = ImageBuffer::create(bounds.width, bounds.height, src.channels);
    out.mask.assign(index_map.size(), 0);

    for (int py = 0; py < bounds.height; ++py) {
        for (int px = 0; px < bounds.width; ++px) {
            const std::size_t idx = static_cast<std::size_t>(py) * bounds.width + px;
            const std::int32_t cell = index_map[idx];
            if (cell < 0) continue;
            const Eigen::Matrix3d& inv = inverses[static_cast<std::size_t>(cell)];
            const double fx = px - bounds.offset_x;
            const double fy = py - bounds.offset_y;
            const double w = inv(2, 0) * fx + inv(2, 1) * fy + inv(2, 2);
            if (std::abs(w) < kSingularityFloor) continue;
            double sx = (inv(0, 0) * fx + inv(0, 1) * fy + inv(0, 2)) / w;
            double sy = (inv(1, 0) * fx + inv(1, 1) * fy + inv(1, 2)) / w;
            if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
            // Absorb pure roundoff at the source border.
            constexpr double snap = 1e-9;
            if (sx > -snap && sx < 0.0) sx = 0.0;
            if (sy > -snap && sy < 0.0) sy = 0.0;
            if (sx > src.width - 1 && sx < src.width - 1 + snap) sx = src.width - 1;
            if (sy > src.height - 1 && sy < src.height - 1 + snap) sy = src.height - 1;
            if (sx < 0.0 || sx > src.width - 1 || sy < 0.0 || sy > src.height - 1) continue;
            for (int c = 0; c < src.channels; ++c) {
                out.image.at(px, py, c) = static_cast<float>(bilinear(src, sx, sy, c));
            }
            out.mask[idx] = 1;
        }
    }
    return out;
}

ImageBuffer blend_average(const MaskedImage& a, const MaskedImage& b,
                          std::vector<std::uint8_t>* coverage) {
    if (a.image.width != b.image.width || a.image.height != b.image.height ||
        a.image.channels != b.image.channels) {
        throw DimensionMismatch("blend_average: image dimensions differ");
    }
    ImageBuffer out = ImageBuffer::create(a.image.width, a.image.height, a.image.channels);
    if (coverage) coverage->assign(a.mask.size(), 0);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * out.width + x;
            const bool va = a.mask[idx] != 0;
            const bool vb = b.mask[idx] != 0;
            if (coverage) (*coverage)[idx] = static_cast<std::uint8_t>(va + vb);
            for (int c = 0; c < out.channels; ++c) {
                if (va && vb) {
                    out.at(x, y, c) = 0.5f * (a.image.at(x, y, c) + b.image.at(x, y, c));
                } else if (va) {
                    out.at(x, y, c) = a.image.at(x, y, c);
                } else if (vb) {
                    out.at(x, y, c) = b.image.at(x, y, c);
                }
            }
        }
    }
    return out;
}

ImageBuffer read_image(const std::string& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png_file(path);
    if (ext == ".ppm" || ext == ".pgm") return read_pnm(path);
    throw UnsupportedFormat(path + ": unknown image extension '" + ext + "'");
}

void write_image(const ImageBuffer& image, const std::string& path) {
    if (image.width <= 0 || image.height <= 0) {
        throw DimensionMismatch("write_image: empty image");
    }
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        write_png_file(image, path);
    } else if (ext == ".ppm") {
        write_pnm(image, path, 3);
    } else if (ext == ".pgm") {
        write_pnm(image, path, 1);
    } else {
        throw UnsupportedFormat(path + ": unknown image extension '" + ext + "'");
    }
}

}  // namespace ppstitch
