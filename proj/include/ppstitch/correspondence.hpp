#pragma once

#include <string>
#include <vector>

#include "ppstitch/geometry.hpp"

namespace ppstitch {

/// One matched point pair between the target image and the reference image.
struct Correspondence {
    Point2 target = Point2::Zero();
    Point2 reference = Point2::Zero();
    int id = 0;
};

struct CorrespondenceSet {
    std::vector<Correspondence> pairs;
    int target_width = 0;
    int target_height = 0;
    int reference_width = 0;
    int reference_height = 0;
};

/// Read a correspondence file.
///
/// Line-oriented UTF-8 text: a header `SIZES tw th rw rh` followed by one
/// `id tx ty rx ry` line per pair. `#` starts a comment line. Throws
/// ParseError with line/field diagnostics, or BoundsError when a point lies
/// outside the declared image extent [0, w] x [0, h].
CorrespondenceSet load_correspondences(const std::string& path);

/// Write a set in the format accepted by load_correspondences. Coordinates
/// are printed with 17 significant digits so the round trip is exact.
void save_correspondences(const CorrespondenceSet& set, const std::string& path);

}  // namespace ppstitch
