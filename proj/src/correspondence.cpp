#include "ppstitch/correspondence.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace ppstitch {

namespace {

bool blank_or_comment(const std::string& line) {
    for (char ch : line) {
        if (ch == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(ch))) return false;
    }
    return true;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_real(const std::string& token, const std::string& path, int line_no,
                  const char* field) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &consumed);
    } catch (const std::exception&) {
        parse_fail(path, line_no, std::string("field '") + field + "' is not a number: '" +
                                      token + "'");
    }
    if (consumed != token.size()) {
        parse_fail(path, line_no, std::string("trailing characters in field '") + field +
                                      "': '" + token + "'");
    }
    if (!std::isfinite(value)) {
        parse_fail(path, line_no, std::string("field '") + field + "' is not finite");
    }
    return value;
}

int parse_int(const std::string& token, const std::string& path, int line_no,
              const char* field) {
    std::size_t consumed = 0;
    long value = 0;
    try {
        value = std::stol(token, &consumed);
    } catch (const std::exception&) {
        parse_fail(path, line_no, std::string("field '") + field + "' is not an integer: '" +
                                      token + "'");
    }
    if (consumed != token.size()) {
        parse_fail(path, line_no, std::string("trailing characters in field '") + field +
                                      "': '" + token + "'");
    }
    return static_cast<int>(value);
}

void check_bounds(const Point2& p, int w, int h, const char* side, int id) {
    if (p.x() < 0.0 || p.x() > w || p.y() < 0.0 || p.y() > h) {
        std::ostringstream msg;
        msg << "pair id " << id << ": " << side << " point (" << p.x() << ", " << p.y()
            << ") outside declared " << side << " size " << w << "x" << h;
        throw BoundsError(msg.str());
    }
}

}  // namespace

CorrespondenceSet load_correspondences(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open correspondence file: " + path);
    }

    CorrespondenceSet set;
    std::unordered_set<int> seen_ids;
    bool have_header = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;

        std::istringstream ss(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);

        if (!have_header) {
            if (tokens.size() != 5 || tokens[0] != "SIZES") {
                parse_fail(path, line_no, "expected header 'SIZES tw th rw rh'");
            }
            set.target_width = parse_int(tokens[1], path, line_no, "tw");
            set.target_height = parse_int(tokens[2], path, line_no, "th");
            set.reference_width = parse_int(tokens[3], path, line_no, "rw");
            set.reference_height = parse_int(tokens[4], path, line_no, "rh");
            if (set.target_width <= 0 || set.target_height <= 0 ||
                set.reference_width <= 0 || set.reference_height <= 0) {
                parse_fail(path, line_no, "image sizes must be positive");
            }
            have_header = true;
            continue;
        }

        if (tokens.size() != 5) {
            parse_fail(path, line_no, "expected 'id tx ty rx ry' (5 fields), got " +
                                          std::to_string(tokens.size()));
        }
        Correspondence c;
        c.id = parse_int(tokens[0], path, line_no, "id");
        c.target.x() = parse_real(tokens[1], path, line_no, "tx");
        c.target.y() = parse_real(tokens[2], path, line_no, "ty");
        c.reference.x() = parse_real(tokens[3], path, line_no, "rx");
        c.reference.y() = parse_real(tokens[4], path, line_no, "ry");
        if (!seen_ids.insert(c.id).second) {
            parse_fail(path, line_no, "duplicate pair id " + std::to_string(c.id));
        }
        check_bounds(c.target, set.target_width, set.target_height, "target", c.id);
        check_bounds(c.reference, set.reference_width, set.reference_height, "reference",
                     c.id);
        set.pairs.push_back(c);
    }

    if (!have_header) {
        throw ParseError(path + ": missing 'SIZES' header");
    }
    if (set.pairs.empty()) {
        throw ParseError(path + ": no correspondences");
    }
    return set;
}

void save_correspondences(const CorrespondenceSet& set, const std::string& path) {
    if (set.pairs.empty()) {
        throw EmptyInput("save_correspondences: empty set");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << "SIZES " << set.target_width << ' ' << set.target_height << ' '
        << set.reference_width << ' ' << set.reference_height << '\n';
    char buf[160];
    for (const auto& c : set.pairs) {
        std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g\n", c.id, c.target.x(),
                      c.target.y(), c.reference.x(), c.reference.y());
        out << buf;
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing: " + path);
    }
}

}  // namespace ppstitch
