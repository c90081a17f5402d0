#pragma once

/// Instance text formats.
///
/// Native format (line-oriented): first line `n`, then n lines `id x y`
/// with 0-based contiguous ids. Serialization uses 17 significant digits,
/// so parse(serialize(x)) reproduces coordinates bit-exactly.
///
/// TSPLIB: the NODE_COORD_SECTION subset with EDGE_WEIGHT_TYPE EUC_2D only.
/// Coordinates are read as-is; lengths stay real-valued Euclidean.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "tsprl/errors.hpp"
#include "tsprl/tsp.hpp"

namespace tsprl {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string serialize_instance(const TspInstance& instance) {
    std::string out = std::to_string(instance.n()) + "\n";
    for (int i = 0; i < instance.n(); ++i) {
        const Point c = instance.city(i);
        out += std::to_string(i) + " " + format_double(c.x) + " " + format_double(c.y) + "\n";
    }
    return out;
}

inline TspInstance parse_instance(std::istream& in) {
    std::string line;
    int line_no = 0;
    const auto fail = [&](const std::string& what) -> ParseError {
        return ParseError("line " + std::to_string(line_no) + ": " + what);
    };

    const auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return true;
        }
        ++line_no;
        return false;
    };

    if (!next_line())
        throw fail("expected city count");
    long n = 0;
    {
        std::istringstream ls(line);
        std::string extra;
        if (!(ls >> n) || (ls >> extra))
            throw fail("expected city count, got '" + line + "'");
    }
    if (n < 3)
        throw fail("instance needs at least 3 cities, got " + std::to_string(n));

    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        if (!next_line())
            throw fail("expected city line " + std::to_string(i));
        std::istringstream ls(line);
        long id = 0;
        double x = 0.0, y = 0.0;
        std::string extra;
        if (!(ls >> id >> x >> y) || (ls >> extra))
            throw fail("expected 'id x y', got '" + line + "'");
        if (id != i)
            throw fail("expected city id " + std::to_string(i) + ", got " + std::to_string(id));
        pts.push_back({x, y});
    }
    if (next_line())
        throw fail("unexpected trailing content '" + line + "'");

    try {
        return TspInstance(std::move(pts));
    } catch (const ParameterError& e) {
        throw ParseError(std::string("invalid instance: ") + e.what());
    }
}

inline TspInstance parse_instance(const std::string& text) {
    std::istringstream in(text);
    return parse_instance(in);
}

/// Reader for the TSPLIB NODE_COORD_SECTION subset. Only EUC_2D instances
/// are accepted; every other edge weight type is rejected.
inline TspInstance parse_tsplib(std::istream& in) {
    std::string line;
    long dimension = -1;
    std::string weight_type;
    bool in_coords = false;
    std::vector<Point> pts;
    std::vector<bool> seen;
    int line_no = 0;

    const auto fail = [&](const std::string& what) -> ParseError {
        return ParseError("line " + std::to_string(line_no) + ": " + what);
    };
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        if (t == "EOF")
            break;
        if (!in_coords) {
            const auto colon = t.find(':');
            std::string key = trim(colon == std::string::npos ? t : t.substr(0, colon));
            std::string value = colon == std::string::npos ? "" : trim(t.substr(colon + 1));
            if (key == "DIMENSION") {
                dimension = std::stol(value);
            } else if (key == "EDGE_WEIGHT_TYPE") {
                weight_type = value;
            } else if (key == "NODE_COORD_SECTION") {
                if (dimension < 3)
                    throw fail("NODE_COORD_SECTION before a DIMENSION of at least 3");
                if (weight_type != "EUC_2D")
                    throw fail("unsupported EDGE_WEIGHT_TYPE '" + weight_type +
                               "' (only EUC_2D is supported)");
                pts.resize(static_cast<std::size_t>(dimension));
                seen.assign(static_cast<std::size_t>(dimension), false);
                in_coords = true;
            }
            // other header keys (NAME, TYPE, COMMENT, ...) are ignored
        } else {
            std::istringstream ls(t);
            long id = 0;
            double x = 0.0, y = 0.0;
            if (!(ls >> id >> x >> y))
                throw fail("expected 'id x y', got '" + t + "'");
            if (id < 1 || id > dimension)
                throw fail("node id " + std::to_string(id) + " outside 1.." +
                           std::to_string(dimension));
            if (seen[static_cast<std::size_t>(id - 1)])
                throw fail("duplicate node id " + std::to_string(id));
            seen[static_cast<std::size_t>(id - 1)] = true;
            pts[static_cast<std::size_t>(id - 1)] = {x, y};
        }
    }
    if (!in_coords)
        throw ParseError("no NODE_COORD_SECTION found");
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ParseError("missing coordinates for node " + std::to_string(i + 1));

    try {
        return TspInstance(std::move(pts));
    } catch (const ParameterError& e) {
        throw ParseError(std::string("invalid instance: ") + e.what());
    }
}

/// FNV-1a hash of the canonical serialization; stable across platforms for
/// identical coordinates.
inline std::uint64_t fingerprint(const TspInstance& instance) {
    const std::string text = serialize_instance(instance);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string fingerprint_hex(const TspInstance& instance) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fingerprint(instance)));
    return buf;
}

} // namespace tsprl
