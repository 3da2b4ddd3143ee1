// Indexed triangle mesh, OBJ-subset reader/writer, and the content hash that
// ties datasets and models to the scene they were produced from.
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "odf/errors.hpp"
#include "odf/math.hpp"

namespace odf {

// Triangles with area at or below this are dropped at load time.
inline constexpr double kDegenerateArea = 1e-12;

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    Aabb bounds;

    void compute_bounds() {
        bounds = Aabb{};
        for (const Vec3& v : vertices) bounds.expand(v);
    }

    Vec3 vertex(std::uint32_t tri, int corner) const { return vertices[triangles[tri][corner]]; }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

struct MeshLoadStats {
    std::size_t degenerate_dropped = 0;
    std::size_t faces_triangulated = 0;
};

namespace detail {

// Parses the vertex-index field of an `f` record ("7", "7/1", "7//3", "7/1/3").
inline std::uint32_t parse_face_index(const std::string& field, std::size_t vertex_count, std::size_t line) {
    std::size_t slash = field.find('/');
    const std::string head = slash == std::string::npos ? field : field.substr(0, slash);
    long idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stol(head, &used);
        if (used != head.size()) throw std::invalid_argument(head);
    } catch (const std::exception&) {
        throw ParseError("malformed face index '" + field + "'", line);
    }
    if (idx < 0) idx = static_cast<long>(vertex_count) + idx + 1;  // relative indexing
    if (idx < 1 || static_cast<std::size_t>(idx) > vertex_count)
        throw ParseError("face index " + head + " out of range", line);
    return static_cast<std::uint32_t>(idx - 1);
}

}  // namespace detail

// OBJ subset: `v`, `f` (triangles or fans), `#` comments. Common companion
// records (vn/vt/o/g/s/usemtl/mtllib) are ignored; anything else is an error.
// Degenerate triangles (area <= kDegenerateArea) are dropped and counted.
inline TriangleMesh load_obj(std::istream& in, MeshLoadStats* stats = nullptr) {
    TriangleMesh mesh;
    MeshLoadStats local;
    std::string line_text;
    std::size_t line_no = 0;
    std::size_t face_records = 0;
    while (std::getline(in, line_text)) {
        ++line_no;
        std::istringstream line(line_text);
        std::string keyword;
        if (!(line >> keyword) || keyword[0] == '#') continue;
        if (keyword == "v") {
            double x, y, z;
            if (!(line >> x >> y >> z)) throw ParseError("malformed vertex record", line_no);
            mesh.vertices.push_back({x, y, z});
        } else if (keyword == "f") {
            ++face_records;
            std::vector<std::uint32_t> idx;
            std::string field;
            while (line >> field) idx.push_back(detail::parse_face_index(field, mesh.vertices.size(), line_no));
            if (idx.size() < 3) throw ParseError("face with fewer than 3 vertices", line_no);
            if (idx.size() > 3) local.faces_triangulated++;
            for (std::size_t k = 2; k < idx.size(); ++k) {
                const std::array<std::uint32_t, 3> tri{idx[0], idx[k - 1], idx[k]};
                if (triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) >
                    kDegenerateArea) {
                    mesh.triangles.push_back(tri);
                } else {
                    local.degenerate_dropped++;
                }
            }
        } else if (keyword == "vn" || keyword == "vt" || keyword == "o" || keyword == "g" ||
                   keyword == "s" || keyword == "usemtl" || keyword == "mtllib") {
            continue;
        } else {
            throw ParseError("unsupported record '" + keyword + "'", line_no);
        }
    }
    if (face_records == 0) throw InputError("empty scene: stream contains no face records");
    mesh.compute_bounds();
    if (stats) *stats = local;
    return mesh;
}

inline TriangleMesh load_obj(const std::string& text, MeshLoadStats* stats = nullptr) {
    std::istringstream in(text);
    return load_obj(in, stats);
}

// %.9g round-trips float32 exactly; generators snap coordinates to float32 so
// a write/read cycle preserves the scene hash.
inline void write_obj(const TriangleMesh& mesh, std::ostream& out) {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xCBF29CE484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

// Content hash over float32-quantized vertices and triangle indices.
inline std::uint64_t mesh_hash(const TriangleMesh& mesh) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const Vec3& v : mesh.vertices) {
        const float c[3] = {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
        h = fnv1a64(c, sizeof(c), h);
    }
    for (const auto& t : mesh.triangles) {
        const std::uint32_t idx[3] = {t[0], t[1], t[2]};
        h = fnv1a64(idx, sizeof(idx), h);
    }
    return h;
}

}  // namespace odf
