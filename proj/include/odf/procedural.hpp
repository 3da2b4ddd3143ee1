// Procedural evaluation scenes. Three families, all axis-aligned box soup on
// a ground plane, deterministic for a given (descriptor, seed):
//   box-town    - packed boxes on a ground plane (compact outdoor stand-in)
//   sparse-field- few small boxes in a wide open area
//   multi-level - stacked floors with door/window openings (indoor stand-in)
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odf/errors.hpp"
#include "odf/mesh.hpp"
#include "odf/rng.hpp"

namespace odf {

enum class SceneKind : std::uint8_t { BoxTown = 0, SparseField = 1, MultiLevel = 2 };

inline const char* to_string(SceneKind k) {
    switch (k) {
        case SceneKind::BoxTown: return "box-town";
        case SceneKind::SparseField: return "sparse-field";
        case SceneKind::MultiLevel: return "multi-level";
    }
    return "?";
}

inline SceneKind scene_kind_from_string(const std::string& s) {
    if (s == "box-town") return SceneKind::BoxTown;
    if (s == "sparse-field") return SceneKind::SparseField;
    if (s == "multi-level") return SceneKind::MultiLevel;
    throw InputError("unknown scene kind '" + s + "'");
}

struct SceneSpec {
    SceneKind kind = SceneKind::BoxTown;
    std::uint64_t seed = 0;

    // box-town / sparse-field: ground half-extent in x and y (meters).
    double extent = 30.0;
    // box-town: number of boxes and their size ranges.
    int boxes = 40;
    double box_size_min = 2.0, box_size_max = 8.0;
    double box_height_min = 2.0, box_height_max = 10.0;
    // sparse-field: boxes per 100 m^2 of ground.
    double density = 0.05;
    // multi-level.
    int floors = 3;
    double floor_height = 3.0;
    double footprint_x = 20.0, footprint_y = 16.0;

    void validate() const {
        if (extent <= 0.0) throw InputError("scene extent must be positive");
        if (kind == SceneKind::BoxTown) {
            if (boxes < 0) throw InputError("box count must be >= 0");
            if (box_size_min <= 0.0 || box_size_max < box_size_min)
                throw InputError("invalid box size range");
            if (box_height_min <= 0.0 || box_height_max < box_height_min)
                throw InputError("invalid box height range");
        } else if (kind == SceneKind::SparseField) {
            if (density < 0.0) throw InputError("density must be >= 0");
        } else {
            if (floors < 1) throw InputError("floor count must be >= 1");
            if (floor_height <= 0.5) throw InputError("floor height must exceed 0.5 m");
            if (footprint_x <= 4.0 || footprint_y <= 4.0)
                throw InputError("multi-level footprint must exceed 4 m per axis");
        }
    }
};

namespace detail {

inline void snap_vertices_to_f32(TriangleMesh& mesh) {
    for (Vec3& v : mesh.vertices) {
        v.x = static_cast<double>(static_cast<float>(v.x));
        v.y = static_cast<double>(static_cast<float>(v.y));
        v.z = static_cast<double>(static_cast<float>(v.z));
    }
}

inline void add_box(TriangleMesh& mesh, const Vec3& lo, const Vec3& hi) {
    const std::uint32_t b = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back({lo.x, lo.y, lo.z});
    mesh.vertices.push_back({hi.x, lo.y, lo.z});
    mesh.vertices.push_back({hi.x, hi.y, lo.z});
    mesh.vertices.push_back({lo.x, hi.y, lo.z});
    mesh.vertices.push_back({lo.x, lo.y, hi.z});
    mesh.vertices.push_back({hi.x, lo.y, hi.z});
    mesh.vertices.push_back({hi.x, hi.y, hi.z});
    mesh.vertices.push_back({lo.x, hi.y, hi.z});
    static const std::uint32_t quads[6][4] = {
        {0, 3, 2, 1},  // bottom (-z)
        {4, 5, 6, 7},  // top (+z)
        {0, 1, 5, 4},  // -y
        {2, 3, 7, 6},  // +y
        {1, 2, 6, 5},  // +x
        {3, 0, 4, 7},  // -x
    };
    for (const auto& q : quads) {
        mesh.triangles.push_back({b + q[0], b + q[1], b + q[2]});
        mesh.triangles.push_back({b + q[0], b + q[2], b + q[3]});
    }
}

inline void add_ground(TriangleMesh& mesh, double extent) {
    const std::uint32_t b = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back({-extent, -extent, 0.0});
    mesh.vertices.push_back({extent, -extent, 0.0});
    mesh.vertices.push_back({extent, extent, 0.0});
    mesh.vertices.push_back({-extent, extent, 0.0});
    mesh.triangles.push_back({b + 0, b + 1, b + 2});
    mesh.triangles.push_back({b + 0, b + 2, b + 3});
}

struct Rect {
    double x0, y0, x1, y1;
    bool overlaps(const Rect& o, double gap) const {
        return x0 < o.x1 + gap && o.x0 < x1 + gap && y0 < o.y1 + gap && o.y0 < y1 + gap;
    }
};

inline TriangleMesh generate_box_town(const SceneSpec& spec, int count, double size_min,
                                      double size_max, double height_min, double height_max) {
    TriangleMesh mesh;
    add_ground(mesh, spec.extent);
    Rng rng(splitmix64(spec.seed));
    std::vector<Rect> placed;
    for (int i = 0; i < count; ++i) {
        Rect r{};
        double h = 0.0;
        bool ok = false;
        // Rejection placement; after enough failures the box is skipped so the
        // mesh stays deterministic rather than looping forever on dense specs.
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            const double sx = rng.uniform(size_min, size_max);
            const double sy = rng.uniform(size_min, size_max);
            h = rng.uniform(height_min, height_max);
            const double cx = rng.uniform(-spec.extent + sx, spec.extent - sx);
            const double cy = rng.uniform(-spec.extent + sy, spec.extent - sy);
            r = Rect{cx - 0.5 * sx, cy - 0.5 * sy, cx + 0.5 * sx, cy + 0.5 * sy};
            ok = true;
            for (const Rect& p : placed)
                if (r.overlaps(p, 0.5)) {
                    ok = false;
                    break;
                }
        }
        if (!ok) continue;
        placed.push_back(r);
        add_box(mesh, {r.x0, r.y0, 0.0}, {r.x1, r.y1, h});
    }
    return mesh;
}

// Perimeter wall along one axis with a door opening, built from boxes.
inline void add_wall_with_door(TriangleMesh& mesh, double x0, double x1, double y0, double y1,
                               double z0, double z1, bool along_x, double door_center,
                               double door_width, double door_height) {
    const double zdoor = std::min(z0 + door_height, z1);
    if (along_x) {
        const double a = std::max(x0, door_center - 0.5 * door_width);
        const double b = std::min(x1, door_center + 0.5 * door_width);
        if (a > x0) add_box(mesh, {x0, y0, z0}, {a, y1, z1});
        if (b < x1) add_box(mesh, {b, y0, z0}, {x1, y1, z1});
        if (zdoor < z1) add_box(mesh, {a, y0, zdoor}, {b, y1, z1});  // lintel
    } else {
        const double a = std::max(y0, door_center - 0.5 * door_width);
        const double b = std::min(y1, door_center + 0.5 * door_width);
        if (a > y0) add_box(mesh, {x0, y0, z0}, {x1, a, z1});
        if (b < y1) add_box(mesh, {x0, b, z0}, {x1, y1, z1});
        if (zdoor < z1) add_box(mesh, {x0, a, zdoor}, {x1, b, z1});
    }
}

inline TriangleMesh generate_multi_level(const SceneSpec& spec) {
    TriangleMesh mesh;
    const double hx = 0.5 * spec.footprint_x;
    const double hy = 0.5 * spec.footprint_y;
    const double slab = 0.3;
    const double wall = 0.25;
    Rng rng(splitmix64(spec.seed ^ 0xA5A5A5A5ull));
    for (int f = 0; f < spec.floors; ++f) {
        const double z0 = f * spec.floor_height;
        const double z1 = (f + 1) * spec.floor_height;
        // Floor slab with a stairwell opening except on the ground floor.
        if (f == 0) {
            add_box(mesh, {-hx, -hy, z0}, {hx, hy, z0 + slab});
        } else {
            const double ox = rng.uniform(-hx + 3.0, hx - 3.0);
            const double oy = rng.uniform(-hy + 3.0, hy - 3.0);
            const double ow = 1.5;
            add_box(mesh, {-hx, -hy, z0}, {ox - ow, hy, z0 + slab});
            add_box(mesh, {ox + ow, -hy, z0}, {hx, hy, z0 + slab});
            add_box(mesh, {ox - ow, -hy, z0}, {ox + ow, oy - ow, z0 + slab});
            add_box(mesh, {ox - ow, oy + ow, z0}, {ox + ow, hy, z0 + slab});
        }
        // Perimeter walls between slabs, each with a door/window opening.
        const double wz0 = z0 + slab;
        const double wz1 = z1 - (f + 1 == spec.floors ? slab : 0.0);
        add_wall_with_door(mesh, -hx, hx, -hy, -hy + wall, wz0, wz1, true,
                           rng.uniform(-hx + 2.0, hx - 2.0), 1.2, 2.0);
        add_wall_with_door(mesh, -hx, hx, hy - wall, hy, wz0, wz1, true,
                           rng.uniform(-hx + 2.0, hx - 2.0), 1.6, 1.4);
        add_wall_with_door(mesh, -hx, -hx + wall, -hy + wall, hy - wall, wz0, wz1, false,
                           rng.uniform(-hy + 2.0, hy - 2.0), 1.2, 2.0);
        add_wall_with_door(mesh, hx - wall, hx, -hy + wall, hy - wall, wz0, wz1, false,
                           rng.uniform(-hy + 2.0, hy - 2.0), 1.6, 1.4);
        // One interior divider per floor.
        const double dx = rng.uniform(-hx + 3.0, hx - 3.0);
        add_wall_with_door(mesh, dx, dx + wall, -hy + wall, hy - wall, wz0, wz1, false,
                           rng.uniform(-hy + 2.0, hy - 2.0), 1.2, 2.0);
    }
    // Roof slab; total height is exactly floors * floor_height.
    add_box(mesh, {-hx, -hy, spec.floors * spec.floor_height - slab},
            {hx, hy, spec.floors * spec.floor_height});
    return mesh;
}

}  // namespace detail

inline TriangleMesh generate_scene(const SceneSpec& spec) {
    spec.validate();
    TriangleMesh mesh;
    switch (spec.kind) {
        case SceneKind::BoxTown:
            mesh = detail::generate_box_town(spec, spec.boxes, spec.box_size_min, spec.box_size_max,
                                             spec.box_height_min, spec.box_height_max);
            break;
        case SceneKind::SparseField: {
            const double ground_area = (2.0 * spec.extent) * (2.0 * spec.extent);
            const int count = static_cast<int>(spec.density * ground_area / 100.0);
            mesh = detail::generate_box_town(spec, count, 0.5, 2.0, 0.5, 2.5);
            break;
        }
        case SceneKind::MultiLevel:
            mesh = detail::generate_multi_level(spec);
            break;
    }
    detail::snap_vertices_to_f32(mesh);
    mesh.compute_bounds();
    return mesh;
}

}  // namespace odf
