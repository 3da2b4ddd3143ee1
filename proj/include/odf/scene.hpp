// Scene = immutable mesh + BVH + content hash. Ground-truth visibility
// labeling lives here; everything downstream treats it as the oracle.
#pragma once

#include <utility>

#include "odf/bvh.hpp"
#include "odf/mesh.hpp"

namespace odf {

// Contact tolerance: a surface hit within this distance of the target point
// does not count as an occluder (absorbs target-on-surface ties).
inline constexpr double kVisibilityEpsilon = 1e-6;

struct Scene {
    TriangleMesh mesh;
    Bvh bvh;
    std::uint64_t hash = 0;

    // Meshes with zero triangles are allowed (a scene with no occluders);
    // every raycast then misses at the clamp distance.
    static Scene build(TriangleMesh m) {
        Scene s;
        s.hash = mesh_hash(m);
        if (!m.triangles.empty()) s.bvh = Bvh::build(m);
        s.mesh = std::move(m);
        return s;
    }

    RayHit raycast(const Vec3& origin, const Vec3& dir, double max_distance) const {
        if (mesh.triangles.empty()) {
            detail::check_unit_direction(dir);
            RayHit miss;
            miss.distance = max_distance;
            return miss;
        }
        return bvh.raycast(mesh, origin, dir, max_distance);
    }
};

// True iff the open segment (s, t) is free of occluders, up to the contact
// epsilon at the far end.
inline bool oracle_visibility(const Scene& scene, const Vec3& s, const Vec3& t) {
    const Vec3 delta = t - s;
    const double dist = norm(delta);
    if (dist == 0.0) throw ContractError("degenerate visibility pair: s == t");
    const double reach = dist - kVisibilityEpsilon;
    if (reach <= 0.0) return true;
    const RayHit hit = scene.raycast(s, delta / dist, reach);
    return !hit.hit;
}

}  // namespace odf
