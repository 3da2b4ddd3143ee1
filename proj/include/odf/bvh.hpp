// Binned-SAH BVH over triangle meshes and the ray queries built on it. The
// brute-force path shares the same triangle intersector, so the two must
// return identical nearest hits; tests pin that equivalence.
#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "odf/errors.hpp"
#include "odf/math.hpp"
#include "odf/mesh.hpp"

namespace odf {

struct RayHit {
    bool hit = false;
    double distance = 0.0;                                    // clamp value when miss
    std::uint32_t triangle = std::numeric_limits<std::uint32_t>::max();
};

namespace detail {

// Moller-Trumbore, double precision, both-sided.
inline bool intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0, const Vec3& v1,
                               const Vec3& v2, double& t_out) {
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = cross(dir, e2);
    const double det = dot(e1, pvec);
    if (std::abs(det) < 1e-14) return false;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = origin - v0;
    const double u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qvec = cross(tvec, e1);
    const double v = dot(dir, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    t_out = dot(e2, qvec) * inv_det;
    return true;
}

// Conservative slab test; per-axis branches avoid 0/0 NaN traps so no box is
// ever falsely culled (required for exact BVH == brute-force agreement).
inline bool intersect_aabb(const Aabb& box, const Vec3& origin, const Vec3& inv_dir,
                           const Vec3& dir, double t_max, double& t_near_out) {
    double t_near = 0.0;
    double t_far = t_max;
    for (int a = 0; a < 3; ++a) {
        const double o = origin[a];
        const double lo = box.min[a];
        const double hi = box.max[a];
        if (dir[a] == 0.0) {
            if (o < lo || o > hi) return false;
            continue;
        }
        double t0 = (lo - o) * inv_dir[a];
        double t1 = (hi - o) * inv_dir[a];
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > t_near) t_near = t0;
        if (t1 < t_far) t_far = t1;
        if (t_near > t_far) return false;
    }
    t_near_out = t_near;
    return true;
}

inline void check_unit_direction(const Vec3& dir) {
    const double n = norm(dir);
    if (std::abs(n - 1.0) > kUnitDirTolerance)
        throw ContractError("direction must be unit length (|d| = " + std::to_string(n) + ")");
}

}  // namespace detail

class Bvh {
public:
    struct Node {
        Aabb bounds;
        std::uint32_t left_first = 0;  // child index for inner nodes, first triangle slot for leaves
        std::uint32_t count = 0;       // 0 for inner nodes
        bool is_leaf() const { return count > 0; }
    };

    static constexpr std::uint32_t kLeafSize = 4;
    static constexpr int kBins = 16;

    static Bvh build(const TriangleMesh& mesh) {
        if (mesh.triangles.empty()) throw InputError("cannot build BVH over empty mesh");
        Bvh bvh;
        const std::size_t n = mesh.triangles.size();
        bvh.tri_order_.resize(n);
        std::iota(bvh.tri_order_.begin(), bvh.tri_order_.end(), 0u);
        std::vector<Aabb> tri_bounds(n);
        std::vector<Vec3> centroids(n);
        for (std::size_t i = 0; i < n; ++i) {
            Aabb b;
            b.expand(mesh.vertex(static_cast<std::uint32_t>(i), 0));
            b.expand(mesh.vertex(static_cast<std::uint32_t>(i), 1));
            b.expand(mesh.vertex(static_cast<std::uint32_t>(i), 2));
            tri_bounds[i] = b;
            centroids[i] = b.center();
        }
        bvh.nodes_.reserve(2 * n);
        bvh.nodes_.push_back(Node{});
        bvh.build_node(0, 0, static_cast<std::uint32_t>(n), tri_bounds, centroids);
        return bvh;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& triangle_order() const { return tri_order_; }

    RayHit raycast(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                   double max_distance) const {
        detail::check_unit_direction(dir);
        if (max_distance <= 0.0) throw ContractError("max_distance must be positive");
        const Vec3 inv_dir{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        RayHit best;
        best.distance = max_distance;
        std::uint32_t stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& node = nodes_[stack[--sp]];
            double t_near;
            if (!detail::intersect_aabb(node.bounds, origin, inv_dir, dir, best.distance, t_near))
                continue;
            if (node.is_leaf()) {
                for (std::uint32_t i = 0; i < node.count; ++i) {
                    const std::uint32_t tri = tri_order_[node.left_first + i];
                    double t;
                    if (detail::intersect_triangle(origin, dir, mesh.vertex(tri, 0), mesh.vertex(tri, 1),
                                                   mesh.vertex(tri, 2), t) &&
                        t > 0.0 && t <= best.distance && (!best.hit || t < best.distance)) {
                        best.hit = true;
                        best.distance = t;
                        best.triangle = tri;
                    }
                }
            } else {
                stack[sp++] = node.left_first;
                stack[sp++] = node.left_first + 1;
            }
        }
        if (!best.hit) best.distance = max_distance;
        return best;
    }

private:
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> tri_order_;

    void build_node(std::uint32_t node_idx, std::uint32_t first, std::uint32_t count,
                    const std::vector<Aabb>& tri_bounds, const std::vector<Vec3>& centroids) {
        Aabb bounds;
        Aabb centroid_bounds;
        for (std::uint32_t i = 0; i < count; ++i) {
            bounds.expand(tri_bounds[tri_order_[first + i]]);
            centroid_bounds.expand(centroids[tri_order_[first + i]]);
        }
        nodes_[node_idx].bounds = bounds;
        if (count <= kLeafSize) {
            nodes_[node_idx].left_first = first;
            nodes_[node_idx].count = count;
            return;
        }

        // Binned SAH over the widest centroid axis.
        const Vec3 ext = centroid_bounds.extent();
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        const double axis_min = centroid_bounds.min[axis];
        const double axis_ext = ext[axis];

        std::uint32_t mid = first + count / 2;
        if (axis_ext > 1e-12) {
            struct Bin {
                Aabb bounds;
                std::uint32_t count = 0;
            };
            Bin bins[kBins];
            const double scale = kBins / axis_ext;
            auto bin_of = [&](std::uint32_t tri) {
                int b = static_cast<int>((centroids[tri][axis] - axis_min) * scale);
                return std::min(b, kBins - 1);
            };
            for (std::uint32_t i = 0; i < count; ++i) {
                const std::uint32_t tri = tri_order_[first + i];
                Bin& bin = bins[bin_of(tri)];
                bin.bounds.expand(tri_bounds[tri]);
                bin.count++;
            }
            double right_area[kBins];
            Aabb acc;
            std::uint32_t right_count[kBins];
            std::uint32_t rc = 0;
            for (int b = kBins - 1; b >= 1; --b) {
                if (bins[b].count) acc.expand(bins[b].bounds);
                rc += bins[b].count;
                right_area[b] = acc.surface_area();
                right_count[b] = rc;
            }
            double best_cost = std::numeric_limits<double>::max();
            int best_split = -1;
            Aabb left_acc;
            std::uint32_t lc = 0;
            for (int b = 0; b < kBins - 1; ++b) {
                if (bins[b].count) left_acc.expand(bins[b].bounds);
                lc += bins[b].count;
                if (lc == 0 || right_count[b + 1] == 0) continue;
                const double cost = left_acc.surface_area() * lc + right_area[b + 1] * right_count[b + 1];
                if (cost < best_cost) {
                    best_cost = cost;
                    best_split = b;
                }
            }
            if (best_split >= 0) {
                auto it = std::partition(tri_order_.begin() + first, tri_order_.begin() + first + count,
                                         [&](std::uint32_t tri) { return bin_of(tri) <= best_split; });
                mid = static_cast<std::uint32_t>(it - tri_order_.begin());
                if (mid == first || mid == first + count) mid = first + count / 2;  // degenerate split
            }
        }

        const std::uint32_t left = static_cast<std::uint32_t>(nodes_.size());
        nodes_[node_idx].left_first = left;
        nodes_[node_idx].count = 0;
        nodes_.push_back(Node{});
        nodes_.push_back(Node{});
        build_node(left, first, mid - first, tri_bounds, centroids);
        build_node(left + 1, mid, first + count - mid, tri_bounds, centroids);
    }
};

// Reference path: same intersector, linear scan over every triangle.
inline RayHit raycast_brute_force(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                                  double max_distance) {
    detail::check_unit_direction(dir);
    if (max_distance <= 0.0) throw ContractError("max_distance must be positive");
    RayHit best;
    best.distance = max_distance;
    for (std::uint32_t tri = 0; tri < mesh.triangles.size(); ++tri) {
        double t;
        if (detail::intersect_triangle(origin, dir, mesh.vertex(tri, 0), mesh.vertex(tri, 1),
                                       mesh.vertex(tri, 2), t) &&
            t > 0.0 && t <= best.distance && (!best.hit || t < best.distance)) {
            best.hit = true;
            best.distance = t;
            best.triangle = tri;
        }
    }
    if (!best.hit) best.distance = max_distance;
    return best;
}

}  // namespace odf
