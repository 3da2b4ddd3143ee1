// Training-data collection: omnidirectional distance records per source
// position (lattice order, misses clamped) and oracle-labeled visibility
// test pairs. Directions are never stored; lattice parameter n regenerates
// them, which keeps files 6x smaller.
#pragma once

#include <cstdint>
#include <vector>

#include "odf/fibonacci.hpp"
#include "odf/parallel.hpp"
#include "odf/rng.hpp"
#include "odf/scene.hpp"

namespace odf {

inline constexpr double kDefaultClampDistance = 100.0;  // meters
// Distances below this flag a source as embedded in/too close to geometry.
inline constexpr double kEmbeddedSourceDistance = 1e-3;
inline constexpr double kMinPairSeparation = 0.01;  // meters, test-pair rejection

struct RayDataset {
    std::uint32_t lattice_n = 0;   // P = 2n+1 distances per record
    float clamp_distance = 100.0f;
    std::uint64_t scene_hash = 0;
    std::vector<Vec3> sources;
    std::vector<float> distances;  // row-major [source][lattice index]

    std::size_t directions_per_source() const { return 2 * static_cast<std::size_t>(lattice_n) + 1; }
    const float* record(std::size_t source) const { return &distances[source * directions_per_source()]; }
};

struct CollectionReport {
    std::size_t sources = 0;
    std::size_t rays = 0;
    std::size_t hits = 0;
    std::vector<std::uint32_t> embedded_sources;  // indices with near-zero distances
};

inline RayDataset collect_rays(const Scene& scene, const std::vector<Vec3>& sources,
                               std::uint32_t lattice_n, double clamp_distance,
                               CollectionReport* report = nullptr, unsigned threads = 0) {
    if (sources.empty()) throw InputError("collect_rays needs at least one source position");
    if (lattice_n < 1) throw InputError("lattice n must be >= 1 for data collection");
    const FibonacciLattice lattice = fibonacci_directions(lattice_n);
    RayDataset ds;
    ds.lattice_n = lattice_n;
    ds.clamp_distance = static_cast<float>(clamp_distance);
    ds.scene_hash = scene.hash;
    ds.sources.reserve(sources.size());
    for (const Vec3& s : sources) ds.sources.push_back(snap_f32(s));
    const std::size_t p = lattice.count();
    ds.distances.resize(sources.size() * p);
    std::vector<std::uint8_t> embedded(sources.size(), 0);
    std::vector<std::uint64_t> hit_counts(sources.size(), 0);
    parallel_for(sources.size(), threads, [&](std::size_t s) {
        float* row = &ds.distances[s * p];
        double nearest = clamp_distance;
        std::uint64_t hits = 0;
        for (std::size_t d = 0; d < p; ++d) {
            const RayHit hit = scene.raycast(ds.sources[s], lattice.directions[d], clamp_distance);
            row[d] = static_cast<float>(hit.distance);
            if (hit.hit) {
                ++hits;
                nearest = std::min(nearest, hit.distance);
            }
        }
        hit_counts[s] = hits;
        embedded[s] = nearest < kEmbeddedSourceDistance ? 1 : 0;
    });
    if (report) {
        report->sources = sources.size();
        report->rays = ds.distances.size();
        report->hits = 0;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            report->hits += hit_counts[s];
            if (embedded[s]) report->embedded_sources.push_back(static_cast<std::uint32_t>(s));
        }
    }
    return ds;
}

struct VisibilityTestSet {
    std::uint64_t scene_hash = 0;
    std::vector<Vec3> sources;   // s per record
    std::vector<Vec3> targets;   // t per record
    std::vector<std::uint8_t> labels;  // 1 = visible

    std::size_t size() const { return labels.size(); }
    std::size_t positives() const {
        std::size_t n = 0;
        for (auto l : labels) n += l;
        return n;
    }
};

// Targets are sampled uniformly in the scene bounding box, rejecting pairs
// farther apart than the clamp or closer than kMinPairSeparation. Every
// source gets its own derived seed, so results are independent of threading.
inline VisibilityTestSet build_test_set(const Scene& scene, const std::vector<Vec3>& sources,
                                        std::size_t targets_per_source, std::uint64_t seed,
                                        double clamp_distance, unsigned threads = 0) {
    VisibilityTestSet ts;
    ts.scene_hash = scene.hash;
    const std::size_t count = sources.size() * targets_per_source;
    ts.sources.resize(count);
    ts.targets.resize(count);
    ts.labels.resize(count);
    const Aabb box = scene.mesh.bounds;
    parallel_for(sources.size(), threads, [&](std::size_t si) {
        Rng rng(derive_seed(seed, si));
        const Vec3 s = snap_f32(sources[si]);
        for (std::size_t k = 0; k < targets_per_source; ++k) {
            Vec3 t;
            for (int attempt = 0;; ++attempt) {
                t = snap_f32({rng.uniform(box.min.x, box.max.x), rng.uniform(box.min.y, box.max.y),
                              rng.uniform(box.min.z, box.max.z)});
                const double dist = norm(t - s);
                if (dist >= kMinPairSeparation && dist <= clamp_distance) break;
                if (attempt > 10000)
                    throw InputError("could not sample a target within the clamp distance");
            }
            const std::size_t slot = si * targets_per_source + k;
            ts.sources[slot] = s;
            ts.targets[slot] = t;
            ts.labels[slot] = oracle_visibility(scene, s, t) ? 1 : 0;
        }
    });
    return ts;
}

// Rejection-samples positions in free space: inside the scene bounds slab
// [z_lo, z_hi], not inside any closed object (+z crossing parity), with a
// little clearance from surfaces along the coordinate axes.
inline std::vector<Vec3> sample_free_positions(const Scene& scene, std::size_t count,
                                               std::uint64_t seed, double z_lo, double z_hi,
                                               double clearance = 0.25) {
    std::vector<Vec3> out;
    out.reserve(count);
    Rng rng(derive_seed(seed, 0xF0F0ull));
    const Aabb box = scene.mesh.bounds;
    const double margin = 1e-3;
    const Vec3 axes[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::size_t attempts = 0;
    const std::size_t max_attempts = count * 20000 + 100000;
    while (out.size() < count) {
        if (++attempts > max_attempts)
            throw InputError("could not sample enough free positions; check z range / clearance");
        Vec3 p{rng.uniform(box.min.x + margin, box.max.x - margin),
               rng.uniform(box.min.y + margin, box.max.y - margin),
               rng.uniform(std::max(z_lo, box.min.z + margin), std::min(z_hi, box.max.z))};
        // parity of +z crossings: odd means inside a closed object
        std::size_t crossings = 0;
        Vec3 o = p;
        const double span = box.max.z - p.z + 1.0;
        double travelled = 0.0;
        while (travelled < span) {
            const RayHit h = scene.raycast(o, {0, 0, 1}, span - travelled);
            if (!h.hit) break;
            ++crossings;
            travelled += h.distance + 1e-7;
            o.z = p.z + travelled;
        }
        if (crossings % 2 == 1) continue;
        bool clear = true;
        for (const Vec3& a : axes) {
            const RayHit h = scene.raycast(p, a, clearance);
            if (h.hit) {
                clear = false;
                break;
            }
        }
        if (clear) out.push_back(snap_f32(p));
    }
    return out;
}

}  // namespace odf
