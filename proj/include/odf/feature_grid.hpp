// Learnable feature grids.
//
// MultiResGrid2D: stacked 2D grids over the spherical UV plane holding F
// features per texel, bilinearly interpolated from the four nearest texel
// centers and concatenated coarse-to-fine. The longitude axis wraps, the
// latitude axis clamps. Per-level resolutions are linearly interpolated
// between the coarsest and finest settings (16x8 .. 256x128 by default, which
// keeps every level at the 2:1 longitude:latitude aspect).
//
// HashGrid3D: multi-resolution hash grid over positions normalized to the
// partition box. Every level owns a full 2^log2_table_size table; corner
// coordinates are hashed with fixed odd multipliers (serialized with the
// model, so files are self-describing).
//
// Both expose an explicit interpolation footprint (texel id + weight taps) so
// the trainer can route dL/dfeature into the tables.
#pragma once

#include <cstdint>
#include <vector>

#include "odf/errors.hpp"
#include "odf/math.hpp"
#include "odf/projection.hpp"
#include "odf/rng.hpp"

namespace odf {

// Learnable tables initialize uniform in +/- this.
inline constexpr double kFeatureInitScale = 1e-4;

struct GridTap {
    std::uint32_t base = 0;  // flat index of the texel's first feature component
    double weight = 0.0;
};

struct GridLevel {
    std::uint32_t res_u = 0;  // longitude texels (or x for hash grids)
    std::uint32_t res_v = 0;  // latitude texels
    std::uint64_t offset = 0; // feature-index offset of this level's table
};

// Linear interpolation of per-axis resolutions between the endpoints,
// rounded to the nearest integer. Validated strictly increasing.
inline std::vector<GridLevel> grid2d_level_resolutions(std::uint32_t levels, std::uint32_t coarsest_u,
                                                       std::uint32_t coarsest_v, std::uint32_t finest_u,
                                                       std::uint32_t finest_v) {
    if (levels == 0) throw InputError("grid needs at least one level");
    if (levels == 1 && (coarsest_u != finest_u || coarsest_v != finest_v))
        throw InputError("single-level grid requires coarsest == finest");
    std::vector<GridLevel> out(levels);
    for (std::uint32_t l = 0; l < levels; ++l) {
        const double t = levels == 1 ? 0.0 : static_cast<double>(l) / (levels - 1);
        out[l].res_u = static_cast<std::uint32_t>(std::lround(coarsest_u + t * (static_cast<double>(finest_u) - coarsest_u)));
        out[l].res_v = static_cast<std::uint32_t>(std::lround(coarsest_v + t * (static_cast<double>(finest_v) - coarsest_v)));
        if (out[l].res_u == 0 || out[l].res_v == 0) throw InputError("grid level resolution must be positive");
        if (l > 0 && (out[l].res_u <= out[l - 1].res_u || out[l].res_v <= out[l - 1].res_v))
            throw InputError("grid level resolutions must strictly increase coarse to fine");
    }
    return out;
}

class MultiResGrid2D {
public:
    Projection projection = Projection::LongLat;
    std::uint32_t levels = 16;
    std::uint32_t feature_width = 2;
    std::uint32_t coarsest_u = 16, coarsest_v = 8;
    std::uint32_t finest_u = 256, finest_v = 128;

    static MultiResGrid2D create(Projection projection, std::uint32_t levels, std::uint32_t feature_width,
                                 std::uint32_t coarsest_u, std::uint32_t coarsest_v, std::uint32_t finest_u,
                                 std::uint32_t finest_v, std::uint64_t seed) {
        MultiResGrid2D g;
        g.projection = projection;
        g.levels = levels;
        g.feature_width = feature_width;
        g.coarsest_u = coarsest_u;
        g.coarsest_v = coarsest_v;
        g.finest_u = finest_u;
        g.finest_v = finest_v;
        g.level_specs_ = grid2d_level_resolutions(levels, coarsest_u, coarsest_v, finest_u, finest_v);
        std::uint64_t offset = 0;
        for (GridLevel& l : g.level_specs_) {
            l.offset = offset;
            offset += static_cast<std::uint64_t>(l.res_u) * l.res_v * feature_width;
        }
        if (offset > 0xFFFFFFFFull) throw InputError("grid feature table exceeds supported size");
        g.features_.assign(offset, 0.0);
        Rng rng(splitmix64(seed ^ 0x9D2C5680ull));
        for (double& f : g.features_) f = rng.uniform(-kFeatureInitScale, kFeatureInitScale);
        return g;
    }

    const std::vector<GridLevel>& level_specs() const { return level_specs_; }
    std::vector<double>& features() { return features_; }
    const std::vector<double>& features() const { return features_; }

    std::size_t output_dim() const { return static_cast<std::size_t>(levels) * feature_width; }
    std::size_t taps_per_sample() const { return static_cast<std::size_t>(levels) * 4; }

    std::uint64_t texel_count() const {
        std::uint64_t n = 0;
        for (const GridLevel& l : level_specs_) n += static_cast<std::uint64_t>(l.res_u) * l.res_v;
        return n;
    }

    // 4 taps per level. Weights are non-negative and sum to 1 per level.
    void footprint(const SphericalUv& uv, GridTap* taps) const {
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridLevel& lv = level_specs_[li];
            const double x = uv.u * lv.res_u - 0.5;
            const double y = uv.v * lv.res_v - 0.5;
            const double xf = std::floor(x);
            const double yf = std::floor(y);
            const double fx = x - xf;
            const double fy = y - yf;
            const std::int64_t c0 = static_cast<std::int64_t>(xf);
            const std::int64_t r0 = static_cast<std::int64_t>(yf);
            // longitude wraps, latitude clamps
            const std::uint32_t cols[2] = {wrap_col(c0, lv.res_u), wrap_col(c0 + 1, lv.res_u)};
            const std::uint32_t rows[2] = {clamp_row(r0, lv.res_v), clamp_row(r0 + 1, lv.res_v)};
            const double wx[2] = {1.0 - fx, fx};
            const double wy[2] = {1.0 - fy, fy};
            GridTap* t = taps + static_cast<std::size_t>(li) * 4;
            for (int ry = 0; ry < 2; ++ry)
                for (int cx = 0; cx < 2; ++cx) {
                    const std::uint64_t texel = static_cast<std::uint64_t>(rows[ry]) * lv.res_u + cols[cx];
                    t[ry * 2 + cx].base = static_cast<std::uint32_t>(lv.offset + texel * feature_width);
                    t[ry * 2 + cx].weight = wy[ry] * wx[cx];
                }
        }
    }

    void footprint(const Vec3& dir, GridTap* taps) const { footprint(dir_to_uv(dir, projection), taps); }

    // out[level * F + f] = sum_taps w * feature
    void gather(const GridTap* taps, double* out) const {
        const std::uint32_t F = feature_width;
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridTap* t = taps + static_cast<std::size_t>(li) * 4;
            double* o = out + static_cast<std::size_t>(li) * F;
            for (std::uint32_t f = 0; f < F; ++f) o[f] = 0.0;
            for (int k = 0; k < 4; ++k) {
                const double w = t[k].weight;
                const double* src = &features_[t[k].base];
                for (std::uint32_t f = 0; f < F; ++f) o[f] += w * src[f];
            }
        }
    }

    // grad_table += d(out) routed through the taps; grad_table has the same
    // layout as features().
    void scatter_add(const GridTap* taps, const double* d_out, double* grad_table) const {
        const std::uint32_t F = feature_width;
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridTap* t = taps + static_cast<std::size_t>(li) * 4;
            const double* d = d_out + static_cast<std::size_t>(li) * F;
            for (int k = 0; k < 4; ++k) {
                const double w = t[k].weight;
                double* dst = &grad_table[t[k].base];
                for (std::uint32_t f = 0; f < F; ++f) dst[f] += w * d[f];
            }
        }
    }

    void encode(const Vec3& dir, double* out, GridTap* taps) const {
        footprint(dir, taps);
        gather(taps, out);
    }

    std::vector<double> encode(const Vec3& dir) const {
        std::vector<GridTap> taps(taps_per_sample());
        std::vector<double> out(output_dim());
        encode(dir, out.data(), taps.data());
        return out;
    }

private:
    std::vector<GridLevel> level_specs_;
    std::vector<double> features_;

    static std::uint32_t wrap_col(std::int64_t c, std::uint32_t n) {
        std::int64_t m = c % static_cast<std::int64_t>(n);
        if (m < 0) m += n;
        return static_cast<std::uint32_t>(m);
    }
    static std::uint32_t clamp_row(std::int64_t r, std::uint32_t n) {
        if (r < 0) return 0;
        if (r >= static_cast<std::int64_t>(n)) return n - 1;
        return static_cast<std::uint32_t>(r);
    }
};

class HashGrid3D {
public:
    std::uint32_t levels = 16;
    std::uint32_t feature_width = 2;
    std::uint32_t log2_table_size = 16;
    std::uint32_t res_min = 16;
    std::uint32_t res_max = 512;
    // Fixed odd multipliers, XOR-combined; recorded in the model file.
    std::uint32_t primes[3] = {2654435761u, 805459861u, 2097192037u};

    static HashGrid3D create(std::uint32_t levels, std::uint32_t feature_width,
                             std::uint32_t log2_table_size, std::uint32_t res_min, std::uint32_t res_max,
                             std::uint64_t seed) {
        if (levels == 0) throw InputError("hash grid needs at least one level");
        if (log2_table_size == 0 || log2_table_size > 24)
            throw InputError("hash table size out of supported range");
        HashGrid3D g;
        g.levels = levels;
        g.feature_width = feature_width;
        g.log2_table_size = log2_table_size;
        g.res_min = res_min;
        g.res_max = res_max;
        g.resolutions_.resize(levels);
        const double growth = levels > 1 ? std::exp((std::log(static_cast<double>(res_max)) -
                                                     std::log(static_cast<double>(res_min))) /
                                                    (levels - 1))
                                         : 1.0;
        for (std::uint32_t l = 0; l < levels; ++l)
            g.resolutions_[l] = static_cast<std::uint32_t>(
                std::lround(res_min * std::pow(growth, static_cast<double>(l))));
        const std::uint64_t per_level = (1ull << log2_table_size) * feature_width;
        if (per_level * levels > 0xFFFFFFFFull)
            throw InputError("hash feature table exceeds supported size");
        g.features_.assign(per_level * levels, 0.0);
        Rng rng(splitmix64(seed ^ 0xB5297A4Dull));
        for (double& f : g.features_) f = rng.uniform(-kFeatureInitScale, kFeatureInitScale);
        return g;
    }

    const std::vector<std::uint32_t>& resolutions() const { return resolutions_; }
    std::vector<double>& features() { return features_; }
    const std::vector<double>& features() const { return features_; }

    std::size_t output_dim() const { return static_cast<std::size_t>(levels) * feature_width; }
    std::size_t taps_per_sample() const { return static_cast<std::size_t>(levels) * 8; }
    std::uint64_t table_entries() const { return (1ull << log2_table_size) * levels; }

    // q must already be normalized to the unit box; callers clamp and flag.
    void footprint(const Vec3& q, GridTap* taps) const {
        const std::uint64_t mask = (1ull << log2_table_size) - 1;
        const std::uint64_t table = 1ull << log2_table_size;
        for (std::uint32_t li = 0; li < levels; ++li) {
            const double res = static_cast<double>(resolutions_[li]);
            double fx[3], cx[3];
            std::uint64_t c0[3];
            const double q3[3] = {q.x, q.y, q.z};
            for (int a = 0; a < 3; ++a) {
                const double s = q3[a] * res;
                cx[a] = std::floor(s);
                fx[a] = s - cx[a];
                c0[a] = static_cast<std::uint64_t>(std::max(0.0, cx[a]));
            }
            GridTap* t = taps + static_cast<std::size_t>(li) * 8;
            const std::uint64_t level_offset = static_cast<std::uint64_t>(li) * table * feature_width;
            for (int corner = 0; corner < 8; ++corner) {
                const std::uint64_t ix = c0[0] + (corner & 1);
                const std::uint64_t iy = c0[1] + ((corner >> 1) & 1);
                const std::uint64_t iz = c0[2] + ((corner >> 2) & 1);
                const std::uint64_t h =
                    ((ix * primes[0]) ^ (iy * primes[1]) ^ (iz * primes[2])) & mask;
                t[corner].base = static_cast<std::uint32_t>(level_offset + h * feature_width);
                t[corner].weight = ((corner & 1) ? fx[0] : 1.0 - fx[0]) *
                                   (((corner >> 1) & 1) ? fx[1] : 1.0 - fx[1]) *
                                   (((corner >> 2) & 1) ? fx[2] : 1.0 - fx[2]);
            }
        }
    }

    void gather(const GridTap* taps, double* out) const {
        const std::uint32_t F = feature_width;
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridTap* t = taps + static_cast<std::size_t>(li) * 8;
            double* o = out + static_cast<std::size_t>(li) * F;
            for (std::uint32_t f = 0; f < F; ++f) o[f] = 0.0;
            for (int k = 0; k < 8; ++k) {
                const double w = t[k].weight;
                if (w == 0.0) continue;
                const double* src = &features_[t[k].base];
                for (std::uint32_t f = 0; f < F; ++f) o[f] += w * src[f];
            }
        }
    }

    void scatter_add(const GridTap* taps, const double* d_out, double* grad_table) const {
        const std::uint32_t F = feature_width;
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridTap* t = taps + static_cast<std::size_t>(li) * 8;
            const double* d = d_out + static_cast<std::size_t>(li) * F;
            for (int k = 0; k < 8; ++k) {
                const double w = t[k].weight;
                if (w == 0.0) continue;
                double* dst = &grad_table[t[k].base];
                for (std::uint32_t f = 0; f < F; ++f) dst[f] += w * d[f];
            }
        }
    }

    void encode(const Vec3& q, double* out, GridTap* taps) const {
        footprint(q, taps);
        gather(taps, out);
    }

    std::vector<double> encode(const Vec3& q) const {
        std::vector<GridTap> taps(taps_per_sample());
        std::vector<double> out(output_dim());
        encode(q, out.data(), taps.data());
        return out;
    }

private:
    std::vector<std::uint32_t> resolutions_;
    std::vector<double> features_;
};

}  // namespace odf
