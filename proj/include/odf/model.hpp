// Per-partition ODF model: position encoder + direction encoder + MLP, plus
// the atlas that routes queries to the partition owning the source position.
//
// Training happens in double precision (mlp.hpp / train.hpp); queries run on
// a float32 mirror of the parameters, matching the serialized precision, so
// an in-memory model and its save/load round trip answer identically. The
// batched path accumulates in the same k-order as the single-query path and
// therefore returns bit-identical results for any batch size.
#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "odf/encoding.hpp"
#include "odf/errors.hpp"
#include "odf/feature_grid.hpp"
#include "odf/mlp.hpp"
#include "odf/partition.hpp"

namespace odf {

enum class PosEncoderKind : std::uint8_t { None = 0, Pe = 1, Hash3D = 2, Ffm = 3 };
enum class DirEncoderKind : std::uint8_t { None = 0, Grid2D = 1, Sh = 2 };

inline const char* to_string(PosEncoderKind k) {
    switch (k) {
        case PosEncoderKind::None: return "none";
        case PosEncoderKind::Pe: return "pe";
        case PosEncoderKind::Hash3D: return "hash";
        case PosEncoderKind::Ffm: return "ffm";
    }
    return "?";
}

inline const char* to_string(DirEncoderKind k) {
    switch (k) {
        case DirEncoderKind::None: return "none";
        case DirEncoderKind::Grid2D: return "grid";
        case DirEncoderKind::Sh: return "sh";
    }
    return "?";
}

// Architecture selection; identical across all partitions of an atlas.
struct OdfModelConfig {
    PosEncoderKind pos_kind = PosEncoderKind::Pe;
    PeConfig pe{6};
    // hash grid settings
    std::uint32_t hash_levels = 16, hash_features = 2, hash_log2_table = 16;
    std::uint32_t hash_res_min = 16, hash_res_max = 512;
    // ffm settings
    std::uint32_t ffm_features = 128;
    double ffm_sigma = 1.0;

    DirEncoderKind dir_kind = DirEncoderKind::Grid2D;
    Projection projection = Projection::LongLat;
    std::uint32_t grid_levels = 16, grid_features = 2;
    std::uint32_t grid_coarsest_u = 16, grid_coarsest_v = 8;
    std::uint32_t grid_finest_u = 256, grid_finest_v = 128;
    ShConfig sh{2};

    MlpShape mlp{128, 4};

    std::size_t pos_dim() const {
        switch (pos_kind) {
            case PosEncoderKind::None: return 3;
            case PosEncoderKind::Pe: return pe.output_dim(3);
            case PosEncoderKind::Hash3D: return static_cast<std::size_t>(hash_levels) * hash_features;
            case PosEncoderKind::Ffm: return 2u * ffm_features;
        }
        return 0;
    }
    std::size_t dir_dim() const {
        switch (dir_kind) {
            case DirEncoderKind::None: return 3;
            case DirEncoderKind::Grid2D: return static_cast<std::size_t>(grid_levels) * grid_features;
            case DirEncoderKind::Sh: return sh.output_dim();
        }
        return 0;
    }
    std::size_t input_dim() const { return pos_dim() + dir_dim(); }
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    float learning_rate = 1e-3f;
    std::uint32_t epochs = 0;
    std::uint32_t batch_size = 0;
    float weight_decay = 1e-5f;
    float final_mse = 0.0f;  // normalized units
};

// Maps p into the unit box; sets clamped when p lies outside.
inline Vec3 normalize_to_unit_box(const Vec3& p, const Aabb& box, bool* clamped = nullptr) {
    Vec3 q;
    bool c = false;
    for (int a = 0; a < 3; ++a) {
        const double ext = box.max[a] - box.min[a];
        double v = ext > 0.0 ? (p[a] - box.min[a]) / ext : 0.5;
        if (v < 0.0) { v = 0.0; c = true; }
        if (v > 1.0) { v = 1.0; c = true; }
        (a == 0 ? q.x : a == 1 ? q.y : q.z) = v;
    }
    if (clamped) *clamped = c;
    return q;
}

class OdfPartitionModel {
public:
    PartitionId partition_id = 0;
    PartitionKind partition_kind = PartitionKind::Grid2D;
    Aabb box;           // normalization box (the partition cell)
    double clamp_distance = 100.0;

    OdfModelConfig config;
    HashGrid3D hash;     // valid when pos_kind == Hash3D
    FfmConfig ffm;       // valid when pos_kind == Ffm
    MultiResGrid2D grid; // valid when dir_kind == Grid2D
    Mlp mlp;
    TrainingMeta meta;

    static OdfPartitionModel create(PartitionId id, PartitionKind kind, const Aabb& cell,
                                    double clamp, const OdfModelConfig& cfg, std::uint64_t seed) {
        OdfPartitionModel m;
        m.partition_id = id;
        m.partition_kind = kind;
        m.box = cell;
        m.clamp_distance = clamp;
        m.config = cfg;
        if (cfg.pos_kind == PosEncoderKind::Hash3D)
            m.hash = HashGrid3D::create(cfg.hash_levels, cfg.hash_features, cfg.hash_log2_table,
                                        cfg.hash_res_min, cfg.hash_res_max, derive_seed(seed, 1));
        if (cfg.pos_kind == PosEncoderKind::Ffm)
            m.ffm = FfmConfig::create(cfg.ffm_features, cfg.ffm_sigma, derive_seed(seed, 2));
        if (cfg.dir_kind == DirEncoderKind::Grid2D)
            m.grid = MultiResGrid2D::create(cfg.projection, cfg.grid_levels, cfg.grid_features,
                                            cfg.grid_coarsest_u, cfg.grid_coarsest_v, cfg.grid_finest_u,
                                            cfg.grid_finest_v, derive_seed(seed, 3));
        m.mlp = Mlp::make(static_cast<std::uint32_t>(cfg.input_dim()), cfg.mlp);
        Rng rng(derive_seed(seed, 4));
        m.mlp.init_weights(rng);
        return m;
    }

    // --- training-side (double) encoding ---------------------------------

    std::size_t dir_taps_per_sample() const {
        return config.dir_kind == DirEncoderKind::Grid2D ? grid.taps_per_sample() : 0;
    }
    std::size_t pos_taps_per_sample() const {
        return config.pos_kind == PosEncoderKind::Hash3D ? hash.taps_per_sample() : 0;
    }

    // Fills out[pos_dim] and optionally the hash footprint taps.
    void encode_position(const Vec3& p, double* out, GridTap* taps = nullptr,
                         bool* clamped = nullptr) const {
        switch (config.pos_kind) {
            case PosEncoderKind::None: {
                const Vec3 q = normalize_to_unit_box(p, box, clamped);
                out[0] = 2.0 * q.x - 1.0;
                out[1] = 2.0 * q.y - 1.0;
                out[2] = 2.0 * q.z - 1.0;
                break;
            }
            case PosEncoderKind::Pe: {
                const Vec3 q = normalize_to_unit_box(p, box, clamped);
                const double signed_q[3] = {2.0 * q.x - 1.0, 2.0 * q.y - 1.0, 2.0 * q.z - 1.0};
                pe_encode(signed_q, 3, config.pe, out);
                break;
            }
            case PosEncoderKind::Hash3D: {
                const Vec3 q = normalize_to_unit_box(p, box, clamped);
                if (!taps) throw ContractError("hash encoder needs tap storage");
                hash.encode(q, out, taps);
                break;
            }
            case PosEncoderKind::Ffm: {
                const Vec3 q = normalize_to_unit_box(p, box, clamped);
                const double q3[3] = {q.x, q.y, q.z};
                ffm_encode(q3, ffm, out);
                break;
            }
        }
    }

    // Fills out[dir_dim] and optionally the grid footprint taps.
    void encode_direction(const Vec3& d, double* out, GridTap* taps = nullptr) const {
        switch (config.dir_kind) {
            case DirEncoderKind::None:
                out[0] = d.x;
                out[1] = d.y;
                out[2] = d.z;
                break;
            case DirEncoderKind::Grid2D:
                if (!taps) throw ContractError("grid encoder needs tap storage");
                grid.encode(d, out, taps);
                break;
            case DirEncoderKind::Sh:
                sh_encode(d, config.sh, out);
                break;
        }
    }

    // Reference-path query in double precision (training-side parameters).
    double query_distance_f64(const Vec3& p, const Vec3& d) const {
        std::vector<double> x(config.input_dim());
        std::vector<GridTap> taps(std::max<std::size_t>(1, pos_taps_per_sample() + dir_taps_per_sample()));
        encode_position(p, x.data(), taps.data());
        encode_direction(d, x.data() + config.pos_dim(), taps.data() + pos_taps_per_sample());
        Mlp::Cache cache;
        const double raw = mlp.forward(x.data(), x.size(), cache);
        return std::clamp(raw, 0.0, 1.0) * clamp_distance;
    }

    std::size_t learnable_parameter_count() const {
        std::size_t n = mlp.parameter_count();
        if (config.pos_kind == PosEncoderKind::Hash3D) n += hash.features().size();
        if (config.dir_kind == DirEncoderKind::Grid2D) n += grid.features().size();
        return n;
    }

    // All serialized float tensors (learnables plus the fixed FFM matrix).
    std::size_t serialized_float_count() const {
        std::size_t n = learnable_parameter_count();
        if (config.pos_kind == PosEncoderKind::Ffm) n += ffm.matrix.size();
        return n;
    }

    // --- float32 inference mirror -----------------------------------------

    struct MirrorLayer {
        std::uint32_t in = 0, out = 0;
        std::vector<float> wt;  // transposed, [in][out]
        std::vector<float> bias;
    };

    // Rebuild the float mirror after training or deserialization.
    void finalize() {
        mirror_layers_.clear();
        for (const Mlp::Layer& l : mlp.layers()) {
            MirrorLayer ml;
            ml.in = l.in;
            ml.out = l.out;
            ml.wt.assign(static_cast<std::size_t>(l.in) * l.out, 0.0f);
            ml.bias.assign(l.out, 0.0f);
            for (std::uint32_t o = 0; o < l.out; ++o) {
                ml.bias[o] = static_cast<float>(l.bias[o]);
                for (std::uint32_t i = 0; i < l.in; ++i)
                    ml.wt[static_cast<std::size_t>(i) * l.out + o] =
                        static_cast<float>(l.weights[static_cast<std::size_t>(o) * l.in + i]);
            }
            mirror_layers_.push_back(std::move(ml));
        }
        grid_features_f32_.assign(grid.features().begin(), grid.features().end());
        hash_features_f32_.assign(hash.features().begin(), hash.features().end());
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }

    // Scratch for batched queries; reusable across calls, one per thread.
    struct QueryScratch {
        std::vector<float> x;       // batch x input
        std::vector<float> a, b;    // layer activations
        std::vector<GridTap> taps;
        std::vector<double> tmp;    // double-precision encoder output row
    };

    // Batched query; out[i] in meters, clamped to [0, clamp]. Bit-identical
    // to a batch of size 1 for each row.
    void query_batch(std::span<const Vec3> positions, std::span<const Vec3> dirs,
                     std::span<float> out, QueryScratch& scratch) const {
        if (!finalized_) throw ContractError("model must be finalized before queries");
        const std::size_t batch = positions.size();
        if (dirs.size() != batch || out.size() != batch) throw ContractError("query batch size mismatch");
        const std::size_t in_dim = config.input_dim();
        scratch.x.resize(batch * in_dim);
        scratch.tmp.resize(in_dim);
        scratch.taps.resize(std::max<std::size_t>(1, pos_taps_per_sample() + dir_taps_per_sample()));
        for (std::size_t i = 0; i < batch; ++i) {
            encode_row(positions[i], dirs[i], scratch, &scratch.x[i * in_dim]);
        }
        // dense layers
        const float* src = scratch.x.data();
        std::size_t src_width = in_dim;
        std::vector<float>* bufs[2] = {&scratch.a, &scratch.b};
        int cur = 0;
        for (std::size_t li = 0; li < mirror_layers_.size(); ++li) {
            const MirrorLayer& l = mirror_layers_[li];
            std::vector<float>& dst = *bufs[cur];
            dst.resize(batch * l.out);
            dense_forward(src, batch, l, dst.data());
            if (li + 1 != mirror_layers_.size())
                for (float& v : dst) v = v > 0.0f ? v : 0.0f;
            src = dst.data();
            src_width = l.out;
            cur ^= 1;
        }
        const float clampf = static_cast<float>(clamp_distance);
        for (std::size_t i = 0; i < batch; ++i) {
            float v = src[i] * clampf;
            if (v < 0.0f) v = 0.0f;
            if (v > clampf) v = clampf;
            out[i] = v;
        }
    }

    double query_distance(const Vec3& p, const Vec3& d, QueryScratch& scratch) const {
        const double n = norm(d);
        if (std::abs(n - 1.0) > kUnitDirTolerance)
            throw ContractError("query_distance requires a unit direction");
        float out;
        query_batch(std::span<const Vec3>(&p, 1), std::span<const Vec3>(&d, 1),
                    std::span<float>(&out, 1), scratch);
        return out;
    }

    double query_distance(const Vec3& p, const Vec3& d) const {
        QueryScratch scratch;
        return query_distance(p, d, scratch);
    }

private:
    std::vector<MirrorLayer> mirror_layers_;
    std::vector<float> grid_features_f32_;
    std::vector<float> hash_features_f32_;
    bool finalized_ = false;

    void encode_row(const Vec3& p, const Vec3& d, QueryScratch& scratch, float* row) const {
        const std::size_t pos_dim = config.pos_dim();
        const std::size_t dir_dim = config.dir_dim();
        // Position features via the double path (cheap, exact), except hash
        // gathers which read the float tables directly.
        if (config.pos_kind == PosEncoderKind::Hash3D) {
            const Vec3 q = normalize_to_unit_box(p, box);
            hash.footprint(q, scratch.taps.data());
            gather_f32(scratch.taps.data(), hash.levels, 8, hash.feature_width,
                       hash_features_f32_.data(), row);
        } else {
            encode_position(p, scratch.tmp.data());
            for (std::size_t i = 0; i < pos_dim; ++i) row[i] = static_cast<float>(scratch.tmp[i]);
        }
        float* dir_row = row + pos_dim;
        if (config.dir_kind == DirEncoderKind::Grid2D) {
            GridTap* taps = scratch.taps.data() + pos_taps_per_sample();
            grid.footprint(d, taps);
            gather_f32(taps, grid.levels, 4, grid.feature_width, grid_features_f32_.data(), dir_row);
        } else {
            encode_direction(d, scratch.tmp.data());
            for (std::size_t i = 0; i < dir_dim; ++i) dir_row[i] = static_cast<float>(scratch.tmp[i]);
        }
    }

    static void gather_f32(const GridTap* taps, std::uint32_t levels, int taps_per_level,
                           std::uint32_t F, const float* table, float* out) {
        for (std::uint32_t li = 0; li < levels; ++li) {
            const GridTap* t = taps + static_cast<std::size_t>(li) * taps_per_level;
            float* o = out + static_cast<std::size_t>(li) * F;
            for (std::uint32_t f = 0; f < F; ++f) o[f] = 0.0f;
            for (int k = 0; k < taps_per_level; ++k) {
                const float w = static_cast<float>(t[k].weight);
                const float* src = table + t[k].base;
                for (std::uint32_t f = 0; f < F; ++f) o[f] += w * src[f];
            }
        }
    }

    // Y = X * Wt + bias. Row-blocked by 4 so the weight load is shared across
    // rows; per-row accumulation order over k is fixed (ascending), which
    // keeps results independent of the batch size.
    static void dense_forward(const float* X, std::size_t batch, const MirrorLayer& l, float* Y) {
        const std::uint32_t in = l.in, out = l.out;
        std::size_t i0 = 0;
        for (; i0 + 4 <= batch; i0 += 4) {
            float* y0 = Y + (i0 + 0) * out;
            float* y1 = Y + (i0 + 1) * out;
            float* y2 = Y + (i0 + 2) * out;
            float* y3 = Y + (i0 + 3) * out;
            for (std::uint32_t j = 0; j < out; ++j) {
                const float b = l.bias[j];
                y0[j] = b; y1[j] = b; y2[j] = b; y3[j] = b;
            }
            const float* x0 = X + (i0 + 0) * in;
            const float* x1 = X + (i0 + 1) * in;
            const float* x2 = X + (i0 + 2) * in;
            const float* x3 = X + (i0 + 3) * in;
            for (std::uint32_t k = 0; k < in; ++k) {
                const float a0 = x0[k], a1 = x1[k], a2 = x2[k], a3 = x3[k];
                const float* w = &l.wt[static_cast<std::size_t>(k) * out];
                for (std::uint32_t j = 0; j < out; ++j) {
                    const float wv = w[j];
                    y0[j] += a0 * wv;
                    y1[j] += a1 * wv;
                    y2[j] += a2 * wv;
                    y3[j] += a3 * wv;
                }
            }
        }
        for (; i0 < batch; ++i0) {
            float* y = Y + i0 * out;
            for (std::uint32_t j = 0; j < out; ++j) y[j] = l.bias[j];
            const float* x = X + i0 * in;
            for (std::uint32_t k = 0; k < in; ++k) {
                const float a = x[k];
                const float* w = &l.wt[static_cast<std::size_t>(k) * out];
                for (std::uint32_t j = 0; j < out; ++j) y[j] += a * w[j];
            }
        }
    }
};

class OdfAtlas {
public:
    PartitionScheme scheme;
    double clamp_distance = 100.0;
    std::uint64_t scene_hash = 0;
    // Optional safety margin on the Eq-2 comparison; 0 reproduces the strict rule.
    double visibility_bias = 0.0;

    OdfAtlas() = default;
    OdfAtlas(OdfAtlas&& o) noexcept { *this = std::move(o); }
    OdfAtlas& operator=(OdfAtlas&& o) noexcept {
        scheme = std::move(o.scheme);
        clamp_distance = o.clamp_distance;
        scene_hash = o.scene_hash;
        visibility_bias = o.visibility_bias;
        models_ = std::move(o.models_);
        lookups_.store(o.lookups_.load(std::memory_order_relaxed), std::memory_order_relaxed);
        return *this;
    }
    OdfAtlas(const OdfAtlas&) = delete;
    OdfAtlas& operator=(const OdfAtlas&) = delete;

    std::vector<OdfPartitionModel>& models() { return models_; }
    const std::vector<OdfPartitionModel>& models() const { return models_; }

    // Partition lookup for a source position; counts every access so the
    // one-model-per-query locality property is testable.
    const OdfPartitionModel& model_for_source(const Vec3& s) const {
        const PartitionId id = scheme.partition_of(s);
        lookups_.fetch_add(1, std::memory_order_relaxed);
        return models_[scheme.active_index(id)];
    }

    std::uint64_t partition_lookups() const { return lookups_.load(std::memory_order_relaxed); }
    void reset_lookup_counter() const { lookups_.store(0, std::memory_order_relaxed); }

    bool predict_visibility(const Vec3& s, const Vec3& t, OdfPartitionModel::QueryScratch& scratch) const {
        const Vec3 delta = t - s;
        const double dist = norm(delta);
        if (dist == 0.0) throw ContractError("degenerate visibility pair: s == t");
        const OdfPartitionModel& model = model_for_source(s);
        const double pred = model.query_distance(s, delta / dist, scratch);
        return pred > dist + visibility_bias;
    }

    bool predict_visibility(const Vec3& s, const Vec3& t) const {
        OdfPartitionModel::QueryScratch scratch;
        return predict_visibility(s, t, scratch);
    }

    // Caller-owned scratch: keeps concurrent batch callers independent.
    struct BatchScratch {
        OdfPartitionModel::QueryScratch query;
        std::vector<std::vector<std::size_t>> groups;
        std::vector<Vec3> pos, dir;
        std::vector<double> dist;
        std::vector<float> pred;
    };

    // Order-preserving batched visibility over arbitrary pairs; queries are
    // grouped per partition internally.
    void predict_visibility_batch(std::span<const Vec3> sources, std::span<const Vec3> targets,
                                  std::span<std::uint8_t> out, BatchScratch& scratch) const {
        const std::size_t n = sources.size();
        if (targets.size() != n || out.size() != n) throw ContractError("visibility batch size mismatch");
        scratch.groups.clear();
        scratch.groups.resize(models_.size());
        for (std::size_t i = 0; i < n; ++i)
            scratch.groups[scheme.active_index(scheme.partition_of(sources[i]))].push_back(i);
        for (std::size_t m = 0; m < models_.size(); ++m) {
            const auto& idx = scratch.groups[m];
            if (idx.empty()) continue;
            lookups_.fetch_add(1, std::memory_order_relaxed);
            scratch.pos.resize(idx.size());
            scratch.dir.resize(idx.size());
            scratch.dist.resize(idx.size());
            scratch.pred.resize(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const Vec3 s = sources[idx[k]];
                const Vec3 delta = targets[idx[k]] - s;
                const double dist = norm(delta);
                if (dist == 0.0) throw ContractError("degenerate visibility pair: s == t");
                scratch.pos[k] = s;
                scratch.dir[k] = delta / dist;
                scratch.dist[k] = dist;
            }
            models_[m].query_batch(scratch.pos, scratch.dir, scratch.pred, scratch.query);
            for (std::size_t k = 0; k < idx.size(); ++k)
                out[idx[k]] = scratch.pred[k] > scratch.dist[k] + visibility_bias ? 1 : 0;
        }
    }

private:
    std::vector<OdfPartitionModel> models_;
    mutable std::atomic<std::uint64_t> lookups_{0};
};

}  // namespace odf
