// Training loop: direct MSE regression of clamped ray distances, Adam with
// decoupled weight decay on the MLP weight matrices only. One trainer owns
// one partition; distinct partitions train in parallel with derived seeds,
// so the resulting atlas does not depend on the worker count.
#pragma once

#include <cstdint>
#include <vector>

#include "odf/adam.hpp"
#include "odf/dataset.hpp"
#include "odf/model.hpp"
#include "odf/parallel.hpp"
#include "odf/partition.hpp"

namespace odf {

struct TrainConfig {
    OdfModelConfig model;
    AdamConfig adam;            // lr 1e-3, betas .9/.999, eps 1e-8, decay 1e-5
    std::uint32_t epochs = 30;
    std::uint32_t batch_size = 1024;
    std::uint64_t seed = 1;
    unsigned threads = 0;       // 0 = auto
    bool verbose = false;
};

// One partition's slice of a dataset: which sources fall in the cell.
struct PartitionRays {
    PartitionId id = 0;
    std::vector<std::uint32_t> source_indices;
};

inline std::vector<PartitionRays> split_by_partition(const RayDataset& ds, const PartitionScheme& scheme) {
    std::vector<PartitionRays> out(scheme.active_count());
    const auto& cells = scheme.active_cells();
    for (std::size_t i = 0; i < cells.size(); ++i) out[i].id = cells[i];
    for (std::uint32_t s = 0; s < ds.sources.size(); ++s) {
        const PartitionId id = scheme.partition_of(ds.sources[s]);
        out[scheme.active_index(id)].source_indices.push_back(s);
    }
    return out;
}

struct EpochLog {
    std::vector<double> mean_loss;  // per epoch, normalized units
};

// Trains one partition model on the rays of the sources assigned to it.
// Every ray origin must lie inside the partition cell (data integrity).
inline OdfPartitionModel train_partition(const RayDataset& ds, const PartitionScheme& scheme,
                                         const PartitionRays& rays, const TrainConfig& cfg,
                                         EpochLog* log = nullptr) {
    if (rays.source_indices.empty()) throw InputError("partition has no source positions");
    const Aabb cell = scheme.cell_bounds(rays.id);
    for (std::uint32_t s : rays.source_indices) {
        const Vec3& p = ds.sources[s];
        if (scheme.partition_of(p) != rays.id)
            throw DataError("ray origin outside its partition cell (source " + std::to_string(s) + ")");
    }
    const std::uint64_t seed = derive_seed(cfg.seed, rays.id);
    OdfPartitionModel model = OdfPartitionModel::create(rays.id, scheme.kind, cell,
                                                        ds.clamp_distance, cfg.model, seed);

    const FibonacciLattice lattice = fibonacci_directions(ds.lattice_n);
    const std::size_t dirs = lattice.count();
    const std::size_t n_sources = rays.source_indices.size();
    const std::size_t n_samples = n_sources * dirs;
    const std::size_t pos_dim = cfg.model.pos_dim();
    const std::size_t dir_dim = cfg.model.dir_dim();
    const std::size_t in_dim = pos_dim + dir_dim;

    // Per-source position features (and hash footprints) are constant across
    // the whole run; per-direction grid footprints and fixed direction
    // features are shared by every source in the cell. Precompute both.
    const std::size_t pos_taps = model.pos_taps_per_sample();
    const std::size_t dir_taps = model.dir_taps_per_sample();
    std::vector<double> pos_feat(n_sources * pos_dim);
    std::vector<GridTap> pos_tap_table(n_sources * std::max<std::size_t>(1, pos_taps));
    for (std::size_t i = 0; i < n_sources; ++i) {
        model.encode_position(ds.sources[rays.source_indices[i]], &pos_feat[i * pos_dim],
                              pos_taps ? &pos_tap_table[i * pos_taps] : nullptr);
    }
    std::vector<double> dir_feat;   // fixed feature encoders only (SH / raw)
    std::vector<GridTap> dir_tap_table;
    if (cfg.model.dir_kind == DirEncoderKind::Grid2D) {
        dir_tap_table.resize(dirs * dir_taps);
        for (std::size_t d = 0; d < dirs; ++d)
            model.grid.footprint(lattice.directions[d], &dir_tap_table[d * dir_taps]);
    } else {
        dir_feat.resize(dirs * dir_dim);
        for (std::size_t d = 0; d < dirs; ++d)
            model.encode_direction(lattice.directions[d], &dir_feat[d * dir_dim]);
    }

    // Parameter blocks: MLP weights decay, biases and feature tables do not.
    Mlp::Gradients grads = model.mlp.make_gradients();
    std::vector<double> grid_grad(model.grid.features().size(), 0.0);
    std::vector<double> hash_grad(model.hash.features().size(), 0.0);
    std::vector<ParamBlock> blocks;
    for (std::size_t li = 0; li < model.mlp.layers().size(); ++li) {
        Mlp::Layer& l = model.mlp.layers()[li];
        Mlp::Layer& g = grads.layers[li];
        blocks.push_back({l.weights.data(), g.weights.data(), l.weights.size(), true});
        blocks.push_back({l.bias.data(), g.bias.data(), l.bias.size(), false});
    }
    if (!grid_grad.empty())
        blocks.push_back({model.grid.features().data(), grid_grad.data(), grid_grad.size(), false});
    if (!hash_grad.empty())
        blocks.push_back({model.hash.features().data(), hash_grad.data(), hash_grad.size(), false});
    AdamState adam(cfg.adam);

    std::vector<std::uint32_t> order(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng shuffle_rng(derive_seed(seed, 0xC0FFEEull));

    Mlp::Cache cache;
    std::vector<double> x(in_dim);
    const double inv_clamp = 1.0 / model.clamp_distance;
    EpochLog local_log;
    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n_samples; start += cfg.batch_size) {
            const std::size_t end = std::min(n_samples, start + cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            grads.zero();
            if (!grid_grad.empty()) std::fill(grid_grad.begin(), grid_grad.end(), 0.0);
            if (!hash_grad.empty()) std::fill(hash_grad.begin(), hash_grad.end(), 0.0);
            for (std::size_t bi = start; bi < end; ++bi) {
                const std::uint32_t sample = order[bi];
                const std::size_t si = sample / dirs;
                const std::size_t di = sample % dirs;
                // assemble input row
                std::copy_n(&pos_feat[si * pos_dim], pos_dim, x.data());
                if (cfg.model.dir_kind == DirEncoderKind::Grid2D)
                    model.grid.gather(&dir_tap_table[di * dir_taps], x.data() + pos_dim);
                else
                    std::copy_n(&dir_feat[di * dir_dim], dir_dim, x.data() + pos_dim);
                const double target =
                    static_cast<double>(ds.record(rays.source_indices[si])[di]) * inv_clamp;
                const double pred = model.mlp.forward(x.data(), in_dim, cache);
                const auto [loss, dloss] = mse_loss(pred, target);
                epoch_loss += loss;
                model.mlp.backward(cache, dloss * inv_batch, grads);
                // route input gradients into the learnable feature tables
                if (cfg.model.dir_kind == DirEncoderKind::Grid2D)
                    model.grid.scatter_add(&dir_tap_table[di * dir_taps],
                                           grads.input.data() + pos_dim, grid_grad.data());
                if (cfg.model.pos_kind == PosEncoderKind::Hash3D)
                    model.hash.scatter_add(&pos_tap_table[si * pos_taps], grads.input.data(),
                                           hash_grad.data());
                std::fill(grads.input.begin(), grads.input.end(), 0.0);
            }
            adam.step(blocks);
            // Hash position features changed; refresh the cached rows.
            if (cfg.model.pos_kind == PosEncoderKind::Hash3D)
                for (std::size_t i = 0; i < n_sources; ++i)
                    model.hash.gather(&pos_tap_table[i * pos_taps], &pos_feat[i * pos_dim]);
        }
        local_log.mean_loss.push_back(epoch_loss / static_cast<double>(n_samples));
    }
    model.meta.seed = cfg.seed;
    model.meta.learning_rate = static_cast<float>(cfg.adam.learning_rate);
    model.meta.epochs = cfg.epochs;
    model.meta.batch_size = cfg.batch_size;
    model.meta.weight_decay = static_cast<float>(cfg.adam.weight_decay);
    model.meta.final_mse = local_log.mean_loss.empty()
                               ? 0.0f
                               : static_cast<float>(local_log.mean_loss.back());
    if (log) *log = std::move(local_log);
    model.finalize();
    return model;
}

struct AtlasTrainLog {
    std::vector<PartitionId> partition_ids;
    std::vector<float> final_mse;
};

inline OdfAtlas train_atlas(const RayDataset& ds, const PartitionScheme& scheme,
                            const TrainConfig& cfg, AtlasTrainLog* log = nullptr) {
    const std::vector<PartitionRays> split = split_by_partition(ds, scheme);
    OdfAtlas atlas;
    atlas.scheme = scheme;
    atlas.clamp_distance = ds.clamp_distance;
    atlas.scene_hash = ds.scene_hash;
    atlas.models().resize(split.size());
    parallel_for(split.size(), cfg.threads, [&](std::size_t i) {
        atlas.models()[i] = train_partition(ds, scheme, split[i], cfg);
    });
    if (log) {
        for (const auto& m : atlas.models()) {
            log->partition_ids.push_back(m.partition_id);
            log->final_mse.push_back(m.meta.final_mse);
        }
    }
    return atlas;
}

}  // namespace odf
