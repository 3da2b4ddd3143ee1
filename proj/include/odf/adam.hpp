// Adam with decoupled (AdamW-style) weight decay. Parameters are addressed
// as blocks of raw storage; the decay flag is per block so MLP weight
// matrices decay while biases and grid/hash feature tables do not.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "odf/errors.hpp"

namespace odf {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;  // applied only to blocks with decay = true
};

struct ParamBlock {
    double* data = nullptr;
    const double* grad = nullptr;
    std::size_t size = 0;
    bool decay = false;
};

class AdamState {
public:
    AdamState() = default;
    explicit AdamState(const AdamConfig& cfg) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return step_; }

    // One update over all blocks. Blocks must be passed in the same order and
    // with the same sizes every step; moment buffers are keyed by position.
    void step(const std::vector<ParamBlock>& blocks) {
        if (moments_.empty()) {
            moments_.resize(blocks.size());
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                moments_[b].m.assign(blocks[b].size, 0.0);
                moments_[b].v.assign(blocks[b].size, 0.0);
            }
        }
        if (moments_.size() != blocks.size()) throw ContractError("Adam block list changed shape");
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const ParamBlock& blk = blocks[b];
            if (moments_[b].m.size() != blk.size) throw ContractError("Adam block size changed");
            double* m = moments_[b].m.data();
            double* v = moments_[b].v.data();
            double* p = blk.data;
            const double* g = blk.grad;
            const double decay = blk.decay ? cfg_.learning_rate * cfg_.weight_decay : 0.0;
            for (std::size_t i = 0; i < blk.size; ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                p[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
                if (decay != 0.0) p[i] -= decay * p[i];
            }
        }
    }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::vector<Moments> moments_;
    std::uint64_t step_ = 0;
};

}  // namespace odf
