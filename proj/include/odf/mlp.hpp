// Dense MLP with ReLU hidden layers and a single linear output, written for
// exact reverse-mode gradients in double precision. The float32 inference
// fast path lives in model.hpp; this header is the training-side reference.
//
// The Cache object owns all per-sample scratch, so forward/backward allocate
// nothing once it has been used against a given shape.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odf/errors.hpp"
#include "odf/rng.hpp"

namespace odf {

struct MlpShape {
    std::uint32_t hidden_width = 128;
    std::uint32_t hidden_layers = 4;

    std::string label() const {
        return std::to_string(hidden_width) + "x" + std::to_string(hidden_layers);
    }
};

inline MlpShape mlp_shape_from_string(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw InputError("MLP shape must look like 128x4");
    MlpShape shape;
    try {
        shape.hidden_width = static_cast<std::uint32_t>(std::stoul(s.substr(0, x)));
        shape.hidden_layers = static_cast<std::uint32_t>(std::stoul(s.substr(x + 1)));
    } catch (const std::exception&) {
        throw InputError("MLP shape must look like 128x4");
    }
    if (shape.hidden_width == 0 || shape.hidden_layers == 0) throw InputError("MLP shape must be positive");
    return shape;
}

class Mlp {
public:
    struct Layer {
        std::uint32_t in = 0;
        std::uint32_t out = 0;
        std::vector<double> weights;  // row-major [out][in]
        std::vector<double> bias;     // [out]
    };

    struct Cache {
        std::vector<std::vector<double>> activations;  // post-activation, [0] = input copy
        std::vector<std::vector<double>> pre;          // pre-activation per layer
        std::vector<double> delta, prev_delta;         // backward scratch
        bool valid = false;
    };

    struct Gradients {
        std::vector<Layer> layers;  // weights/bias hold dL/dW, dL/db
        std::vector<double> input;  // dL/dx for routing into encoder features

        void zero() {
            for (auto& l : layers) {
                std::fill(l.weights.begin(), l.weights.end(), 0.0);
                std::fill(l.bias.begin(), l.bias.end(), 0.0);
            }
            std::fill(input.begin(), input.end(), 0.0);
        }

        void scale(double s) {
            for (auto& l : layers) {
                for (double& w : l.weights) w *= s;
                for (double& b : l.bias) b *= s;
            }
        }
    };

    Mlp() = default;

    // sizes = [input, hidden..., output]
    explicit Mlp(const std::vector<std::uint32_t>& sizes) {
        if (sizes.size() < 2) throw ContractError("MLP needs at least input and output sizes");
        for (std::size_t i = 1; i < sizes.size(); ++i) {
            Layer l;
            l.in = sizes[i - 1];
            l.out = sizes[i];
            l.weights.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
            l.bias.assign(l.out, 0.0);
            layers_.push_back(std::move(l));
        }
    }

    static Mlp make(std::uint32_t input, const MlpShape& shape) {
        std::vector<std::uint32_t> sizes{input};
        for (std::uint32_t i = 0; i < shape.hidden_layers; ++i) sizes.push_back(shape.hidden_width);
        sizes.push_back(1);
        return Mlp(sizes);
    }

    // He-style uniform init, +/- sqrt(6 / fan_in); biases zero.
    void init_weights(Rng& rng) {
        for (Layer& l : layers_) {
            const double bound = std::sqrt(6.0 / static_cast<double>(l.in));
            for (double& w : l.weights) w = rng.uniform(-bound, bound);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
        }
    }

    std::uint32_t input_width() const { return layers_.front().in; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    void prepare_cache(Cache& cache) const {
        cache.activations.resize(layers_.size() + 1);
        cache.pre.resize(layers_.size());
        cache.activations[0].resize(input_width());
        std::uint32_t widest = 1;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            cache.pre[li].resize(layers_[li].out);
            cache.activations[li + 1].resize(layers_[li].out);
            widest = std::max(widest, layers_[li].out);
        }
        const std::uint32_t scratch = std::max(widest, input_width());
        cache.delta.resize(scratch);
        cache.prev_delta.resize(scratch);
        cache.valid = true;
    }

    double forward(const double* x, std::size_t width, Cache& cache) const {
        if (width != input_width())
            throw ContractError("MLP input width mismatch: got " + std::to_string(width) +
                                ", expected " + std::to_string(input_width()));
        if (!cache.valid || cache.activations.size() != layers_.size() + 1 ||
            cache.activations[0].size() != width)
            prepare_cache(cache);
        std::copy(x, x + width, cache.activations[0].begin());
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const Layer& l = layers_[li];
            const double* in = cache.activations[li].data();
            double* pre = cache.pre[li].data();
            double* out = cache.activations[li + 1].data();
            for (std::uint32_t o = 0; o < l.out; ++o) {
                const double* w = &l.weights[static_cast<std::size_t>(o) * l.in];
                double acc = l.bias[o];
                for (std::uint32_t i = 0; i < l.in; ++i) acc += w[i] * in[i];
                pre[o] = acc;
            }
            const bool last = li + 1 == layers_.size();
            for (std::uint32_t o = 0; o < l.out; ++o)
                out[o] = last ? pre[o] : (pre[o] > 0.0 ? pre[o] : 0.0);  // ReLU on hidden layers
        }
        return cache.activations.back()[0];
    }

    double forward(const std::vector<double>& x, Cache& cache) const {
        return forward(x.data(), x.size(), cache);
    }

    double forward(const std::vector<double>& x) const {
        Cache scratch;
        return forward(x.data(), x.size(), scratch);
    }

    Gradients make_gradients() const {
        Gradients g;
        for (const Layer& l : layers_) {
            Layer gl;
            gl.in = l.in;
            gl.out = l.out;
            gl.weights.assign(l.weights.size(), 0.0);
            gl.bias.assign(l.bias.size(), 0.0);
            g.layers.push_back(std::move(gl));
        }
        g.input.assign(input_width(), 0.0);
        return g;
    }

    // Accumulates exact reverse-mode gradients into `grads` (+=), including
    // dL/dx. The cache must come from a forward() over the same parameters.
    void backward(Cache& cache, double d_output, Gradients& grads) const {
        if (!cache.valid || cache.activations.size() != layers_.size() + 1)
            throw ContractError("stale or mismatched MLP cache");
        double* delta = cache.delta.data();
        double* prev = cache.prev_delta.data();
        delta[0] = d_output;
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const Layer& l = layers_[li];
            Layer& gl = grads.layers[li];
            const double* input_act = cache.activations[li].data();
            const bool output_layer = li + 1 == layers_.size();
            if (!output_layer) {
                const double* pre = cache.pre[li].data();
                for (std::uint32_t o = 0; o < l.out; ++o)
                    if (pre[o] <= 0.0) delta[o] = 0.0;  // ReLU gate
            }
            for (std::uint32_t i = 0; i < l.in; ++i) prev[i] = 0.0;
            for (std::uint32_t o = 0; o < l.out; ++o) {
                const double d = delta[o];
                gl.bias[o] += d;
                if (d == 0.0) continue;
                const double* w = &l.weights[static_cast<std::size_t>(o) * l.in];
                double* gw = &gl.weights[static_cast<std::size_t>(o) * l.in];
                for (std::uint32_t i = 0; i < l.in; ++i) {
                    gw[i] += d * input_act[i];
                    prev[i] += d * w[i];
                }
            }
            std::swap(delta, prev);
        }
        for (std::size_t i = 0; i < grads.input.size(); ++i) grads.input[i] += delta[i];
    }

private:
    std::vector<Layer> layers_;
};

// loss = (pred - target)^2, d/dpred = 2 (pred - target).
inline std::pair<double, double> mse_loss(double pred, double target) {
    const double e = pred - target;
    return {e * e, 2.0 * e};
}

}  // namespace odf
