// Fixed-function input encoders: positional encoding, Fourier feature
// mapping, and real spherical harmonics. The learnable grid encoders live in
// feature_grid.hpp.
#pragma once

#include <cstdint>
#include <vector>

#include "odf/errors.hpp"
#include "odf/math.hpp"
#include "odf/rng.hpp"

namespace odf {

// ---------------------------------------------------------------------------
// Positional encoding: per coordinate, [sin(2^j x), cos(2^j x)] for
// j = 0..n_freq-1 (no pi scaling). Layout is coordinate-major:
//   [sin(2^0 x0), cos(2^0 x0), sin(2^1 x0), ..., sin(2^0 x1), ...]
// ---------------------------------------------------------------------------

struct PeConfig {
    std::uint32_t n_freq = 6;

    std::size_t output_dim(std::size_t input_dim) const { return 2u * n_freq * input_dim; }
};

inline void pe_encode(const double* x, std::size_t dim, const PeConfig& cfg, double* out) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < dim; ++c) {
        double scaled = x[c];
        for (std::uint32_t f = 0; f < cfg.n_freq; ++f) {
            out[k++] = std::sin(scaled);
            out[k++] = std::cos(scaled);
            scaled *= 2.0;
        }
    }
}

inline std::vector<double> pe_encode(const std::vector<double>& x, const PeConfig& cfg) {
    std::vector<double> out(cfg.output_dim(x.size()));
    pe_encode(x.data(), x.size(), cfg, out.data());
    return out;
}

// ---------------------------------------------------------------------------
// Fourier feature mapping: [sin(2 pi B p), cos(2 pi B p)] with a fixed
// Gaussian matrix B (std sigma), drawn once from the seed and immutable
// afterwards. B is serialized with the model, so files do not depend on the
// generator.
// ---------------------------------------------------------------------------

struct FfmConfig {
    std::uint32_t n_features = 128;  // rows of B
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::uint32_t input_dim = 3;
    std::vector<double> matrix;  // row-major [n_features][input_dim]

    std::size_t output_dim() const { return 2u * n_features; }

    static FfmConfig create(std::uint32_t n_features, double sigma, std::uint64_t seed,
                            std::uint32_t input_dim = 3) {
        FfmConfig cfg;
        cfg.n_features = n_features;
        cfg.sigma = sigma;
        cfg.seed = seed;
        cfg.input_dim = input_dim;
        Rng rng(splitmix64(seed ^ 0xFF51AFD7ED558CCDull));
        cfg.matrix.resize(static_cast<std::size_t>(n_features) * input_dim);
        for (double& m : cfg.matrix) m = sigma * rng.normal();
        return cfg;
    }
};

inline void ffm_encode(const double* p, const FfmConfig& cfg, double* out) {
    for (std::uint32_t r = 0; r < cfg.n_features; ++r) {
        const double* row = &cfg.matrix[static_cast<std::size_t>(r) * cfg.input_dim];
        double acc = 0.0;
        for (std::uint32_t c = 0; c < cfg.input_dim; ++c) acc += row[c] * p[c];
        const double a = 2.0 * kPi * acc;
        out[r] = std::sin(a);
        out[cfg.n_features + r] = std::cos(a);
    }
}

inline std::vector<double> ffm_encode(const std::vector<double>& p, const FfmConfig& cfg) {
    if (p.size() != cfg.input_dim) throw ContractError("FFM input dimension mismatch");
    std::vector<double> out(cfg.output_dim());
    ffm_encode(p.data(), cfg, out.data());
    return out;
}

// ---------------------------------------------------------------------------
// Real spherical harmonics up to degree 16, evaluated with the normalized
// associated-Legendre recurrence (stable; no factorials). Basis ordering is
// index = l (l+1) + m for m in [-l, l]. Convention: z-up polar axis,
//   y_{l,0}  =  K_{l,0} P_l^0(cos theta)
//   y_{l,m}  =  sqrt(2) K_{l,m} cos(m phi) P_l^m(cos theta),  m > 0
//   y_{l,-m} =  sqrt(2) K_{l,m} sin(m phi) P_l^m(cos theta),  m > 0
// with Condon-Shortley phase folded into P.
// ---------------------------------------------------------------------------

struct ShConfig {
    std::uint32_t degree = 2;  // l_max

    std::size_t output_dim() const { return static_cast<std::size_t>(degree + 1) * (degree + 1); }
};

inline constexpr std::uint32_t kShMaxDegree = 16;

inline void sh_encode(const Vec3& d, const ShConfig& cfg, double* out) {
    if (cfg.degree > kShMaxDegree)
        throw InputError("unsupported SH degree " + std::to_string(cfg.degree) +
                         " (max " + std::to_string(kShMaxDegree) + ")");
    const double n = norm(d);
    if (std::abs(n - 1.0) > kUnitDirTolerance) throw ContractError("sh_encode requires a unit direction");
    const std::uint32_t lmax = cfg.degree;
    const double ct = std::clamp(d.z, -1.0, 1.0);        // cos(theta)
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));  // sin(theta)
    const double phi = std::atan2(d.y, d.x);

    // Fully-normalized associated Legendre N_l^m = K_{l,m} P_l^m(ct), built by
    //   N_m^m   = -sqrt((2m+1)/(2m)) * st * N_{m-1}^{m-1}
    //   N_{m+1}^m = ct * sqrt(2m+3) * N_m^m
    //   N_l^m   = a_l^m (ct N_{l-1}^m - b N_{l-2}^m)   (standard three-term)
    constexpr std::uint32_t stride = kShMaxDegree + 1;
    const auto idx = [](std::uint32_t l, std::uint32_t m) { return l * stride + m; };
    double nlm[stride * stride];
    nlm[idx(0, 0)] = std::sqrt(1.0 / (4.0 * kPi));
    for (std::uint32_t m = 1; m <= lmax; ++m) {
        const double f = -std::sqrt((2.0 * m + 1.0) / (2.0 * m));
        nlm[idx(m, m)] = f * st * nlm[idx(m - 1, m - 1)];
    }
    for (std::uint32_t m = 0; m < lmax; ++m)
        nlm[idx(m + 1, m)] = ct * std::sqrt(2.0 * m + 3.0) * nlm[idx(m, m)];
    for (std::uint32_t m = 0; m <= lmax; ++m) {
        for (std::uint32_t l = m + 2; l <= lmax; ++l) {
            const double ld = l, md = m;
            const double a = std::sqrt((4.0 * ld * ld - 1.0) / (ld * ld - md * md));
            const double b = std::sqrt(((ld - 1.0) * (ld - 1.0) - md * md) / (4.0 * (ld - 1.0) * (ld - 1.0) - 1.0));
            nlm[idx(l, m)] = a * (ct * nlm[idx(l - 1, m)] - b * nlm[idx(l - 2, m)]);
        }
    }

    // Assemble the real basis; cos/sin(m phi) by incremental recurrence.
    double cos_m[stride], sin_m[stride];
    cos_m[0] = 1.0;
    sin_m[0] = 0.0;
    if (lmax >= 1) {
        cos_m[1] = std::cos(phi);
        sin_m[1] = std::sin(phi);
        for (std::uint32_t m = 2; m <= lmax; ++m) {
            cos_m[m] = 2.0 * cos_m[1] * cos_m[m - 1] - cos_m[m - 2];
            sin_m[m] = 2.0 * cos_m[1] * sin_m[m - 1] - sin_m[m - 2];
        }
    }
    const double sqrt2 = std::sqrt(2.0);
    for (std::uint32_t l = 0; l <= lmax; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * (l + 1);
        out[base] = nlm[idx(l, 0)];
        for (std::uint32_t m = 1; m <= l; ++m) {
            const double v = sqrt2 * nlm[idx(l, m)];
            out[base + m] = v * cos_m[m];
            out[base - m] = v * sin_m[m];
        }
    }
}

inline std::vector<double> sh_encode(const Vec3& d, const ShConfig& cfg) {
    std::vector<double> out(cfg.output_dim());
    sh_encode(d, cfg, out.data());
    return out;
}

}  // namespace odf
