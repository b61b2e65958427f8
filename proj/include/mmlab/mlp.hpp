#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mmlab/error.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

// Fully-connected network: rectifier hidden layers, identity output. Weights
// are plain row-major vectors so the same struct doubles as a gradient
// container.
struct MLPParams {
    std::vector<int> dims;                  // e.g. {5, 64, 64, 4}
    std::vector<std::vector<double>> w;     // w[l]: dims[l+1] x dims[l]
    std::vector<std::vector<double>> b;     // b[l]: dims[l+1]

    std::size_t layers() const { return w.size(); }

    static MLPParams zeros(std::vector<int> dims) {
        MLPParams p;
        p.dims = std::move(dims);
        if (p.dims.size() < 2) raise(Errc::bad_config, "need at least input and output dims");
        for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
            p.w.emplace_back(static_cast<std::size_t>(p.dims[l + 1]) * p.dims[l], 0.0);
            p.b.emplace_back(static_cast<std::size_t>(p.dims[l + 1]), 0.0);
        }
        return p;
    }

    // He-scaled normal init for rectifier nets; biases start at zero.
    static MLPParams he_init(std::vector<int> dims, std::uint64_t seed) {
        MLPParams p = zeros(std::move(dims));
        Rng rng(derive_seed(seed, 0x11E1));
        for (std::size_t l = 0; l < p.layers(); ++l) {
            const double scale = std::sqrt(2.0 / static_cast<double>(p.dims[l]));
            for (double& v : p.w[l]) v = rng.normal() * scale;
        }
        return p;
    }

    bool same_shape(const MLPParams& o) const { return dims == o.dims; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layers(); ++l) n += w[l].size() + b[l].size();
        return n;
    }

    // flat parameter view, used by the finite-difference tests
    double& param(std::size_t idx) {
        for (std::size_t l = 0; l < layers(); ++l) {
            if (idx < w[l].size()) return w[l][idx];
            idx -= w[l].size();
            if (idx < b[l].size()) return b[l][idx];
            idx -= b[l].size();
        }
        raise(Errc::shape_mismatch, "parameter index out of range");
    }
};

namespace detail {

inline void affine(const std::vector<double>& w, const std::vector<double>& b,
                   std::span<const double> x, std::vector<double>& out) {
    const std::size_t rows = b.size();
    const std::size_t cols = x.size();
    out.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = b[i];
        const double* wrow = w.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * x[j];
        out[i] = acc;
    }
}

}  // namespace detail

// Activations of every layer, kept for backprop. act[0] is the input.
struct ForwardTrace {
    std::vector<std::vector<double>> act;
};

inline std::vector<double> forward_trace(const MLPParams& p, std::span<const double> x,
                                         ForwardTrace& trace) {
    if (static_cast<int>(x.size()) != p.dims.front())
        raise(Errc::dimension_mismatch, "input size " + format_int(static_cast<std::int64_t>(x.size())) +
                                            " != " + format_int(p.dims.front()));
    trace.act.assign(p.layers() + 1, {});
    trace.act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < p.layers(); ++l) {
        detail::affine(p.w[l], p.b[l], trace.act[l], trace.act[l + 1]);
        if (l + 1 < p.layers())
            for (double& v : trace.act[l + 1]) v = std::max(0.0, v);
    }
    return trace.act.back();
}

inline std::vector<double> forward(const MLPParams& p, std::span<const double> x) {
    ForwardTrace trace;
    return forward_trace(p, x, trace);
}

// theta <- theta - alpha * grad, plain SGD
inline void sgd_apply(MLPParams& params, const MLPParams& grad, double alpha) {
    if (!params.same_shape(grad)) raise(Errc::shape_mismatch, "gradient shape mismatch");
    for (std::size_t l = 0; l < params.layers(); ++l) {
        for (std::size_t i = 0; i < params.w[l].size(); ++i) params.w[l][i] -= alpha * grad.w[l][i];
        for (std::size_t i = 0; i < params.b[l].size(); ++i) params.b[l][i] -= alpha * grad.b[l][i];
    }
}

// Polyak averaging: target <- (1 - tau) * target + tau * value
inline void soft_update(MLPParams& target, const MLPParams& value, double tau) {
    if (!target.same_shape(value)) raise(Errc::shape_mismatch, "target shape mismatch");
    for (std::size_t l = 0; l < target.layers(); ++l) {
        for (std::size_t i = 0; i < target.w[l].size(); ++i)
            target.w[l][i] = (1.0 - tau) * target.w[l][i] + tau * value.w[l][i];
        for (std::size_t i = 0; i < target.b[l].size(); ++i)
            target.b[l][i] = (1.0 - tau) * target.b[l][i] + tau * value.b[l][i];
    }
}

}  // namespace mmlab
