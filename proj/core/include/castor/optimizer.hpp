#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "castor/random.hpp"
#include "castor/tensor.hpp"

namespace castor {

// Bias-corrected Adam over a flat list of parameter tensors.  Moments are
// allocated lazily on the first step so the state can be declared before the
// parameter shapes are known.
template <typename T>
struct AdamState {
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
};

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>*>& grads,
               AdamState<T>& state) {
    if (params.size() != grads.size()) {
        throw ShapeMismatch("adam_step: parameter and gradient counts differ");
    }
    if (state.t == 0 && state.m.empty()) {
        for (const Tensor<T>* p : params) {
            state.m.push_back(Tensor<T>::zeros(p->shape));
            state.v.push_back(Tensor<T>::zeros(p->shape));
        }
    }
    if (state.m.size() != params.size()) {
        throw ShapeMismatch("adam_step: state was initialized for a different parameter list");
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<T>& param = *params[p];
        const Tensor<T>& grad = *grads[p];
        if (!param.same_shape(grad) || !param.same_shape(state.m[p])) {
            throw ShapeMismatch("adam_step: shape mismatch at parameter " + std::to_string(p));
        }
        T* mp = state.m[p].data.data();
        T* vp = state.v[p].data.data();
        T* w = param.data.data();
        const T* g = grad.data.data();
        const auto b1 = static_cast<T>(state.beta1);
        const auto b2 = static_cast<T>(state.beta2);
        for (std::size_t i = 0; i < param.data.size(); ++i) {
            mp[i] = b1 * mp[i] + (T(1) - b1) * g[i];
            vp[i] = b2 * vp[i] + (T(1) - b2) * g[i] * g[i];
            double mhat = static_cast<double>(mp[i]) / bc1;
            double vhat = static_cast<double>(vp[i]) / bc2;
            w[i] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

// Scale all gradients so their joint L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename T>
double clip_by_global_norm(const std::vector<Tensor<T>*>& grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor<T>* g : grads) {
        for (T v : g->data) sq += static_cast<double>(v) * static_cast<double>(v);
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        auto scale = static_cast<T>(max_norm / norm);
        for (Tensor<T>* g : grads) {
            for (T& v : g->data) v *= scale;
        }
    }
    return norm;
}

enum class InitScheme { UniformScaled, Zeros, Ones };

// Deterministic parameter initialization.  UniformScaled draws from
// ±1/sqrt(fan_in), where fan_in is the product of all dimensions except the
// last (the row count for a weight matrix).
template <typename T>
Tensor<T> seeded_init(std::vector<std::size_t> shape, InitScheme scheme, std::uint64_t seed) {
    switch (scheme) {
        case InitScheme::Zeros:
            return Tensor<T>::zeros(std::move(shape));
        case InitScheme::Ones:
            return Tensor<T>::full(std::move(shape), T(1));
        case InitScheme::UniformScaled: {
            std::size_t numel = Tensor<T>::numel_of(shape);
            std::size_t last = shape.empty() ? 1 : shape.back();
            std::size_t fan_in = shape.empty() ? 1 : std::max<std::size_t>(1, numel / last);
            double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            RandomEngine engine(seed);
            Tensor<T> out = Tensor<T>::zeros(std::move(shape));
            for (T& v : out.data) v = static_cast<T>(engine.uniform_real(-bound, bound));
            return out;
        }
    }
    throw std::invalid_argument("unhandled init scheme");
}

}  // namespace castor
