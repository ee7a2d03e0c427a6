#pragma once

#include <cmath>
#include <cstdint>

#include "aesc/nn/network.hpp"

namespace aesc::nn {

template <typename T>
struct AdamState {
    std::uint64_t step = 0;
    ParamSet<T> m;
    ParamSet<T> v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const ParamSet<T>& params, double lr = 1e-3) {
        AdamState s;
        s.m = params.zeros_like();
        s.v = params.zeros_like();
        s.lr = lr;
        return s;
    }
};

// One bias-corrected Adam update. Moments are kept in T, the update itself is
// evaluated in double. A non-finite gradient aborts before anything is touched.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state) {
    if (grads.entries.size() != params.entries.size() || state.m.entries.size() != params.entries.size())
        throw ShapeError("adam_step: parameter, gradient and moment sets differ in size");
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        if (grads.entries[i].tensor.shape() != params.entries[i].tensor.shape())
            throw ShapeError("adam_step: gradient shape mismatch for " + params.entries[i].name);
        if (!grads.entries[i].tensor.all_finite())
            throw DivergenceError("non-finite gradient for parameter " + params.entries[i].name);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        auto p = params.entries[i].tensor.data();
        auto g = grads.entries[i].tensor.data();
        auto m = state.m.entries[i].tensor.data();
        auto v = state.v.entries[i].tensor.data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
            const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            p[j] = static_cast<T>(p[j] - state.lr * (mj / c1) / (std::sqrt(vj / c2) + state.eps));
        }
    }
}

} // namespace aesc::nn
