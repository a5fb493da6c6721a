// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "params.hpp"

#include <cmath>
#include <stdexcept>

namespace beampred::nn
{

struct AdamSettings
{
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update at step t (1-based) using the gradients
// currently accumulated in the store.
inline void adam_step(ParamStore &store, const AdamSettings &s, std::uint64_t t)
{
    if (t < 1)
        throw std::invalid_argument("adam_step: step index starts at 1");
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
    for (auto &p : store.params())
    {
        auto &w = p.value.data;
        const auto &g = p.value.grad;
        for (std::size_t i = 0; i < w.size(); ++i)
        {
            p.adam_m[i] = s.beta1 * p.adam_m[i] + (1.0 - s.beta1) * g[i];
            p.adam_v[i] = s.beta2 * p.adam_v[i] + (1.0 - s.beta2) * g[i] * g[i];
            const double mhat = p.adam_m[i] / c1;
            const double vhat = p.adam_v[i] / c2;
            w[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
        }
    }
    store.step = t;
}

// Advances the store's own step counter.
inline void adam_step(ParamStore &store, const AdamSettings &s) { adam_step(store, s, store.step + 1); }

} // namespace beampred::nn
