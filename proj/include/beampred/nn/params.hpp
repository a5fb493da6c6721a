// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace beampred::nn
{

struct Parameter
{
    std::string name;
    Tensor value; // value.grad holds the accumulated gradient
    std::vector<double> adam_m;
    std::vector<double> adam_v;
};

// Non-learnable state, e.g. batch-norm running statistics.
struct Buffer
{
    std::string name;
    Tensor value;
};

// Every array of a model in declaration order. Layers refer to entries by
// index, so models stay copyable.
class ParamStore
{
  public:
    std::size_t add_parameter(std::string name, Shape shape)
    {
        Parameter p;
        p.name = std::move(name);
        p.value = Tensor(std::move(shape));
        p.value.enable_grad();
        p.adam_m.assign(p.value.size(), 0.0);
        p.adam_v.assign(p.value.size(), 0.0);
        params_.push_back(std::move(p));
        return params_.size() - 1;
    }

    std::size_t add_buffer(std::string name, Shape shape, double fill)
    {
        buffers_.push_back({std::move(name), Tensor(std::move(shape), fill)});
        return buffers_.size() - 1;
    }

    Parameter &param(std::size_t i) { return params_.at(i); }
    const Parameter &param(std::size_t i) const { return params_.at(i); }
    Buffer &buffer(std::size_t i) { return buffers_.at(i); }
    const Buffer &buffer(std::size_t i) const { return buffers_.at(i); }

    std::vector<Parameter> &params() { return params_; }
    const std::vector<Parameter> &params() const { return params_; }
    std::vector<Buffer> &buffers() { return buffers_; }
    const std::vector<Buffer> &buffers() const { return buffers_; }

    std::size_t num_scalars() const
    {
        std::size_t n = 0;
        for (const auto &p : params_)
            n += p.value.size();
        return n;
    }

    void zero_grad()
    {
        for (auto &p : params_)
            p.value.zero_grad();
    }

    // Optimizer step counter, persisted with checkpoints.
    std::uint64_t step = 0;

  private:
    std::vector<Parameter> params_;
    std::vector<Buffer> buffers_;
};

inline void init_uniform(Tensor &t, double bound, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> d(-bound, bound);
    for (double &v : t.data)
        v = d(rng);
}

} // namespace beampred::nn
