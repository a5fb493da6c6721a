// SPDX-License-Identifier: Apache-2.0
//
// Layers with explicit forward caches. A layer may be applied several times
// per pass (shared parameters); each application keeps its own cache and
// backward() accumulates into the shared gradient slots.

#pragma once

#include "params.hpp"
#include "tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace beampred::nn
{

enum class Mode
{
    train,
    infer
};

enum class LayerKind : std::uint32_t
{
    batch_norm = 0,
    conv1d = 1,
    relu = 2,
    max_pool = 3,
    lstm = 4,
    fully_connected = 5,
    softmax = 6
};

inline std::string to_string(LayerKind k)
{
    switch (k)
    {
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::lstm: return "lstm";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::softmax: return "softmax";
    }
    return "unknown";
}

struct LayerSpec
{
    LayerKind kind = LayerKind::relu;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_size = 0; // conv only
    std::size_t stride = 1;      // conv only
    std::size_t padding = 0;     // conv only, zeros on both ends

    bool operator==(const LayerSpec &) const = default;
};

inline void require_cache(bool valid, const char *layer)
{
    if (!valid)
        throw std::logic_error(std::string(layer) + ": backward called without a recorded forward pass");
}

// ----- batch normalisation over (batch, channel, length) -------------------

class BatchNorm1d
{
  public:
    struct Cache
    {
        bool valid = false;
        Mat xhat; // (N, C*L)
        std::vector<double> inv_std;
        std::size_t n = 0, c = 0, l = 0;
    };

    static constexpr double eps = 1e-5;
    static constexpr double momentum = 0.1;

    BatchNorm1d() = default;
    BatchNorm1d(ParamStore &store, const std::string &name, std::size_t channels) : channels_(channels)
    {
        gamma_ = store.add_parameter(name + ".scale", {channels});
        beta_ = store.add_parameter(name + ".shift", {channels});
        std::fill(store.param(gamma_).value.data.begin(), store.param(gamma_).value.data.end(), 1.0);
        mean_ = store.add_buffer(name + ".running_mean", {channels}, 0.0);
        var_ = store.add_buffer(name + ".running_var", {channels}, 1.0);
    }

    std::size_t channels() const { return channels_; }
    std::size_t scale_index() const { return gamma_; }
    std::size_t shift_index() const { return beta_; }

    Tensor forward(ParamStore &store, const Tensor &x, Mode mode, Cache *cache, bool update_running = true) const
    {
        if (x.rank() != 3 || x.dim(1) != channels_)
            throw std::invalid_argument("batch_norm: expected (batch, " + std::to_string(channels_) + ", length), got " +
                                        shape_string(x.shape));
        const std::size_t n = x.dim(0), c = x.dim(1), l = x.dim(2);
        if (n == 0)
            throw std::invalid_argument("batch_norm: empty batch");
        const auto &gamma = store.param(gamma_).value.data;
        const auto &beta = store.param(beta_).value.data;
        auto &rmean = store.buffer(mean_).value.data;
        auto &rvar = store.buffer(var_).value.data;

        Tensor y(x.shape);
        std::vector<double> inv_std(c);
        Mat xhat;
        if (cache)
            xhat.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c * l));
        const double count = static_cast<double>(n * l);
        for (std::size_t ch = 0; ch < c; ++ch)
        {
            double mean = 0.0, var = 0.0;
            if (mode == Mode::train)
            {
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t k = 0; k < l; ++k)
                        mean += x.data[(b * c + ch) * l + k];
                mean /= count;
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t k = 0; k < l; ++k)
                    {
                        const double d = x.data[(b * c + ch) * l + k] - mean;
                        var += d * d;
                    }
                var /= count;
                if (update_running)
                {
                    const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
                    rmean[ch] = (1.0 - momentum) * rmean[ch] + momentum * mean;
                    rvar[ch] = (1.0 - momentum) * rvar[ch] + momentum * unbiased;
                }
            }
            else
            {
                mean = rmean[ch];
                var = rvar[ch];
            }
            inv_std[ch] = 1.0 / std::sqrt(var + eps);
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < l; ++k)
                {
                    const std::size_t idx = (b * c + ch) * l + k;
                    const double xh = (x.data[idx] - mean) * inv_std[ch];
                    if (cache)
                        xhat(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(ch * l + k)) = xh;
                    y.data[idx] = gamma[ch] * xh + beta[ch];
                }
        }
        if (cache)
        {
            cache->valid = mode == Mode::train;
            cache->xhat = std::move(xhat);
            cache->inv_std = std::move(inv_std);
            cache->n = n;
            cache->c = c;
            cache->l = l;
        }
        return y;
    }

    // Train-mode backward (batch statistics depend on the input).
    Tensor backward(ParamStore &store, const Cache &cache, const Tensor &dy) const
    {
        require_cache(cache.valid, "batch_norm");
        const std::size_t n = cache.n, c = cache.c, l = cache.l;
        auto &gamma = store.param(gamma_).value;
        auto &beta = store.param(beta_).value;
        Tensor dx(dy.shape);
        const double count = static_cast<double>(n * l);
        for (std::size_t ch = 0; ch < c; ++ch)
        {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < l; ++k)
                {
                    const double g = dy.data[(b * c + ch) * l + k];
                    sum_dy += g;
                    sum_dy_xhat += g * cache.xhat(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(ch * l + k));
                }
            gamma.grad[ch] += sum_dy_xhat;
            beta.grad[ch] += sum_dy;
            const double scale = gamma.data[ch] * cache.inv_std[ch] / count;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < l; ++k)
                {
                    const std::size_t idx = (b * c + ch) * l + k;
                    const double xh = cache.xhat(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(ch * l + k));
                    dx.data[idx] = scale * (count * dy.data[idx] - sum_dy - xh * sum_dy_xhat);
                }
        }
        return dx;
    }

  private:
    std::size_t channels_ = 0;
    std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
};

// ----- 1-D convolution (cross-correlation, no kernel flip) ------------------

inline std::size_t conv_output_length(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t padding)
{
    const std::size_t padded = length + 2 * padding;
    if (padded < kernel)
        throw std::invalid_argument("conv1d: input length " + std::to_string(length) + " shorter than kernel " +
                                    std::to_string(kernel));
    return (padded - kernel) / stride + 1;
}

class Conv1d
{
  public:
    struct Cache
    {
        bool valid = false;
        Mat cols; // (N*L_out, C_in*K)
        std::size_t n = 0, l = 0, l_out = 0;
    };

    Conv1d() = default;
    Conv1d(ParamStore &store, const std::string &name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
           std::size_t stride, std::size_t padding = 0)
        : in_(in_ch), out_(out_ch), k_(kernel), s_(stride), p_(padding)
    {
        if (kernel < 1 || stride < 1 || in_ch < 1 || out_ch < 1)
            throw std::invalid_argument("conv1d: channels, kernel and stride must be positive");
        w_ = store.add_parameter(name + ".kernel", {out_ch, in_ch, kernel});
        b_ = store.add_parameter(name + ".bias", {out_ch});
    }

    std::size_t weight_index() const { return w_; }
    std::size_t bias_index() const { return b_; }
    std::size_t fan_in() const { return in_ * k_; }
    std::size_t output_length(std::size_t l) const { return conv_output_length(l, k_, s_, p_); }

    Tensor forward(ParamStore &store, const Tensor &x, Cache *cache) const
    {
        if (x.rank() != 3 || x.dim(1) != in_)
            throw std::invalid_argument("conv1d: expected (batch, " + std::to_string(in_) + ", length), got " +
                                        shape_string(x.shape));
        const std::size_t n = x.dim(0), l = x.dim(2);
        const std::size_t l_out = output_length(l);
        const auto rows = static_cast<Eigen::Index>(n * l_out);
        const auto width = static_cast<Eigen::Index>(in_ * k_);
        Mat cols = Mat::Zero(rows, width);
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t o = 0; o < l_out; ++o)
                for (std::size_t ci = 0; ci < in_; ++ci)
                    for (std::size_t k = 0; k < k_; ++k)
                    {
                        const auto pos = static_cast<long long>(o * s_ + k) - static_cast<long long>(p_);
                        if (pos < 0 || pos >= static_cast<long long>(l))
                            continue;
                        cols(static_cast<Eigen::Index>(b * l_out + o), static_cast<Eigen::Index>(ci * k_ + k)) =
                            x.data[(b * in_ + ci) * l + static_cast<std::size_t>(pos)];
                    }
        const auto &w = store.param(w_).value;
        const auto &bias = store.param(b_).value;
        const ConstMatMap wm(w.data.data(), static_cast<Eigen::Index>(out_), width);
        const Eigen::Map<const Eigen::RowVectorXd> bv(bias.data.data(), static_cast<Eigen::Index>(out_));
        Mat yr = cols * wm.transpose();
        yr.rowwise() += bv;

        Tensor y({n, out_, l_out});
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t co = 0; co < out_; ++co)
                for (std::size_t o = 0; o < l_out; ++o)
                    y.data[(b * out_ + co) * l_out + o] =
                        yr(static_cast<Eigen::Index>(b * l_out + o), static_cast<Eigen::Index>(co));
        if (cache)
        {
            cache->valid = true;
            cache->cols = std::move(cols);
            cache->n = n;
            cache->l = l;
            cache->l_out = l_out;
        }
        return y;
    }

    Tensor backward(ParamStore &store, const Cache &cache, const Tensor &dy) const
    {
        require_cache(cache.valid, "conv1d");
        const std::size_t n = cache.n, l = cache.l, l_out = cache.l_out;
        const auto rows = static_cast<Eigen::Index>(n * l_out);
        const auto width = static_cast<Eigen::Index>(in_ * k_);
        Mat dyr(rows, static_cast<Eigen::Index>(out_));
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t co = 0; co < out_; ++co)
                for (std::size_t o = 0; o < l_out; ++o)
                    dyr(static_cast<Eigen::Index>(b * l_out + o), static_cast<Eigen::Index>(co)) =
                        dy.data[(b * out_ + co) * l_out + o];

        auto &w = store.param(w_).value;
        auto &bias = store.param(b_).value;
        MatMap dw(w.grad.data(), static_cast<Eigen::Index>(out_), width);
        dw.noalias() += dyr.transpose() * cache.cols;
        Eigen::Map<Eigen::RowVectorXd> db(bias.grad.data(), static_cast<Eigen::Index>(out_));
        db += dyr.colwise().sum();

        const ConstMatMap wm(w.data.data(), static_cast<Eigen::Index>(out_), width);
        const Mat dcols = dyr * wm;
        Tensor dx({n, in_, l});
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t o = 0; o < l_out; ++o)
                for (std::size_t ci = 0; ci < in_; ++ci)
                    for (std::size_t k = 0; k < k_; ++k)
                    {
                        const auto pos = static_cast<long long>(o * s_ + k) - static_cast<long long>(p_);
                        if (pos < 0 || pos >= static_cast<long long>(l))
                            continue;
                        dx.data[(b * in_ + ci) * l + static_cast<std::size_t>(pos)] +=
                            dcols(static_cast<Eigen::Index>(b * l_out + o), static_cast<Eigen::Index>(ci * k_ + k));
                    }
        return dx;
    }

  private:
    std::size_t in_ = 0, out_ = 0, k_ = 0, s_ = 1, p_ = 0;
    std::size_t w_ = 0, b_ = 0;
};

// ----- element-wise ---------------------------------------------------------

class Relu
{
  public:
    struct Cache
    {
        bool valid = false;
        std::vector<unsigned char> mask;
    };

    Tensor forward(const Tensor &x, Cache *cache) const
    {
        Tensor y(x.shape);
        if (cache)
            cache->mask.assign(x.size(), 0);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const bool on = x.data[i] > 0.0;
            y.data[i] = on ? x.data[i] : 0.0;
            if (cache)
                cache->mask[i] = on;
        }
        if (cache)
            cache->valid = true;
        return y;
    }

    Tensor backward(const Cache &cache, const Tensor &dy) const
    {
        require_cache(cache.valid, "relu");
        Tensor dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data[i] = cache.mask[i] ? dy.data[i] : 0.0;
        return dx;
    }
};

// Max over the whole remaining length: (N, C, L) -> (N, C).
class GlobalMaxPool
{
  public:
    struct Cache
    {
        bool valid = false;
        std::vector<std::size_t> argmax;
        std::size_t l = 0;
    };

    Tensor forward(const Tensor &x, Cache *cache) const
    {
        if (x.rank() != 3 || x.dim(2) == 0)
            throw std::invalid_argument("max_pool: expected (batch, channels, length), got " + shape_string(x.shape));
        const std::size_t n = x.dim(0), c = x.dim(1), l = x.dim(2);
        Tensor y({n, c});
        if (cache)
            cache->argmax.assign(n * c, 0);
        for (std::size_t i = 0; i < n * c; ++i)
        {
            std::size_t best = 0;
            for (std::size_t k = 1; k < l; ++k)
                if (x.data[i * l + k] > x.data[i * l + best])
                    best = k;
            y.data[i] = x.data[i * l + best];
            if (cache)
                cache->argmax[i] = best;
        }
        if (cache)
        {
            cache->valid = true;
            cache->l = l;
        }
        return y;
    }

    Tensor backward(const Cache &cache, const Tensor &dy) const
    {
        require_cache(cache.valid, "max_pool");
        const std::size_t l = cache.l;
        Tensor dx({dy.dim(0), dy.dim(1), l});
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data[i * l + cache.argmax[i]] = dy.data[i];
        return dx;
    }
};

// ----- fully connected: y = x W^T + b, W is (out, in) -----------------------

class Dense
{
  public:
    struct Cache
    {
        bool valid = false;
        Mat x;
    };

    Dense() = default;
    Dense(ParamStore &store, const std::string &name, std::size_t in, std::size_t out) : in_(in), out_(out)
    {
        w_ = store.add_parameter(name + ".weight", {out, in});
        b_ = store.add_parameter(name + ".bias", {out});
    }

    std::size_t in_features() const { return in_; }
    std::size_t out_features() const { return out_; }
    std::size_t weight_index() const { return w_; }
    std::size_t bias_index() const { return b_; }

    Mat forward(const ParamStore &store, const Mat &x, Cache *cache) const
    {
        if (static_cast<std::size_t>(x.cols()) != in_)
            throw std::invalid_argument("fully_connected: expected " + std::to_string(in_) + " input features, got " +
                                        std::to_string(x.cols()));
        const auto &w = store.param(w_).value;
        const auto &b = store.param(b_).value;
        const ConstMatMap wm(w.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        const Eigen::Map<const Eigen::RowVectorXd> bv(b.data.data(), static_cast<Eigen::Index>(out_));
        Mat y = x * wm.transpose();
        y.rowwise() += bv;
        if (cache)
        {
            cache->valid = true;
            cache->x = x;
        }
        return y;
    }

    Mat backward(ParamStore &store, const Cache &cache, const Mat &dy) const
    {
        require_cache(cache.valid, "fully_connected");
        auto &w = store.param(w_).value;
        auto &b = store.param(b_).value;
        MatMap dw(w.grad.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        dw.noalias() += dy.transpose() * cache.x;
        Eigen::Map<Eigen::RowVectorXd> db(b.grad.data(), static_cast<Eigen::Index>(out_));
        db += dy.colwise().sum();
        const ConstMatMap wm(w.data.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        return dy * wm;
    }

  private:
    std::size_t in_ = 0, out_ = 0;
    std::size_t w_ = 0, b_ = 0;
};

} // namespace beampred::nn
