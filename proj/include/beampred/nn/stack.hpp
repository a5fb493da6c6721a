// SPDX-License-Identifier: Apache-2.0
//
// Layer-stack description and the convolutional feature extractor shared by
// the recurrent predictor and the single-snapshot baseline.

#pragma once

#include "layers.hpp"
#include "lstm.hpp"

#include <optional>
#include <random>
#include <variant>

namespace beampred::nn
{

struct StackWidths
{
    std::size_t input_channels = 2;
    std::size_t conv1_channels = 64;
    std::size_t conv2_channels = 256;
    std::size_t hidden = 256;
    std::size_t classes = 32;
};

enum class StackVariant
{
    spanning, // conv 1 zero-padded by one bin, conv 2 kernel 3: one output position sees all 8 bins
    padded,   // conv 1 zero-padded by one bin, conv 2 stride 1, pool over 3 positions
    table     // the unpadded k3/s3 + k1/s3 shapes; on 8 bins only bins 0..2 survive
};

inline StackVariant parse_stack_variant(const std::string &s)
{
    if (s == "spanning")
        return StackVariant::spanning;
    if (s == "padded")
        return StackVariant::padded;
    if (s == "table")
        return StackVariant::table;
    throw std::invalid_argument("unknown layer stack '" + s + "' (expected spanning, padded or table)");
}

inline std::string to_string(StackVariant v)
{
    switch (v)
    {
    case StackVariant::spanning:
        return "spanning";
    case StackVariant::padded:
        return "padded";
    case StackVariant::table:
        break;
    }
    return "table";
}

// BN(2) -> Conv(2->64, k3, s3) -> ReLU -> Conv(64->256, k1, s3) -> ReLU ->
// MaxPool -> LSTM(256->256) -> FC(256->32) -> Softmax, with the padded
// variants changing conv padding / kernel / stride as noted above.
inline std::vector<LayerSpec> default_layer_stack(const StackWidths &w = {}, bool with_lstm = true,
                                                  StackVariant variant = StackVariant::spanning)
{
    const std::size_t c0 = w.input_channels, c1 = w.conv1_channels, c2 = w.conv2_channels;
    const bool table = variant == StackVariant::table;
    const std::size_t k2 = variant == StackVariant::spanning ? 3 : 1;
    const std::size_t s2 = variant == StackVariant::padded ? 1 : 3;
    std::vector<LayerSpec> s{
        {LayerKind::batch_norm, c0, c0},
        {LayerKind::conv1d, c0, c1, 3, 3, table ? 0u : 1u},
        {LayerKind::relu, c1, c1},
        {LayerKind::conv1d, c1, c2, k2, s2, 0},
        {LayerKind::relu, c2, c2},
        {LayerKind::max_pool, c2, c2},
    };
    std::size_t fc_in = c2;
    if (with_lstm)
    {
        s.push_back({LayerKind::lstm, c2, w.hidden});
        fc_in = w.hidden;
    }
    s.push_back({LayerKind::fully_connected, fc_in, w.classes});
    s.push_back({LayerKind::softmax, w.classes, w.classes});
    return s;
}

struct StackLayout
{
    std::vector<LayerSpec> features; // everything before the recurrent / dense head
    std::optional<LayerSpec> lstm;
    LayerSpec fc;
    std::size_t feature_size = 0;    // width of the feature vector for this input length
};

// Checks kinds, order and channel continuity, and propagates the input length.
inline StackLayout validate_stack(const std::vector<LayerSpec> &specs, std::size_t input_channels,
                                  std::size_t input_length, bool require_lstm)
{
    auto fail = [](const std::string &why) { throw std::invalid_argument("layer stack: " + why); };
    StackLayout out;
    std::size_t i = 0;
    std::size_t channels = input_channels, length = input_length;
    bool pooled = false;
    for (; i < specs.size(); ++i)
    {
        const auto &s = specs[i];
        if (s.kind == LayerKind::lstm || s.kind == LayerKind::fully_connected)
            break;
        if (pooled)
            fail("max_pool must be the last feature layer");
        if (s.in_channels != channels)
            fail(to_string(s.kind) + " expects " + std::to_string(s.in_channels) + " channels, receives " +
                 std::to_string(channels));
        switch (s.kind)
        {
        case LayerKind::conv1d:
            if (s.kernel_size < 1 || s.stride < 1)
                fail("conv1d needs kernel and stride >= 1");
            length = conv_output_length(length, s.kernel_size, s.stride, s.padding);
            channels = s.out_channels;
            break;
        case LayerKind::batch_norm:
        case LayerKind::relu:
            if (s.out_channels != s.in_channels)
                fail(to_string(s.kind) + " must keep the channel count");
            break;
        case LayerKind::max_pool:
            if (s.out_channels != s.in_channels)
                fail("max_pool must keep the channel count");
            pooled = true;
            break;
        default:
            fail("unexpected " + to_string(s.kind) + " in feature layers");
        }
        out.features.push_back(s);
    }
    std::size_t width = pooled ? channels : channels * length;
    out.feature_size = width;

    if (i < specs.size() && specs[i].kind == LayerKind::lstm)
    {
        if (specs[i].in_channels != width)
            fail("lstm input " + std::to_string(specs[i].in_channels) + " != feature width " + std::to_string(width));
        out.lstm = specs[i];
        width = specs[i].out_channels;
        ++i;
    }
    if (require_lstm && !out.lstm)
        fail("recurrent model requires an lstm layer");
    if (!require_lstm && out.lstm)
        fail("single-snapshot model must not contain an lstm layer");
    if (i >= specs.size() || specs[i].kind != LayerKind::fully_connected)
        fail("missing fully_connected layer");
    if (specs[i].in_channels != width)
        fail("fully_connected input " + std::to_string(specs[i].in_channels) + " != " + std::to_string(width));
    out.fc = specs[i];
    ++i;
    if (i >= specs.size() || specs[i].kind != LayerKind::softmax || specs[i].in_channels != out.fc.out_channels ||
        specs[i].out_channels != out.fc.out_channels)
        fail("stack must end with a softmax over the fully_connected outputs");
    if (i + 1 != specs.size())
        fail("layers after softmax");
    return out;
}

class FeatureStack
{
  public:
    using Layer = std::variant<BatchNorm1d, Conv1d, Relu, GlobalMaxPool>;
    using LayerCache = std::variant<BatchNorm1d::Cache, Conv1d::Cache, Relu::Cache, GlobalMaxPool::Cache>;

    struct Cache
    {
        bool valid = false;
        std::vector<LayerCache> layers;
        Shape pre_flatten_shape; // set when the stack ends without pooling
    };

    FeatureStack() = default;
    FeatureStack(ParamStore &store, const std::string &name, const std::vector<LayerSpec> &specs)
    {
        std::size_t k = 0;
        for (const auto &s : specs)
        {
            const std::string lname = name + "." + std::to_string(k++) + "." + to_string(s.kind);
            switch (s.kind)
            {
            case LayerKind::batch_norm: layers_.emplace_back(BatchNorm1d(store, lname, s.in_channels)); break;
            case LayerKind::conv1d:
                layers_.emplace_back(Conv1d(store, lname, s.in_channels, s.out_channels, s.kernel_size, s.stride, s.padding));
                break;
            case LayerKind::relu: layers_.emplace_back(Relu{}); break;
            case LayerKind::max_pool: layers_.emplace_back(GlobalMaxPool{}); break;
            default: throw std::invalid_argument("FeatureStack: unsupported layer " + to_string(s.kind));
            }
        }
    }

    // Uniform(+-1/sqrt(fan_in)) for conv kernels and biases; BN starts at
    // scale 1, shift 0.
    void initialize(ParamStore &store, std::mt19937_64 &rng) const
    {
        for (const auto &l : layers_)
            if (const auto *c = std::get_if<Conv1d>(&l))
            {
                const double bound = 1.0 / std::sqrt(static_cast<double>(c->fan_in()));
                init_uniform(store.param(c->weight_index()).value, bound, rng);
                init_uniform(store.param(c->bias_index()).value, bound, rng);
            }
    }

    // (N, C, L) -> (N, F)
    Tensor forward(ParamStore &store, const Tensor &x, Mode mode, Cache *cache, bool update_running = true) const
    {
        Tensor cur = x;
        if (cache)
        {
            cache->layers.clear();
            cache->pre_flatten_shape.clear();
        }
        for (const auto &l : layers_)
        {
            std::visit(
                [&](const auto &layer) {
                    using L = std::decay_t<decltype(layer)>;
                    typename L::Cache lc;
                    typename L::Cache *pc = cache ? &lc : nullptr;
                    if constexpr (std::is_same_v<L, BatchNorm1d>)
                        cur = layer.forward(store, cur, mode, pc, update_running);
                    else if constexpr (std::is_same_v<L, Conv1d>)
                        cur = layer.forward(store, cur, pc);
                    else
                        cur = layer.forward(cur, pc);
                    if (cache)
                        cache->layers.emplace_back(std::move(lc));
                },
                l);
        }
        if (cur.rank() == 3) // no pooling: flatten channels x length
        {
            if (cache)
                cache->pre_flatten_shape = cur.shape;
            cur.shape = {cur.dim(0), cur.dim(1) * cur.dim(2)};
        }
        if (cache)
            cache->valid = true;
        return cur;
    }

    Tensor backward(ParamStore &store, const Cache &cache, Tensor dy) const
    {
        require_cache(cache.valid, "feature stack");
        if (!cache.pre_flatten_shape.empty())
            dy.shape = cache.pre_flatten_shape;
        for (std::size_t k = layers_.size(); k-- > 0;)
        {
            std::visit(
                [&](const auto &layer) {
                    using L = std::decay_t<decltype(layer)>;
                    const auto &lc = std::get<typename L::Cache>(cache.layers[k]);
                    if constexpr (std::is_same_v<L, BatchNorm1d> || std::is_same_v<L, Conv1d>)
                        dy = layer.backward(store, lc, dy);
                    else
                        dy = layer.backward(lc, dy);
                },
                layers_[k]);
        }
        return dy;
    }

    std::size_t size() const { return layers_.size(); }
    const std::vector<Layer> &layers() const { return layers_; }

  private:
    std::vector<Layer> layers_;
};

} // namespace beampred::nn
