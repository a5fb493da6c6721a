// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoint:
//   "BPCK" | u32 version | u32 model kind | u32 n_meta | u64 meta[n_meta]
//   | u32 n_layers | n_layers x (u32 kind, in, out, kernel, stride, padding)
//   | u64 adam step | u32 n_params | per param: name, rank, dims, value,
//     adam m, adam v | u32 n_buffers | per buffer: name, rank, dims, value
// Integers and f64 values little-endian; arrays in declaration order.

#pragma once

#include "../binio.hpp"
#include "layers.hpp"
#include "params.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace beampred::nn
{

class CheckpointError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr char checkpoint_magic[4] = {'B', 'P', 'C', 'K'};
inline constexpr std::uint32_t checkpoint_version = 1;

enum class ModelKind : std::uint32_t
{
    grouped_lstm = 0,
    no_prior = 1
};

struct CheckpointHeader
{
    ModelKind kind = ModelKind::grouped_lstm;
    std::vector<std::uint64_t> meta;
    std::vector<LayerSpec> layers;
};

namespace detail
{
inline void put_tensor(binio::Writer &w, const std::string &name, const Tensor &t)
{
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape)
        w.u64(d);
    w.f64s(t.data);
}

inline Tensor get_tensor(binio::Reader &r, const std::string &expected_name, const Shape &expected_shape)
{
    const auto name = r.str(4096);
    if (name != expected_name)
        throw CheckpointError("checkpoint: expected array '" + expected_name + "', found '" + name + "'");
    const auto rank = r.u32();
    if (rank > 8)
        throw CheckpointError("checkpoint: implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto &d : shape)
        d = static_cast<std::size_t>(r.u64());
    if (shape != expected_shape)
        throw CheckpointError("checkpoint: array '" + name + "' has shape " + shape_string(shape) + ", expected " +
                              shape_string(expected_shape));
    Tensor t(shape);
    const auto v = r.f64s(t.size());
    t.data.assign(v.begin(), v.end());
    return t;
}
} // namespace detail

inline std::string serialize_checkpoint(const CheckpointHeader &h, const ParamStore &store)
{
    binio::Writer w;
    w.bytes(std::string_view(checkpoint_magic, 4));
    w.u32(checkpoint_version);
    w.u32(static_cast<std::uint32_t>(h.kind));
    w.u32(static_cast<std::uint32_t>(h.meta.size()));
    for (auto v : h.meta)
        w.u64(v);
    w.u32(static_cast<std::uint32_t>(h.layers.size()));
    for (const auto &l : h.layers)
    {
        w.u32(static_cast<std::uint32_t>(l.kind));
        w.u32(static_cast<std::uint32_t>(l.in_channels));
        w.u32(static_cast<std::uint32_t>(l.out_channels));
        w.u32(static_cast<std::uint32_t>(l.kernel_size));
        w.u32(static_cast<std::uint32_t>(l.stride));
        w.u32(static_cast<std::uint32_t>(l.padding));
    }
    w.u64(store.step);
    w.u32(static_cast<std::uint32_t>(store.params().size()));
    for (const auto &p : store.params())
    {
        detail::put_tensor(w, p.name, p.value);
        w.f64s(p.adam_m);
        w.f64s(p.adam_v);
    }
    w.u32(static_cast<std::uint32_t>(store.buffers().size()));
    for (const auto &b : store.buffers())
        detail::put_tensor(w, b.name, b.value);
    return w.take();
}

// Reads only the header; `r` is left at the start of the array section.
inline CheckpointHeader read_checkpoint_header(binio::Reader &r)
{
    if (r.bytes(4) != std::string_view(checkpoint_magic, 4))
        throw CheckpointError("checkpoint: bad magic bytes");
    const auto version = r.u32();
    if (version != checkpoint_version)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    CheckpointHeader h;
    const auto kind = r.u32();
    if (kind > 1)
        throw CheckpointError("checkpoint: unknown model kind " + std::to_string(kind));
    h.kind = static_cast<ModelKind>(kind);
    const auto n_meta = r.u32();
    if (n_meta > 64)
        throw CheckpointError("checkpoint: implausible metadata count");
    for (std::uint32_t i = 0; i < n_meta; ++i)
        h.meta.push_back(r.u64());
    const auto n_layers = r.u32();
    if (n_layers > 256)
        throw CheckpointError("checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < n_layers; ++i)
    {
        LayerSpec l;
        const auto k = r.u32();
        if (k > static_cast<std::uint32_t>(LayerKind::softmax))
            throw CheckpointError("checkpoint: unknown layer kind " + std::to_string(k));
        l.kind = static_cast<LayerKind>(k);
        l.in_channels = r.u32();
        l.out_channels = r.u32();
        l.kernel_size = r.u32();
        l.stride = r.u32();
        l.padding = r.u32();
        h.layers.push_back(l);
    }
    return h;
}

// Overwrites every array of `store` (which must have the same layout).
inline void read_checkpoint_arrays(binio::Reader &r, ParamStore &store)
{
    store.step = r.u64();
    if (r.u32() != store.params().size())
        throw CheckpointError("checkpoint: parameter count differs from the model");
    for (auto &p : store.params())
    {
        Tensor t = detail::get_tensor(r, p.name, p.value.shape);
        p.value.data = std::move(t.data);
        p.adam_m = r.f64s(p.value.size());
        p.adam_v = r.f64s(p.value.size());
    }
    if (r.u32() != store.buffers().size())
        throw CheckpointError("checkpoint: buffer count differs from the model");
    for (auto &b : store.buffers())
        b.value.data = detail::get_tensor(r, b.name, b.value.shape).data;
    if (!r.at_end())
        throw CheckpointError("checkpoint: trailing bytes");
}

} // namespace beampred::nn
