// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "../baselines/noprior.hpp"
#include "../nn/checkpoint.hpp"
#include "model.hpp"

namespace beampred::predictor
{

inline std::string serialize_model(const GroupedLstmModel &m)
{
    const auto &c = m.config();
    nn::CheckpointHeader h{nn::ModelKind::grouped_lstm,
                           {c.history_len, c.interpolation_factor, c.num_beams, c.input_length},
                           c.layers};
    return nn::serialize_checkpoint(h, m.params());
}

inline std::string serialize_model(const baselines::NoPriorModel &m)
{
    const auto &c = m.config();
    nn::CheckpointHeader h{nn::ModelKind::no_prior, {c.num_beams, c.input_length}, c.layers};
    return nn::serialize_checkpoint(h, m.params());
}

namespace detail
{
template <class Fn>
auto with_checkpoint(std::string_view bytes, Fn &&fn)
{
    try
    {
        binio::Reader r(bytes);
        const auto h = nn::read_checkpoint_header(r);
        return fn(h, r);
    }
    catch (const binio::TruncatedError &e)
    {
        throw nn::CheckpointError(std::string("checkpoint: truncated (") + e.what() + ")");
    }
}
} // namespace detail

inline nn::ModelKind checkpoint_kind(std::string_view bytes)
{
    return detail::with_checkpoint(bytes, [](const nn::CheckpointHeader &h, binio::Reader &) { return h.kind; });
}

inline GroupedLstmModel deserialize_model(std::string_view bytes)
{
    return detail::with_checkpoint(bytes, [](const nn::CheckpointHeader &h, binio::Reader &r) {
        if (h.kind != nn::ModelKind::grouped_lstm || h.meta.size() != 4)
            throw nn::CheckpointError("checkpoint: not a grouped-LSTM model");
        PredictorConfig c;
        c.history_len = h.meta[0];
        c.interpolation_factor = h.meta[1];
        c.num_beams = h.meta[2];
        c.input_length = h.meta[3];
        c.layers = h.layers;
        GroupedLstmModel m;
        try
        {
            m = GroupedLstmModel(c, 0);
        }
        catch (const std::invalid_argument &e)
        {
            throw nn::CheckpointError(std::string("checkpoint: invalid model description: ") + e.what());
        }
        nn::read_checkpoint_arrays(r, m.params());
        return m;
    });
}

inline baselines::NoPriorModel deserialize_noprior(std::string_view bytes)
{
    return detail::with_checkpoint(bytes, [](const nn::CheckpointHeader &h, binio::Reader &r) {
        if (h.kind != nn::ModelKind::no_prior || h.meta.size() != 2)
            throw nn::CheckpointError("checkpoint: not a no-prior model");
        baselines::NoPriorConfig c;
        c.num_beams = h.meta[0];
        c.input_length = h.meta[1];
        c.layers = h.layers;
        baselines::NoPriorModel m;
        try
        {
            m = baselines::NoPriorModel(c, 0);
        }
        catch (const std::invalid_argument &e)
        {
            throw nn::CheckpointError(std::string("checkpoint: invalid model description: ") + e.what());
        }
        nn::read_checkpoint_arrays(r, m.params());
        return m;
    });
}

inline void save_model(const GroupedLstmModel &m, const std::string &path) { binio::write_file(path, serialize_model(m)); }
inline void save_model(const baselines::NoPriorModel &m, const std::string &path)
{
    binio::write_file(path, serialize_model(m));
}
inline GroupedLstmModel load_model(const std::string &path) { return deserialize_model(binio::read_file(path)); }
inline baselines::NoPriorModel load_noprior(const std::string &path) { return deserialize_noprior(binio::read_file(path)); }

} // namespace beampred::predictor
