// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "../datagen/dataset.hpp"
#include "../nn/adam.hpp"
#include "model.hpp"
#include "timing.hpp"

#include <chrono>
#include <functional>
#include <numeric>

namespace beampred::predictor
{

struct TrainSettings
{
    std::size_t epochs = 40;
    std::size_t batch_size = 64;
    nn::AdamSettings adam;
    std::uint64_t seed = 1; // initialisation and shuffling
};

struct EpochStats
{
    std::size_t epoch = 0; // 0 = before the first update
    double train_loss = 0.0;
    // Validation cross-entropy of the head selected by each query's timing
    // offset, against the optimal beam at the query instant.
    double val_loss = 0.0;
    // Validation cross-entropy against the interpolation-instant labels
    // (the training objective).
    double val_interp_loss = 0.0;
    double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochStats &)>;

inline PredictorConfig predictor_config_for(const datagen::Dataset &ds, std::vector<nn::LayerSpec> layers = nn::default_layer_stack())
{
    PredictorConfig pc;
    pc.history_len = ds.config.history_len;
    pc.interpolation_factor = ds.config.interpolation_factor;
    pc.num_beams = ds.config.scenario.mm_band.num_tx_antennas;
    pc.input_length = ds.input_length();
    pc.layers = std::move(layers);
    return pc;
}

// (B, m, 2, L) history tensor for the given samples.
inline nn::Tensor history_batch(const datagen::Dataset &ds, std::span<const std::size_t> idx)
{
    const std::size_t m = ds.config.history_len, len = ds.input_length();
    nn::Tensor x({idx.size(), m, 2, len});
    const std::size_t per = m * 2 * len;
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(ds.samples[idx[i]].csi_history.begin(), per, x.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    return x;
}

// Inference-mode head probabilities: Gamma matrices of (|idx|, beams).
inline std::vector<nn::Mat> infer_probabilities(GroupedLstmModel &model, const datagen::Dataset &ds,
                                                std::span<const std::size_t> idx, std::size_t batch = 256)
{
    const std::size_t gamma = model.config().interpolation_factor;
    const auto beams = static_cast<Eigen::Index>(model.config().num_beams);
    std::vector<nn::Mat> out(gamma, nn::Mat(static_cast<Eigen::Index>(idx.size()), beams));
    for (std::size_t s = 0; s < idx.size(); s += batch)
    {
        const std::size_t e = std::min(idx.size(), s + batch);
        const auto res = model.forward(history_batch(ds, idx.subspan(s, e - s)), nn::Mode::infer);
        for (std::size_t g = 0; g < gamma; ++g)
            out[g].middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e - s)) = res.probabilities[g];
    }
    return out;
}

inline double clipped_nll(double p) { return -std::log(std::max(p, 1e-300)); }

struct ValidationLosses
{
    double query = 0.0;
    double interp = 0.0;
};

inline ValidationLosses validation_losses(GroupedLstmModel &model, const datagen::Dataset &ds,
                                          std::span<const std::size_t> idx)
{
    const auto probs = infer_probabilities(model, ds, idx);
    const std::size_t gamma = model.config().interpolation_factor;
    double q = 0.0, it = 0.0;
    std::size_t nq = 0;
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
        const auto &s = ds.samples[idx[i]];
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t g = 0; g < gamma; ++g)
            it += clipped_nll(probs[g](r, s.labels[g]));
        for (const auto &qp : s.queries)
        {
            const std::size_t g = interpolation_index(qp.eta, gamma) - 1;
            q += clipped_nll(probs[g](r, qp.optimal_beam));
            ++nq;
        }
    }
    return {nq ? q / static_cast<double>(nq) : 0.0, idx.empty() ? 0.0 : it / static_cast<double>(idx.size() * gamma)};
}

inline double mean_interp_loss(GroupedLstmModel &model, const datagen::Dataset &ds, std::span<const std::size_t> idx)
{
    return validation_losses(model, ds, idx).interp;
}

struct TrainResult
{
    GroupedLstmModel model;
    std::vector<EpochStats> trace;
};

inline TrainResult train(const datagen::Dataset &ds, const PredictorConfig &pc, const TrainSettings &ts,
                         const EpochCallback &on_epoch = {})
{
    const auto train_idx = ds.indices(datagen::Split::train);
    const auto val_idx = ds.indices(datagen::Split::validation);
    if (train_idx.empty())
        throw std::invalid_argument("train: dataset has no training samples");
    if (pc.history_len != ds.config.history_len || pc.interpolation_factor != ds.config.interpolation_factor)
        throw std::invalid_argument("train: predictor and dataset disagree on history length or interpolation factor");
    if (ts.batch_size < 1)
        throw std::invalid_argument("train: batch size must be >= 1");

    TrainResult res{GroupedLstmModel(pc, ts.seed), {}};
    auto &model = res.model;
    const std::size_t gamma = pc.interpolation_factor;
    std::mt19937_64 shuffle_rng(splitmix64(ts.seed ^ 0x5DEECE66DULL));

    auto record = [&](EpochStats st, std::chrono::steady_clock::time_point t0) {
        const auto v = validation_losses(model, ds, val_idx);
        st.val_loss = v.query;
        st.val_interp_loss = v.interp;
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.trace.push_back(st);
        if (on_epoch)
            on_epoch(st);
    };

    {
        const auto t0 = std::chrono::steady_clock::now();
        EpochStats st;
        st.train_loss = mean_interp_loss(model, ds, train_idx);
        record(st, t0);
    }

    std::vector<std::size_t> order = train_idx;
    std::vector<int> labels;
    for (std::size_t epoch = 1; epoch <= ts.epochs; ++epoch)
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t s = 0; s < order.size(); s += ts.batch_size)
        {
            const std::size_t e = std::min(order.size(), s + ts.batch_size);
            const std::span<const std::size_t> batch(order.data() + s, e - s);
            labels.resize(batch.size() * gamma);
            for (std::size_t i = 0; i < batch.size(); ++i)
                for (std::size_t g = 0; g < gamma; ++g)
                    labels[i * gamma + g] = static_cast<int>(ds.samples[batch[i]].labels[g]);
            model.params().zero_grad();
            model.forward(history_batch(ds, batch), nn::Mode::train);
            const double loss = model.backward(labels);
            nn::adam_step(model.params(), ts.adam);
            sum += loss * static_cast<double>(batch.size());
            seen += batch.size();
        }
        EpochStats st;
        st.epoch = epoch;
        st.train_loss = sum / static_cast<double>(seen);
        record(st, t0);
    }
    return res;
}

struct PredictionOutput
{
    std::vector<std::vector<double>> probabilities; // one distribution per gamma
    std::size_t chosen_beam = 0;
    std::size_t gamma_used = 1; // 1-based
    std::vector<std::size_t> ranked_beams; // descending probability at gamma_used
};

inline std::vector<std::size_t> rank_beams(std::span<const double> p)
{
    std::vector<std::size_t> r(p.size());
    std::iota(r.begin(), r.end(), std::size_t{0});
    std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    return r;
}

inline PredictionOutput prediction_from(std::vector<std::vector<double>> probs, std::size_t gamma_used)
{
    PredictionOutput out;
    out.probabilities = std::move(probs);
    out.gamma_used = gamma_used;
    out.ranked_beams = rank_beams(out.probabilities.at(gamma_used - 1));
    out.chosen_beam = out.ranked_beams.front();
    return out;
}

// history: m x 2 x L values, oldest first.
inline PredictionOutput predict_beam(GroupedLstmModel &model, std::span<const double> history, const TimingContext &ctx)
{
    const auto &pc = model.config();
    const std::size_t per = pc.history_len * 2 * pc.input_length;
    if (history.size() != per)
        throw std::invalid_argument("predict_beam: expected " + std::to_string(per) + " history values, got " +
                                    std::to_string(history.size()));
    nn::Tensor x({1, pc.history_len, 2, pc.input_length}, std::vector<double>(history.begin(), history.end()));
    const auto res = model.forward(x, nn::Mode::infer);
    std::vector<std::vector<double>> probs;
    for (const auto &p : res.probabilities)
        probs.emplace_back(p.data(), p.data() + p.size());
    return prediction_from(std::move(probs), interpolation_index(timing_offset(ctx), pc.interpolation_factor));
}

} // namespace beampred::predictor
