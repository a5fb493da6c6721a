// SPDX-License-Identifier: Apache-2.0
//
// Single-snapshot baseline: the shared convolutional feature stack followed
// directly by FC + softmax. No recurrence and no timing input; trained on the
// optimal beam at the CSI instant.

#pragma once

#include "../predictor/train.hpp"

namespace beampred::baselines
{

struct NoPriorConfig
{
    std::size_t num_beams = 32;
    std::size_t input_length = 8;
    std::vector<nn::LayerSpec> layers = nn::default_layer_stack({}, false);

    void validate() const
    {
        const auto layout = nn::validate_stack(layers, 2, input_length, false);
        if (layout.fc.out_channels != num_beams)
            throw std::invalid_argument("NoPriorConfig: FC output does not match the number of beams");
    }
};

class NoPriorModel
{
  public:
    NoPriorModel() = default;
    NoPriorModel(NoPriorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        const auto layout = nn::validate_stack(cfg_.layers, 2, cfg_.input_length, false);
        features_ = nn::FeatureStack(store_, "features", layout.features);
        head_ = nn::Dense(store_, "fc", layout.fc.in_channels, layout.fc.out_channels);
        std::mt19937_64 rng(seed);
        features_.initialize(store_, rng);
        const double bf = 1.0 / std::sqrt(static_cast<double>(head_.in_features()));
        nn::init_uniform(store_.param(head_.weight_index()).value, bf, rng);
        nn::init_uniform(store_.param(head_.bias_index()).value, bf, rng);
    }

    const NoPriorConfig &config() const { return cfg_; }
    nn::ParamStore &params() { return store_; }
    const nn::ParamStore &params() const { return store_; }

    // x: (B, 2, L) -> logits (B, beams).
    nn::Mat forward(const nn::Tensor &x, nn::Mode mode, bool update_running = true)
    {
        if (x.rank() != 3 || x.dim(1) != 2 || x.dim(2) != cfg_.input_length)
            throw std::invalid_argument("noprior_forward: expected (batch, 2, " + std::to_string(cfg_.input_length) +
                                        "), got " + nn::shape_string(x.shape));
        const bool record = mode == nn::Mode::train;
        feat_cache_ = {};
        head_cache_ = {};
        const nn::Tensor f = features_.forward(store_, x, mode, record ? &feat_cache_ : nullptr, update_running);
        return head_.forward(store_, nn::Mat(f.matrix()), record ? &head_cache_ : nullptr);
    }

    double backward(const nn::Mat &logits, std::span<const int> labels, std::span<const double> weights = {})
    {
        if (!head_cache_.valid)
            throw std::logic_error("backward: no recorded forward pass");
        auto ce = nn::softmax_cross_entropy(logits, labels, weights);
        const nn::Mat dfeat = head_.backward(store_, head_cache_, ce.dlogits);
        features_.backward(store_, feat_cache_, nn::from_matrix(dfeat));
        head_cache_.valid = false;
        return ce.loss;
    }

    nn::Tensor features(const nn::Tensor &x) { return features_.forward(store_, x, nn::Mode::infer, nullptr); }

  private:
    NoPriorConfig cfg_;
    nn::ParamStore store_;
    nn::FeatureStack features_;
    nn::Dense head_;
    nn::FeatureStack::Cache feat_cache_;
    nn::Dense::Cache head_cache_;
};

inline NoPriorConfig noprior_config_for(const datagen::Dataset &ds, std::vector<nn::LayerSpec> layers = nn::default_layer_stack({}, false))
{
    NoPriorConfig c;
    c.num_beams = ds.config.scenario.mm_band.num_tx_antennas;
    c.input_length = ds.input_length();
    c.layers = std::move(layers);
    return c;
}

// Newest snapshot of each sample's window: (B, 2, L).
inline nn::Tensor current_csi_batch(const datagen::Dataset &ds, std::span<const std::size_t> idx)
{
    const std::size_t m = ds.config.history_len, len = ds.input_length(), per = 2 * len;
    nn::Tensor x({idx.size(), 2, len});
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
        const auto &h = ds.samples[idx[i]].csi_history;
        std::copy_n(h.begin() + static_cast<std::ptrdiff_t>((m - 1) * per), per,
                    x.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return x;
}

inline nn::Mat noprior_probabilities(NoPriorModel &model, const datagen::Dataset &ds, std::span<const std::size_t> idx,
                                     std::size_t batch = 256)
{
    nn::Mat out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(model.config().num_beams));
    for (std::size_t s = 0; s < idx.size(); s += batch)
    {
        const std::size_t e = std::min(idx.size(), s + batch);
        out.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e - s)) =
            nn::softmax(model.forward(current_csi_batch(ds, idx.subspan(s, e - s)), nn::Mode::infer));
    }
    return out;
}

// Probabilities for one (2 x L) snapshot.
inline std::vector<double> noprior_predict(NoPriorModel &model, std::span<const double> snapshot)
{
    const std::size_t len = model.config().input_length;
    if (snapshot.size() != 2 * len)
        throw std::invalid_argument("noprior_predict: expected " + std::to_string(2 * len) + " values");
    nn::Tensor x({1, 2, len}, std::vector<double>(snapshot.begin(), snapshot.end()));
    const nn::Mat p = nn::softmax(model.forward(x, nn::Mode::infer));
    return {p.data(), p.data() + p.size()};
}

struct NoPriorTrainResult
{
    NoPriorModel model;
    std::vector<predictor::EpochStats> trace; // val_interp_loss holds the CSI-instant loss
};

inline NoPriorTrainResult train_noprior(const datagen::Dataset &ds, const NoPriorConfig &cfg,
                                        const predictor::TrainSettings &ts, const predictor::EpochCallback &on_epoch = {})
{
    const auto train_idx = ds.indices(datagen::Split::train);
    const auto val_idx = ds.indices(datagen::Split::validation);
    if (train_idx.empty())
        throw std::invalid_argument("train_noprior: dataset has no training samples");
    NoPriorTrainResult res{NoPriorModel(cfg, ts.seed), {}};
    auto &model = res.model;
    std::mt19937_64 shuffle_rng(splitmix64(ts.seed ^ 0x5DEECE66DULL));

    auto losses = [&](std::span<const std::size_t> idx, double &query, double &current) {
        const nn::Mat p = noprior_probabilities(model, ds, idx);
        double q = 0.0, c = 0.0;
        std::size_t nq = 0;
        for (std::size_t i = 0; i < idx.size(); ++i)
        {
            const auto &s = ds.samples[idx[i]];
            const auto r = static_cast<Eigen::Index>(i);
            c += predictor::clipped_nll(p(r, s.current_label));
            for (const auto &qp : s.queries)
            {
                q += predictor::clipped_nll(p(r, qp.optimal_beam));
                ++nq;
            }
        }
        query = nq ? q / static_cast<double>(nq) : 0.0;
        current = idx.empty() ? 0.0 : c / static_cast<double>(idx.size());
    };
    auto record = [&](predictor::EpochStats st, std::chrono::steady_clock::time_point t0) {
        losses(val_idx, st.val_loss, st.val_interp_loss);
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.trace.push_back(st);
        if (on_epoch)
            on_epoch(st);
    };
    {
        const auto t0 = std::chrono::steady_clock::now();
        predictor::EpochStats st;
        double unused = 0.0;
        losses(train_idx, unused, st.train_loss);
        record(st, t0);
    }
    std::vector<std::size_t> order = train_idx;
    std::vector<int> labels;
    for (std::size_t epoch = 1; epoch <= ts.epochs; ++epoch)
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum = 0.0;
        for (std::size_t s = 0; s < order.size(); s += ts.batch_size)
        {
            const std::size_t e = std::min(order.size(), s + ts.batch_size);
            const std::span<const std::size_t> batch(order.data() + s, e - s);
            labels.resize(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                labels[i] = static_cast<int>(ds.samples[batch[i]].current_label);
            model.params().zero_grad();
            const nn::Mat logits = model.forward(current_csi_batch(ds, batch), nn::Mode::train);
            sum += model.backward(logits, labels) * static_cast<double>(batch.size());
            nn::adam_step(model.params(), ts.adam);
        }
        predictor::EpochStats st;
        st.epoch = epoch;
        st.train_loss = sum / static_cast<double>(order.size());
        record(st, t0);
    }
    return res;
}

} // namespace beampred::baselines
