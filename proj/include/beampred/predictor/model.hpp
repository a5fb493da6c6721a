// SPDX-License-Identifier: Apache-2.0
//
// Grouped-LSTM beam predictor.
//
// Each of the m low-band snapshots (2 x L real: real and imaginary parts of
// the angular-domain CSI) goes through the shared feature stack. One LSTM cell
// consumes the m feature vectors oldest first, then runs Gamma further steps:
// the first takes the newest CSI feature vector, step gamma > 1 takes the
// previous step's hidden output. Every step's hidden state goes through the
// same FC + softmax head, giving one beam distribution per interpolation
// instant.

#pragma once

#include "../nn/loss.hpp"
#include "../nn/stack.hpp"

#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace beampred::predictor
{

struct PredictorConfig
{
    std::size_t history_len = 5;          // m
    std::size_t interpolation_factor = 4; // Gamma
    std::size_t num_beams = 32;
    std::size_t input_length = 8; // low-band angular bins
    std::vector<nn::LayerSpec> layers = nn::default_layer_stack();

    void validate() const
    {
        if (history_len < 1 || interpolation_factor < 1)
            throw std::invalid_argument("PredictorConfig: history length and interpolation factor must be >= 1");
        const auto layout = nn::validate_stack(layers, 2, input_length, true);
        if (interpolation_factor > 1 && layout.lstm->in_channels != layout.lstm->out_channels)
            throw std::invalid_argument("PredictorConfig: chained interpolation steps need lstm input width == hidden width");
        if (layout.fc.out_channels != num_beams)
            throw std::invalid_argument("PredictorConfig: FC output " + std::to_string(layout.fc.out_channels) +
                                        " != number of beams " + std::to_string(num_beams));
    }
};

class GroupedLstmModel
{
  public:
    struct Output
    {
        std::vector<nn::Mat> logits;        // Gamma x (B, beams)
        std::vector<nn::Mat> probabilities; // Gamma x (B, beams)
    };

    GroupedLstmModel() = default;
    GroupedLstmModel(PredictorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        const auto layout = nn::validate_stack(cfg_.layers, 2, cfg_.input_length, true);
        features_ = nn::FeatureStack(store_, "features", layout.features);
        lstm_ = nn::LstmCell(store_, "lstm", layout.lstm->in_channels, layout.lstm->out_channels);
        head_ = nn::Dense(store_, "fc", layout.fc.in_channels, layout.fc.out_channels);
        initialize(seed);
    }

    const PredictorConfig &config() const { return cfg_; }
    nn::ParamStore &params() { return store_; }
    const nn::ParamStore &params() const { return store_; }
    const nn::FeatureStack &feature_stack() const { return features_; }
    const nn::LstmCell &lstm() const { return lstm_; }
    const nn::Dense &head() const { return head_; }

    // history: (B, m, 2, L), oldest snapshot first. Mode::train records the
    // pass for backward().
    Output forward(const nn::Tensor &history, nn::Mode mode, bool update_running = true)
    {
        const std::size_t m = cfg_.history_len, gamma = cfg_.interpolation_factor, len = cfg_.input_length;
        if (history.rank() != 4 || history.dim(2) != 2 || history.dim(3) != len)
            throw std::invalid_argument("model_forward: expected history (batch, m, 2, " + std::to_string(len) +
                                        "), got " + nn::shape_string(history.shape));
        if (history.dim(1) != m)
            throw std::invalid_argument("model_forward: history has " + std::to_string(history.dim(1)) +
                                        " snapshots, expected " + std::to_string(m));
        const std::size_t b = history.dim(0);
        if (b == 0)
            throw std::invalid_argument("model_forward: empty batch");

        // time-major so each step reads a contiguous block of rows
        nn::Tensor snaps({m * b, 2, len});
        const std::size_t per = 2 * len;
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t t = 0; t < m; ++t)
                std::copy_n(history.data.begin() + static_cast<std::ptrdiff_t>((i * m + t) * per), per,
                            snaps.data.begin() + static_cast<std::ptrdiff_t>((t * b + i) * per));

        const bool record = mode == nn::Mode::train;
        tape_ = Tape{};
        nn::FeatureStack::Cache *fc = record ? &tape_.features : nullptr;
        const nn::Tensor feats = features_.forward(store_, snaps, mode, fc, update_running);
        const nn::ConstMatMap fm = feats.matrix();

        Output out;
        auto state = lstm_.zero_state(b);
        auto step = [&](const nn::Mat &x) {
            nn::LstmCell::Cache c;
            state = lstm_.forward(store_, x, state, record ? &c : nullptr);
            if (record)
                tape_.steps.push_back(std::move(c));
        };
        const auto bi = static_cast<Eigen::Index>(b);
        for (std::size_t t = 0; t < m; ++t)
            step(fm.middleRows(static_cast<Eigen::Index>(t) * bi, bi));
        for (std::size_t g = 0; g < gamma; ++g)
        {
            if (g == 0)
                step(fm.middleRows(static_cast<Eigen::Index>(m - 1) * bi, bi));
            else
                step(nn::Mat(state.h));
            nn::Dense::Cache hc;
            out.logits.push_back(head_.forward(store_, state.h, record ? &hc : nullptr));
            out.probabilities.push_back(nn::softmax(out.logits.back()));
            if (record)
                tape_.heads.push_back(std::move(hc));
        }
        if (record)
        {
            tape_.valid = true;
            tape_.batch = b;
            tape_.logits = out.logits;
        }
        return out;
    }

    // Mean over the Gamma heads of the batch cross-entropy; labels are
    // (B x Gamma) row-major. Back-propagates into the parameter gradients
    // (accumulating) and consumes the recorded pass.
    double backward(std::span<const int> labels, std::span<const double> weights = {})
    {
        if (!tape_.valid)
            throw std::logic_error("backward: no recorded forward pass");
        const std::size_t m = cfg_.history_len, gamma = cfg_.interpolation_factor, b = tape_.batch;
        if (labels.size() != b * gamma)
            throw std::invalid_argument("backward: expected batch x gamma labels");
        const auto bi = static_cast<Eigen::Index>(b);

        double loss = 0.0;
        std::vector<nn::Mat> dh_head(gamma);
        std::vector<int> lab(b);
        for (std::size_t g = 0; g < gamma; ++g)
        {
            for (std::size_t i = 0; i < b; ++i)
                lab[i] = labels[i * gamma + g];
            auto ce = nn::softmax_cross_entropy(tape_.logits[g], lab, weights);
            loss += ce.loss / static_cast<double>(gamma);
            ce.dlogits /= static_cast<double>(gamma);
            dh_head[g] = head_.backward(store_, tape_.heads[g], ce.dlogits);
        }

        const auto feat_width = static_cast<Eigen::Index>(lstm_.input_size());
        nn::Mat dfeat = nn::Mat::Zero(static_cast<Eigen::Index>(m) * bi, feat_width);
        const auto hsz = static_cast<Eigen::Index>(lstm_.hidden_size());
        nn::Mat dh = nn::Mat::Zero(bi, hsz), dc = nn::Mat::Zero(bi, hsz);
        nn::Mat dx_pending; // gradient w.r.t. the input of the next interpolation step
        for (std::size_t g = gamma; g-- > 0;)
        {
            nn::Mat dh_total = dh + dh_head[g];
            if (g + 1 < gamma)
                dh_total += dx_pending;
            auto gr = lstm_.backward(store_, tape_.steps[m + g], dh_total, dc);
            dh = std::move(gr.dh_prev);
            dc = std::move(gr.dc_prev);
            if (g == 0)
                dfeat.middleRows(static_cast<Eigen::Index>(m - 1) * bi, bi) += gr.dx;
            else
                dx_pending = std::move(gr.dx);
        }
        for (std::size_t t = m; t-- > 0;)
        {
            auto gr = lstm_.backward(store_, tape_.steps[t], dh, dc);
            dh = std::move(gr.dh_prev);
            dc = std::move(gr.dc_prev);
            dfeat.middleRows(static_cast<Eigen::Index>(t) * bi, bi) += gr.dx;
        }
        features_.backward(store_, tape_.features, nn::from_matrix(dfeat));
        tape_.valid = false;
        return loss;
    }

    // FC + softmax on arbitrary hidden states (the shared head).
    nn::Mat head_probabilities(const nn::Mat &hidden) const
    {
        return nn::softmax(head_.forward(store_, hidden, nullptr));
    }

    // Feature vectors of individual snapshots (N, 2, L) in inference mode.
    nn::Tensor features(const nn::Tensor &snapshots)
    {
        return features_.forward(store_, snapshots, nn::Mode::infer, nullptr);
    }

  private:
    struct Tape
    {
        bool valid = false;
        std::size_t batch = 0;
        nn::FeatureStack::Cache features;
        std::vector<nn::LstmCell::Cache> steps;
        std::vector<nn::Dense::Cache> heads;
        std::vector<nn::Mat> logits;
    };

    void initialize(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        features_.initialize(store_, rng);
        const double bx = 1.0 / std::sqrt(static_cast<double>(lstm_.input_size()));
        const double bh = 1.0 / std::sqrt(static_cast<double>(lstm_.hidden_size()));
        nn::init_uniform(store_.param(lstm_.input_weight_index()).value, bx, rng);
        nn::init_uniform(store_.param(lstm_.recurrent_weight_index()).value, bh, rng);
        auto &bias = store_.param(lstm_.bias_index()).value;
        nn::init_uniform(bias, bh, rng);
        const std::size_t h = lstm_.hidden_size();
        std::fill(bias.data.begin() + static_cast<std::ptrdiff_t>(h), bias.data.begin() + static_cast<std::ptrdiff_t>(2 * h),
                  1.0);
        const double bf = 1.0 / std::sqrt(static_cast<double>(head_.in_features()));
        nn::init_uniform(store_.param(head_.weight_index()).value, bf, rng);
        nn::init_uniform(store_.param(head_.bias_index()).value, bf, rng);
    }

    PredictorConfig cfg_;
    nn::ParamStore store_;
    nn::FeatureStack features_;
    nn::LstmCell lstm_;
    nn::Dense head_;
    Tape tape_;
};

} // namespace beampred::predictor
