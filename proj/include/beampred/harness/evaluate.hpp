// SPDX-License-Identifier: Apache-2.0
//
// Per-query evaluation of the three methods on a dataset's validation split.

#pragma once

#include "../baselines/ekf.hpp"
#include "../baselines/noprior.hpp"
#include "../predictor/train.hpp"

#include <map>
#include <string>

namespace beampred::harness
{

enum class Method
{
    proposed,
    ekf,
    noprior
};

inline std::string to_string(Method m)
{
    switch (m)
    {
    case Method::proposed: return "proposed";
    case Method::ekf: return "ekf";
    case Method::noprior: return "noprior";
    }
    return "unknown";
}

struct TraceRow
{
    std::uint64_t episode_id = 0;
    double query_time_s = 0.0;
    double eta = 0.0;
    std::size_t gamma = 0; // 0 for the baselines
    std::size_t predicted_beam = 0;
    std::size_t optimal_beam = 0;
    double gain_ratio = 0.0;
    double ricean_k_db = 0.0;
};

inline double query_ratio(const datagen::QueryPoint &q, std::size_t predicted, const datagen::MmCodebooks &cb)
{
    return beams::gain_ratio(q.channel, predicted, q.optimal_beam, cb.tx, cb.rx);
}

inline std::vector<TraceRow> evaluate_proposed(predictor::GroupedLstmModel &model, const datagen::Dataset &ds)
{
    const auto idx = ds.indices(datagen::Split::validation);
    const auto probs = predictor::infer_probabilities(model, ds, idx);
    const auto cb = datagen::mm_codebooks(ds.config.scenario);
    const std::size_t gamma = model.config().interpolation_factor;
    std::vector<TraceRow> rows;
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
        const auto &s = ds.samples[idx[i]];
        for (const auto &q : s.queries)
        {
            const std::size_t g = predictor::interpolation_index(q.eta, gamma);
            const auto p = probs[g - 1].row(static_cast<Eigen::Index>(i));
            const auto best = predictor::rank_beams(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
            rows.push_back({s.episode_id, q.time_s, q.eta, g, best.front(), q.optimal_beam, query_ratio(q, best.front(), cb),
                            s.ricean_k_db});
        }
    }
    return rows;
}

inline std::vector<TraceRow> evaluate_noprior(baselines::NoPriorModel &model, const datagen::Dataset &ds)
{
    const auto idx = ds.indices(datagen::Split::validation);
    const nn::Mat probs = baselines::noprior_probabilities(model, ds, idx);
    const auto cb = datagen::mm_codebooks(ds.config.scenario);
    std::vector<TraceRow> rows;
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
        const auto &s = ds.samples[idx[i]];
        const auto p = probs.row(static_cast<Eigen::Index>(i));
        const auto best = predictor::rank_beams(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
        for (const auto &q : s.queries)
            rows.push_back({s.episode_id, q.time_s, q.eta, 0, best.front(), q.optimal_beam, query_ratio(q, best.front(), cb),
                            s.ricean_k_db});
    }
    return rows;
}

// Regenerates each validation episode from the dataset seed and tracks it.
inline std::vector<TraceRow> evaluate_ekf(const datagen::Dataset &ds, const baselines::EkfConfig &cfg,
                                          std::size_t threads = thread_count())
{
    const auto idx = ds.indices(datagen::Split::validation);
    const auto cb = datagen::mm_codebooks(ds.config.scenario);
    std::vector<std::vector<TraceRow>> per(idx.size());
    parallel_for(
        idx.size(),
        [&](std::size_t i) {
            const auto &s = ds.samples[idx[i]];
            const auto ep = datagen::make_episode(ds.config, s.episode_id);
            auto rng = derive_rng(ds.config.seed, s.episode_id, 2 + s.csi_update_index * 0x10000ULL);
            std::vector<double> times;
            for (const auto &q : s.queries)
                times.push_back(q.time_s);
            const auto tr = baselines::ekf_track_episode(ep, s.csi_time_s, times, cb.tx, cfg, rng);
            for (std::size_t k = 0; k < s.queries.size(); ++k)
            {
                const auto &q = s.queries[k];
                per[i].push_back({s.episode_id, q.time_s, q.eta, 0, tr.predicted_beam[k], q.optimal_beam,
                                  query_ratio(q, tr.predicted_beam[k], cb), s.ricean_k_db});
            }
        },
        threads);
    std::vector<TraceRow> rows;
    for (auto &v : per)
        rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

struct BinStat
{
    double mean_ratio = 0.0;
    std::size_t n = 0;
};

inline double mean_ratio(const std::vector<TraceRow> &rows)
{
    double s = 0.0;
    for (const auto &r : rows)
        s += r.gain_ratio;
    return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

inline double exact_match_rate(const std::vector<TraceRow> &rows)
{
    std::size_t hit = 0;
    for (const auto &r : rows)
        hit += r.predicted_beam == r.optimal_beam;
    return rows.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(rows.size());
}

// Decile bins of [0, 1): bin b holds b/10 <= eta < (b+1)/10.
inline std::vector<BinStat> eta_bins(const std::vector<TraceRow> &rows, std::size_t bins = 10)
{
    std::vector<BinStat> out(bins);
    for (const auto &r : rows)
    {
        const auto b = std::min(bins - 1, static_cast<std::size_t>(std::floor(r.eta * static_cast<double>(bins))));
        out[b].mean_ratio += r.gain_ratio;
        ++out[b].n;
    }
    for (auto &b : out)
        if (b.n)
            b.mean_ratio /= static_cast<double>(b.n);
    return out;
}

inline std::map<double, BinStat> k_bins(const std::vector<TraceRow> &rows)
{
    std::map<double, BinStat> out;
    for (const auto &r : rows)
    {
        auto &b = out[r.ricean_k_db];
        b.mean_ratio += r.gain_ratio;
        ++b.n;
    }
    for (auto &[k, b] : out)
        b.mean_ratio /= static_cast<double>(b.n);
    return out;
}

} // namespace beampred::harness
