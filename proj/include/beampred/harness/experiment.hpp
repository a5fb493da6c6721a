// SPDX-License-Identifier: Apache-2.0
//
// The four sweeps. Each sweep is a list of independent jobs (scenario, sweep
// value, repeat); a job builds its own dataset from its own seed, so jobs can
// run on separate threads and the results do not depend on the thread count.

#pragma once

#include "config.hpp"
#include "evaluate.hpp"

#include <chrono>
#include <functional>
#include <optional>

namespace beampred::harness
{

enum class ExperimentKind
{
    interp_sweep,
    history_sweep,
    eta_profile,
    k_sweep
};

inline std::string to_string(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::interp_sweep: return "interp_sweep";
    case ExperimentKind::history_sweep: return "history_sweep";
    case ExperimentKind::eta_profile: return "eta_profile";
    case ExperimentKind::k_sweep: return "k_sweep";
    }
    return "unknown";
}

inline ExperimentKind experiment_for_figure(int fig)
{
    switch (fig)
    {
    case 2: return ExperimentKind::interp_sweep;
    case 3: return ExperimentKind::history_sweep;
    case 4: return ExperimentKind::eta_profile;
    case 5: return ExperimentKind::k_sweep;
    }
    throw std::invalid_argument("no experiment for figure " + std::to_string(fig) + " (expected 2, 3, 4 or 5)");
}

inline int figure_number(ExperimentKind k) { return static_cast<int>(k) + 2; }

inline std::vector<double> default_sweep_values(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::interp_sweep: return {1, 2, 4, 6};
    case ExperimentKind::history_sweep: return {1, 2, 3, 4, 5, 6, 7};
    case ExperimentKind::eta_profile: return {};
    case ExperimentKind::k_sweep: return {0, 4, 8, 12, 16, 20};
    }
    return {};
}

struct EvalReport
{
    double mean_gain_ratio = 0.0;
    double exact_match = 0.0;
    std::size_t n = 0;
    std::vector<BinStat> per_eta_bin; // deciles of [0, 1)
    std::map<double, BinStat> per_k;
    std::vector<predictor::EpochStats> loss_trace; // proposed only
    double seconds = 0.0;
};

inline EvalReport make_report(const std::vector<TraceRow> &rows)
{
    EvalReport r;
    r.mean_gain_ratio = mean_ratio(rows);
    r.exact_match = exact_match_rate(rows);
    r.n = rows.size();
    r.per_eta_bin = eta_bins(rows);
    r.per_k = k_bins(rows);
    return r;
}

struct RunResult
{
    channel::ScenarioKind scenario = channel::ScenarioKind::stationary;
    Method method = Method::proposed;
    std::size_t history_len = 0;
    std::size_t interpolation_factor = 0;
    std::vector<double> ricean_k_db;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    EvalReport report;
    std::vector<TraceRow> trace; // kept when requested
};

struct ExperimentOptions
{
    std::vector<channel::ScenarioKind> scenarios{channel::ScenarioKind::stationary,
                                                 channel::ScenarioKind::non_stationary};
    std::vector<double> values; // empty: the default grid for the kind
    bool keep_traces = false;
    std::size_t threads = thread_count();
    std::function<void(const std::string &)> log;
};

struct ExperimentResult
{
    ExperimentKind kind = ExperimentKind::eta_profile;
    RunConfig config;
    std::string digest;
    std::vector<double> values;
    std::vector<RunResult> runs;
    double seconds = 0.0;
};

// Repeat r uses seed + r for data, initialisation and shuffling alike.
inline std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return seed + repeat; }

struct JobSpec
{
    channel::ScenarioKind scenario;
    std::size_t history_len;
    std::size_t interpolation_factor;
    std::vector<double> ricean_k_db;
    std::size_t repeat;
    bool proposed, ekf, noprior;
};

inline std::vector<RunResult> run_job(const RunConfig &base, const JobSpec &job, bool keep_traces, std::size_t threads,
                                      const std::function<void(const std::string &)> &log)
{
    RunConfig cfg = base;
    cfg.data.scenario.scenario_kind = job.scenario;
    cfg.data.history_len = job.history_len;
    cfg.data.interpolation_factor = job.interpolation_factor;
    cfg.data.scenario.ricean_k_low_db = job.ricean_k_db;
    set_seed(cfg, repeat_seed(base.data.seed, job.repeat));
    cfg.data.validate();

    const auto ds = datagen::generate_dataset(cfg.data, threads);
    std::vector<RunResult> out;
    auto push = [&](Method m, std::vector<TraceRow> rows, double seconds) {
        RunResult r;
        r.scenario = job.scenario;
        r.method = m;
        r.history_len = job.history_len;
        r.interpolation_factor = job.interpolation_factor;
        r.ricean_k_db = job.ricean_k_db;
        r.repeat = job.repeat;
        r.seed = cfg.data.seed;
        r.report = make_report(rows);
        r.report.seconds = seconds;
        if (keep_traces)
            r.trace = std::move(rows);
        out.push_back(std::move(r));
        if (log)
            log(channel::to_string(job.scenario) + " m=" + std::to_string(job.history_len) +
                " gamma=" + std::to_string(job.interpolation_factor) + " K=" + format_double_list(job.ricean_k_db) +
                " repeat=" + std::to_string(job.repeat) + " " + to_string(m) + ": ratio " +
                std::to_string(out.back().report.mean_gain_ratio));
    };
    using clock = std::chrono::steady_clock;
    auto since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };

    if (job.proposed)
    {
        const auto t0 = clock::now();
        auto res = predictor::train(ds, predictor::predictor_config_for(ds, cfg.predictor_layers()), cfg.train);
        auto rows = evaluate_proposed(res.model, ds);
        push(Method::proposed, std::move(rows), since(t0));
        out.back().report.loss_trace = std::move(res.trace);
    }
    if (job.ekf)
    {
        const auto t0 = clock::now();
        auto rows = evaluate_ekf(ds, cfg.ekf, threads);
        push(Method::ekf, std::move(rows), since(t0));
    }
    if (job.noprior)
    {
        const auto t0 = clock::now();
        auto res = baselines::train_noprior(ds, baselines::noprior_config_for(ds, cfg.noprior_layers()), cfg.train);
        auto rows = evaluate_noprior(res.model, ds);
        push(Method::noprior, std::move(rows), since(t0));
    }
    return out;
}

inline std::size_t checked_count(double v, const char *what, std::size_t lo, std::size_t hi)
{
    if (!(v >= static_cast<double>(lo) && v <= static_cast<double>(hi)) || v != std::floor(v))
        throw std::invalid_argument(std::string("invalid ") + what + " " + format_double(v) + " (expected an integer in [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + "])");
    return static_cast<std::size_t>(v);
}

inline std::vector<JobSpec> plan_jobs(ExperimentKind kind, const RunConfig &base, const std::vector<double> &values,
                                      const std::vector<channel::ScenarioKind> &scenarios)
{
    const auto &d = base.data;
    std::vector<JobSpec> jobs;
    for (auto sc : scenarios)
        for (std::size_t r = 0; r < base.repeats; ++r)
            switch (kind)
            {
            case ExperimentKind::interp_sweep:
                for (double v : values)
                    jobs.push_back({sc, d.history_len, checked_count(v, "interpolation factor", 1, 64),
                                    d.scenario.ricean_k_low_db, r, true, false, false});
                break;
            case ExperimentKind::history_sweep:
                for (double v : values)
                {
                    const auto m = checked_count(v, "history length", 1, d.csi_updates);
                    // The baselines do not depend on m; they run alongside the default length.
                    const bool ref = m == d.history_len;
                    jobs.push_back({sc, m, d.interpolation_factor, d.scenario.ricean_k_low_db, r, true, ref, ref});
                }
                break;
            case ExperimentKind::eta_profile:
                jobs.push_back({sc, d.history_len, d.interpolation_factor, d.scenario.ricean_k_low_db, r, true, true, true});
                break;
            case ExperimentKind::k_sweep:
                for (double v : values)
                {
                    if (!std::isfinite(v) || v < -30.0 || v > 60.0)
                        throw std::invalid_argument("invalid Ricean K " + format_double(v) + " dB");
                    jobs.push_back({sc, d.history_len, d.interpolation_factor, {v}, r, true, true, true});
                }
                break;
            }
    return jobs;
}

inline ExperimentResult run_experiment(ExperimentKind kind, const RunConfig &config, const ExperimentOptions &opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.kind = kind;
    res.config = config;
    res.digest = config_digest(config);
    res.values = opt.values.empty() ? default_sweep_values(kind) : opt.values;
    if (opt.scenarios.empty())
        throw std::invalid_argument("run_experiment: no scenarios");
    const auto jobs = plan_jobs(kind, config, res.values, opt.scenarios);

    const std::size_t outer = std::max<std::size_t>(1, std::min(opt.threads, jobs.size()));
    const std::size_t inner = std::max<std::size_t>(1, opt.threads / outer);
    std::vector<std::vector<RunResult>> per(jobs.size());
    parallel_for(
        jobs.size(), [&](std::size_t i) { per[i] = run_job(config, jobs[i], opt.keep_traces, inner, opt.log); }, outer);
    for (auto &v : per)
        for (auto &r : v)
            res.runs.push_back(std::move(r));
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Runs matching a filter, in plan order.
inline std::vector<const RunResult *> select(const ExperimentResult &res, channel::ScenarioKind sc, Method m)
{
    std::vector<const RunResult *> out;
    for (const auto &r : res.runs)
        if (r.scenario == sc && r.method == m)
            out.push_back(&r);
    return out;
}

inline double median(std::vector<double> v)
{
    if (v.empty())
        throw std::invalid_argument("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Mean validation loss over the last `tail` epochs of a trace.
inline double converged_val_loss(const std::vector<predictor::EpochStats> &trace, std::size_t tail = 3)
{
    if (trace.size() < 2)
        throw std::invalid_argument("converged_val_loss: trace has no training epochs");
    tail = std::min(tail, trace.size() - 1);
    double s = 0.0;
    for (std::size_t i = trace.size() - tail; i < trace.size(); ++i)
        s += trace[i].val_loss;
    return s / static_cast<double>(tail);
}

} // namespace beampred::harness
