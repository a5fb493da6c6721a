// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, desk scale. Exit status
// is the number of failed criteria (capped at 10).
//
//   acceptance [--work-dir DIR] [--only 1,4,9]

#include <beampred/harness/gradcheck_suite.hpp>
#include <beampred/harness/report.hpp>
#include <beampred/predictor/checkpoint.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <set>

using namespace beampred;
using namespace beampred::harness;
namespace fs = std::filesystem;
using channel::ScenarioKind;

namespace
{

// Pinned tolerances.
constexpr double grad_rel_tol = 1e-3;
constexpr double grad_abs_floor = 1e-6;
constexpr double grad_max_seconds = 60.0;
constexpr std::size_t sweep_channels = 100;
constexpr double los_match_min = 0.95;
constexpr double los_max_seconds = 20.0 * 60.0;
constexpr double init_loss_tol = 0.5; // |val loss at init - ln 32|
constexpr double learned_loss_max = 1.5;
constexpr std::size_t learned_within_epochs = 15;
constexpr double ordering_ambiguity = 0.02; // relative gap below which 3 seeds decide
constexpr double trend_noise = 0.01;        // allowed drop between neighbouring sweep points
constexpr double ekf_margin = 0.05;
constexpr double stretch_min_bin = 0.85;
constexpr std::size_t seeds = 3;
constexpr std::size_t ekf_cv_updates = 10;
constexpr std::size_t pd_cycles = 10000;

using clock_type = std::chrono::steady_clock;
double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

std::string fmt(double v, int prec = 4)
{
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return b;
}

struct Outcome
{
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

struct Point
{
    ScenarioKind scenario = ScenarioKind::stationary;
    std::size_t m = 5;
    std::size_t gamma = 4;
    double k_db = 8.0;
    bool los_only = false;
    std::size_t repeat = 0;

    std::string key() const
    {
        return channel::to_string(scenario) + " m=" + std::to_string(m) + " gamma=" + std::to_string(gamma) +
               " K=" + format_double(k_db) + (los_only ? " los" : "") + " r=" + std::to_string(repeat);
    }
};

// Memoised desk-scale runs shared between criteria.
class Runs
{
  public:
    explicit Runs(RunConfig base) : base_(std::move(base)) {}

    const RunResult &get(const Point &p, Method method)
    {
        const std::string k = p.key() + " " + to_string(method);
        if (auto it = cache_.find(k); it != cache_.end())
            return it->second;
        RunConfig cfg = base_;
        cfg.data.scenario.suppress_clusters = p.los_only;
        JobSpec job{p.scenario, p.m, p.gamma, {p.k_db}, p.repeat, method == Method::proposed, method == Method::ekf,
                    method == Method::noprior};
        const auto t0 = clock_type::now();
        auto res = run_job(cfg, job, false, thread_count(), {});
        auto &r = cache_.emplace(k, std::move(res.front())).first->second;
        std::cerr << "  [run] " << k << " " << to_string(method) << ": ratio " << fmt(r.report.mean_gain_ratio)
                  << " (" << fmt(since(t0), 1) << " s)" << std::endl;
        return r;
    }

    double ratio(const Point &p, Method m) { return get(p, m).report.mean_gain_ratio; }

    double median_ratio(Point p, Method m)
    {
        std::vector<double> v;
        for (std::size_t r = 0; r < seeds; ++r)
        {
            p.repeat = r;
            v.push_back(ratio(p, m));
        }
        return median(v);
    }

    const std::map<std::string, RunResult> &all() const { return cache_; }
    const RunConfig &base() const { return base_; }

  private:
    RunConfig base_;
    std::map<std::string, RunResult> cache_;
};

double min_bin(const EvalReport &r)
{
    double lo = 1.0;
    for (const auto &b : r.per_eta_bin)
        if (b.n)
            lo = std::min(lo, b.mean_ratio);
    return lo;
}

bool non_decreasing(const std::vector<double> &v, double tol)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1] - tol)
            return false;
    return true;
}

std::string list(const std::vector<double> &v)
{
    std::string s;
    for (double x : v)
        s += (s.empty() ? "" : "/") + fmt(x, 3);
    return s;
}

// ---------------------------------------------------------------------------

Outcome c1_gradients()
{
    const auto t0 = clock_type::now();
    nn::GradCheckSettings s;
    s.rel_tol = grad_rel_tol;
    s.abs_floor = grad_abs_floor;
    const auto results = run_gradient_suite(7, s);
    const double secs = since(t0);
    std::size_t failed = 0, checked = 0;
    std::string first;
    for (const auto &r : results)
    {
        checked += r.checked;
        if (!r.passed())
        {
            ++failed;
            if (first.empty())
                first = " first failure " + r.name + " (" + r.worst + ")";
        }
    }
    return {1, "gradient oracle", failed == 0 && secs < grad_max_seconds,
            std::to_string(results.size()) + " checks, " + std::to_string(checked) + " entries, " +
                std::to_string(failed) + " failed, " + fmt(secs, 1) + " s (limit " + fmt(grad_max_seconds, 0) + " s)" +
                first};
}

// |w^H H f| over every pair, first maximum wins.
beams::BeamChoice literal_sweep(const CMatrix &h, const beams::Codebook &tx, const beams::Codebook &rx)
{
    beams::BeamChoice best;
    best.gain = -1.0;
    for (std::size_t i = 0; i < tx.size(); ++i)
        for (std::size_t j = 0; j < rx.size(); ++j)
        {
            cplx acc = 0.0;
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index t = 0; t < h.cols(); ++t)
                    acc += std::conj(rx[j](r)) * h(r, t) * tx[i](t);
            if (std::abs(acc) > best.gain)
                best = {i, j, std::abs(acc)};
        }
    return best;
}

Outcome c2_sweep()
{
    std::size_t agree = 0, total = 0;
    Rng rng(2024);
    for (auto [nr, nt] : {std::pair<std::size_t, std::size_t>{1, 32}, {4, 16}})
    {
        channel::ArrayConfig a;
        a.num_rx_antennas = nr;
        a.num_tx_antennas = nt;
        a.carrier_frequency_hz = 28e9;
        const auto tx = beams::dft_codebook(a, nt, channel::ArraySide::tx);
        const auto rx = nr == 1 ? beams::trivial_codebook(a) : beams::dft_codebook(a, nr, channel::ArraySide::rx);
        for (std::size_t c = 0; c < sweep_channels; ++c)
        {
            CMatrix h(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nt));
            for (Eigen::Index i = 0; i < h.size(); ++i)
                h.data()[i] = complex_gaussian(rng);
            const auto a1 = beams::sweep_optimal_beam(h, tx, rx);
            const auto a2 = literal_sweep(h, tx, rx);
            agree += a1.tx_index == a2.tx_index && a1.rx_index == a2.rx_index;
            ++total;
        }
    }
    return {2, "beam-sweep oracle", agree == total,
            std::to_string(agree) + "/" + std::to_string(total) + " exact index matches (1x32 and 4x16)"};
}

Outcome c3_los(Runs &runs)
{
    const auto t0 = clock_type::now();
    Point p;
    p.los_only = true;
    const auto &pr = runs.get(p, Method::proposed);
    const auto &ek = runs.get(p, Method::ekf);
    auto rate = [](const RunResult &r) { return r.report.exact_match; };
    const double secs = since(t0);
    const bool ok = rate(pr) >= los_match_min && rate(ek) >= los_match_min && secs < los_max_seconds;
    return {3, "LOS geometry sanity", ok,
            "exact match proposed " + fmt(rate(pr)) + ", ekf " + fmt(rate(ek)) + " (need >= " + fmt(los_match_min, 2) +
                "), " + fmt(secs, 0) + " s"};
}

Outcome c4_learning(Runs &runs)
{
    const auto &tr = runs.get(Point{}, Method::proposed).report.loss_trace;
    const double init = tr.front().val_loss;
    double best = init;
    std::size_t best_epoch = 0;
    for (const auto &e : tr)
        if (e.epoch <= learned_within_epochs && e.val_loss < best)
        {
            best = e.val_loss;
            best_epoch = e.epoch;
        }
    const bool ok = std::abs(init - std::log(32.0)) < init_loss_tol && best < learned_loss_max;
    return {4, "learning signal", ok,
            "val CE " + fmt(init) + " at init (ln 32 = " + fmt(std::log(32.0)) + ") -> " + fmt(best) + " at epoch " +
                std::to_string(best_epoch) + " (need < " + fmt(learned_loss_max, 2) + ")"};
}

Outcome c5_ordering(Runs &runs)
{
    bool ok = true;
    std::string detail;
    for (auto sc : {ScenarioKind::stationary, ScenarioKind::non_stationary})
    {
        auto loss = [&](std::size_t gamma, std::size_t r) {
            Point p;
            p.scenario = sc;
            p.gamma = gamma;
            p.repeat = r;
            return converged_val_loss(runs.get(p, Method::proposed).report.loss_trace);
        };
        double l4 = loss(4, 0), l1 = loss(1, 0);
        std::string how = "seed 1";
        if (std::abs(l1 - l4) < ordering_ambiguity * l1)
        {
            std::vector<double> a, b;
            for (std::size_t r = 0; r < seeds; ++r)
            {
                a.push_back(loss(4, r));
                b.push_back(loss(1, r));
            }
            l4 = median(a);
            l1 = median(b);
            how = "median of 3";
        }
        ok = ok && l4 < l1;
        detail += (detail.empty() ? "" : "; ") + channel::to_string(sc) + " gamma4 " + fmt(l4) + " vs gamma1 " + fmt(l1) +
                  " (" + how + ")";
    }
    return {5, "interpolation-factor ordering", ok, detail};
}

Outcome c6_history(Runs &runs)
{
    bool trend = true;
    std::string detail;
    for (auto sc : {ScenarioKind::stationary, ScenarioKind::non_stationary})
    {
        std::vector<double> med;
        for (std::size_t m : {1u, 3u, 5u})
        {
            Point p;
            p.scenario = sc;
            p.m = m;
            med.push_back(runs.median_ratio(p, Method::proposed));
        }
        const bool t = non_decreasing(med, trend_noise);
        trend = trend && t;
        detail += channel::to_string(sc) + " m=1/3/5 " + list(med) + (t ? "" : " (drop)") + "; ";
    }
    Point ns;
    ns.scenario = ScenarioKind::non_stationary;
    const double prop = runs.median_ratio(ns, Method::proposed);
    const double ekf = runs.median_ratio(ns, Method::ekf);
    const bool margin = prop - ekf >= ekf_margin;
    detail += "non_stationary m=5 proposed " + fmt(prop, 3) + " vs ekf " + fmt(ekf, 3) + " (margin " +
              fmt(100.0 * (prop - ekf), 1) + " pp, need >= " + fmt(100.0 * ekf_margin, 0) + ")";
    return {6, "history-length trend", trend && margin, detail};
}

Outcome c7_eta(Runs &runs)
{
    Point p;
    p.scenario = ScenarioKind::non_stationary;
    const double pr = min_bin(runs.get(p, Method::proposed).report);
    const double ek = min_bin(runs.get(p, Method::ekf).report);
    const double np = min_bin(runs.get(p, Method::noprior).report);
    return {7, "eta robustness", pr > ek && pr > np,
            "non_stationary min bin proposed " + fmt(pr, 3) + ", ekf " + fmt(ek, 3) + ", noprior " + fmt(np, 3) +
                "; stretch >= " + fmt(stretch_min_bin, 2) + (pr >= stretch_min_bin ? " met" : " not met")};
}

Outcome c8_ricean(Runs &runs)
{
    std::vector<double> med;
    for (double k : {0.0, 8.0, 20.0})
    {
        Point p;
        p.k_db = k;
        med.push_back(runs.median_ratio(p, Method::proposed));
    }
    Point r0;
    r0.k_db = 0.0;
    const double ekf0 = runs.median_ratio(r0, Method::ekf);
    const bool trend = non_decreasing(med, trend_noise);
    const bool beats = med.front() > ekf0;
    return {8, "Ricean-K trend", trend && beats,
            "stationary proposed K=0/8/20 dB " + list(med) + (trend ? "" : " (drop)") + "; K=0 proposed " +
                fmt(med.front(), 3) + " vs ekf " + fmt(ekf0, 3)};
}

Outcome c9_determinism(const fs::path &work)
{
    bool ok = true;
    std::string detail;
    auto note = [&](const std::string &what, bool good) {
        ok = ok && good;
        detail += (detail.empty() ? "" : ", ") + what + (good ? " ok" : " MISMATCH");
    };

    datagen::DatasetConfig dc;
    dc.num_samples = 64;
    dc.seed = 3;
    const auto ds = datagen::generate_dataset(dc);
    const auto dpath = (work / "c9_dataset.bin").string();
    datagen::save_dataset(ds, dpath);
    const auto back = datagen::load_dataset(dpath, &dc);
    note("dataset round trip", datagen::serialize_dataset(back) == datagen::serialize_dataset(ds) &&
                                   binio::read_file(dpath) == datagen::serialize_dataset(ds));
    note("dataset regeneration", datagen::serialize_dataset(datagen::generate_dataset(dc, 1)) ==
                                     datagen::serialize_dataset(ds));

    predictor::TrainSettings ts;
    ts.epochs = 2;
    ts.batch_size = 16;
    auto trained = predictor::train(ds, predictor::predictor_config_for(ds), ts);
    const auto cpath = (work / "c9_model.ckpt").string();
    predictor::save_model(trained.model, cpath);
    const auto bytes = binio::read_file(cpath);
    auto loaded = predictor::load_model(cpath);
    note("checkpoint round trip", predictor::serialize_model(loaded) == bytes);
    note("checkpoint predictions", mean_ratio(evaluate_proposed(loaded, ds)) == mean_ratio(evaluate_proposed(trained.model, ds)));

    RunConfig rc = scale_preset(Scale::desk);
    rc.data.num_samples = 48;
    rc.data.queries_per_sample = 4;
    rc.train.epochs = 1;
    rc.train.batch_size = 16;
    ExperimentOptions opt;
    opt.scenarios = {ScenarioKind::non_stationary};
    opt.keep_traces = true;
    std::string first;
    for (int run = 0; run < 2; ++run)
    {
        const auto res = run_experiment(ExperimentKind::eta_profile, rc, opt);
        const auto dir = work / ("c9_fig4_run" + std::to_string(run));
        fs::remove_all(dir);
        std::string csvs;
        for (const auto &p : write_figure(res, dir))
            if (p.extension() == ".csv")
                csvs += p.filename().string() + "\n" + binio::read_file(p.string());
        if (run == 0)
            first = csvs;
        else
            note("same-seed experiment CSVs", !csvs.empty() && csvs == first);
    }
    return {9, "determinism and persistence", ok, detail};
}

Outcome c10_ekf()
{
    using namespace baselines;
    const channel::ArrayConfig arr;
    const auto cb = beams::dft_codebook(arr, arr.num_tx_antennas);
    const double beamwidth = 2.0 / static_cast<double>(arr.num_tx_antennas); // sin-space main lobe half width
    EkfConfig cfg;
    auto channel_at = [&](double theta) {
        return CMatrix(cplx(0.8, 0.6) * channel::steering_vector(theta, arr, channel::ArraySide::tx).adjoint());
    };
    auto noiseless = [&](const CMatrix &h, const std::vector<CVector> &b) {
        CVector y(static_cast<Eigen::Index>(b.size()));
        for (std::size_t j = 0; j < b.size(); ++j)
            y(static_cast<Eigen::Index>(j)) = (h * b[j])(0);
        return y;
    };
    auto pick = [&](double theta) {
        std::vector<CVector> b;
        for (auto j : nearest_beams(cb, theta, cfg.beams_per_update))
            b.push_back(cb[j]);
        return b;
    };

    double worst = 0.0;
    for (double omega : {-1.0, 0.5, 2.0})
        for (double theta0 : {-0.6, 0.0, 0.4})
        {
            auto s = ekf_initialize(noiseless(channel_at(theta0), cb.beams), cb, cfg, 0.0);
            double truth = theta0;
            for (std::size_t k = 1; k <= ekf_cv_updates; ++k)
            {
                const double t = static_cast<double>(k) * cfg.update_period_s;
                truth = theta0 + omega * t;
                s = ekf_predict(s, t - s.last_update_s, cfg.process_noise);
                const auto b = pick(s.x(0));
                s = ekf_update(s, noiseless(channel_at(truth), b), b, arr, 1e-12, cfg.divergence_inflation);
            }
            worst = std::max(worst, std::abs(std::sin(s.x(0)) - std::sin(truth)));
        }

    Rng rng(10);
    EkfState s;
    s.P = Mat3(cfg.initial_variance.asDiagonal());
    bool pd = true;
    double worst_asym = 0.0;
    for (std::size_t k = 0; k < pd_cycles; ++k)
    {
        const double truth = 0.5 * std::sin(0.3 * static_cast<double>(k) * cfg.update_period_s);
        s = ekf_predict(s, cfg.update_period_s, cfg.process_noise);
        const auto b = pick(s.x(0));
        double nv = 0.0;
        const auto y = measure(channel_at(truth), b, 10.0, rng, nv);
        s = ekf_update(s, y, b, arr, nv, cfg.divergence_inflation);
        worst_asym = std::max(worst_asym, (s.P - s.P.transpose()).cwiseAbs().maxCoeff());
        pd = pd && Eigen::SelfAdjointEigenSolver<Mat3>(s.P).eigenvalues().minCoeff() > 0.0;
    }
    const bool ok = worst < beamwidth && pd && worst_asym < 1e-12;
    return {10, "EKF consistency", ok,
            "worst sin-space error after " + std::to_string(ekf_cv_updates) + " noiseless updates " + fmt(worst, 5) +
                " (beamwidth " + fmt(beamwidth, 3) + "); P symmetric PD over " + std::to_string(pd_cycles) +
                " cycles: " + (pd ? "yes" : "no")};
}

nlohmann::json runs_json(const Runs &runs)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto &[k, r] : runs.all())
    {
        auto e = report_json(r.report);
        e["key"] = k;
        j.push_back(std::move(e));
    }
    return j;
}

} // namespace

int main(int argc, char **argv)
{
    std::string work = "acceptance_work";
    std::vector<int> only;
    CLI::App app{"beampred acceptance suite"};
    app.add_option("--work-dir", work, "scratch directory");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected(only.begin(), only.end());
    auto want = [&](int id) { return selected.empty() || selected.count(id); };

    fs::create_directories(work);
    const RunConfig base = scale_preset(Scale::desk);
    std::cerr << "desk scale: " << base.data.num_samples << " samples, " << base.train.epochs << " epochs, config "
              << config_digest(base) << std::endl;
    Runs runs(base);

    std::vector<std::function<Outcome()>> criteria{
        [] { return c1_gradients(); },
        [] { return c2_sweep(); },
        [&] { return c3_los(runs); },
        [&] { return c4_learning(runs); },
        [&] { return c5_ordering(runs); },
        [&] { return c6_history(runs); },
        [&] { return c7_eta(runs); },
        [&] { return c8_ricean(runs); },
        [&] { return c9_determinism(work); },
        [] { return c10_ekf(); },
    };

    std::vector<Outcome> results;
    nlohmann::json summary;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        if (!want(static_cast<int>(i + 1)))
            continue;
        const auto t0 = clock_type::now();
        Outcome o;
        try
        {
            o = criteria[i]();
        }
        catch (const std::exception &e)
        {
            o = {static_cast<int>(i + 1), "criterion " + std::to_string(i + 1), false, std::string("error: ") + e.what()};
        }
        const double secs = since(t0);
        std::cout << (o.pass ? "PASS" : "FAIL") << "  C" << o.id << " " << o.name << ": " << o.detail << " ["
                  << fmt(secs, 1) << " s]" << std::endl;
        summary["criteria"].push_back({{"id", o.id}, {"name", o.name}, {"pass", o.pass}, {"detail", o.detail},
                                       {"seconds", secs}});
        results.push_back(std::move(o));
    }
    summary["config_digest"] = config_digest(base);
    summary["runs"] = runs_json(runs);
    write_text(fs::path(work) / "acceptance.json", summary.dump(2) + "\n");

    const auto failed = std::count_if(results.begin(), results.end(), [](const Outcome &o) { return !o.pass; });
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed"
              << std::endl;
    return static_cast<int>(std::min<long>(failed, 10));
}
