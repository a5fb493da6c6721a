// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 runtime failure (including
// a failed gradient check), 2 usage error.

#pragma once

#include "../predictor/checkpoint.hpp"
#include "gradcheck_suite.hpp"
#include "report.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace beampred::harness
{

struct CliOptions
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string scale = "desk";
    std::optional<std::size_t> repeats;
    std::string scenario;
    std::string data_path;
    std::string model_path;
    std::string method = "proposed";
    int figure = 0;
    bool quiet = false;
};

inline RunConfig resolve_config(const CliOptions &o)
{
    RunConfig c = scale_preset(parse_scale(o.scale));
    if (!o.config_path.empty())
        c = load_run_config(o.config_path, c);
    if (o.seed)
        set_seed(c, *o.seed);
    if (o.repeats)
    {
        if (*o.repeats < 1)
            throw ConfigError("--repeats must be >= 1");
        c.repeats = *o.repeats;
    }
    if (!o.scenario.empty())
        c.data.scenario.scenario_kind = channel::parse_scenario_kind(o.scenario);
    return c;
}

inline datagen::Dataset obtain_dataset(const CliOptions &o, const RunConfig &cfg, std::ostream &log)
{
    if (o.data_path.empty())
    {
        if (!o.quiet)
            log << "generating " << cfg.data.num_samples << " samples ("
                << channel::to_string(cfg.data.scenario.scenario_kind) << ")\n";
        return datagen::generate_dataset(cfg.data);
    }
    // An explicit config or seed must describe the stored data.
    const bool pinned = !o.config_path.empty() || o.seed.has_value();
    return datagen::load_dataset(o.data_path, pinned ? &cfg.data : nullptr);
}

inline Method parse_method(const std::string &s)
{
    if (s == "proposed")
        return Method::proposed;
    if (s == "ekf")
        return Method::ekf;
    if (s == "noprior")
        return Method::noprior;
    throw ConfigError("unknown method '" + s + "'");
}

inline predictor::EpochCallback epoch_logger(std::ostream &log, bool quiet)
{
    if (quiet)
        return {};
    return [&log](const predictor::EpochStats &e) {
        log << "epoch " << e.epoch << " train " << csv_number(e.train_loss) << " val " << csv_number(e.val_loss) << " ("
            << csv_number(e.seconds) << " s)\n";
    };
}

inline int cmd_gen_data(const CliOptions &o, std::ostream &out, std::ostream &log)
{
    const auto cfg = resolve_config(o);
    const auto ds = obtain_dataset(o, cfg, log);
    const std::filesystem::path p = std::filesystem::path(o.out_dir) / "dataset.bin";
    std::filesystem::create_directories(p.parent_path());
    datagen::save_dataset(ds, p.string());
    out << "dataset " << p.string() << " samples " << ds.samples.size() << " digest " << ds.digest() << "\n";
    return 0;
}

inline int cmd_train(const CliOptions &o, std::ostream &out, std::ostream &log)
{
    const auto cfg = resolve_config(o);
    const auto ds = obtain_dataset(o, cfg, log);
    const auto method = parse_method(o.method);
    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    auto ts = cfg.train;
    std::vector<predictor::EpochStats> trace;
    const auto ckpt = dir / (o.method + ".ckpt");
    if (method == Method::proposed)
    {
        auto res = predictor::train(ds, predictor::predictor_config_for(ds, cfg.predictor_layers()), ts,
                                    epoch_logger(log, o.quiet));
        predictor::save_model(res.model, ckpt.string());
        trace = std::move(res.trace);
    }
    else if (method == Method::noprior)
    {
        auto res = baselines::train_noprior(ds, baselines::noprior_config_for(ds, cfg.noprior_layers()), ts,
                                            epoch_logger(log, o.quiet));
        predictor::save_model(res.model, ckpt.string());
        trace = std::move(res.trace);
    }
    else
        throw ConfigError("the ekf baseline has nothing to train");
    write_text(dir / (o.method + "_loss.csv"), loss_trace_table(trace, ds.digest()).text());
    out << "checkpoint " << ckpt.string() << " final val_loss " << csv_number(trace.back().val_loss) << "\n";
    return 0;
}

inline int cmd_eval(const CliOptions &o, std::ostream &out, std::ostream &log)
{
    const auto cfg = resolve_config(o);
    const auto method = parse_method(o.method);
    if (method != Method::ekf && o.model_path.empty())
        throw ConfigError("eval --method " + o.method + " needs --model <checkpoint>");
    const auto ds = obtain_dataset(o, cfg, log);
    std::vector<TraceRow> rows;
    if (method == Method::proposed)
    {
        auto model = predictor::load_model(o.model_path);
        const auto &pc = model.config();
        if (pc.history_len != ds.config.history_len || pc.interpolation_factor != ds.config.interpolation_factor ||
            pc.input_length != ds.input_length())
            throw ConfigError("checkpoint shape (m, Gamma, L) does not match the dataset");
        rows = evaluate_proposed(model, ds);
    }
    else if (method == Method::noprior)
    {
        auto model = predictor::load_noprior(o.model_path);
        if (model.config().input_length != ds.input_length())
            throw ConfigError("checkpoint input length does not match the dataset");
        rows = evaluate_noprior(model, ds);
    }
    else
        rows = evaluate_ekf(ds, cfg.ekf);

    const std::filesystem::path dir(o.out_dir);
    write_text(dir / ("trace_" + o.method + ".csv"), trace_table(rows, ds.digest()).text());
    const auto rep = make_report(rows);
    CsvTable t({"method", "eta_bin", "mean_ratio", "n"});
    t.comment("config_digest", ds.digest());
    t.comment("mean_ratio", csv_number(rep.mean_gain_ratio));
    for (std::size_t b = 0; b < rep.per_eta_bin.size(); ++b)
        t.row({o.method, eta_bin_label(b, rep.per_eta_bin.size()), csv_number(rep.per_eta_bin[b].mean_ratio),
               std::to_string(rep.per_eta_bin[b].n)});
    write_text(dir / ("summary_" + o.method + ".csv"), t.text());
    out << o.method << " mean_ratio " << csv_number(rep.mean_gain_ratio) << " exact_match "
        << csv_number(exact_match_rate(rows)) << " queries " << rows.size() << "\n";
    return 0;
}

inline int cmd_reproduce(const CliOptions &o, std::ostream &out, std::ostream &log)
{
    const auto cfg = resolve_config(o);
    const auto kind = experiment_for_figure(o.figure);
    ExperimentOptions opt;
    opt.keep_traces = kind == ExperimentKind::eta_profile;
    if (!o.scenario.empty())
        opt.scenarios = {channel::parse_scenario_kind(o.scenario)};
    if (!o.quiet)
        opt.log = [&log](const std::string &s) { log << s << "\n"; };
    const auto res = run_experiment(kind, cfg, opt);
    for (const auto &p : write_figure(res, o.out_dir))
        out << "wrote " << p.string() << "\n";
    out << to_string(kind) << " digest " << res.digest << " (" << csv_number(res.seconds) << " s)\n";
    return 0;
}

inline int cmd_grad_check(const CliOptions &o, std::ostream &out)
{
    const auto results = run_gradient_suite(o.seed.value_or(7));
    bool ok = true;
    for (const auto &r : results)
    {
        ok = ok && r.passed();
        out << (r.passed() ? "ok   " : "FAIL ") << r.name << "  checked " << r.checked << " max_abs " << r.max_abs_error
            << " max_rel " << r.max_rel_error;
        if (!r.passed())
            out << "  worst " << r.worst;
        out << "\n";
    }
    out << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
    return ok ? 0 : 1;
}

inline int cli(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
{
    CliOptions o;
    CLI::App app{"Sub-6 GHz assisted mmWave beam prediction workbench", "beampred"};
    app.require_subcommand(1);
    app.add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "seed for data, initialisation and shuffling");
    app.add_option("--out", o.out_dir, "output directory")->capture_default_str();
    app.add_option("--scale", o.scale, "desk (2048 samples, 15 epochs) or paper (10240, 40)")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    app.add_flag("-q,--quiet", o.quiet, "suppress progress output");

    auto scenario_opt = [&](CLI::App *c) {
        c->add_option("--scenario", o.scenario, "stationary or non_stationary")
            ->check(CLI::IsMember({"stationary", "non_stationary"}));
    };
    auto *gen = app.add_subcommand("gen-data", "generate and save a dataset")->fallthrough();
    scenario_opt(gen);
    auto *tr = app.add_subcommand("train", "train the proposed or no-prior model")->fallthrough();
    scenario_opt(tr);
    tr->add_option("--data", o.data_path, "dataset file (generated from the config when omitted)");
    tr->add_option("--method", o.method, "proposed or noprior")->check(CLI::IsMember({"proposed", "noprior"}));
    auto *ev = app.add_subcommand("eval", "evaluate a method on the validation split")->fallthrough();
    scenario_opt(ev);
    ev->add_option("--data", o.data_path, "dataset file (generated from the config when omitted)");
    ev->add_option("--model", o.model_path, "checkpoint for proposed / noprior");
    ev->add_option("--method", o.method, "proposed, ekf or noprior")->check(CLI::IsMember({"proposed", "ekf", "noprior"}));
    auto *rf = app.add_subcommand("reproduce-fig", "run the sweep behind figure 2, 3, 4 or 5")->fallthrough();
    rf->add_option("figure", o.figure, "figure number")->required()->check(CLI::IsMember({2, 3, 4, 5}));
    rf->add_option("--repeats", o.repeats, "independent training runs per point");
    scenario_opt(rf);
    auto *gc = app.add_subcommand("grad-check", "finite-difference gradient checks")->fallthrough();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::CallForAllHelp &)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch (const CLI::ParseError &e)
    {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try
    {
        if (gen->parsed())
            return cmd_gen_data(o, out, err);
        if (tr->parsed())
            return cmd_train(o, out, err);
        if (ev->parsed())
            return cmd_eval(o, out, err);
        if (rf->parsed())
            return cmd_reproduce(o, out, err);
        if (gc->parsed())
            return cmd_grad_check(o, out);
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

} // namespace beampred::harness
