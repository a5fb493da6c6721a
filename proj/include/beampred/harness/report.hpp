// SPDX-License-Identifier: Apache-2.0
//
// CSV tables, SVG line plots and a JSON run summary for experiment results.
// CSVs carry only seeded quantities so that equal seeds give equal bytes;
// wall-clock figures go to the JSON summary.

#pragma once

#include "experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace beampred::harness
{

inline std::string csv_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

class CsvTable
{
  public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void comment(const std::string &key, const std::string &value) { comments_.push_back("# " + key + " = " + value); }

    void row(std::vector<std::string> cells)
    {
        if (cells.size() != columns_.size())
            throw std::logic_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                                   std::to_string(columns_.size()));
        rows_.push_back(std::move(cells));
    }

    const std::vector<std::vector<std::string>> &rows() const { return rows_; }

    std::string text() const
    {
        std::string o;
        for (const auto &c : comments_)
            o += c + "\n";
        auto line = [&](const std::vector<std::string> &cells) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                o += (i ? "," : "") + cells[i];
            o += "\n";
        };
        line(columns_);
        for (const auto &r : rows_)
            line(r);
        return o;
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::string> comments_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path &p, const std::string &text)
{
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write '" + p.string() + "'");
    f << text;
    if (!f)
        throw std::runtime_error("write failed for '" + p.string() + "'");
}

inline void add_provenance(CsvTable &t, const ExperimentResult &res)
{
    t.comment("config_digest", res.digest);
    t.comment("experiment", to_string(res.kind));
    t.comment("seed", std::to_string(res.config.data.seed));
    t.comment("repeats", std::to_string(res.config.repeats));
    t.comment("num_samples", std::to_string(res.config.data.num_samples));
    t.comment("epochs", std::to_string(res.config.train.epochs));
}

inline std::string eta_bin_label(std::size_t b, std::size_t bins)
{
    return csv_number((static_cast<double>(b) + 0.5) / static_cast<double>(bins));
}

inline CsvTable trace_table(const std::vector<TraceRow> &rows, const std::string &digest)
{
    CsvTable t({"episode_id", "query_time_s", "eta", "gamma", "predicted_beam", "optimal_beam", "gain_ratio"});
    t.comment("config_digest", digest);
    for (const auto &r : rows)
        t.row({std::to_string(r.episode_id), csv_number(r.query_time_s), csv_number(r.eta), std::to_string(r.gamma),
               std::to_string(r.predicted_beam), std::to_string(r.optimal_beam), csv_number(r.gain_ratio)});
    return t;
}

inline CsvTable loss_trace_table(const std::vector<predictor::EpochStats> &trace, const std::string &digest)
{
    CsvTable t({"epoch", "train_loss", "val_loss", "val_interp_loss"});
    t.comment("config_digest", digest);
    for (const auto &e : trace)
        t.row({std::to_string(e.epoch), csv_number(e.train_loss), csv_number(e.val_loss), csv_number(e.val_interp_loss)});
    return t;
}

// fig2: loss traces; fig3 / fig5: one row per run; fig4: eta bins pooled over repeats.
inline CsvTable figure_table(const ExperimentResult &res)
{
    const auto sc = [](const RunResult &r) { return channel::to_string(r.scenario); };
    switch (res.kind)
    {
    case ExperimentKind::interp_sweep: {
        CsvTable t({"scenario", "gamma", "repeat", "seed", "epoch", "train_loss", "val_loss", "val_interp_loss"});
        add_provenance(t, res);
        t.comment("val_loss", "cross-entropy of the timing-selected head against the optimum at each query");
        for (const auto &r : res.runs)
            for (const auto &e : r.report.loss_trace)
                t.row({sc(r), std::to_string(r.interpolation_factor), std::to_string(r.repeat), std::to_string(r.seed),
                       std::to_string(e.epoch), csv_number(e.train_loss), csv_number(e.val_loss),
                       csv_number(e.val_interp_loss)});
        return t;
    }
    case ExperimentKind::history_sweep: {
        CsvTable t({"scenario", "method", "history_len", "repeat", "seed", "mean_ratio", "n"});
        add_provenance(t, res);
        for (const auto &r : res.runs)
            t.row({sc(r), to_string(r.method), std::to_string(r.history_len), std::to_string(r.repeat),
                   std::to_string(r.seed), csv_number(r.report.mean_gain_ratio), std::to_string(r.report.n)});
        return t;
    }
    case ExperimentKind::eta_profile: {
        CsvTable t({"scenario", "method", "eta_bin", "mean_ratio", "n"});
        add_provenance(t, res);
        t.comment("eta_bins", "deciles of [0,1); eta_bin is the bin centre");
        for (auto scenario : {channel::ScenarioKind::stationary, channel::ScenarioKind::non_stationary})
            for (auto m : {Method::proposed, Method::ekf, Method::noprior})
            {
                const auto runs = select(res, scenario, m);
                if (runs.empty())
                    continue;
                const std::size_t bins = runs.front()->report.per_eta_bin.size();
                for (std::size_t b = 0; b < bins; ++b)
                {
                    double sum = 0.0;
                    std::size_t n = 0;
                    for (const auto *r : runs)
                    {
                        const auto &s = r->report.per_eta_bin[b];
                        sum += s.mean_ratio * static_cast<double>(s.n);
                        n += s.n;
                    }
                    t.row({channel::to_string(scenario), to_string(m), eta_bin_label(b, bins),
                           csv_number(n ? sum / static_cast<double>(n) : 0.0), std::to_string(n)});
                }
            }
        return t;
    }
    case ExperimentKind::k_sweep: {
        CsvTable t({"scenario", "method", "ricean_k_db", "repeat", "seed", "mean_ratio", "n"});
        add_provenance(t, res);
        for (const auto &r : res.runs)
            t.row({sc(r), to_string(r.method), csv_number(r.ricean_k_db.front()), std::to_string(r.repeat),
                   std::to_string(r.seed), csv_number(r.report.mean_gain_ratio), std::to_string(r.report.n)});
        return t;
    }
    }
    throw std::logic_error("figure_table: unknown experiment");
}

struct Series
{
    std::string name;
    std::vector<std::pair<double, double>> points;
};

inline std::string svg_escape(const std::string &s)
{
    std::string o;
    for (char c : s)
    {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else
            o += c;
    }
    return o;
}

inline std::string svg_line_plot(const std::string &title, const std::string &xlabel, const std::string &ylabel,
                                 const std::vector<Series> &series)
{
    const double w = 640, h = 420, ml = 70, mr = 170, mt = 40, mb = 55;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto &s : series)
        for (auto [x, y] : s.points)
        {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (x0 > x1)
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12)
        x1 = x0 + 1;
    if (y1 - y0 < 1e-12)
        y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
    static const char *colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << svg_escape(title) << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i)
    {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << csv_number(xv).substr(0, 5)
          << "</text>\n";
        o << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << csv_number(yv).substr(0, 5)
          << "</text>\n";
    }
    o << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << svg_escape(xlabel)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << (mt + h - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i)
    {
        const char *c = colours[i % 8];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : series[i].points)
            o << px(x) << "," << py(y) << " ";
        o << "\"/>\n";
        const double ly = mt + 16 + 18.0 * static_cast<double>(i);
        o << "<line x1=\"" << w - mr + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << w - mr + 32 << "\" y2=\"" << ly - 4
          << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << w - mr + 36 << "\" y=\"" << ly << "\">" << svg_escape(series[i].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// Per (scenario, method, x) mean over repeats.
inline std::vector<Series> ratio_series(const ExperimentResult &res, const std::function<double(const RunResult &)> &x)
{
    std::vector<Series> out;
    for (auto sc : {channel::ScenarioKind::stationary, channel::ScenarioKind::non_stationary})
        for (auto m : {Method::proposed, Method::ekf, Method::noprior})
        {
            std::map<double, std::pair<double, std::size_t>> acc;
            for (const auto *r : select(res, sc, m))
            {
                auto &a = acc[x(*r)];
                a.first += r->report.mean_gain_ratio;
                ++a.second;
            }
            if (acc.empty())
                continue;
            Series s{channel::to_string(sc) + " " + to_string(m), {}};
            for (auto &[xv, a] : acc)
                s.points.push_back({xv, a.first / static_cast<double>(a.second)});
            out.push_back(std::move(s));
        }
    return out;
}

inline std::string figure_svg(const ExperimentResult &res)
{
    switch (res.kind)
    {
    case ExperimentKind::interp_sweep: {
        std::vector<Series> out;
        for (const auto &r : res.runs)
        {
            if (r.repeat != 0)
                continue;
            Series s{channel::to_string(r.scenario) + " G=" + std::to_string(r.interpolation_factor), {}};
            for (const auto &e : r.report.loss_trace)
                s.points.push_back({static_cast<double>(e.epoch), e.val_loss});
            out.push_back(std::move(s));
        }
        return svg_line_plot("Validation loss by interpolation factor", "epoch", "cross-entropy", out);
    }
    case ExperimentKind::history_sweep:
        return svg_line_plot("Gain ratio by CSI history length", "m", "mean gain ratio",
                             ratio_series(res, [](const RunResult &r) { return static_cast<double>(r.history_len); }));
    case ExperimentKind::eta_profile: {
        std::vector<Series> out;
        for (auto sc : {channel::ScenarioKind::stationary, channel::ScenarioKind::non_stationary})
            for (auto m : {Method::proposed, Method::ekf, Method::noprior})
            {
                const auto runs = select(res, sc, m);
                if (runs.empty())
                    continue;
                Series s{channel::to_string(sc) + " " + to_string(m), {}};
                const auto &bins = runs.front()->report.per_eta_bin;
                for (std::size_t b = 0; b < bins.size(); ++b)
                    s.points.push_back({(static_cast<double>(b) + 0.5) / static_cast<double>(bins.size()), bins[b].mean_ratio});
                out.push_back(std::move(s));
            }
        return svg_line_plot("Gain ratio by timing offset", "eta", "mean gain ratio", out);
    }
    case ExperimentKind::k_sweep:
        return svg_line_plot("Gain ratio by Ricean K", "K (dB)", "mean gain ratio",
                             ratio_series(res, [](const RunResult &r) { return r.ricean_k_db.front(); }));
    }
    return {};
}

inline nlohmann::json report_json(const EvalReport &r)
{
    nlohmann::json j;
    j["mean_gain_ratio"] = r.mean_gain_ratio;
    j["exact_match"] = r.exact_match;
    j["n"] = r.n;
    auto &eb = j["per_eta_bin"] = nlohmann::json::array();
    for (std::size_t b = 0; b < r.per_eta_bin.size(); ++b)
        eb.push_back({{"eta_bin", (static_cast<double>(b) + 0.5) / static_cast<double>(r.per_eta_bin.size())},
                      {"mean_ratio", r.per_eta_bin[b].mean_ratio},
                      {"n", r.per_eta_bin[b].n}});
    auto &kb = j["per_k"] = nlohmann::json::array();
    for (const auto &[k, s] : r.per_k)
        kb.push_back({{"ricean_k_db", k}, {"mean_ratio", s.mean_ratio}, {"n", s.n}});
    auto &lt = j["loss_trace"] = nlohmann::json::array();
    for (const auto &e : r.loss_trace)
        lt.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"val_interp_loss", e.val_interp_loss},
                      {"seconds", e.seconds}});
    j["seconds"] = r.seconds;
    return j;
}

inline nlohmann::json experiment_json(const ExperimentResult &res)
{
    nlohmann::json j;
    j["experiment"] = to_string(res.kind);
    j["config_digest"] = res.digest;
    j["config"] = to_kv_text(res.config);
    j["repeats"] = res.config.repeats;
    j["seconds"] = res.seconds;
    j["threads"] = thread_count();
    auto &runs = j["runs"] = nlohmann::json::array();
    for (const auto &r : res.runs)
        runs.push_back({{"scenario", channel::to_string(r.scenario)},
                        {"method", to_string(r.method)},
                        {"history_len", r.history_len},
                        {"interpolation_factor", r.interpolation_factor},
                        {"ricean_k_db", r.ricean_k_db},
                        {"repeat", r.repeat},
                        {"seed", r.seed},
                        {"report", report_json(r.report)}});
    return j;
}

// figN.csv, figN.svg, figN.json and the echoed config under `dir`.
inline std::vector<std::filesystem::path> write_figure(const ExperimentResult &res, const std::filesystem::path &dir)
{
    const std::string stem = "fig" + std::to_string(figure_number(res.kind));
    std::vector<std::filesystem::path> out{dir / (stem + ".csv"), dir / (stem + ".svg"), dir / (stem + ".json"),
                                           dir / (stem + ".cfg")};
    write_text(out[0], figure_table(res).text());
    write_text(out[1], figure_svg(res));
    write_text(out[2], experiment_json(res).dump(2) + "\n");
    write_text(out[3], to_kv_text(res.config));
    for (const auto &r : res.runs)
        if (!r.trace.empty())
        {
            const auto p = dir / (stem + "_trace_" + channel::to_string(r.scenario) + "_" + to_string(r.method) + "_r" +
                                  std::to_string(r.repeat) + ".csv");
            write_text(p, trace_table(r.trace, res.digest).text());
            out.push_back(p);
        }
    return out;
}

} // namespace beampred::harness
