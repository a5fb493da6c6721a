// SPDX-License-Identifier: Apache-2.0
//
// Training / validation samples drawn from simulated episodes.
//
// Every episode spans `csi_updates` low-band CSI instants. A sample is a
// window of m consecutive noisy angular-domain snapshots ending at t_n, the
// optimal mmWave beams at the Gamma interpolation instants after t_n, the
// optimal beam at t_n itself, and a set of query instants in [t_n, t_n + T)
// used for evaluation. Windows do not overlap and are taken from the end of
// the episode backwards.

#pragma once

#include "../beams.hpp"
#include "../binio.hpp"
#include "../channel.hpp"
#include "../digest.hpp"
#include "../parallel.hpp"
#include "../predictor/timing.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace beampred::datagen
{

using channel::ScenarioConfig;

struct DatasetConfig
{
    ScenarioConfig scenario;
    std::size_t history_len = 5;          // m
    std::size_t interpolation_factor = 4; // Gamma
    std::size_t num_samples = 2048;
    std::size_t queries_per_sample = 10;
    std::size_t csi_updates = 7; // per episode
    std::size_t windows_per_episode = 1;
    double train_fraction = 0.8;
    std::uint64_t seed = 1;

    void validate() const
    {
        scenario.validate();
        if (history_len < 1 || interpolation_factor < 1)
            throw std::invalid_argument("DatasetConfig: history length and interpolation factor must be >= 1");
        if (num_samples < 1)
            throw std::invalid_argument("DatasetConfig: num_samples must be >= 1");
        if (windows_per_episode < 1)
            throw std::invalid_argument("DatasetConfig: windows_per_episode must be >= 1");
        if (csi_updates < windows_per_episode * history_len)
            throw std::invalid_argument("DatasetConfig: episode of " + std::to_string(csi_updates) +
                                        " CSI updates is shorter than " + std::to_string(windows_per_episode) +
                                        " window(s) of " + std::to_string(history_len));
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw std::invalid_argument("DatasetConfig: train_fraction must lie in (0, 1)");
    }

    std::size_t num_episodes() const { return (num_samples + windows_per_episode - 1) / windows_per_episode; }
    double episode_duration_s() const { return static_cast<double>(csi_updates) * scenario.low_csi_period_s; }
};

inline std::string to_kv_text(const DatasetConfig &c)
{
    std::string o = channel::to_kv_text(c.scenario);
    o += "dataset.history_len = " + std::to_string(c.history_len) + "\n";
    o += "dataset.interpolation_factor = " + std::to_string(c.interpolation_factor) + "\n";
    o += "dataset.num_samples = " + std::to_string(c.num_samples) + "\n";
    o += "dataset.queries_per_sample = " + std::to_string(c.queries_per_sample) + "\n";
    o += "dataset.csi_updates = " + std::to_string(c.csi_updates) + "\n";
    o += "dataset.windows_per_episode = " + std::to_string(c.windows_per_episode) + "\n";
    o += "dataset.train_fraction = " + format_double(c.train_fraction) + "\n";
    o += "dataset.seed = " + std::to_string(c.seed) + "\n";
    return o;
}

inline DatasetConfig read_dataset_config(KeyValueFile &kv, DatasetConfig c = {})
{
    c.scenario = channel::read_scenario(kv, c.scenario);
    kv.read("dataset.history_len", c.history_len);
    kv.read("dataset.interpolation_factor", c.interpolation_factor);
    kv.read("dataset.num_samples", c.num_samples);
    kv.read("dataset.queries_per_sample", c.queries_per_sample);
    kv.read("dataset.csi_updates", c.csi_updates);
    kv.read("dataset.windows_per_episode", c.windows_per_episode);
    kv.read("dataset.train_fraction", c.train_fraction);
    kv.read("dataset.seed", c.seed);
    c.validate();
    return c;
}

inline DatasetConfig parse_dataset_config(const std::string &text)
{
    auto kv = KeyValueFile::parse(text);
    auto c = read_dataset_config(kv);
    kv.reject_unknown();
    return c;
}

inline std::string config_digest(const DatasetConfig &c) { return git_blob_digest(to_kv_text(c)); }

enum class Split : std::uint8_t
{
    train = 0,
    validation = 1
};

struct QueryPoint
{
    double time_s = 0.0;
    double eta = 0.0;
    std::uint32_t optimal_beam = 0;
    CMatrix channel; // noise-free mmWave channel at time_s

    bool operator==(const QueryPoint &o) const = default;
};

struct Sample
{
    std::uint64_t episode_id = 0;
    std::uint32_t csi_update_index = 0; // n of the newest snapshot
    Split split = Split::train;
    double csi_time_s = 0.0; // t_n
    double ricean_k_db = 0.0;
    // m x 2 x L row-major: real then imaginary parts of the angular-domain
    // CSI, oldest first, scaled by 1/rms of the newest snapshot.
    std::vector<double> csi_history;
    std::vector<std::uint32_t> labels; // Gamma
    std::vector<CMatrix> label_channels;
    std::uint32_t current_label = 0; // optimal beam at t_n
    CMatrix current_channel;
    std::vector<QueryPoint> queries;

    bool operator==(const Sample &o) const = default;
};

struct Dataset
{
    DatasetConfig config;
    std::vector<Sample> samples;

    std::string digest() const { return config_digest(config); }
    std::vector<std::size_t> indices(Split s) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].split == s)
                out.push_back(i);
        return out;
    }
    std::size_t input_length() const { return config.scenario.low_band.num_tx_antennas; }

    bool operator==(const Dataset &o) const { return to_kv_text(config) == to_kv_text(o.config) && samples == o.samples; }
};

// Codebooks used for labels: a DFT codebook with one beam per mmWave
// transmit antenna, and the trivial single-antenna receive beam.
struct MmCodebooks
{
    beams::Codebook tx;
    beams::Codebook rx;
};

inline MmCodebooks mm_codebooks(const ScenarioConfig &cfg)
{
    return {beams::dft_codebook(cfg.mm_band, cfg.mm_band.num_tx_antennas, channel::ArraySide::tx),
            beams::trivial_codebook(cfg.mm_band, channel::ArraySide::rx)};
}

// The episode behind `episode_id`, regenerated from the master seed.
inline channel::Episode make_episode(const DatasetConfig &cfg, std::uint64_t episode_id)
{
    auto rng = derive_rng(cfg.seed, episode_id, 0);
    return channel::generate_episode(cfg.scenario, cfg.episode_duration_s(), rng, cfg.csi_updates);
}

// Angular-domain window ending at update n, flattened as (m, 2, L).
inline std::vector<double> csi_window(const channel::Episode &ep, std::size_t n, std::size_t m)
{
    if (n + 1 < m)
        throw std::invalid_argument("csi_window: window reaches before the first CSI update");
    const CMatrix &last = ep.low_csi_noisy(n).angular;
    const double rms = std::sqrt(last.squaredNorm() / static_cast<double>(last.size()));
    const double scale = rms > 0.0 ? 1.0 / rms : 1.0;
    const auto len = static_cast<std::size_t>(last.size());
    std::vector<double> out(m * 2 * len);
    for (std::size_t k = 0; k < m; ++k)
    {
        const CMatrix &a = ep.low_csi_noisy(n + 1 - m + k).angular;
        for (std::size_t j = 0; j < len; ++j)
        {
            const cplx z = a.data()[j] * scale;
            out[(k * 2 + 0) * len + j] = z.real();
            out[(k * 2 + 1) * len + j] = z.imag();
        }
    }
    return out;
}

inline std::vector<Sample> episode_samples(const DatasetConfig &cfg, const channel::Episode &ep, std::uint64_t episode_id,
                                           std::size_t count, Split split, const MmCodebooks &cb)
{
    const double period = cfg.scenario.low_csi_period_s;
    const std::size_t m = cfg.history_len, gamma = cfg.interpolation_factor, q = cfg.queries_per_sample;
    auto qrng = derive_rng(cfg.seed, episode_id, 1);
    const auto offsets = predictor::interpolation_offsets(period, gamma);
    auto label_at = [&](double t, CMatrix &h) {
        h = ep.snapshot(channel::Band::mm, t).matrix;
        return static_cast<std::uint32_t>(beams::sweep_optimal_beam(h, cb.tx, cb.rx).tx_index);
    };

    std::vector<Sample> out;
    for (std::size_t w = 0; w < count; ++w)
    {
        Sample s;
        const std::size_t n = cfg.csi_updates - 1 - w * m;
        s.episode_id = episode_id;
        s.csi_update_index = static_cast<std::uint32_t>(n);
        s.split = split;
        s.csi_time_s = ep.csi_time(n);
        s.ricean_k_db = ep.ricean_k_db(channel::Band::low);
        s.csi_history = csi_window(ep, n, m);
        s.labels.resize(gamma);
        s.label_channels.resize(gamma);
        for (std::size_t g = 0; g < gamma; ++g)
            s.labels[g] = label_at(s.csi_time_s + offsets[g], s.label_channels[g]);
        s.current_label = label_at(s.csi_time_s, s.current_channel);
        // one query per equal-width slice of the period
        for (std::size_t k = 0; k < q; ++k)
        {
            QueryPoint qp;
            double eta = (static_cast<double>(k) + uniform(qrng, 0.0, 1.0)) / static_cast<double>(q);
            eta = std::min(eta, std::nextafter(1.0, 0.0));
            qp.eta = eta;
            qp.time_s = s.csi_time_s + eta * period;
            qp.optimal_beam = label_at(qp.time_s, qp.channel);
            s.queries.push_back(std::move(qp));
        }
        out.push_back(std::move(s));
    }
    return out;
}

// Episodes [0, round(train_fraction * E)) train, the rest validate.
inline Dataset generate_dataset(const DatasetConfig &cfg, std::size_t threads = thread_count())
{
    cfg.validate();
    const std::size_t episodes = cfg.num_episodes();
    const auto train_episodes = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(episodes)));
    const auto cb = mm_codebooks(cfg.scenario);

    std::vector<std::vector<Sample>> per(episodes);
    parallel_for(
        episodes,
        [&](std::size_t e) {
            const std::size_t first = e * cfg.windows_per_episode;
            const std::size_t count = std::min(cfg.windows_per_episode, cfg.num_samples - first);
            const auto ep = make_episode(cfg, e);
            per[e] = episode_samples(cfg, ep, e, count, e < train_episodes ? Split::train : Split::validation, cb);
        },
        threads);

    Dataset ds;
    ds.config = cfg;
    ds.samples.reserve(cfg.num_samples);
    for (auto &v : per)
        for (auto &s : v)
            ds.samples.push_back(std::move(s));
    return ds;
}

// ----- persistence ----------------------------------------------------------

class DatasetError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};
class DatasetCorruptError : public DatasetError
{
  public:
    using DatasetError::DatasetError;
};
class DatasetVersionError : public DatasetError
{
  public:
    using DatasetError::DatasetError;
};
class DatasetDigestError : public DatasetError
{
  public:
    using DatasetError::DatasetError;
};

inline constexpr char dataset_magic[4] = {'B', 'P', 'D', 'S'};
inline constexpr std::uint32_t dataset_version = 1;

namespace detail
{
inline void put_matrix(binio::Writer &w, const CMatrix &h, Eigen::Index rows, Eigen::Index cols)
{
    if (h.rows() != rows || h.cols() != cols)
        throw std::invalid_argument("save_dataset: channel shape differs from header");
    for (Eigen::Index i = 0; i < h.size(); ++i)
        w.c128(h.data()[i]);
}
inline CMatrix get_matrix(binio::Reader &r, Eigen::Index rows, Eigen::Index cols)
{
    CMatrix h(rows, cols);
    for (Eigen::Index i = 0; i < h.size(); ++i)
        h.data()[i] = r.c128();
    return h;
}
} // namespace detail

inline std::string serialize_dataset(const Dataset &ds)
{
    const auto &c = ds.config;
    const auto rows = static_cast<Eigen::Index>(c.scenario.mm_band.num_rx_antennas);
    const auto cols = static_cast<Eigen::Index>(c.scenario.mm_band.num_tx_antennas);
    const std::size_t hist = c.history_len * 2 * ds.input_length();

    binio::Writer w;
    w.bytes(std::string_view(dataset_magic, 4));
    w.u32(dataset_version);
    const std::string text = to_kv_text(c);
    w.str(text);
    w.str(git_blob_digest(text));
    w.u64(ds.samples.size());
    w.u32(static_cast<std::uint32_t>(c.history_len));
    w.u32(static_cast<std::uint32_t>(c.interpolation_factor));
    w.u32(static_cast<std::uint32_t>(c.queries_per_sample));
    w.u32(static_cast<std::uint32_t>(ds.input_length()));
    w.u32(static_cast<std::uint32_t>(rows));
    w.u32(static_cast<std::uint32_t>(cols));
    for (const auto &s : ds.samples)
    {
        if (s.csi_history.size() != hist || s.labels.size() != c.interpolation_factor ||
            s.label_channels.size() != c.interpolation_factor || s.queries.size() != c.queries_per_sample)
            throw std::invalid_argument("save_dataset: sample shape differs from header");
        w.u64(s.episode_id);
        w.u32(s.csi_update_index);
        w.u32(static_cast<std::uint32_t>(s.split));
        w.f64(s.csi_time_s);
        w.f64(s.ricean_k_db);
        w.f64s(s.csi_history);
        for (std::size_t g = 0; g < s.labels.size(); ++g)
        {
            w.u32(s.labels[g]);
            detail::put_matrix(w, s.label_channels[g], rows, cols);
        }
        w.u32(s.current_label);
        detail::put_matrix(w, s.current_channel, rows, cols);
        for (const auto &q : s.queries)
        {
            w.f64(q.time_s);
            w.f64(q.eta);
            w.u32(q.optimal_beam);
            detail::put_matrix(w, q.channel, rows, cols);
        }
    }
    return w.take();
}

// `expected`, when given, must produce the same configuration digest as the
// file; otherwise DatasetDigestError.
inline Dataset deserialize_dataset(std::string_view bytes, const DatasetConfig *expected = nullptr)
{
    try
    {
        binio::Reader r(bytes);
        if (r.bytes(4) != std::string_view(dataset_magic, 4))
            throw DatasetCorruptError("dataset: bad magic bytes");
        const auto version = r.u32();
        if (version != dataset_version)
            throw DatasetVersionError("dataset: unsupported version " + std::to_string(version) + " (expected " +
                                      std::to_string(dataset_version) + ")");
        const std::string text = r.str();
        const std::string digest = r.str(64);
        if (git_blob_digest(text) != digest)
            throw DatasetCorruptError("dataset: stored configuration does not match its digest");
        Dataset ds;
        try
        {
            ds.config = parse_dataset_config(text);
        }
        catch (const std::exception &e)
        {
            throw DatasetCorruptError(std::string("dataset: invalid embedded configuration: ") + e.what());
        }
        if (expected && config_digest(*expected) != digest)
            throw DatasetDigestError("dataset: configuration digest " + digest + " differs from expected " +
                                     config_digest(*expected));
        const auto &c = ds.config;
        const auto count = r.u64();
        const auto m = r.u32(), gamma = r.u32(), q = r.u32(), len = r.u32(), rows = r.u32(), cols = r.u32();
        if (count != c.num_samples || m != c.history_len || gamma != c.interpolation_factor ||
            q != c.queries_per_sample || len != c.scenario.low_band.num_tx_antennas ||
            rows != c.scenario.mm_band.num_rx_antennas || cols != c.scenario.mm_band.num_tx_antennas)
            throw DatasetCorruptError("dataset: header counts disagree with the embedded configuration");
        const std::size_t per_sample = 8 + 4 + 4 + 8 + 8 + 8 * (m * 2 * len) + (4 + 16 * rows * cols) * (gamma + 1) +
                                       (8 + 8 + 4 + 16 * rows * cols) * q;
        if (r.remaining() != per_sample * count)
            throw DatasetCorruptError("dataset: payload size " + std::to_string(r.remaining()) + " does not match " +
                                      std::to_string(count) + " samples");
        ds.samples.resize(count);
        for (auto &s : ds.samples)
        {
            s.episode_id = r.u64();
            s.csi_update_index = r.u32();
            const auto split = r.u32();
            if (split > 1)
                throw DatasetCorruptError("dataset: invalid split tag");
            s.split = static_cast<Split>(split);
            s.csi_time_s = r.f64();
            s.ricean_k_db = r.f64();
            s.csi_history = r.f64s(std::size_t{m} * 2 * len);
            s.labels.resize(gamma);
            s.label_channels.resize(gamma);
            for (std::size_t g = 0; g < gamma; ++g)
            {
                s.labels[g] = r.u32();
                s.label_channels[g] = detail::get_matrix(r, rows, cols);
            }
            s.current_label = r.u32();
            s.current_channel = detail::get_matrix(r, rows, cols);
            s.queries.resize(q);
            for (auto &qp : s.queries)
            {
                qp.time_s = r.f64();
                qp.eta = r.f64();
                qp.optimal_beam = r.u32();
                qp.channel = detail::get_matrix(r, rows, cols);
            }
        }
        return ds;
    }
    catch (const binio::TruncatedError &e)
    {
        throw DatasetCorruptError(std::string("dataset: truncated file (") + e.what() + ")");
    }
}

inline std::string meta_text(const Dataset &ds, std::string_view file_bytes)
{
    std::size_t train = 0;
    for (const auto &s : ds.samples)
        train += s.split == Split::train;
    std::string o = "# dataset metadata\n";
    o += "format_version = " + std::to_string(dataset_version) + "\n";
    o += "content_digest = " + git_blob_digest(file_bytes) + "\n";
    o += "config_digest = " + ds.digest() + "\n";
    o += "seed = " + std::to_string(ds.config.seed) + "\n";
    o += "samples = " + std::to_string(ds.samples.size()) + "\n";
    o += "train_samples = " + std::to_string(train) + "\n";
    o += "validation_samples = " + std::to_string(ds.samples.size() - train) + "\n";
    o += "# configuration\n" + to_kv_text(ds.config);
    return o;
}

// Writes `path` and the metadata sidecar `path.meta`.
inline void save_dataset(const Dataset &ds, const std::string &path)
{
    const std::string bytes = serialize_dataset(ds);
    binio::write_file(path, bytes);
    binio::write_file(path + ".meta", meta_text(ds, bytes));
}

inline Dataset load_dataset(const std::string &path, const DatasetConfig *expected = nullptr)
{
    return deserialize_dataset(binio::read_file(path), expected);
}

} // namespace beampred::datagen
