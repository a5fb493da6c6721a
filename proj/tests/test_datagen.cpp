// SPDX-License-Identifier: Apache-2.0

#include <beampred/datagen/dataset.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace beampred;
using namespace beampred::datagen;

namespace
{

DatasetConfig small(std::size_t n, std::uint64_t seed = 5)
{
    DatasetConfig c;
    c.num_samples = n;
    c.queries_per_sample = 3;
    c.seed = seed;
    return c;
}

std::filesystem::path temp_dir()
{
    auto p = std::filesystem::temp_directory_path() / "beampred_test_datagen";
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("paper-size split arithmetic")
{
    DatasetConfig c;
    c.num_samples = 10240;
    CHECK(c.num_episodes() == 10240);
    CHECK(std::llround(c.train_fraction * static_cast<double>(c.num_episodes())) == 8192);
    CHECK(c.episode_duration_s() == Catch::Approx(1.4));
    c.validate();
}

TEST_CASE("generated samples")
{
    const auto cfg = small(40);
    const auto ds = generate_dataset(cfg, 1);
    REQUIRE(ds.samples.size() == 40);
    CHECK(ds.indices(Split::train).size() == 32);
    CHECK(ds.indices(Split::validation).size() == 8);
    const auto cb = mm_codebooks(cfg.scenario);
    for (const auto &s : ds.samples)
    {
        CHECK(s.csi_history.size() == cfg.history_len * 2 * ds.input_length());
        CHECK(s.csi_update_index == cfg.csi_updates - 1);
        REQUIRE(s.labels.size() == cfg.interpolation_factor);
        for (std::size_t g = 0; g < s.labels.size(); ++g)
            CHECK(s.labels[g] == beams::sweep_optimal_beam(s.label_channels[g], cb.tx, cb.rx).tx_index);
        CHECK(s.current_label == beams::sweep_optimal_beam(s.current_channel, cb.tx, cb.rx).tx_index);
        REQUIRE(s.queries.size() == 3);
        for (std::size_t k = 0; k < s.queries.size(); ++k)
        {
            const auto &q = s.queries[k];
            CHECK(q.eta >= static_cast<double>(k) / 3.0);
            CHECK(q.eta < static_cast<double>(k + 1) / 3.0);
            CHECK(q.time_s == Catch::Approx(s.csi_time_s + q.eta * cfg.scenario.low_csi_period_s));
            CHECK(q.optimal_beam == beams::sweep_optimal_beam(q.channel, cb.tx, cb.rx).tx_index);
        }
        // newest snapshot has unit RMS
        const std::size_t per = 2 * ds.input_length();
        double e = 0.0;
        for (std::size_t j = 0; j < per; ++j)
            e += std::pow(s.csi_history[(cfg.history_len - 1) * per + j], 2);
        CHECK(e / static_cast<double>(ds.input_length()) == Catch::Approx(1.0));
    }
}

TEST_CASE("generation is deterministic and thread-count independent")
{
    const auto a = generate_dataset(small(24), 1);
    const auto b = generate_dataset(small(24), 3);
    CHECK((serialize_dataset(a) == serialize_dataset(b)));
    CHECK((serialize_dataset(generate_dataset(small(24, 6), 1)) != serialize_dataset(a)));
}

TEST_CASE("dataset persistence")
{
    const auto ds = generate_dataset(small(100), 1);
    const auto path = (temp_dir() / "round.bin").string();
    save_dataset(ds, path);
    CHECK(std::filesystem::exists(path + ".meta"));
    const auto back = load_dataset(path);
    CHECK(back == ds);
    CHECK((serialize_dataset(back) == serialize_dataset(ds)));

    const auto expected = small(100);
    CHECK(load_dataset(path, &expected) == ds);
    const auto other = small(100, 99);
    CHECK_THROWS_AS(load_dataset(path, &other), DatasetDigestError);

    const std::string bytes = serialize_dataset(ds);
    CHECK_THROWS_AS(deserialize_dataset(bytes.substr(0, bytes.size() - 10)), DatasetCorruptError);
    CHECK_THROWS_AS(deserialize_dataset(bytes.substr(0, 6)), DatasetCorruptError);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_dataset(bad_magic), DatasetCorruptError);
    std::string bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(deserialize_dataset(bad_version), DatasetVersionError);
    CHECK_THROWS(load_dataset((temp_dir() / "missing.bin").string()));
}

TEST_CASE("dataset config text")
{
    auto c = small(64);
    c.history_len = 3;
    const auto back = parse_dataset_config(to_kv_text(c));
    CHECK(to_kv_text(back) == to_kv_text(c));
    CHECK(config_digest(back) == config_digest(c));
    CHECK_THROWS(parse_dataset_config("dataset.bogus = 1\n"));
    auto bad = c;
    bad.history_len = 8;
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.train_fraction = 1.0;
    CHECK_THROWS(bad.validate());
}
