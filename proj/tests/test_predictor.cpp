// SPDX-License-Identifier: Apache-2.0

#include <beampred/predictor/checkpoint.hpp>
#include <beampred/predictor/train.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace beampred;
using namespace beampred::predictor;
using Catch::Approx;

namespace
{

nn::StackWidths small_widths() { return {2, 8, 16, 16, 32}; }

PredictorConfig small_config(std::size_t m, std::size_t gamma)
{
    PredictorConfig c;
    c.history_len = m;
    c.interpolation_factor = gamma;
    c.layers = nn::default_layer_stack(small_widths());
    return c;
}

nn::Tensor random_history(std::size_t b, std::size_t m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    nn::Tensor x({b, m, 2, 8});
    for (double &v : x.data)
        v = d(rng);
    return x;
}

datagen::DatasetConfig tiny_data(std::size_t samples)
{
    datagen::DatasetConfig c;
    c.num_samples = samples;
    c.queries_per_sample = 4;
    c.seed = 11;
    return c;
}

} // namespace

TEST_CASE("timing offset and interpolation index")
{
    CHECK(timing_offset({0.2, 1.0, 1.0}) == 0.0);
    CHECK(timing_offset({0.2, 1.0, 1.1}) == Approx(0.5));
    CHECK(timing_offset({0.2, 0.0, 0.15}) == Approx(0.75));
    CHECK_THROWS_AS(timing_offset({0.2, 1.0, 0.99}), std::out_of_range);
    CHECK_THROWS_AS(timing_offset({0.2, 1.0, 1.25}), std::out_of_range);
    CHECK_THROWS(timing_offset({0.0, 0.0, 0.0}));

    CHECK(interpolation_index(0.1, 4) == 1);
    CHECK(interpolation_index(0.5, 4) == 2); // midpoint of 3/8 and 5/8 goes to the smaller index
    CHECK(interpolation_index(0.3, 4) == 2);
    CHECK(interpolation_index(0.99, 4) == 4);
    for (double eta : {0.0, 0.3, 0.999})
        CHECK(interpolation_index(eta, 1) == 1);
    CHECK_THROWS(interpolation_index(0.5, 0));

    const auto t = interpolation_offsets(0.2, 4);
    REQUIRE(t.size() == 4);
    const double expected[] = {0.025, 0.075, 0.125, 0.175};
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(t[i] == Approx(expected[i]).margin(1e-15));
}

TEST_CASE("forward pass produces one distribution per interpolation instant")
{
    for (std::size_t gamma : {1u, 3u})
    {
        GroupedLstmModel model(small_config(4, gamma), 3);
        const auto out = model.forward(random_history(5, 4, 1), nn::Mode::infer);
        REQUIRE(out.probabilities.size() == gamma);
        for (const auto &p : out.probabilities)
        {
            REQUIRE(p.rows() == 5);
            REQUIRE(p.cols() == 32);
            CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
            CHECK(p.minCoeff() >= 0.0);
        }
    }
    GroupedLstmModel model(small_config(4, 2), 3);
    CHECK_THROWS(model.forward(random_history(2, 3, 1), nn::Mode::infer));
    CHECK_THROWS(model.backward(std::vector<int>(4, 0)));
}

TEST_CASE("permuting the FC rows permutes the beam distribution")
{
    GroupedLstmModel a(small_config(3, 2), 5);
    GroupedLstmModel b = a;
    std::vector<std::size_t> perm(32);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(2);
    std::shuffle(perm.begin(), perm.end(), rng);

    const auto &wa = a.params().param(a.head().weight_index()).value;
    const auto &ba = a.params().param(a.head().bias_index()).value;
    auto &wb = b.params().param(b.head().weight_index()).value;
    auto &bb = b.params().param(b.head().bias_index()).value;
    const std::size_t in = wa.dim(1);
    for (std::size_t r = 0; r < 32; ++r)
    {
        bb.data[perm[r]] = ba.data[r];
        for (std::size_t j = 0; j < in; ++j)
            wb.data[perm[r] * in + j] = wa.data[r * in + j];
    }
    const auto x = random_history(3, 3, 4);
    const auto pa = a.forward(x, nn::Mode::infer).probabilities;
    const auto pb = b.forward(x, nn::Mode::infer).probabilities;
    for (std::size_t g = 0; g < 2; ++g)
        for (Eigen::Index i = 0; i < 3; ++i)
            for (std::size_t r = 0; r < 32; ++r)
                CHECK(pb[g](i, static_cast<Eigen::Index>(perm[r])) == Approx(pa[g](i, static_cast<Eigen::Index>(r))).margin(1e-14));
}

TEST_CASE("predict_beam")
{
    GroupedLstmModel model(small_config(2, 4), 7);
    auto &w = model.params().param(model.head().weight_index()).value;
    auto &bias = model.params().param(model.head().bias_index()).value;
    std::fill(w.data.begin(), w.data.end(), 0.0);
    std::fill(bias.data.begin(), bias.data.end(), 0.0);
    bias.data[17] = 50.0;
    bias.data[3] = 40.0;

    const auto x = random_history(1, 2, 9);
    const auto out = predict_beam(model, x.data, {0.2, 0.0, 0.1});
    CHECK(out.chosen_beam == 17);
    CHECK(out.gamma_used == 2);
    REQUIRE(out.ranked_beams.size() == 32);
    CHECK(out.ranked_beams[1] == 3);
    CHECK(out.probabilities.size() == 4);
    CHECK(predict_beam(model, x.data, {0.2, 1.0, 1.0 + 0.02}).gamma_used == 1);
    CHECK(predict_beam(model, x.data, {0.2, 1.0, 1.0 + 0.199}).gamma_used == 4);
    CHECK_THROWS(predict_beam(model, std::vector<double>(10, 0.0), {0.2, 1.0, 1.0}));

    GroupedLstmModel single(small_config(2, 1), 7);
    CHECK(predict_beam(single, x.data, {0.2, 1.0, 1.19}).gamma_used == 1);
}

TEST_CASE("training")
{
    const auto ds = datagen::generate_dataset(tiny_data(20), 1);
    REQUIRE(ds.indices(datagen::Split::train).size() == 16);
    const auto pc = predictor_config_for(ds, nn::default_layer_stack(small_widths()));

    SECTION("initial loss is close to uniform")
    {
        TrainSettings ts;
        ts.epochs = 0;
        const auto res = train(ds, pc, ts);
        REQUIRE(res.trace.size() == 1);
        CHECK(std::abs(res.trace[0].train_loss - std::log(32.0)) < 0.3);
    }
    SECTION("overfits 16 samples")
    {
        TrainSettings ts;
        ts.epochs = 200;
        ts.batch_size = 16;
        ts.adam.learning_rate = 1e-2;
        const auto res = train(ds, pc, ts);
        CHECK(res.trace.back().train_loss < 0.05);
    }
    SECTION("identical seeds give identical traces")
    {
        TrainSettings ts;
        ts.epochs = 3;
        ts.batch_size = 4;
        const auto a = train(ds, pc, ts);
        const auto b = train(ds, pc, ts);
        REQUIRE(a.trace.size() == 4);
        for (std::size_t i = 0; i < a.trace.size(); ++i)
        {
            CHECK(a.trace[i].train_loss == b.trace[i].train_loss);
            CHECK(a.trace[i].val_loss == b.trace[i].val_loss);
        }
        CHECK((serialize_model(a.model) == serialize_model(b.model)));
        ts.seed = 2;
        CHECK((serialize_model(train(ds, pc, ts).model) != serialize_model(a.model)));
    }
    SECTION("mismatched shapes are rejected")
    {
        auto bad = pc;
        bad.interpolation_factor = 2;
        CHECK_THROWS(train(ds, bad, TrainSettings{}));
    }
}

TEST_CASE("checkpoint round trip")
{
    GroupedLstmModel model(small_config(3, 2), 13);
    const auto x = random_history(2, 3, 5);
    model.forward(x, nn::Mode::train); // moves the running statistics
    const std::string bytes = serialize_model(model);
    CHECK(checkpoint_kind(bytes) == nn::ModelKind::grouped_lstm);
    auto back = deserialize_model(bytes);
    CHECK((serialize_model(back) == bytes));
    CHECK(back.config().history_len == 3);
    CHECK(back.config().interpolation_factor == 2);
    const auto pa = model.forward(x, nn::Mode::infer).probabilities;
    const auto pb = back.forward(x, nn::Mode::infer).probabilities;
    for (std::size_t g = 0; g < 2; ++g)
        CHECK(pa[g] == pb[g]);

    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 3)), nn::CheckpointError);
    CHECK_THROWS_AS(deserialize_noprior(bytes), nn::CheckpointError);
}
