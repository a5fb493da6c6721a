// SPDX-License-Identifier: Apache-2.0
//
// Everything one experiment run needs: dataset, model stack, optimiser and
// EKF settings, read from the shared key = value format.

#pragma once

#include "../baselines/ekf.hpp"
#include "../datagen/dataset.hpp"
#include "../digest.hpp"
#include "../nn/stack.hpp"
#include "../predictor/train.hpp"

#include <string>

namespace beampred::harness
{

enum class Scale
{
    desk,
    paper
};

inline Scale parse_scale(const std::string &s)
{
    if (s == "desk")
        return Scale::desk;
    if (s == "paper")
        return Scale::paper;
    throw ConfigError("unknown scale '" + s + "' (expected desk or paper)");
}

inline std::string to_string(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

struct RunConfig
{
    datagen::DatasetConfig data;
    predictor::TrainSettings train;
    nn::StackVariant stack = nn::StackVariant::spanning;
    baselines::EkfConfig ekf;
    std::size_t repeats = 1;

    std::vector<nn::LayerSpec> predictor_layers() const { return nn::default_layer_stack({}, true, stack); }
    std::vector<nn::LayerSpec> noprior_layers() const { return nn::default_layer_stack({}, false, stack); }
};

inline RunConfig scale_preset(Scale s)
{
    RunConfig c;
    c.data.num_samples = s == Scale::desk ? 2048 : 10240;
    c.train.epochs = s == Scale::desk ? 15 : 40;
    return c;
}

inline void set_seed(RunConfig &c, std::uint64_t seed)
{
    c.data.seed = seed;
    c.train.seed = seed;
}

inline std::string to_kv_text(const RunConfig &c)
{
    std::string o = datagen::to_kv_text(c.data);
    o += "model.stack = " + nn::to_string(c.stack) + "\n";
    o += "train.epochs = " + std::to_string(c.train.epochs) + "\n";
    o += "train.batch_size = " + std::to_string(c.train.batch_size) + "\n";
    o += "train.learning_rate = " + format_double(c.train.adam.learning_rate) + "\n";
    o += "train.beta1 = " + format_double(c.train.adam.beta1) + "\n";
    o += "train.beta2 = " + format_double(c.train.adam.beta2) + "\n";
    o += "train.epsilon = " + format_double(c.train.adam.epsilon) + "\n";
    o += "train.seed = " + std::to_string(c.train.seed) + "\n";
    const auto &e = c.ekf;
    o += "ekf.update_period_s = " + format_double(e.update_period_s) + "\n";
    o += "ekf.process_noise = " +
         format_double_list({e.process_noise[0], e.process_noise[1], e.process_noise[2]}) + "\n";
    o += "ekf.initial_variance = " +
         format_double_list({e.initial_variance[0], e.initial_variance[1], e.initial_variance[2]}) + "\n";
    o += "ekf.beams_per_update = " + std::to_string(e.beams_per_update) + "\n";
    o += "ekf.init_grid_points = " + std::to_string(e.init_grid_points) + "\n";
    o += "ekf.divergence_inflation = " + format_double(e.divergence_inflation) + "\n";
    o += "harness.repeats = " + std::to_string(c.repeats) + "\n";
    return o;
}

inline baselines::Vec3 read_vec3(KeyValueFile &kv, const std::string &key, baselines::Vec3 v)
{
    std::vector<double> xs;
    kv.read(key, xs);
    if (xs.empty())
        return v;
    if (xs.size() != 3)
        throw ConfigError("config key '" + key + "': expected 3 values");
    return {xs[0], xs[1], xs[2]};
}

inline RunConfig read_run_config(KeyValueFile &kv, RunConfig c)
{
    c.data = datagen::read_dataset_config(kv, c.data);
    if (auto v = kv.take("model.stack"))
    {
        try
        {
            c.stack = nn::parse_stack_variant(*v);
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
    }
    kv.read("train.epochs", c.train.epochs);
    kv.read("train.batch_size", c.train.batch_size);
    kv.read("train.learning_rate", c.train.adam.learning_rate);
    kv.read("train.beta1", c.train.adam.beta1);
    kv.read("train.beta2", c.train.adam.beta2);
    kv.read("train.epsilon", c.train.adam.epsilon);
    kv.read("train.seed", c.train.seed);
    kv.read("ekf.update_period_s", c.ekf.update_period_s);
    c.ekf.process_noise = read_vec3(kv, "ekf.process_noise", c.ekf.process_noise);
    c.ekf.initial_variance = read_vec3(kv, "ekf.initial_variance", c.ekf.initial_variance);
    kv.read("ekf.beams_per_update", c.ekf.beams_per_update);
    kv.read("ekf.init_grid_points", c.ekf.init_grid_points);
    kv.read("ekf.divergence_inflation", c.ekf.divergence_inflation);
    kv.read("harness.repeats", c.repeats);
    if (c.train.batch_size < 1)
        throw ConfigError("train.batch_size must be >= 1");
    if (!(c.train.adam.learning_rate > 0.0))
        throw ConfigError("train.learning_rate must be positive");
    if (!(c.ekf.update_period_s > 0.0) || c.ekf.beams_per_update < 1 || c.ekf.init_grid_points < 2)
        throw ConfigError("ekf: update period, beams per update and grid size must be positive");
    if (c.repeats < 1)
        throw ConfigError("harness.repeats must be >= 1");
    return c;
}

inline RunConfig parse_run_config(const std::string &text, RunConfig base = {})
{
    auto kv = KeyValueFile::parse(text);
    auto c = read_run_config(kv, std::move(base));
    kv.reject_unknown();
    return c;
}

inline RunConfig load_run_config(const std::string &path, RunConfig base = {})
{
    auto kv = KeyValueFile::load(path);
    auto c = read_run_config(kv, std::move(base));
    kv.reject_unknown();
    return c;
}

inline std::string config_digest(const RunConfig &c) { return git_blob_digest(to_kv_text(c)); }

} // namespace beampred::harness
