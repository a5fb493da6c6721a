// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks for every layer kind and for toy-sized versions of
// both networks.

#pragma once

#include <algorithm>

#include "../baselines/noprior.hpp"
#include "../nn/gradcheck.hpp"
#include "../predictor/model.hpp"

namespace beampred::harness
{

namespace detail
{
inline std::vector<double> random_values(std::size_t n, std::mt19937_64 &rng, double scale = 1.0)
{
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto &x : v)
        x = d(rng);
    return v;
}

inline double weighted_sum(std::span<const double> y, std::span<const double> c)
{
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += y[i] * c[i];
    return s;
}

inline std::vector<double> flat(const nn::Mat &m) { return {m.data(), m.data() + m.size()}; }

inline nn::Mat as_mat(const std::vector<double> &v, std::size_t rows, std::size_t cols)
{
    return nn::ConstMatMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
} // namespace detail

// Tensor-valued layers: loss = sum(c * layer(x)).
template <class Forward, class Backward>
void check_tensor_layer(std::vector<nn::GradCheckResult> &out, const std::string &name, nn::ParamStore &store,
                        nn::Tensor x, Forward fwd, Backward bwd, std::mt19937_64 &rng, const nn::GradCheckSettings &s)
{
    const nn::Tensor y0 = fwd(x, nullptr);
    const auto c = detail::random_values(y0.size(), rng);
    auto loss = [&] { return detail::weighted_sum(fwd(x, nullptr).data, c); };
    nn::Tensor dx;
    auto loss_grad = [&] {
        auto cache = fwd.make_cache();
        const nn::Tensor y = fwd(x, &cache);
        dx = bwd(cache, nn::Tensor(y.shape, c));
    };
    if (!store.params().empty())
        out.push_back(nn::check_parameter_gradients(name + " parameters", store, loss, loss_grad, s));
    else
    {
        store.zero_grad();
        loss_grad();
    }
    out.push_back(nn::check_input_gradient(name + " input", x.data, dx.data, loss, s));
}

template <class Layer, class Call>
struct LayerForward
{
    Call call;
    typename Layer::Cache make_cache() const { return {}; }
    nn::Tensor operator()(const nn::Tensor &x, typename Layer::Cache *c) const { return call(x, c); }
};

inline std::vector<nn::GradCheckResult> run_gradient_suite(std::uint64_t seed = 7, const nn::GradCheckSettings &s = {})
{
    std::vector<nn::GradCheckResult> out;
    std::mt19937_64 rng(seed);
    using nn::Tensor;

    {
        nn::ParamStore st;
        nn::BatchNorm1d bn(st, "bn", 3);
        nn::init_uniform(st.param(bn.scale_index()).value, 1.0, rng);
        nn::init_uniform(st.param(bn.shift_index()).value, 1.0, rng);
        auto f = [&](const Tensor &x, nn::BatchNorm1d::Cache *c) { return bn.forward(st, x, nn::Mode::train, c, false); };
        LayerForward<nn::BatchNorm1d, decltype(f)> fwd{f};
        check_tensor_layer(out, "batch_norm", st, Tensor({4, 3, 5}, detail::random_values(60, rng)), fwd,
                           [&](const nn::BatchNorm1d::Cache &c, const Tensor &dy) { return bn.backward(st, c, dy); }, rng, s);
    }
    for (auto [k, stride, pad] : std::vector<std::array<std::size_t, 3>>{{3, 3, 0}, {3, 2, 1}, {1, 3, 0}})
    {
        nn::ParamStore st;
        nn::Conv1d conv(st, "conv", 2, 3, k, stride, pad);
        nn::init_uniform(st.param(conv.weight_index()).value, 1.0, rng);
        nn::init_uniform(st.param(conv.bias_index()).value, 1.0, rng);
        auto f = [&](const Tensor &x, nn::Conv1d::Cache *c) { return conv.forward(st, x, c); };
        LayerForward<nn::Conv1d, decltype(f)> fwd{f};
        check_tensor_layer(out, "conv1d k" + std::to_string(k) + " s" + std::to_string(stride) + " p" + std::to_string(pad),
                           st, Tensor({3, 2, 8}, detail::random_values(48, rng)), fwd,
                           [&](const nn::Conv1d::Cache &c, const Tensor &dy) { return conv.backward(st, c, dy); }, rng, s);
    }
    {
        nn::ParamStore st;
        nn::Relu relu;
        auto x = detail::random_values(40, rng);
        for (auto &v : x) // keep entries away from the kink
            v += v >= 0.0 ? 0.1 : -0.1;
        auto f = [&](const Tensor &in, nn::Relu::Cache *c) { return relu.forward(in, c); };
        LayerForward<nn::Relu, decltype(f)> fwd{f};
        check_tensor_layer(out, "relu", st, Tensor({2, 4, 5}, x), fwd,
                           [&](const nn::Relu::Cache &c, const Tensor &dy) { return relu.backward(c, dy); }, rng, s);
    }
    {
        nn::ParamStore st;
        nn::GlobalMaxPool pool;
        auto f = [&](const Tensor &in, nn::GlobalMaxPool::Cache *c) { return pool.forward(in, c); };
        LayerForward<nn::GlobalMaxPool, decltype(f)> fwd{f};
        check_tensor_layer(out, "max_pool", st, Tensor({2, 3, 6}, detail::random_values(36, rng)), fwd,
                           [&](const nn::GlobalMaxPool::Cache &c, const Tensor &dy) { return pool.backward(c, dy); }, rng,
                           s);
    }
    {
        nn::ParamStore st;
        nn::Dense fc(st, "fc", 5, 4);
        nn::init_uniform(st.param(fc.weight_index()).value, 1.0, rng);
        nn::init_uniform(st.param(fc.bias_index()).value, 1.0, rng);
        auto x = detail::random_values(15, rng);
        const auto c = detail::random_values(12, rng);
        auto loss = [&] { return detail::weighted_sum(detail::flat(fc.forward(st, detail::as_mat(x, 3, 5), nullptr)), c); };
        std::vector<double> dx;
        auto grad = [&] {
            nn::Dense::Cache cache;
            fc.forward(st, detail::as_mat(x, 3, 5), &cache);
            dx = detail::flat(fc.backward(st, cache, detail::as_mat(c, 3, 4)));
        };
        out.push_back(nn::check_parameter_gradients("fully_connected parameters", st, loss, grad, s));
        out.push_back(nn::check_input_gradient("fully_connected input", x, dx, loss, s));
    }
    {
        nn::ParamStore st;
        nn::LstmCell cell(st, "lstm", 4, 3);
        for (auto &p : st.params())
            nn::init_uniform(p.value, 0.8, rng);
        auto x = detail::random_values(8, rng), h = detail::random_values(6, rng, 0.5), c0 = detail::random_values(6, rng);
        const auto wh = detail::random_values(6, rng), wc = detail::random_values(6, rng);
        auto run = [&](nn::LstmCell::Cache *cache) {
            return cell.forward(st, detail::as_mat(x, 2, 4), {detail::as_mat(h, 2, 3), detail::as_mat(c0, 2, 3)}, cache);
        };
        auto loss = [&] {
            const auto s1 = run(nullptr);
            return detail::weighted_sum(detail::flat(s1.h), wh) + detail::weighted_sum(detail::flat(s1.c), wc);
        };
        nn::LstmCell::Grads g;
        auto grad = [&] {
            nn::LstmCell::Cache cache;
            run(&cache);
            g = cell.backward(st, cache, detail::as_mat(wh, 2, 3), detail::as_mat(wc, 2, 3));
        };
        out.push_back(nn::check_parameter_gradients("lstm parameters", st, loss, grad, s));
        out.push_back(nn::check_input_gradient("lstm input", x, detail::flat(g.dx), loss, s));
        out.push_back(nn::check_input_gradient("lstm previous h", h, detail::flat(g.dh_prev), loss, s));
        out.push_back(nn::check_input_gradient("lstm previous c", c0, detail::flat(g.dc_prev), loss, s));
    }
    {
        auto logits = detail::random_values(20, rng, 2.0);
        const std::vector<int> labels{0, 3, 1, 4};
        const std::vector<double> weights{1.0, 0.5, 2.0, 1.5};
        auto loss = [&] { return nn::softmax_cross_entropy(detail::as_mat(logits, 4, 5), labels, weights).loss; };
        const auto d = detail::flat(nn::softmax_cross_entropy(detail::as_mat(logits, 4, 5), labels, weights).dlogits);
        out.push_back(nn::check_input_gradient("softmax_cross_entropy logits", logits, d, loss, s));
    }

    // Toy networks: 8 angular bins, 4 beams, hidden 8. Pooling over several
    // positions leaves near-ties, so the whole-network checks use a finer step.
    const nn::StackWidths toy{2, 3, 8, 8, 4};
    nn::GradCheckSettings fine = s;
    fine.step = std::min(s.step, 1e-6);
    for (auto variant : {nn::StackVariant::table, nn::StackVariant::padded, nn::StackVariant::spanning})
    {
        predictor::PredictorConfig pc;
        pc.history_len = 3;
        pc.interpolation_factor = 3;
        pc.num_beams = 4;
        pc.input_length = 8;
        pc.layers = nn::default_layer_stack(toy, true, variant);
        predictor::GroupedLstmModel model(pc, seed + 1);
        const std::size_t b = 4;
        nn::Tensor x({b, 3, 2, 8}, detail::random_values(b * 3 * 2 * 8, rng));
        std::vector<int> labels(b * 3);
        for (auto &l : labels)
            l = static_cast<int>(rng() % 4);
        auto loss = [&] {
            const auto o = model.forward(x, nn::Mode::train, false);
            double total = 0.0;
            std::vector<int> lab(b);
            for (std::size_t g = 0; g < 3; ++g)
            {
                for (std::size_t i = 0; i < b; ++i)
                    lab[i] = labels[i * 3 + g];
                total += nn::softmax_cross_entropy(o.logits[g], lab).loss / 3.0;
            }
            return total;
        };
        auto grad = [&] {
            model.forward(x, nn::Mode::train, false);
            model.backward(labels);
        };
        out.push_back(nn::check_parameter_gradients("grouped-LSTM network (" + nn::to_string(variant) + " stack)",
                                                    model.params(), loss, grad, fine));
    }
    {
        baselines::NoPriorConfig nc;
        nc.num_beams = 4;
        nc.input_length = 8;
        nc.layers = nn::default_layer_stack(toy, false);
        baselines::NoPriorModel model(nc, seed + 2);
        nn::Tensor x({5, 2, 8}, detail::random_values(80, rng));
        const std::vector<int> labels{0, 1, 2, 3, 1};
        auto loss = [&] { return nn::softmax_cross_entropy(model.forward(x, nn::Mode::train, false), labels).loss; };
        auto grad = [&] { model.backward(model.forward(x, nn::Mode::train, false), labels); };
        out.push_back(nn::check_parameter_gradients("no-prior network", model.params(), loss, grad, fine));
    }
    return out;
}

} // namespace beampred::harness
