// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "layers.hpp"

namespace beampred::nn
{

// Standard LSTM cell. Gate blocks are stacked as (input, forget, cell, output)
// along the last axis of the weight arrays:
//   z = x Wx + h_prev Wh + b,  Wx: (D, 4H), Wh: (H, 4H), b: (4H)
class LstmCell
{
  public:
    struct State
    {
        Mat h;
        Mat c;
    };

    struct Cache
    {
        bool valid = false;
        Mat x, h_prev, c_prev;
        Mat i, f, g, o, tanh_c;
    };

    LstmCell() = default;
    LstmCell(ParamStore &store, const std::string &name, std::size_t input, std::size_t hidden)
        : in_(input), hidden_(hidden)
    {
        wx_ = store.add_parameter(name + ".input_weights", {input, 4 * hidden});
        wh_ = store.add_parameter(name + ".recurrent_weights", {hidden, 4 * hidden});
        b_ = store.add_parameter(name + ".bias", {4 * hidden});
    }

    std::size_t input_size() const { return in_; }
    std::size_t hidden_size() const { return hidden_; }
    std::size_t input_weight_index() const { return wx_; }
    std::size_t recurrent_weight_index() const { return wh_; }
    std::size_t bias_index() const { return b_; }

    State zero_state(std::size_t batch) const
    {
        return {Mat::Zero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(hidden_)),
                Mat::Zero(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(hidden_))};
    }

    State forward(const ParamStore &store, const Mat &x, const State &prev, Cache *cache) const
    {
        const auto hsz = static_cast<Eigen::Index>(hidden_);
        if (static_cast<std::size_t>(x.cols()) != in_ || prev.h.cols() != hsz || prev.c.cols() != hsz ||
            prev.h.rows() != x.rows() || prev.c.rows() != x.rows())
            throw std::invalid_argument("lstm: dimension mismatch (input " + std::to_string(x.cols()) + ", expected " +
                                        std::to_string(in_) + ")");
        const ConstMatMap wx(store.param(wx_).value.data.data(), static_cast<Eigen::Index>(in_), 4 * hsz);
        const ConstMatMap wh(store.param(wh_).value.data.data(), hsz, 4 * hsz);
        const Eigen::Map<const Eigen::RowVectorXd> b(store.param(b_).value.data.data(), 4 * hsz);

        Mat z = x * wx;
        z.noalias() += prev.h * wh;
        z.rowwise() += b;

        auto sigmoid = [](const auto &m) { return (1.0 / (1.0 + (-m.array()).exp())).matrix(); };
        Mat i = sigmoid(z.middleCols(0, hsz));
        Mat f = sigmoid(z.middleCols(hsz, hsz));
        Mat g = z.middleCols(2 * hsz, hsz).array().tanh().matrix();
        Mat o = sigmoid(z.middleCols(3 * hsz, hsz));

        State next;
        next.c = (f.array() * prev.c.array() + i.array() * g.array()).matrix();
        Mat tanh_c = next.c.array().tanh().matrix();
        next.h = (o.array() * tanh_c.array()).matrix();

        if (cache)
        {
            cache->valid = true;
            cache->x = x;
            cache->h_prev = prev.h;
            cache->c_prev = prev.c;
            cache->i = std::move(i);
            cache->f = std::move(f);
            cache->g = std::move(g);
            cache->o = std::move(o);
            cache->tanh_c = std::move(tanh_c);
        }
        return next;
    }

    struct Grads
    {
        Mat dx;
        Mat dh_prev;
        Mat dc_prev;
    };

    // dh, dc: gradients w.r.t. this step's outputs h and c.
    Grads backward(ParamStore &store, const Cache &cache, const Mat &dh, const Mat &dc) const
    {
        require_cache(cache.valid, "lstm");
        const auto hsz = static_cast<Eigen::Index>(hidden_);
        const auto rows = cache.x.rows();

        const Eigen::ArrayXXd one = Eigen::ArrayXXd::Ones(rows, hsz);
        const Eigen::ArrayXXd dct =
            dc.array() + dh.array() * cache.o.array() * (one - cache.tanh_c.array().square());

        Mat dz(rows, 4 * hsz);
        dz.middleCols(0, hsz) = (dct * cache.g.array() * cache.i.array() * (one - cache.i.array())).matrix();
        dz.middleCols(hsz, hsz) = (dct * cache.c_prev.array() * cache.f.array() * (one - cache.f.array())).matrix();
        dz.middleCols(2 * hsz, hsz) = (dct * cache.i.array() * (one - cache.g.array().square())).matrix();
        dz.middleCols(3 * hsz, hsz) =
            (dh.array() * cache.tanh_c.array() * cache.o.array() * (one - cache.o.array())).matrix();

        auto &wx = store.param(wx_).value;
        auto &wh = store.param(wh_).value;
        auto &b = store.param(b_).value;
        MatMap(wx.grad.data(), static_cast<Eigen::Index>(in_), 4 * hsz).noalias() += cache.x.transpose() * dz;
        MatMap(wh.grad.data(), hsz, 4 * hsz).noalias() += cache.h_prev.transpose() * dz;
        Eigen::Map<Eigen::RowVectorXd>(b.grad.data(), 4 * hsz) += dz.colwise().sum();

        const ConstMatMap wxm(wx.data.data(), static_cast<Eigen::Index>(in_), 4 * hsz);
        const ConstMatMap whm(wh.data.data(), hsz, 4 * hsz);
        Grads out;
        out.dx = dz * wxm.transpose();
        out.dh_prev = dz * whm.transpose();
        out.dc_prev = (dct * cache.f.array()).matrix();
        return out;
    }

  private:
    std::size_t in_ = 0, hidden_ = 0;
    std::size_t wx_ = 0, wh_ = 0, b_ = 0;
};

} // namespace beampred::nn
