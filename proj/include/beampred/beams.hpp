// SPDX-License-Identifier: Apache-2.0
//
// DFT codebooks, analog beamforming gain and the exhaustive beam sweep used
// as ground truth.

#pragma once

#include "channel/geometry.hpp"

#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace beampred::beams
{

using channel::ArrayConfig;
using channel::ArraySide;

struct Codebook
{
    std::vector<CVector> beams;
    std::vector<double> angles_rad;
    ArrayConfig array;
    ArraySide side = ArraySide::tx;

    std::size_t size() const { return beams.size(); }
    const CVector &operator[](std::size_t i) const { return beams[i]; }
};

// Beams uniform in sin(angle): beam i points at asin(2i/size - 1 + 1/size).
inline Codebook dft_codebook(const ArrayConfig &array, std::size_t size, ArraySide side = ArraySide::tx)
{
    if (size < 1)
        throw std::invalid_argument("dft_codebook: size must be at least 1");
    array.validate();
    Codebook cb;
    cb.array = array;
    cb.side = side;
    const auto n = static_cast<double>(size);
    for (std::size_t i = 0; i < size; ++i)
    {
        const double s = 2.0 * static_cast<double>(i) / n - 1.0 + 1.0 / n;
        const double angle = std::asin(std::clamp(s, -1.0, 1.0));
        cb.angles_rad.push_back(angle);
        cb.beams.push_back(channel::steering_vector(angle, array, side));
    }
    return cb;
}

// The single-antenna receive "codebook": one beam [1].
inline Codebook trivial_codebook(const ArrayConfig &array, ArraySide side = ArraySide::rx)
{
    if (array.count(side) != 1)
        throw std::invalid_argument("trivial_codebook: array side has more than one antenna");
    Codebook cb;
    cb.array = array;
    cb.side = side;
    cb.angles_rad.push_back(0.0);
    cb.beams.push_back(CVector::Ones(1));
    return cb;
}

inline double beamforming_gain(const CMatrix &h, const CVector &f, const CVector &w)
{
    if (h.cols() != f.size() || h.rows() != w.size())
        throw std::invalid_argument("beamforming_gain: dimension mismatch");
    return std::abs(w.dot(h * f)); // dot() conjugates w
}

struct BeamChoice
{
    std::size_t tx_index = 0;
    std::size_t rx_index = 0;
    double gain = 0.0;
};

// Exhaustive arg-max of |w^H H f| over all pairs; ties resolve to the lowest
// tx index, then the lowest rx index.
inline BeamChoice sweep_optimal_beam(const CMatrix &h, const Codebook &tx, const Codebook &rx)
{
    if (tx.size() == 0 || rx.size() == 0)
        throw std::invalid_argument("sweep_optimal_beam: empty codebook");
    BeamChoice best;
    best.gain = -1.0;
    for (std::size_t i = 0; i < tx.size(); ++i)
    {
        const CVector hf = h * tx[i];
        for (std::size_t j = 0; j < rx.size(); ++j)
        {
            if (rx[j].size() != hf.size())
                throw std::invalid_argument("sweep_optimal_beam: dimension mismatch");
            const double g = std::abs(rx[j].dot(hf));
            if (g > best.gain)
                best = {i, j, g};
        }
    }
    return best;
}

// Gain of every tx beam with a fixed rx beam.
inline std::vector<double> tx_beam_gains(const CMatrix &h, const Codebook &tx, const CVector &w)
{
    std::vector<double> g(tx.size());
    for (std::size_t i = 0; i < tx.size(); ++i)
        g[i] = beamforming_gain(h, tx[i], w);
    return g;
}

// |H f_pred| / |H f_opt| at the sweep's receive beam.
inline double gain_ratio(const CMatrix &h, std::size_t predicted_tx, const BeamChoice &optimal, const Codebook &tx,
                         const Codebook &rx)
{
    if (predicted_tx >= tx.size())
        throw std::out_of_range("gain_ratio: predicted beam outside codebook");
    if (optimal.gain <= 0.0)
        return 1.0;
    return beamforming_gain(h, tx[predicted_tx], rx[optimal.rx_index]) / optimal.gain;
}

inline double gain_ratio(const CMatrix &h, std::size_t predicted_tx, std::size_t optimal_tx, const Codebook &tx,
                         const Codebook &rx)
{
    BeamChoice opt = sweep_optimal_beam(h, tx, rx);
    opt.tx_index = optimal_tx;
    opt.gain = beamforming_gain(h, tx[optimal_tx], rx[opt.rx_index]);
    return gain_ratio(h, predicted_tx, opt, tx, rx);
}

// Mean over a validation set.
inline double mean_gain_ratio(std::span<const double> ratios)
{
    if (ratios.empty())
        return 0.0;
    return std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
}

// Codebook beam whose pointing direction is nearest in sin-space.
inline std::size_t nearest_beam(const Codebook &cb, double angle_rad)
{
    const double s = std::sin(angle_rad);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cb.size(); ++i)
    {
        const double d = std::abs(std::sin(cb.angles_rad[i]) - s);
        if (d < best_d)
        {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace beampred::beams
