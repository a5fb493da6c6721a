// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace beampred::predictor
{

struct TimingContext
{
    double csi_period_s = 0.2;
    double last_csi_time_s = 0.0;
    double query_time_s = 0.0;
};

// (t_query - t_n) / T, defined on t_n <= t_query < t_n + T.
inline double timing_offset(const TimingContext &ctx)
{
    if (!(ctx.csi_period_s > 0.0))
        throw std::invalid_argument("timing_offset: CSI period must be positive");
    const double d = ctx.query_time_s - ctx.last_csi_time_s;
    if (d < 0.0 || d >= ctx.csi_period_s)
        throw std::out_of_range("timing_offset: query instant outside [t_n, t_n + T)");
    return d / ctx.csi_period_s;
}

// Nearest of the gamma_count grid points (2g - 1) / (2 gamma_count), 1-based.
// Exact midpoints resolve to the smaller index.
inline std::size_t interpolation_index(double eta, std::size_t gamma_count)
{
    if (gamma_count < 1)
        throw std::invalid_argument("interpolation_index: gamma_count must be at least 1");
    std::size_t best = 1;
    double best_d = std::abs(eta - 1.0 / (2.0 * static_cast<double>(gamma_count)));
    for (std::size_t g = 2; g <= gamma_count; ++g)
    {
        const double d = std::abs(eta - (2.0 * static_cast<double>(g) - 1.0) / (2.0 * static_cast<double>(gamma_count)));
        if (d < best_d)
        {
            best_d = d;
            best = g;
        }
    }
    return best;
}

// Offsets (seconds after t_n) of the interpolation instants.
inline std::vector<double> interpolation_offsets(double period_s, std::size_t gamma_count)
{
    std::vector<double> t;
    for (std::size_t g = 1; g <= gamma_count; ++g)
        t.push_back((2.0 * static_cast<double>(g) - 1.0) * period_s / (2.0 * static_cast<double>(gamma_count)));
    return t;
}

} // namespace beampred::predictor
