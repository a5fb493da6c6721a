// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace beampred
{

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Point2 = Eigen::Vector2d;
using Rng = std::mt19937_64;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double speed_of_light_mps = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Wraps into (-pi, pi].
inline double wrap_angle(double a)
{
    double w = std::remainder(a, two_pi);
    if (w <= -pi)
        w += two_pi;
    return w;
}

inline double angle_of(const Point2 &v) { return std::atan2(v.y(), v.x()); }

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, stream, sub); used for per-episode generators.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0)
{
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(stream + 0x1234567ULL));
    s = splitmix64(s ^ splitmix64(sub + 0x89ABCDEFULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Rng(seq);
}

inline double uniform(Rng &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng &rng, double mean = 0.0, double stddev = 1.0)
{
    return std::normal_distribution<double>(mean, stddev)(rng);
}

// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_gaussian(Rng &rng, double variance = 1.0)
{
    const double s = std::sqrt(variance / 2.0);
    const double re = gaussian(rng, 0.0, s);
    const double im = gaussian(rng, 0.0, s);
    return {re, im};
}

} // namespace beampred
