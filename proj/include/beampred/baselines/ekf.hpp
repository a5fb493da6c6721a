// SPDX-License-Identifier: Apache-2.0
//
// Extended Kalman filter tracking the dominant departure angle with a
// constant-acceleration model. Measurements are the received samples through
// the low-band beams nearest the predicted angle; the complex path gain is
// refitted by least squares at each update.

#pragma once

#include "../beams.hpp"
#include "../channel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace beampred::baselines
{

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

struct EkfState
{
    Vec3 x = Vec3::Zero(); // angle, angular velocity, angular acceleration
    Mat3 P = Mat3::Identity();
    double last_update_s = 0.0;
    std::size_t skipped_updates = 0;
};

struct EkfConfig
{
    double update_period_s = 0.02;
    Vec3 process_noise{1e-6, 1e-4, 1e-2}; // per second
    Vec3 initial_variance{0.01, 1.0, 10.0};
    std::size_t beams_per_update = 2;
    std::size_t init_grid_points = 4096;
    // Covariance inflation applied when an update is skipped.
    double divergence_inflation = 10.0;
};

inline Mat3 ca_transition(double dt)
{
    Mat3 f;
    f << 1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0;
    return f;
}

inline Mat3 symmetrize(const Mat3 &p) { return 0.5 * (p + p.transpose()); }

inline EkfState ekf_predict(const EkfState &s, double dt, const Vec3 &process_noise_per_s)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("ekf_predict: dt must be positive");
    const Mat3 f = ca_transition(dt);
    EkfState out = s;
    out.x = f * s.x;
    out.x(0) = wrap_angle(out.x(0));
    out.P = symmetrize(f * s.P * f.transpose() + Mat3(process_noise_per_s.asDiagonal()) * dt);
    out.last_update_s = s.last_update_s + dt;
    return out;
}

// a_TX(theta)^H f for each beam, and its derivative in theta.
struct BeamResponse
{
    CVector b;
    CVector db;
};

inline BeamResponse beam_response(double theta, const std::vector<CVector> &beams, const channel::ArrayConfig &array)
{
    const auto m = static_cast<Eigen::Index>(array.num_tx_antennas);
    const double k = two_pi * array.antenna_spacing_wavelengths;
    const CVector a = channel::steering_vector(theta, array, channel::ArraySide::tx);
    CVector da(m);
    for (Eigen::Index i = 0; i < m; ++i)
        da(i) = a(i) * cplx(0.0, k * static_cast<double>(i) * std::cos(theta));
    BeamResponse r;
    r.b.resize(static_cast<Eigen::Index>(beams.size()));
    r.db.resize(static_cast<Eigen::Index>(beams.size()));
    for (std::size_t j = 0; j < beams.size(); ++j)
    {
        r.b(static_cast<Eigen::Index>(j)) = a.dot(beams[j]);
        r.db(static_cast<Eigen::Index>(j)) = da.dot(beams[j]);
    }
    return r;
}

// Least-squares path gain for y ~ g * b.
inline cplx ls_gain(const CVector &b, const CVector &y)
{
    const double nb = b.squaredNorm();
    return nb > 0.0 ? b.dot(y) / nb : cplx(0.0, 0.0);
}

// One update with measurements y through `beams` (complex noise variance
// `noise_var` per sample). Infinite noise leaves the state untouched;
// a singular innovation covariance skips the update and inflates P.
inline EkfState ekf_update(const EkfState &s, const CVector &y, const std::vector<CVector> &beams,
                           const channel::ArrayConfig &array, double noise_var, double inflation = 10.0)
{
    if (static_cast<std::size_t>(y.size()) != beams.size() || beams.empty())
        throw std::invalid_argument("ekf_update: one measurement per beam required");
    if (!std::isfinite(noise_var))
        return s;
    const auto resp = beam_response(s.x(0), beams, array);
    const cplx g = ls_gain(resp.b, y);
    const CVector r = y - g * resp.b;
    // The LS gain absorbs any change along b, so only the part of the
    // angle derivative orthogonal to b is observable.
    const double nb = resp.b.squaredNorm();
    CVector hj = g * resp.db;
    if (nb > 0.0)
        hj -= resp.b * (resp.b.dot(hj) / nb);

    const auto k = static_cast<Eigen::Index>(beams.size());
    Eigen::VectorXd innov(2 * k);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * k, 3);
    for (Eigen::Index j = 0; j < k; ++j)
    {
        innov(j) = r(j).real();
        innov(k + j) = r(j).imag();
        h(j, 0) = hj(j).real();
        h(k + j, 0) = hj(j).imag();
    }
    const Eigen::MatrixXd rm = Eigen::MatrixXd::Identity(2 * k, 2 * k) * (noise_var / 2.0);
    const Eigen::MatrixXd p = s.P;
    const Eigen::MatrixXd sm = h * p * h.transpose() + rm;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sm);
    EkfState out = s;
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14) || !ldlt.isPositive())
    {
        out.P = symmetrize(s.P * inflation);
        ++out.skipped_updates;
        return out;
    }
    const Eigen::MatrixXd gain = ldlt.solve(h * p).transpose(); // P H^T S^-1
    out.x = s.x + gain * innov;
    out.x(0) = wrap_angle(out.x(0));
    const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(3, 3) - gain * h;
    out.P = symmetrize(ikh * p * ikh.transpose() + gain * rm * gain.transpose());
    return out;
}

// The `count` codebook beams nearest `theta` in sin-space.
inline std::vector<std::size_t> nearest_beams(const beams::Codebook &cb, double theta, std::size_t count)
{
    std::vector<std::size_t> idx(cb.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const double s = std::sin(theta);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(std::sin(cb.angles_rad[a]) - s) < std::abs(std::sin(cb.angles_rad[b]) - s);
    });
    idx.resize(std::min(count, idx.size()));
    return idx;
}

// Start from a full sweep: maximum-likelihood angle of a single path on a
// fine grid over [-pi/2, pi/2].
inline EkfState ekf_initialize(const CVector &y_sweep, const beams::Codebook &cb, const EkfConfig &cfg, double t0)
{
    double best = -1.0, best_theta = 0.0;
    const std::size_t n = std::max<std::size_t>(cfg.init_grid_points, 2);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double theta = -pi / 2 + pi * static_cast<double>(i) / static_cast<double>(n - 1);
        const auto r = beam_response(theta, cb.beams, cb.array);
        const double nb = r.b.squaredNorm();
        if (nb <= 0.0)
            continue;
        const double score = std::norm(r.b.dot(y_sweep)) / nb;
        if (score > best)
        {
            best = score;
            best_theta = theta;
        }
    }
    EkfState s;
    s.x = Vec3(best_theta, 0.0, 0.0);
    s.P = Mat3(cfg.initial_variance.asDiagonal());
    s.last_update_s = t0;
    return s;
}

// Noisy received samples h(t) f_j; noise variance relative to the mean
// entry power of h.
inline CVector measure(const CMatrix &h, const std::vector<CVector> &beams, double snr_db, Rng &rng, double &noise_var)
{
    if (h.rows() != 1)
        throw std::invalid_argument("measure: single receive antenna expected");
    noise_var = h.squaredNorm() / static_cast<double>(h.size()) / db_to_linear(snr_db);
    CVector y(static_cast<Eigen::Index>(beams.size()));
    for (std::size_t j = 0; j < beams.size(); ++j)
        y(static_cast<Eigen::Index>(j)) = (h * beams[j])(0) + complex_gaussian(rng, noise_var);
    return y;
}

struct EkfTrack
{
    EkfState at_last_update; // state at t_n
    std::vector<double> predicted_angle_rad;
    std::vector<std::size_t> predicted_beam;
};

// Tracks the episode from t = 0 to t_n at the configured cadence, then
// propagates to each query instant and maps to the nearest mmWave beam.
inline EkfTrack ekf_track_episode(const channel::Episode &ep, double t_n, const std::vector<double> &query_times,
                                  const beams::Codebook &mm_tx, const EkfConfig &cfg, Rng &rng)
{
    const auto &sc = ep.config();
    const auto low_cb = beams::dft_codebook(sc.low_band, sc.low_band.num_tx_antennas, channel::ArraySide::tx);
    double nv = 0.0;
    auto s = ekf_initialize(measure(ep.snapshot(channel::Band::low, 0.0).matrix, low_cb.beams, sc.snr_db, rng, nv),
                            low_cb, cfg, 0.0);
    const auto steps = static_cast<std::size_t>(std::llround(t_n / cfg.update_period_s));
    for (std::size_t k = 1; k <= steps; ++k)
    {
        const double t = static_cast<double>(k) * cfg.update_period_s;
        s = ekf_predict(s, t - s.last_update_s, cfg.process_noise);
        std::vector<CVector> beams;
        for (auto j : nearest_beams(low_cb, s.x(0), cfg.beams_per_update))
            beams.push_back(low_cb[j]);
        const CVector y = measure(ep.snapshot(channel::Band::low, t).matrix, beams, sc.snr_db, rng, nv);
        s = ekf_update(s, y, beams, sc.low_band, nv, cfg.divergence_inflation);
    }
    EkfTrack tr;
    tr.at_last_update = s;
    for (double tq : query_times)
    {
        const double dt = tq - s.last_update_s;
        const double theta = dt > 0.0 ? ekf_predict(s, dt, cfg.process_noise).x(0) : s.x(0);
        tr.predicted_angle_rad.push_back(theta);
        tr.predicted_beam.push_back(beams::nearest_beam(mm_tx, theta));
    }
    return tr;
}

} // namespace beampred::baselines
