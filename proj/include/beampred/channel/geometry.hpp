// SPDX-License-Identifier: Apache-2.0
//
// Narrowband geometric channel: ULA responses, channel assembly from a LOS
// path plus clusters, angular-domain transform, Ricean power split and UE
// kinematics.

#pragma once

#include "scenario.hpp"
#include "types.hpp"

#include <numeric>
#include <stdexcept>
#include <vector>

namespace beampred::channel
{

// ULA response; entry i is exp(j 2 pi i d sin(angle)) / sqrt(count).
inline CVector steering_vector(double angle_rad, const ArrayConfig &array, ArraySide side)
{
    const auto n = array.count(side);
    CVector v(static_cast<Eigen::Index>(n));
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    const double step = two_pi * array.antenna_spacing_wavelengths * std::sin(angle_rad);
    // Blocks of exact polar() restarts keep the recurrence error far below 1e-12.
    const cplx w = std::polar(1.0, step);
    cplx cur = amp;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (i % 16 == 0)
            cur = std::polar(amp, step * static_cast<double>(i));
        v[static_cast<Eigen::Index>(i)] = cur;
        cur *= w;
    }
    return v;
}

// Unitary DFT matrix, entries exp(-j 2 pi n k / K) / sqrt(K).
inline CMatrix dft_matrix(std::size_t k)
{
    const auto n = static_cast<Eigen::Index>(k);
    CMatrix f(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
        {
            // reduce the exponent first so large products stay exact
            const auto e = static_cast<double>((r * c) % n);
            f(r, c) = std::polar(s, -two_pi * e / static_cast<double>(k));
        }
    return f;
}

// H_ag = F_N H F_M^H.
inline CMatrix to_angular_domain(const CMatrix &h)
{
    const CMatrix fn = dft_matrix(static_cast<std::size_t>(h.rows()));
    const CMatrix fm = dft_matrix(static_cast<std::size_t>(h.cols()));
    return fn * h * fm.adjoint();
}

inline CMatrix from_angular_domain(const CMatrix &h_ag)
{
    const CMatrix fn = dft_matrix(static_cast<std::size_t>(h_ag.rows()));
    const CMatrix fm = dft_matrix(static_cast<std::size_t>(h_ag.cols()));
    return fn.adjoint() * h_ag * fm;
}

inline ChannelSnapshot assemble_channel(const LosPath &los, const std::vector<Cluster> &clusters, const ArrayConfig &array,
                                        double time_s = 0.0, Band band = Band::low)
{
    array.validate();
    const auto n = static_cast<Eigen::Index>(array.num_rx_antennas);
    const auto m = static_cast<Eigen::Index>(array.num_tx_antennas);
    const double mn = static_cast<double>(n * m);

    if (!(los.pathloss_linear > 0.0) || !std::isfinite(los.pathloss_linear))
        throw std::invalid_argument("assemble_channel: LOS pathloss must be positive");

    CMatrix h = CMatrix::Zero(n, m);
    auto add_path = [&](cplx coef, double aoa, double aod) {
        const CVector arx = steering_vector(aoa, array, ArraySide::rx);
        const CVector atx = steering_vector(aod, array, ArraySide::tx);
        h.noalias() += coef * arx * atx.adjoint();
    };

    add_path(std::sqrt(mn / los.pathloss_linear) * los.complex_gain, los.aoa_rad, los.aod_rad);

    for (const auto &c : clusters)
    {
        if (!(c.pathloss_linear > 0.0) || !std::isfinite(c.pathloss_linear))
            throw std::invalid_argument("assemble_channel: cluster pathloss must be positive");
        if (c.paths.empty())
            throw std::invalid_argument("assemble_channel: cluster without paths");
        const double scale = std::sqrt(mn / c.pathloss_linear) / std::sqrt(static_cast<double>(c.paths.size()));
        for (const auto &p : c.paths)
            add_path(scale * p.complex_gain, c.center_aoa_rad + p.aoa_offset_rad, c.center_aod_rad + p.aod_offset_rad);
    }

    ChannelSnapshot s;
    s.angular = to_angular_domain(h);
    s.matrix = std::move(h);
    s.time_s = time_s;
    s.band = band;
    return s;
}

// Rescales cluster powers by one common factor so that
// los_power / sum(cluster powers) equals the K factor.
inline std::vector<double> apply_ricean_scaling(double los_power, const std::vector<double> &cluster_powers,
                                                double k_factor_db)
{
    if (!(los_power > 0.0) || !std::isfinite(los_power))
        throw std::invalid_argument("apply_ricean_scaling: LOS power must be positive");
    if (cluster_powers.empty())
        throw std::invalid_argument("apply_ricean_scaling: no clusters");
    double total = 0.0;
    for (double p : cluster_powers)
    {
        if (p < 0.0 || !std::isfinite(p))
            throw std::invalid_argument("apply_ricean_scaling: cluster powers must be finite and non-negative");
        total += p;
    }
    if (total <= 0.0)
        throw std::invalid_argument("apply_ricean_scaling: all cluster powers are zero");

    const double target = los_power / db_to_linear(k_factor_db);
    const double factor = target / total;
    std::vector<double> out(cluster_powers);
    for (double &p : out)
        p *= factor;
    return out;
}

inline double free_space_pathloss(double distance_m, double carrier_frequency_hz)
{
    const double d = std::max(distance_m, 1.0);
    const double x = 4.0 * pi * d * carrier_frequency_hz / speed_of_light_mps;
    return x * x;
}

// Exact constant-acceleration kinematics along a fixed heading; the speed is
// clamped at zero and the UE then stays put.
inline UEState step_trajectory(const UEState &state, double dt_s)
{
    if (!(dt_s > 0.0))
        throw std::invalid_argument("step_trajectory: dt must be positive");
    const double v0 = state.speed_mps;
    const double a = state.acceleration_mps2;
    double distance = 0.0;
    double v1 = v0 + a * dt_s;
    if (v1 < 0.0)
    {
        const double t_stop = -v0 / a;
        distance = v0 * t_stop + 0.5 * a * t_stop * t_stop;
        v1 = 0.0;
    }
    else
    {
        distance = v0 * dt_s + 0.5 * a * dt_s * dt_s;
    }
    UEState next = state;
    next.position_m += distance * Point2(std::cos(state.heading_rad), std::sin(state.heading_rad));
    next.speed_mps = v1;
    next.time_s = state.time_s + dt_s;
    return next;
}

// Closed-form state at absolute time t (>= initial.time_s).
inline UEState ue_state_at(const UEState &initial, double t)
{
    if (t <= initial.time_s)
        return initial;
    return step_trajectory(initial, t - initial.time_s);
}

// Sets centre angles and nominal pathloss for the UE position. For local
// clusters the scatterers move with the UE and the per-path offsets are
// recomputed.
inline Cluster place_cluster(const Cluster &base, const Point2 &ue, double carrier_frequency_hz)
{
    Cluster c = base;
    if (c.is_local)
    {
        Point2 mean = Point2::Zero();
        for (const auto &o : c.local_offsets_m)
            mean += o;
        mean /= static_cast<double>(std::max<std::size_t>(c.local_offsets_m.size(), 1));
        c.scatterer_position_m = ue + mean;
        c.visible_region_center_m = ue;
        c.center_aod_rad = angle_of(c.scatterer_position_m);
        c.center_aoa_rad = angle_of(mean);
        for (std::size_t l = 0; l < c.paths.size() && l < c.local_offsets_m.size(); ++l)
        {
            const Point2 s = ue + c.local_offsets_m[l];
            c.paths[l].aod_offset_rad = wrap_angle(angle_of(s) - c.center_aod_rad);
            c.paths[l].aoa_offset_rad = wrap_angle(angle_of(c.local_offsets_m[l]) - c.center_aoa_rad);
        }
    }
    else
    {
        c.center_aod_rad = angle_of(c.scatterer_position_m);
        c.center_aoa_rad = angle_of(Point2(c.scatterer_position_m - ue));
    }
    const double d = c.scatterer_position_m.norm() + (c.scatterer_position_m - ue).norm();
    c.pathloss_linear = free_space_pathloss(d, carrier_frequency_hz);
    return c;
}

inline bool cluster_visible(const Cluster &c, const Point2 &ue)
{
    return c.is_local || (ue - c.visible_region_center_m).norm() <= c.visible_region_radius_m;
}

struct LosAngles
{
    double aoa_rad = 0.0;
    double aod_rad = 0.0;
};

inline LosAngles los_angles_at(const Point2 &ue) { return {angle_of(Point2(-ue)), angle_of(ue)}; }

inline Point2 uniform_in_disc(Rng &rng, double radius)
{
    const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double a = uniform(rng, 0.0, two_pi);
    return {r * std::cos(a), r * std::sin(a)};
}

inline std::vector<PathComponent> draw_paths(Rng &rng, std::size_t count, double aod_spread, double aoa_spread)
{
    std::vector<PathComponent> paths(count);
    for (auto &p : paths)
    {
        p.complex_gain = complex_gaussian(rng, 1.0);
        p.aod_offset_rad = gaussian(rng, 0.0, aod_spread);
        p.aoa_offset_rad = gaussian(rng, 0.0, aoa_spread);
    }
    return paths;
}

inline Cluster draw_local_cluster(Rng &rng, std::size_t paths, double radius, double shadow_std_db)
{
    Cluster c;
    c.is_local = true;
    c.paths = draw_paths(rng, paths, 0.0, 0.0);
    c.local_offsets_m.resize(paths);
    for (auto &o : c.local_offsets_m)
        o = uniform_in_disc(rng, radius);
    c.visible_region_radius_m = radius;
    c.shadow_fading_db = gaussian(rng, 0.0, shadow_std_db);
    return c;
}

struct MmGeometry
{
    std::vector<Cluster> clusters;
    LosAngles los;
};

// mmWave counterpart of the low-band geometry. The LOS angles are shared;
// every far-cluster scatterer is displaced by white Gaussian noise of
// `angle_perturbation_std_m` per axis and its angles are recomputed from the
// new position. Visible regions stay concentric with radius r_v(mm). The local
// cluster is drawn afresh around the UE.
inline MmGeometry derive_mmwave_geometry(const std::vector<Cluster> &low_clusters, const LosAngles &low_los,
                                         const ScenarioConfig &cfg, const Point2 &ue_position, Rng &rng)
{
    MmGeometry out;
    out.los = low_los;

    std::vector<const Cluster *> far;
    for (const auto &c : low_clusters)
        if (!c.is_local)
            far.push_back(&c);

    const double sigma = cfg.angle_perturbation_std_m;
    for (std::size_t i = 0; i < cfg.num_far_clusters_mm; ++i)
    {
        Cluster c;
        Point2 base;
        Point2 vr_center;
        if (i < far.size())
        {
            base = far[i]->scatterer_position_m;
            vr_center = far[i]->visible_region_center_m;
        }
        else
        {
            base = uniform_in_disc(rng, cfg.cell_radius_m);
            vr_center = base;
        }
        const double dx = gaussian(rng, 0.0, sigma);
        const double dy = gaussian(rng, 0.0, sigma);
        c.scatterer_position_m = base + Point2(dx, dy);
        c.visible_region_center_m = vr_center;
        c.visible_region_radius_m = cfg.visible_region_radius_mm_m;
        c.paths = draw_paths(rng, cfg.paths_per_cluster_mm, cfg.cluster_aod_spread_mm_rad, cfg.cluster_aoa_spread_mm_rad);
        c.shadow_fading_db = gaussian(rng, 0.0, cfg.shadow_fading_std_mm_db);
        out.clusters.push_back(place_cluster(c, ue_position, cfg.mm_band.carrier_frequency_hz));
    }

    Cluster local = draw_local_cluster(rng, cfg.paths_per_cluster_mm, cfg.local_cluster_radius_m, cfg.shadow_fading_std_mm_db);
    out.clusters.push_back(place_cluster(local, ue_position, cfg.mm_band.carrier_frequency_hz));
    return out;
}

} // namespace beampred::channel
