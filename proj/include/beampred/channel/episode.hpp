// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geometry.hpp"

#include <stdexcept>
#include <vector>

namespace beampred::channel
{

struct EpisodeGeometry
{
    UEState initial;
    cplx los_gain{1.0, 0.0};
    double ricean_k_low_db = 0.0;
    // Far clusters first, the local cluster last. Positions/paths are static;
    // angles and pathloss are refreshed per instant by place_cluster().
    std::vector<Cluster> low_clusters;
    std::vector<Cluster> mm_clusters;
};

// One UE trajectory with its dual-band geometry. Low-band CSI is sampled at
// n*T (clean and noisy); any other instant is synthesised on demand.
class Episode
{
  public:
    Episode(ScenarioConfig cfg, EpisodeGeometry geo, double duration_s)
        : cfg_(std::move(cfg)), geo_(std::move(geo)), duration_s_(duration_s)
    {
    }

    const ScenarioConfig &config() const { return cfg_; }
    const EpisodeGeometry &geometry() const { return geo_; }
    double duration_s() const { return duration_s_; }

    std::size_t num_csi_updates() const { return low_csi_.size(); }
    double csi_time(std::size_t n) const { return static_cast<double>(n) * cfg_.low_csi_period_s; }
    const ChannelSnapshot &low_csi(std::size_t n) const { return low_csi_.at(n); }
    const ChannelSnapshot &low_csi_noisy(std::size_t n) const { return low_csi_noisy_.at(n); }

    UEState ue_at(double t) const { return ue_state_at(geo_.initial, t); }

    double ricean_k_db(Band b) const { return b == Band::low ? geo_.ricean_k_low_db : cfg_.ricean_k_mm_db; }

    LosPath los_at(Band b, double t) const
    {
        const Point2 ue = ue_at(t).position_m;
        const auto ang = los_angles_at(ue);
        LosPath los;
        los.complex_gain = geo_.los_gain;
        los.aoa_rad = ang.aoa_rad;
        los.aod_rad = ang.aod_rad;
        los.pathloss_linear = free_space_pathloss(ue.norm(), cfg_.array(b).carrier_frequency_hz);
        return los;
    }

    // Clusters whose visible region contains the UE, with pathloss already
    // rescaled to the band's Ricean K factor.
    std::vector<Cluster> active_clusters(Band b, double t) const
    {
        if (cfg_.suppress_clusters)
            return {};
        const Point2 ue = ue_at(t).position_m;
        const double fc = cfg_.array(b).carrier_frequency_hz;
        const auto &all = b == Band::low ? geo_.low_clusters : geo_.mm_clusters;

        std::vector<Cluster> active;
        std::vector<double> powers;
        for (const auto &c : all)
        {
            if (!cluster_visible(c, ue))
                continue;
            active.push_back(place_cluster(c, ue, fc));
            powers.push_back(db_to_linear(c.shadow_fading_db) / active.back().pathloss_linear);
        }
        if (active.empty())
            return active;
        const double los_power = 1.0 / los_at(b, t).pathloss_linear;
        const auto scaled = apply_ricean_scaling(los_power, powers, ricean_k_db(b));
        for (std::size_t i = 0; i < active.size(); ++i)
            active[i].pathloss_linear = 1.0 / scaled[i];
        return active;
    }

    ChannelSnapshot snapshot(Band b, double t) const
    {
        return assemble_channel(los_at(b, t), active_clusters(b, t), cfg_.array(b), t, b);
    }

    // Filled by generate_episode.
    void set_low_csi(std::vector<ChannelSnapshot> clean, std::vector<ChannelSnapshot> noisy)
    {
        low_csi_ = std::move(clean);
        low_csi_noisy_ = std::move(noisy);
    }

  private:
    ScenarioConfig cfg_;
    EpisodeGeometry geo_;
    double duration_s_;
    std::vector<ChannelSnapshot> low_csi_;
    std::vector<ChannelSnapshot> low_csi_noisy_;
};

// AWGN per entry at `snr_db` relative to the mean entry power of `h`.
inline CMatrix add_measurement_noise(const CMatrix &h, double snr_db, Rng &rng)
{
    const double mean_power = h.squaredNorm() / static_cast<double>(h.size());
    const double var = mean_power / db_to_linear(snr_db);
    CMatrix out = h;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out.data()[i] += complex_gaussian(rng, var);
    return out;
}

inline UEState draw_initial_ue(const ScenarioConfig &cfg, Rng &rng)
{
    UEState s;
    s.position_m = uniform_in_disc(rng, cfg.cell_radius_m);
    s.heading_rad = uniform(rng, 0.0, two_pi);
    if (cfg.scenario_kind == ScenarioKind::stationary)
    {
        s.speed_mps = uniform(rng, cfg.stationary_speed_min_mps, cfg.stationary_speed_max_mps);
        s.acceleration_mps2 = 0.0;
    }
    else
    {
        s.speed_mps = uniform(rng, cfg.non_stationary_speed_min_mps, cfg.non_stationary_speed_max_mps);
        s.acceleration_mps2 = uniform(rng, -cfg.non_stationary_accel_max_mps2, cfg.non_stationary_accel_max_mps2);
    }
    return s;
}

// Draws one episode. BS at the origin, UE uniform in the cell, far-cluster
// scatterers uniform in the cell with visible regions centred on them.
// `min_csi_updates` is the number of CSI instants the caller needs.
inline Episode generate_episode(const ScenarioConfig &cfg, double duration_s, Rng &rng, std::size_t min_csi_updates = 1)
{
    cfg.validate();
    const double period = cfg.low_csi_period_s;
    if (min_csi_updates < 1)
        min_csi_updates = 1;
    if (!(duration_s >= static_cast<double>(min_csi_updates - 1) * period - 1e-12))
        throw std::invalid_argument("generate_episode: duration shorter than the CSI history window");

    EpisodeGeometry geo;
    geo.initial = draw_initial_ue(cfg, rng);
    geo.los_gain = std::polar(1.0, uniform(rng, 0.0, two_pi));
    const auto &kset = cfg.ricean_k_low_db;
    geo.ricean_k_low_db =
        kset.size() == 1 ? kset.front() : kset[std::uniform_int_distribution<std::size_t>(0, kset.size() - 1)(rng)];

    const Point2 ue0 = geo.initial.position_m;
    for (std::size_t c = 0; c < cfg.num_far_clusters_low; ++c)
    {
        Cluster cl;
        cl.scatterer_position_m = uniform_in_disc(rng, cfg.cell_radius_m);
        cl.visible_region_center_m = cl.scatterer_position_m;
        cl.visible_region_radius_m = cfg.visible_region_radius_low_m;
        cl.paths = draw_paths(rng, cfg.paths_per_cluster_low, cfg.cluster_aod_spread_low_rad, cfg.cluster_aoa_spread_low_rad);
        cl.shadow_fading_db = gaussian(rng, 0.0, cfg.shadow_fading_std_low_db);
        geo.low_clusters.push_back(place_cluster(cl, ue0, cfg.low_band.carrier_frequency_hz));
    }
    geo.low_clusters.push_back(place_cluster(
        draw_local_cluster(rng, cfg.paths_per_cluster_low, cfg.local_cluster_radius_m, cfg.shadow_fading_std_low_db), ue0,
        cfg.low_band.carrier_frequency_hz));

    auto mm = derive_mmwave_geometry(geo.low_clusters, los_angles_at(ue0), cfg, ue0, rng);
    geo.mm_clusters = std::move(mm.clusters);

    Episode ep(cfg, std::move(geo), duration_s);
    const auto updates = static_cast<std::size_t>(std::floor(duration_s / period + 1e-9)) + 1;
    std::vector<ChannelSnapshot> clean, noisy;
    clean.reserve(updates);
    noisy.reserve(updates);
    for (std::size_t n = 0; n < updates; ++n)
    {
        auto s = ep.snapshot(Band::low, static_cast<double>(n) * period);
        ChannelSnapshot z = s;
        z.matrix = add_measurement_noise(s.matrix, cfg.snr_db, rng);
        z.angular = to_angular_domain(z.matrix);
        clean.push_back(std::move(s));
        noisy.push_back(std::move(z));
    }
    ep.set_low_csi(std::move(clean), std::move(noisy));
    return ep;
}

} // namespace beampred::channel
