// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "../kvconfig.hpp"
#include "types.hpp"

#include <string>
#include <vector>

namespace beampred::channel
{

enum class ScenarioKind
{
    stationary,
    non_stationary
};

inline std::string to_string(ScenarioKind k) { return k == ScenarioKind::stationary ? "stationary" : "non_stationary"; }

inline ScenarioKind parse_scenario_kind(const std::string &s)
{
    if (s == "stationary")
        return ScenarioKind::stationary;
    if (s == "non_stationary" || s == "non-stationary")
        return ScenarioKind::non_stationary;
    throw ConfigError("unknown scenario kind '" + s + "'");
}

inline double degrees(double deg) { return deg * pi / 180.0; }

// Dual-band propagation scenario. Defaults are the dual-band parameter table:
// 3.5 GHz / 28 GHz, 15 far clusters of 20 paths, visible regions 50 m / 30 m,
// AoD spreads 6 / 1.9 degrees, delay spreads 10 / 3 ns, shadow fading 2 / 4 dB,
// arrays 8x1 / 32x1.
struct ScenarioConfig
{
    ArrayConfig low_band{8, 1, 0.5, 3.5e9};
    ArrayConfig mm_band{32, 1, 0.5, 28e9};
    double cell_radius_m = 100.0;

    std::size_t num_far_clusters_low = 15;
    std::size_t num_far_clusters_mm = 15;
    std::size_t paths_per_cluster_low = 20;
    std::size_t paths_per_cluster_mm = 20;
    double visible_region_radius_low_m = 50.0;
    double visible_region_radius_mm_m = 30.0;
    double cluster_aod_spread_low_rad = degrees(6.0);
    double cluster_aod_spread_mm_rad = degrees(1.9);
    double cluster_aoa_spread_low_rad = degrees(6.0);
    double cluster_aoa_spread_mm_rad = degrees(1.9);
    // Narrowband model: delay spreads are carried but do not enter the channel.
    double cluster_delay_spread_low_s = 10e-9;
    double cluster_delay_spread_mm_s = 3e-9;
    double shadow_fading_std_low_db = 2.0;
    double shadow_fading_std_mm_db = 4.0;

    // One value: fixed. Several values: drawn uniformly per episode.
    std::vector<double> ricean_k_low_db{8.0};
    double ricean_k_mm_db = 20.0;
    double snr_db = 20.0;
    double angle_perturbation_std_m = 0.8;
    double low_csi_period_s = 0.2;
    ScenarioKind scenario_kind = ScenarioKind::stationary;
    double local_cluster_radius_m = 2.0;
    // LOS-only channels (the K -> infinity limit) in both bands.
    bool suppress_clusters = false;

    double stationary_speed_min_mps = 8.0;
    double stationary_speed_max_mps = 12.0;
    double non_stationary_speed_min_mps = 25.0;
    double non_stationary_speed_max_mps = 30.0;
    double non_stationary_accel_max_mps2 = 5.0;

    const ArrayConfig &array(Band b) const { return b == Band::low ? low_band : mm_band; }

    void validate() const
    {
        low_band.validate();
        mm_band.validate();
        if (!(cell_radius_m > 0.0))
            throw std::invalid_argument("ScenarioConfig: cell radius must be positive");
        if (paths_per_cluster_low < 1 || paths_per_cluster_mm < 1)
            throw std::invalid_argument("ScenarioConfig: clusters need at least one path");
        if (!(visible_region_radius_low_m > 0.0) || !(visible_region_radius_mm_m > 0.0))
            throw std::invalid_argument("ScenarioConfig: visible-region radii must be positive");
        if (ricean_k_low_db.empty())
            throw std::invalid_argument("ScenarioConfig: empty Ricean K set");
        for (double k : ricean_k_low_db)
            if (!std::isfinite(k))
                throw std::invalid_argument("ScenarioConfig: Ricean K must be finite");
        if (!std::isfinite(ricean_k_mm_db))
            throw std::invalid_argument("ScenarioConfig: Ricean K must be finite");
        if (!(low_csi_period_s > 0.0))
            throw std::invalid_argument("ScenarioConfig: CSI period must be positive");
        if (!(local_cluster_radius_m > 0.0))
            throw std::invalid_argument("ScenarioConfig: local cluster radius must be positive");
        if (angle_perturbation_std_m < 0.0)
            throw std::invalid_argument("ScenarioConfig: perturbation std must be non-negative");
        if (stationary_speed_min_mps < 0.0 || stationary_speed_max_mps < stationary_speed_min_mps ||
            non_stationary_speed_min_mps < 0.0 || non_stationary_speed_max_mps < non_stationary_speed_min_mps ||
            non_stationary_accel_max_mps2 < 0.0)
            throw std::invalid_argument("ScenarioConfig: invalid mobility ranges");
    }
};

inline void write_array_kv(std::string &out, const std::string &prefix, const ArrayConfig &a)
{
    out += prefix + ".num_tx_antennas = " + std::to_string(a.num_tx_antennas) + "\n";
    out += prefix + ".num_rx_antennas = " + std::to_string(a.num_rx_antennas) + "\n";
    out += prefix + ".antenna_spacing_wavelengths = " + format_double(a.antenna_spacing_wavelengths) + "\n";
    out += prefix + ".carrier_frequency_hz = " + format_double(a.carrier_frequency_hz) + "\n";
}

inline void read_array_kv(KeyValueFile &kv, const std::string &prefix, ArrayConfig &a)
{
    kv.read(prefix + ".num_tx_antennas", a.num_tx_antennas);
    kv.read(prefix + ".num_rx_antennas", a.num_rx_antennas);
    kv.read(prefix + ".antenna_spacing_wavelengths", a.antenna_spacing_wavelengths);
    kv.read(prefix + ".carrier_frequency_hz", a.carrier_frequency_hz);
}

// Canonical text; also the input of the configuration digest.
inline std::string to_kv_text(const ScenarioConfig &c)
{
    std::string o;
    auto d = [&](const char *k, double v) { o += std::string(k) + " = " + format_double(v) + "\n"; };
    auto u = [&](const char *k, std::size_t v) { o += std::string(k) + " = " + std::to_string(v) + "\n"; };
    write_array_kv(o, "low", c.low_band);
    write_array_kv(o, "mm", c.mm_band);
    d("cell_radius_m", c.cell_radius_m);
    u("num_far_clusters_low", c.num_far_clusters_low);
    u("num_far_clusters_mm", c.num_far_clusters_mm);
    u("paths_per_cluster_low", c.paths_per_cluster_low);
    u("paths_per_cluster_mm", c.paths_per_cluster_mm);
    d("visible_region_radius_low_m", c.visible_region_radius_low_m);
    d("visible_region_radius_mm_m", c.visible_region_radius_mm_m);
    d("cluster_aod_spread_low_rad", c.cluster_aod_spread_low_rad);
    d("cluster_aod_spread_mm_rad", c.cluster_aod_spread_mm_rad);
    d("cluster_aoa_spread_low_rad", c.cluster_aoa_spread_low_rad);
    d("cluster_aoa_spread_mm_rad", c.cluster_aoa_spread_mm_rad);
    d("cluster_delay_spread_low_s", c.cluster_delay_spread_low_s);
    d("cluster_delay_spread_mm_s", c.cluster_delay_spread_mm_s);
    d("shadow_fading_std_low_db", c.shadow_fading_std_low_db);
    d("shadow_fading_std_mm_db", c.shadow_fading_std_mm_db);
    o += "ricean_k_low_db = " + format_double_list(c.ricean_k_low_db) + "\n";
    d("ricean_k_mm_db", c.ricean_k_mm_db);
    d("snr_db", c.snr_db);
    d("angle_perturbation_std_m", c.angle_perturbation_std_m);
    d("low_csi_period_s", c.low_csi_period_s);
    o += "scenario_kind = " + to_string(c.scenario_kind) + "\n";
    d("local_cluster_radius_m", c.local_cluster_radius_m);
    o += std::string("suppress_clusters = ") + (c.suppress_clusters ? "true" : "false") + "\n";
    d("stationary_speed_min_mps", c.stationary_speed_min_mps);
    d("stationary_speed_max_mps", c.stationary_speed_max_mps);
    d("non_stationary_speed_min_mps", c.non_stationary_speed_min_mps);
    d("non_stationary_speed_max_mps", c.non_stationary_speed_max_mps);
    d("non_stationary_accel_max_mps2", c.non_stationary_accel_max_mps2);
    return o;
}

// Reads the scenario keys present in `kv`; missing keys keep their defaults.
inline ScenarioConfig read_scenario(KeyValueFile &kv, ScenarioConfig c = {})
{
    read_array_kv(kv, "low", c.low_band);
    read_array_kv(kv, "mm", c.mm_band);
    kv.read("cell_radius_m", c.cell_radius_m);
    kv.read("num_far_clusters_low", c.num_far_clusters_low);
    kv.read("num_far_clusters_mm", c.num_far_clusters_mm);
    kv.read("paths_per_cluster_low", c.paths_per_cluster_low);
    kv.read("paths_per_cluster_mm", c.paths_per_cluster_mm);
    kv.read("visible_region_radius_low_m", c.visible_region_radius_low_m);
    kv.read("visible_region_radius_mm_m", c.visible_region_radius_mm_m);
    kv.read("cluster_aod_spread_low_rad", c.cluster_aod_spread_low_rad);
    kv.read("cluster_aod_spread_mm_rad", c.cluster_aod_spread_mm_rad);
    kv.read("cluster_aoa_spread_low_rad", c.cluster_aoa_spread_low_rad);
    kv.read("cluster_aoa_spread_mm_rad", c.cluster_aoa_spread_mm_rad);
    kv.read("cluster_delay_spread_low_s", c.cluster_delay_spread_low_s);
    kv.read("cluster_delay_spread_mm_s", c.cluster_delay_spread_mm_s);
    kv.read("shadow_fading_std_low_db", c.shadow_fading_std_low_db);
    kv.read("shadow_fading_std_mm_db", c.shadow_fading_std_mm_db);
    kv.read("ricean_k_low_db", c.ricean_k_low_db);
    kv.read("ricean_k_mm_db", c.ricean_k_mm_db);
    kv.read("snr_db", c.snr_db);
    kv.read("angle_perturbation_std_m", c.angle_perturbation_std_m);
    kv.read("low_csi_period_s", c.low_csi_period_s);
    if (auto v = kv.take("scenario_kind"))
        c.scenario_kind = parse_scenario_kind(*v);
    kv.read("local_cluster_radius_m", c.local_cluster_radius_m);
    kv.read("suppress_clusters", c.suppress_clusters);
    kv.read("stationary_speed_min_mps", c.stationary_speed_min_mps);
    kv.read("stationary_speed_max_mps", c.stationary_speed_max_mps);
    kv.read("non_stationary_speed_min_mps", c.non_stationary_speed_min_mps);
    kv.read("non_stationary_speed_max_mps", c.non_stationary_speed_max_mps);
    kv.read("non_stationary_accel_max_mps2", c.non_stationary_accel_max_mps2);
    c.validate();
    return c;
}

inline ScenarioConfig parse_scenario_config(const std::string &text)
{
    auto kv = KeyValueFile::parse(text);
    auto c = read_scenario(kv);
    kv.reject_unknown();
    return c;
}

inline ScenarioConfig load_scenario_config(const std::string &path)
{
    auto kv = KeyValueFile::load(path);
    auto c = read_scenario(kv);
    kv.reject_unknown();
    return c;
}

} // namespace beampred::channel
