// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "../common.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace beampred::channel
{

enum class Band
{
    low,
    mm
};

enum class ArraySide
{
    tx,
    rx
};

struct ArrayConfig
{
    std::size_t num_tx_antennas = 8;
    std::size_t num_rx_antennas = 1;
    double antenna_spacing_wavelengths = 0.5;
    double carrier_frequency_hz = 3.5e9;

    std::size_t count(ArraySide side) const { return side == ArraySide::tx ? num_tx_antennas : num_rx_antennas; }

    double wavelength_m() const { return speed_of_light_mps / carrier_frequency_hz; }

    void validate() const
    {
        if (num_tx_antennas < 1 || num_rx_antennas < 1)
            throw std::invalid_argument("ArrayConfig: antenna counts must be at least 1");
        if (!std::isfinite(antenna_spacing_wavelengths) || antenna_spacing_wavelengths <= 0.0)
            throw std::invalid_argument("ArrayConfig: antenna spacing must be finite and positive");
        if (!std::isfinite(carrier_frequency_hz) || carrier_frequency_hz <= 0.0)
            throw std::invalid_argument("ArrayConfig: carrier frequency must be finite and positive");
    }
};

// One propagation path inside a cluster. For the LOS path both offsets are 0.
struct PathComponent
{
    cplx complex_gain{1.0, 0.0};
    double aoa_offset_rad = 0.0;
    double aod_offset_rad = 0.0;
};

struct LosPath
{
    cplx complex_gain{1.0, 0.0};
    double aoa_rad = 0.0;
    double aod_rad = 0.0;
    double pathloss_linear = 1.0;
};

// A scattering cluster. Centre angles and pathloss depend on the current UE
// position; paths, scatterer position and the visible region do not.
//
// Local clusters carry one scatterer offset (relative to the UE) per path and
// their path offsets are recomputed from those as the UE moves.
struct Cluster
{
    double pathloss_linear = 1.0;
    double center_aoa_rad = 0.0;
    double center_aod_rad = 0.0;
    std::vector<PathComponent> paths;
    Point2 scatterer_position_m = Point2::Zero();
    Point2 visible_region_center_m = Point2::Zero();
    double visible_region_radius_m = 1.0;
    bool is_local = false;
    double shadow_fading_db = 0.0;
    std::vector<Point2> local_offsets_m;
};

struct UEState
{
    Point2 position_m = Point2::Zero();
    double speed_mps = 0.0;
    double heading_rad = 0.0;
    double acceleration_mps2 = 0.0;
    double time_s = 0.0;
};

struct ChannelSnapshot
{
    CMatrix matrix;
    CMatrix angular;
    double time_s = 0.0;
    Band band = Band::low;
};

} // namespace beampred::channel
