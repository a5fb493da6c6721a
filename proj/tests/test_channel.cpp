// SPDX-License-Identifier: Apache-2.0

#include <beampred/channel.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace beampred;
using namespace beampred::channel;
using Catch::Approx;

namespace
{

ArrayConfig ula(std::size_t tx, std::size_t rx = 1) { return {tx, rx, 0.5, 3.5e9}; }

// Literal single-path channel: sqrt(MN) coef a_rx a_tx^H, element by element.
CMatrix hand_expansion(cplx coef, double aoa, double aod, std::size_t m, std::size_t n)
{
    CMatrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c)
        {
            const cplx arx = std::polar(1.0 / std::sqrt(double(n)), pi * double(r) * std::sin(aoa));
            const cplx atx = std::polar(1.0 / std::sqrt(double(m)), pi * double(c) * std::sin(aod));
            h(Eigen::Index(r), Eigen::Index(c)) = std::sqrt(double(m * n)) * coef * arx * std::conj(atx);
        }
    return h;
}

} // namespace

TEST_CASE("steering vector examples")
{
    const auto a = steering_vector(0.0, ula(4), ArraySide::tx);
    for (Eigen::Index i = 0; i < 4; ++i)
        CHECK(std::abs(a[i] - cplx(0.5, 0.0)) < 1e-15);

    const auto b = steering_vector(pi / 2, ula(2), ArraySide::tx);
    CHECK(std::abs(b[0] - cplx(1 / std::sqrt(2.0), 0)) < 1e-15);
    CHECK(std::abs(b[1] - cplx(-1 / std::sqrt(2.0), 0)) < 1e-15);

    Rng rng(3);
    for (int k = 0; k < 200; ++k)
    {
        const auto v = steering_vector(uniform(rng, -pi, pi), ula(32), ArraySide::tx);
        CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("single LOS path matches the hand expansion")
{
    LosPath los;
    const auto s = assemble_channel(los, {}, ula(2));
    REQUIRE(s.matrix.rows() == 1);
    REQUIRE(s.matrix.cols() == 2);
    CHECK(std::abs(s.matrix(0, 0) - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(s.matrix(0, 1) - cplx(1, 0)) < 1e-14);

    los.complex_gain = std::polar(1.0, 0.7);
    los.aoa_rad = 0.3;
    los.aod_rad = -0.9;
    los.pathloss_linear = 4.0;
    const auto t = assemble_channel(los, {}, ula(8, 2));
    const CMatrix want = hand_expansion(los.complex_gain / 2.0, 0.3, -0.9, 8, 2);
    CHECK((t.matrix - want).norm() < 1e-12);
}

TEST_CASE("a one-path cluster reproduces the LOS formula")
{
    Cluster c;
    c.center_aoa_rad = 0.2;
    c.center_aod_rad = -0.4;
    c.paths = {PathComponent{cplx(1, 0), 0.0, 0.0}};
    LosPath weak{cplx(0, 0), 0, 0, 1.0};
    const auto with_cluster = assemble_channel(weak, {c}, ula(8, 2));
    LosPath los{cplx(1, 0), 0.2, -0.4, 1.0};
    const auto los_only = assemble_channel(los, {}, ula(8, 2));
    CHECK((with_cluster.matrix - los_only.matrix).norm() < 1e-12);
}

TEST_CASE("two orthogonal rank-one terms give rank two")
{
    Cluster c;
    c.center_aoa_rad = std::asin(0.5);
    c.center_aod_rad = std::asin(0.5);
    c.paths = {PathComponent{}};
    const auto s = assemble_channel(LosPath{}, {c}, ula(4, 4));
    Eigen::JacobiSVD<CMatrix> svd(s.matrix);
    const auto sv = svd.singularValues();
    CHECK(sv[0] > 1.0);
    CHECK(sv[1] > 1.0);
    CHECK(sv[2] < 1e-10);
    CHECK(sv[3] < 1e-10);
}

TEST_CASE("angular domain transform")
{
    const CMatrix eye = CMatrix::Identity(4, 4);
    CHECK((to_angular_domain(eye) - eye).norm() < 1e-12);

    // Steering vectors on the DFT grid map to canonical basis vectors.
    for (int g = 0; g < 8; ++g)
    {
        const double s = 2.0 * g / 8.0;
        const double angle = std::asin(s > 1.0 ? s - 2.0 : s);
        const CMatrix h = steering_vector(angle, ula(1, 8), ArraySide::rx) * steering_vector(0.0, ula(1, 8), ArraySide::tx).adjoint();
        const CMatrix ag = to_angular_domain(h);
        int unit = 0;
        for (Eigen::Index i = 0; i < ag.size(); ++i)
        {
            const double a = std::abs(ag.data()[i]);
            if (std::abs(a - 1.0) < 1e-10)
                ++unit;
            else
                CHECK(a < 1e-10);
        }
        CHECK(unit == 1);
    }

    Rng rng(5);
    CMatrix h(3, 8);
    for (Eigen::Index i = 0; i < h.size(); ++i)
        h.data()[i] = complex_gaussian(rng);
    CHECK((from_angular_domain(to_angular_domain(h)) - h).norm() < 1e-10);
}

TEST_CASE("mmWave geometry derivation")
{
    ScenarioConfig cfg;
    Rng rng(11);
    const Point2 ue(20.0, 5.0);
    std::vector<Cluster> low;
    for (int i = 0; i < 15; ++i)
    {
        Cluster c;
        c.scatterer_position_m = uniform_in_disc(rng, 100.0);
        c.visible_region_center_m = c.scatterer_position_m;
        c.paths = draw_paths(rng, 20, 0.1, 0.1);
        low.push_back(place_cluster(c, ue, 3.5e9));
    }
    const auto los = los_angles_at(ue);

    SECTION("zero perturbation keeps the cluster angles")
    {
        cfg.angle_perturbation_std_m = 0.0;
        const auto mm = derive_mmwave_geometry(low, los, cfg, ue, rng);
        REQUIRE(mm.clusters.size() == 16);
        for (int i = 0; i < 15; ++i)
        {
            CHECK(mm.clusters[i].center_aod_rad == low[i].center_aod_rad);
            CHECK(mm.clusters[i].center_aoa_rad == low[i].center_aoa_rad);
        }
    }
    SECTION("LOS angles are shared for any draw")
    {
        for (int k = 0; k < 20; ++k)
        {
            const auto mm = derive_mmwave_geometry(low, los, cfg, ue, rng);
            CHECK(mm.los.aod_rad == los.aod_rad);
            CHECK(mm.los.aoa_rad == los.aoa_rad);
        }
    }
    SECTION("perturbation std propagates as 0.8 m over 50 m")
    {
        Cluster c;
        c.scatterer_position_m = Point2(50.0, 0.0);
        c.visible_region_center_m = c.scatterer_position_m;
        c.paths = draw_paths(rng, 1, 0.0, 0.0);
        const std::vector<Cluster> one{place_cluster(c, ue, 3.5e9)};
        cfg.num_far_clusters_mm = 1;
        double s = 0, s2 = 0;
        const int n = 10000;
        for (int k = 0; k < n; ++k)
        {
            const double d = derive_mmwave_geometry(one, los, cfg, ue, rng).clusters[0].center_aod_rad;
            s += d;
            s2 += d * d;
        }
        const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
        CHECK(sd == Approx(std::atan(0.8 / 50.0)).epsilon(0.05));
    }
}

TEST_CASE("trajectory kinematics")
{
    UEState s;
    s.speed_mps = 10.0;
    const auto a = step_trajectory(s, 0.2);
    CHECK(a.position_m.x() == Approx(2.0).margin(1e-12));
    CHECK(a.position_m.y() == Approx(0.0).margin(1e-12));

    s.speed_mps = 25.0;
    s.acceleration_mps2 = 5.0;
    CHECK(step_trajectory(s, 1.0).speed_mps == Approx(30.0));

    s.speed_mps = 1.0;
    s.acceleration_mps2 = -5.0;
    const auto c = step_trajectory(s, 1.0);
    CHECK(c.speed_mps == 0.0);
    CHECK(c.position_m.x() == Approx(0.1)); // v^2 / 2|a|

    CHECK_THROWS(step_trajectory(s, 0.0));
}

TEST_CASE("Ricean scaling")
{
    const std::vector<double> p{1.0, 3.0, 0.5};
    auto sum = [](const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0); };
    CHECK(sum(apply_ricean_scaling(2.0, p, 0.0)) == Approx(2.0));
    CHECK(sum(apply_ricean_scaling(2.0, p, 20.0)) == Approx(0.02));
    const auto q = apply_ricean_scaling(2.0, p, 7.0);
    CHECK(q[1] / q[0] == Approx(3.0));
    CHECK(q[2] / q[0] == Approx(0.5));
}

TEST_CASE("episode generation")
{
    ScenarioConfig cfg;
    Rng rng(21);
    const auto ep = generate_episode(cfg, 1.4, rng, 8);

    CHECK(ep.geometry().low_clusters.size() == 16);
    CHECK(ep.geometry().mm_clusters.size() == 16);
    REQUIRE(ep.num_csi_updates() == 8);
    for (std::size_t n = 0; n < ep.num_csi_updates(); ++n)
        CHECK(ep.low_csi(n).time_s == Approx(0.2 * double(n)).margin(1e-15));

    SECTION("visible clusters obey the configured K factor")
    {
        for (auto band : {Band::low, Band::mm})
            for (double t : {0.0, 0.3, 1.1})
            {
                const auto active = ep.active_clusters(band, t);
                double cluster_power = 0.0;
                for (const auto &c : active)
                    cluster_power += 1.0 / c.pathloss_linear;
                const double los_power = 1.0 / ep.los_at(band, t).pathloss_linear;
                CHECK(std::abs(linear_to_db(los_power / cluster_power) - ep.ricean_k_db(band)) < 0.1);
            }
    }
    SECTION("same generator state, same episode")
    {
        Rng r1(99), r2(99);
        const auto e1 = generate_episode(cfg, 1.4, r1, 8), e2 = generate_episode(cfg, 1.4, r2, 8);
        for (std::size_t n = 0; n < 8; ++n)
            CHECK(e1.low_csi_noisy(n).matrix == e2.low_csi_noisy(n).matrix);
    }
}

TEST_CASE("UE outside every far visible region sees LOS plus the local cluster")
{
    ScenarioConfig cfg;
    cfg.visible_region_radius_low_m = 1e-6;
    cfg.visible_region_radius_mm_m = 1e-6;
    Rng rng(4);
    const auto ep = generate_episode(cfg, 0.2, rng, 2);
    for (auto band : {Band::low, Band::mm})
    {
        const auto active = ep.active_clusters(band, 0.1);
        REQUIRE(active.size() == 1);
        CHECK(active[0].is_local);
    }
}

TEST_CASE("LOS-only channels when clusters are suppressed")
{
    ScenarioConfig cfg;
    cfg.suppress_clusters = true;
    Rng rng(8);
    const auto ep = generate_episode(cfg, 0.4, rng, 3);
    const auto s = ep.snapshot(Band::mm, 0.25);
    const auto los = ep.los_at(Band::mm, 0.25);
    CHECK((s.matrix - hand_expansion(los.complex_gain / std::sqrt(los.pathloss_linear), los.aoa_rad, los.aod_rad, 32, 1))
              .norm() < 1e-9 * s.matrix.norm());
}

TEST_CASE("default profile and config file")
{
    const ScenarioConfig c;
    CHECK(c.low_band.carrier_frequency_hz == 3.5e9);
    CHECK(c.mm_band.carrier_frequency_hz == 28e9);
    CHECK(c.num_far_clusters_low == 15);
    CHECK(c.num_far_clusters_mm == 15);
    CHECK(c.paths_per_cluster_low == 20);
    CHECK(c.paths_per_cluster_mm == 20);
    CHECK(c.visible_region_radius_low_m == 50.0);
    CHECK(c.visible_region_radius_mm_m == 30.0);
    CHECK(c.cluster_aod_spread_low_rad == Approx(6.0 * pi / 180.0));
    CHECK(c.cluster_aod_spread_mm_rad == Approx(1.9 * pi / 180.0));
    CHECK(c.cluster_delay_spread_low_s == 10e-9);
    CHECK(c.cluster_delay_spread_mm_s == 3e-9);
    CHECK(c.shadow_fading_std_low_db == 2.0);
    CHECK(c.shadow_fading_std_mm_db == 4.0);
    CHECK(c.low_band.num_tx_antennas == 8);
    CHECK(c.low_band.num_rx_antennas == 1);
    CHECK(c.mm_band.num_tx_antennas == 32);
    CHECK(c.mm_band.num_rx_antennas == 1);
    CHECK(c.snr_db == 20.0);
    CHECK(c.low_csi_period_s == 0.2);

    const auto back = parse_scenario_config(to_kv_text(c));
    CHECK(to_kv_text(back) == to_kv_text(c));

    const auto edited = parse_scenario_config("# comment\nsnr_db = 30\nricean_k_low_db = 0, 4, 8\nscenario_kind = non_stationary\n");
    CHECK(edited.snr_db == 30.0);
    CHECK(edited.ricean_k_low_db == std::vector<double>{0, 4, 8});
    CHECK(edited.scenario_kind == ScenarioKind::non_stationary);

    CHECK_THROWS_AS(parse_scenario_config("no_such_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config("snr_db = loud\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config("snr_db = 1\nsnr_db = 2\n"), ConfigError);
    CHECK_THROWS(parse_scenario_config("cell_radius_m = -5\n"));
}
