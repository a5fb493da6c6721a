// SPDX-License-Identifier: Apache-2.0

#include <beampred/beams.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

using namespace beampred;
using namespace beampred::beams;
using Catch::Approx;

namespace
{

const ArrayConfig mm_array{32, 1, 0.5, 28e9};

CMatrix random_channel(Rng &rng, Eigen::Index rows, Eigen::Index cols)
{
    CMatrix h(rows, cols);
    for (Eigen::Index i = 0; i < h.size(); ++i)
        h.data()[i] = complex_gaussian(rng);
    return h;
}

// Literal double loop over |w^H H f| written out element by element.
std::pair<std::size_t, std::size_t> literal_sweep(const CMatrix &h, const Codebook &tx, const Codebook &rx)
{
    std::size_t bi = 0, bj = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < tx.size(); ++i)
        for (std::size_t j = 0; j < rx.size(); ++j)
        {
            cplx acc = 0.0;
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index c = 0; c < h.cols(); ++c)
                    acc += std::conj(rx[j][r]) * h(r, c) * tx[i][c];
            if (std::abs(acc) > best)
            {
                best = std::abs(acc);
                bi = i;
                bj = j;
            }
        }
    return {bi, bj};
}

} // namespace

TEST_CASE("DFT codebook")
{
    for (std::size_t m : {8u, 32u})
    {
        const ArrayConfig a{m, 1, 0.5, 3.5e9};
        const auto cb = dft_codebook(a, m);
        REQUIRE(cb.size() == m);
        for (std::size_t i = 0; i < m; ++i)
        {
            for (Eigen::Index k = 0; k < cb[i].size(); ++k)
                CHECK(std::abs(std::abs(cb[i][k]) - 1.0 / std::sqrt(double(m))) < 1e-12);
            for (std::size_t j = 0; j < m; ++j)
                if (i != j)
                    CHECK(std::abs(cb[i].dot(cb[j])) < 1e-10);
        }
    }
    CHECK_THROWS(dft_codebook(mm_array, 0));
}

TEST_CASE("beamforming gain")
{
    const auto cb = dft_codebook(mm_array, 32);
    const auto rx = trivial_codebook(mm_array);
    REQUIRE(rx.size() == 1);
    CHECK(rx[0].size() == 1);
    CHECK(rx[0][0] == cplx(1, 0));

    const CMatrix aligned = rx[0] * cb[5].adjoint();
    CHECK(beamforming_gain(aligned, cb[5], rx[0]) == Approx(1.0));
    CHECK(beamforming_gain(CMatrix::Zero(1, 32), cb[5], rx[0]) == 0.0);

    Rng rng(1);
    const ArrayConfig two_sided{8, 4, 0.5, 28e9};
    const auto tx8 = dft_codebook(two_sided, 8), rx4 = dft_codebook(two_sided, 4, ArraySide::rx);
    for (int k = 0; k < 50; ++k)
    {
        const CMatrix h = random_channel(rng, 4, 8);
        const double spectral = Eigen::JacobiSVD<CMatrix>(h).singularValues()[0];
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(beamforming_gain(h, tx8[i], rx4[j]) <= spectral + 1e-12);
    }
}

TEST_CASE("sweep equals the literal double loop")
{
    Rng rng(2024);
    const auto tx = dft_codebook(mm_array, 32);
    const auto rx = trivial_codebook(mm_array);
    const ArrayConfig two_sided{16, 4, 0.5, 28e9};
    const auto tx16 = dft_codebook(two_sided, 16), rx4 = dft_codebook(two_sided, 4, ArraySide::rx);
    for (int k = 0; k < 100; ++k)
    {
        const CMatrix h = random_channel(rng, 1, 32);
        const auto got = sweep_optimal_beam(h, tx, rx);
        CHECK(got.tx_index == literal_sweep(h, tx, rx).first);

        const CMatrix g = random_channel(rng, 4, 16);
        const auto both = sweep_optimal_beam(g, tx16, rx4);
        const auto want = literal_sweep(g, tx16, rx4);
        CHECK(both.tx_index == want.first);
        CHECK(both.rx_index == want.second);
    }
}

TEST_CASE("sweep on aligned channels, ties and permutations")
{
    const auto tx = dft_codebook(mm_array, 32);
    const auto rx = trivial_codebook(mm_array);
    for (std::size_t i = 0; i < 32; ++i)
    {
        const CMatrix h = rx[0] * tx[i].adjoint();
        CHECK(sweep_optimal_beam(h, tx, rx).tx_index == i);
        CHECK(nearest_beam(tx, tx.angles_rad[i]) == i);
    }
    CHECK(sweep_optimal_beam(CMatrix::Zero(1, 32), tx, rx).tx_index == 0);

    Rng rng(7);
    std::vector<std::size_t> perm(32);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Codebook shuffled = tx;
    for (std::size_t i = 0; i < 32; ++i)
    {
        shuffled.beams[i] = tx.beams[perm[i]];
        shuffled.angles_rad[i] = tx.angles_rad[perm[i]];
    }
    for (int k = 0; k < 50; ++k)
    {
        const CMatrix h = random_channel(rng, 1, 32);
        CHECK(perm[sweep_optimal_beam(h, shuffled, rx).tx_index] == sweep_optimal_beam(h, tx, rx).tx_index);
    }
}

TEST_CASE("gain ratio")
{
    Rng rng(9);
    const auto tx = dft_codebook(mm_array, 32);
    const auto rx = trivial_codebook(mm_array);
    std::vector<double> ratios;
    for (int k = 0; k < 100; ++k)
    {
        const CMatrix h = random_channel(rng, 1, 32);
        const auto opt = sweep_optimal_beam(h, tx, rx);
        CHECK(gain_ratio(h, opt.tx_index, opt, tx, rx) == Approx(1.0));
        for (std::size_t p = 0; p < 32; ++p)
        {
            const double r = gain_ratio(h, p, opt, tx, rx);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0 + 1e-12);
        }
        ratios.push_back(gain_ratio(h, k % 32, opt.tx_index, tx, rx));
    }
    CHECK(mean_gain_ratio(ratios) == Approx(std::accumulate(ratios.begin(), ratios.end(), 0.0) / 100.0));
    CHECK_THROWS_AS(gain_ratio(random_channel(rng, 1, 32), 32, 0, tx, rx), std::out_of_range);
}
