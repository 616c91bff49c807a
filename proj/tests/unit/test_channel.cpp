#include "maclab/channel.hpp"
#include "maclab/error.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace maclab;

TEST_CASE("philox4x32-10 known answers")
{
    using Ctr = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(Ctr{0, 0, 0, 0}, Key{0, 0}) == Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(Ctr{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, Key{0xffffffff, 0xffffffff}) ==
          Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(Ctr{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, Key{0xa4093822, 0x299f31d0}) ==
          Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("blocks are pure functions of seed, stream and index")
{
    const RngSeed a{42, 7};
    CHECK(a.block(123) == a.block(123));
    CHECK(a.block(123) != a.block(124));
    CHECK(a.block(123) != RngSeed{42, 8}.block(123));
    CHECK(a.block(123) != RngSeed{43, 7}.block(123));
}

TEST_CASE("substreams are distinct and deterministic")
{
    const RngSeed base{1, 0};
    std::set<std::uint64_t> ids;
    for (std::uint64_t tag = 0; tag < 1000; ++tag) {
        CHECK(base.substream(tag) == base.substream(tag));
        ids.insert(base.substream(tag).stream_id);
    }
    CHECK(ids.size() == 1000);
    CHECK(base.substream(1).seed == base.seed);
}

TEST_CASE("uniform_open0 stays in (0, 1]")
{
    CHECK(uniform_open0(0) > 0.0);
    CHECK(uniform_open0(~std::uint64_t{0}) == 1.0);
}

TEST_CASE("normal samples have the right moments")
{
    const RngSeed s{5, 3};
    constexpr int n = 200000;
    double sum_re = 0, sum_im = 0, sq_re = 0, sq_im = 0, cross = 0;
    for (int t = 0; t < n; ++t) {
        const ComplexPoint z = standard_normal_pair(s, t);
        sum_re += z.real();
        sum_im += z.imag();
        sq_re += z.real() * z.real();
        sq_im += z.imag() * z.imag();
        cross += z.real() * z.imag();
    }
    // 5-sigma bands for n = 2e5.
    CHECK(std::abs(sum_re / n) < 5 / std::sqrt(n));
    CHECK(std::abs(sum_im / n) < 5 / std::sqrt(n));
    CHECK(std::abs(sq_re / n - 1) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(sq_im / n - 1) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / n) < 5 / std::sqrt(n));
}

TEST_CASE("noise power follows SNR = 1/N0")
{
    const NoiseSpec spec = NoiseSpec::from_snr_db(10.0);
    CHECK(spec.n0() == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(spec.snr_db() == doctest::Approx(10.0));
    CHECK(spec.component_sigma() == doctest::Approx(std::sqrt(0.05)));
    const auto noise = sample_noise(spec, 200000, RngSeed{1, 1});
    double power = 0;
    for (const auto& z : noise)
        power += std::norm(z);
    CHECK(power / noise.size() == doctest::Approx(0.1).epsilon(0.01));
    CHECK_THROWS_AS(NoiseSpec::from_n0(0.0), Error);
    CHECK_THROWS_AS(NoiseSpec::from_snr_db(INFINITY), Error);
}

TEST_CASE("sample_noise offsets index the same stream")
{
    const NoiseSpec spec = NoiseSpec::from_n0(1.0);
    const RngSeed seed{9, 2};
    const auto whole = sample_noise(spec, 100, seed);
    const auto tail = sample_noise(spec, 40, seed, 60);
    for (std::size_t t = 0; t < 40; ++t)
        CHECK(whole[60 + t] == tail[t]);
}

TEST_CASE("transmit adds noise to the labelled points")
{
    const Scenario s{{1, 1}, {1, 1}};
    const SumConstellation sum{s, {{2, 0}, {0, 2}, {-2, 0}, {0, -2}}};
    const std::vector<std::uint32_t> labels{0, 1, 2, 3, 3};
    const NoiseSpec spec = NoiseSpec::from_n0(0.5);
    const RngSeed seed{3, 3};
    const auto y = transmit(sum, labels, spec, seed);
    const auto n = sample_noise(spec, labels.size(), seed);
    for (std::size_t t = 0; t < labels.size(); ++t)
        CHECK(std::abs(y[t] - sum.points[labels[t]] - n[t]) < 1e-15);
    const std::vector<std::uint32_t> bad{4};
    CHECK_THROWS_AS(transmit(sum, bad, spec, seed), Error);
}

TEST_CASE("uniform labels cover the joint alphabet evenly")
{
    const RngSeed seed{2, 0};
    std::array<int, 16> counts{};
    constexpr int n = 160000;
    for (int t = 0; t < n; ++t) {
        const auto l = uniform_label(seed, t, 16);
        REQUIRE(l < 16);
        ++counts[l];
    }
    for (int c : counts)
        CHECK(std::abs(c - n / 16) < 5 * std::sqrt(n / 16.0));
}
