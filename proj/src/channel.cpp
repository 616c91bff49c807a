#include "maclab/channel.hpp"

#include "maclab/error.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace maclab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

RngSeed RngSeed::substream(std::uint64_t tag) const
{
    return RngSeed{seed, splitmix64(stream_id ^ splitmix64(tag + 0x5851F42D4C957F2DULL))};
}

std::array<std::uint64_t, 2> RngSeed::block(std::uint64_t index) const
{
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                           static_cast<std::uint32_t>(stream_id),
                                           static_cast<std::uint32_t>(stream_id >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox4x32(ctr, key);
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
}

double uniform_open0(std::uint64_t word)
{
    return static_cast<double>((word >> 11) + 1) * 0x1.0p-53;
}

ComplexPoint standard_normal_pair(const RngSeed& seed, std::uint64_t index)
{
    const auto words = seed.block(index);
    const double radius = std::sqrt(-2.0 * std::log(uniform_open0(words[0])));
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(words[1] >> 11) * 0x1.0p-53;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

NoiseSpec NoiseSpec::from_n0(double n0)
{
    if (!(n0 > 0.0) || !std::isfinite(n0))
        throw Error(ErrorCode::InvalidArgument, "noise power must be positive and finite");
    return NoiseSpec(n0);
}

NoiseSpec NoiseSpec::from_snr_db(double snr_db) { return from_n0(n0_from_snr(snr_db)); }

double NoiseSpec::snr_db() const { return -10.0 * std::log10(n0_); }

double NoiseSpec::component_sigma() const { return std::sqrt(0.5 * n0_); }

double n0_from_snr(double snr_db)
{
    if (!std::isfinite(snr_db))
        throw Error(ErrorCode::InvalidArgument, "SNR must be finite");
    return std::pow(10.0, -snr_db / 10.0);
}

std::vector<ComplexPoint> sample_noise(const NoiseSpec& spec, std::size_t n, const RngSeed& seed,
                                       std::uint64_t first_index)
{
    const double sigma = spec.component_sigma();
    std::vector<ComplexPoint> out(n);
    for (std::size_t t = 0; t < n; ++t)
        out[t] = sigma * standard_normal_pair(seed, first_index + t);
    return out;
}

std::vector<ComplexPoint> transmit(const SumConstellation& sum, std::span<const std::uint32_t> labels,
                                   const NoiseSpec& spec, const RngSeed& seed)
{
    const double sigma = spec.component_sigma();
    std::vector<ComplexPoint> out(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] >= sum.size())
            throw Error(ErrorCode::LabelOutOfRange,
                        "label " + std::to_string(labels[t]) + " outside [0, " + std::to_string(sum.size()) + ")");
        out[t] = sum.points[labels[t]] + sigma * standard_normal_pair(seed, t);
    }
    return out;
}

std::uint32_t uniform_label(const RngSeed& seed, std::uint64_t index, std::size_t joint_size)
{
    if (joint_size <= 1)
        return 0;
    const int width = std::countr_zero(joint_size);
    return static_cast<std::uint32_t>(seed.block(index)[0] >> (64 - width));
}

}  // namespace maclab
