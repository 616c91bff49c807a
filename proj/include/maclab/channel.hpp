#pragma once

#include "maclab/core.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace maclab {

/// Philox4x32-10 counter-based generator.
/// key = 64-bit seed, counter = (block index, stream id).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Identifies one independent random stream. Block t of a stream is a pure
/// function of (seed, stream_id, t), so work can be sharded by index.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    /// Deterministically derived child stream; distinct tags give distinct streams.
    RngSeed substream(std::uint64_t tag) const;

    std::array<std::uint64_t, 2> block(std::uint64_t index) const;

    friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Uniform in (0, 1] from the top 53 bits.
double uniform_open0(std::uint64_t word);

/// Box-Muller on one Philox block: a pair of independent standard normals.
ComplexPoint standard_normal_pair(const RngSeed& seed, std::uint64_t index);

/// Noise power bookkeeping. SNR is P_av / N0 with P_av = 1.
class NoiseSpec {
public:
    static NoiseSpec from_n0(double n0);
    static NoiseSpec from_snr_db(double snr_db);

    double n0() const noexcept { return n0_; }
    double snr_db() const;
    double component_sigma() const;

private:
    explicit NoiseSpec(double n0) : n0_(n0) {}
    double n0_;
};

double n0_from_snr(double snr_db);

/// n i.i.d. CN(0, N0) samples; sample t uses block first_index + t.
std::vector<ComplexPoint> sample_noise(const NoiseSpec& spec, std::size_t n, const RngSeed& seed,
                                       std::uint64_t first_index = 0);

std::vector<ComplexPoint> transmit(const SumConstellation& sum, std::span<const std::uint32_t> labels,
                                   const NoiseSpec& spec, const RngSeed& seed);

/// Uniform joint label for draw t; M must be a power of two.
std::uint32_t uniform_label(const RngSeed& seed, std::uint64_t index, std::size_t joint_size);

}  // namespace maclab
