#pragma once

#include "maclab/channel.hpp"
#include "maclab/core.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace maclab {

class DaeModel;

enum class RateMethod { MonteCarlo, Quadrature };

std::string_view to_string(RateMethod method);

/// Constellation-constrained sum rate at one SNR, in bits per channel use.
struct RatePoint {
    double snr_db = 0.0;
    double rate_bits = 0.0;
    RateMethod method = RateMethod::Quadrature;
    double std_error = 0.0;  ///< Monte Carlo only; 0 for quadrature
};

struct SerReport {
    double snr_db = 0.0;
    std::uint64_t trials = 0;
    std::vector<double> per_user_ser;
    double joint_ser = 0.0;
    double avg_ser = 0.0;
    std::vector<double> per_user_ber;
};

/// Sum-rate estimator options. workers only affects speed, never the result.
struct EvalOptions {
    unsigned workers = 1;
};

// Both evaluators compute
//   I = log2 M - (1/M) sum_m E_n[ log2 sum_m' exp(-(|s_m - s_m' + n|^2 - |n|^2) / N0) ]
// for uniform inputs over the sum constellation and n ~ CN(0, N0).

RatePoint cc_sum_rate_mc(const SumConstellation& sum, const NoiseSpec& spec, std::uint64_t samples_per_point,
                         const RngSeed& seed, const EvalOptions& opts = {});

RatePoint cc_sum_rate_gh(const SumConstellation& sum, const NoiseSpec& spec, int quad_order = 16,
                         const EvalOptions& opts = {});

/// Nearest sum point; ties go to the lowest index.
std::uint32_t ml_detect(ComplexPoint y, const SumConstellation& sum);

/// Monte Carlo SER with ML joint detection. Trial t draws its joint label and
/// its noise from fixed sub-streams of seed, so ser_ml and ser_dae see the
/// same channel realizations for the same seed.
SerReport ser_ml(const Scenario& s, std::span<const Constellation> users, const NoiseSpec& spec,
                 std::uint64_t trials, const RngSeed& seed, const EvalOptions& opts = {});

/// Monte Carlo SER using the autoencoder's decoder with a 0.5 bit threshold.
SerReport ser_dae(const DaeModel& model, const Scenario& s, const NoiseSpec& spec, std::uint64_t trials,
                  const RngSeed& seed, const EvalOptions& opts = {});

/// Bit decision used by ser_dae: 1 iff z > 0.5.
inline int decide_bit(double z) { return z > 0.5 ? 1 : 0; }

}  // namespace maclab
