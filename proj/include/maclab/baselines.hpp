#pragma once

#include "maclab/core.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace maclab {

/// Orthogonal PAM pair: user 1 on the I axis, user 2 on the Q axis, natural binary labels.
std::vector<Constellation> pam_orthogonal(int k1, int k2);

/// 2^k-PAM on the real axis, zero-mean unit-power.
Constellation pam(int k);

/// {exp(j(pi/4 + m pi/2))}, m = label.
Constellation qpsk();

/// BPSK {+1, -1}.
Constellation bpsk();

enum class RotationObjective { SumRate, MinDistance };

std::string_view to_string(RotationObjective objective);

struct RotationResult {
    double theta_star = 0.0;  ///< radians, on the grid, in [0, pi/2)
    double objective_value = 0.0;
    RotationObjective objective = RotationObjective::MinDistance;
    double grid_step = 0.0;
    std::optional<double> snr_db;
    std::vector<Constellation> users;  ///< base1 and base2 rotated by theta_star
};

inline constexpr double kDefaultRotationStep = 0.1 * 3.14159265358979323846 / 180.0;
inline constexpr int kSweepQuadOrder = 12;
inline constexpr int kFinalQuadOrder = 24;

/// Sweep user 2's rotation over [0, pi/2) and keep the best sum constellation
/// (ties to the smallest angle). The rate objective sweeps with order-12
/// quadrature and re-scores the winner at order 24.
RotationResult rotation_optimize(const Constellation& base1, const Constellation& base2, const Scenario& s,
                                 RotationObjective objective, double grid_step = kDefaultRotationStep,
                                 std::optional<double> snr_db = std::nullopt);

/// Search grid for the parallelogram family.
struct SearchBudget {
    double coarse_angle_deg = 7.5;  ///< angle grid for the 4-point x 4-point case
    double coarse_ratio_step = 0.15;
    double segment_angle_deg = 1.0;  ///< angle grid when user 2 is a 2-point segment
    double segment_ratio_step = 0.05;
    int refine_starts = 16;           ///< best coarse cells polished by pattern search
    double final_angle_deg = 0.001;  ///< pattern search stops below this step
    double min_ratio = 0.1;
};

struct ParallelogramResult {
    std::vector<Constellation> users;
    double min_distance = 0.0;
    std::size_t evaluations = 0;
};

/// {+-(u+v)/2, +-(u-v)/2} normalized to unit power; labels 0..3 in that order.
std::vector<ComplexPoint> parallelogram_points(ComplexPoint u, ComplexPoint v);

/// MD-maximizing parallelogram pair. k1 must be 2, k2 in {1, 2}.
ParallelogramResult parallelogram_md(const Scenario& s, const SearchBudget& budget = {});

}  // namespace maclab
