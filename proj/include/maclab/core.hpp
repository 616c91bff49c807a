#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace maclab {

/// One I/Q symbol. Real part is the in-phase amplitude, imaginary part the quadrature.
using ComplexPoint = std::complex<double>;

inline constexpr double kStructuralTol = 1e-9;
inline constexpr double kArithmeticTol = 1e-12;

/// How a constellation's power was fixed.
enum class PowerRegime {
    Unnormalized,
    Unit,     ///< zero mean, unit mean power
    SubUnit,  ///< zero mean, mean power <= 1 (learned scale applied)
};

/// One user's symbol set. points()[label] is the symbol carrying the k-bit label.
class Constellation {
public:
    Constellation() = default;
    Constellation(int bits, std::vector<ComplexPoint> points,
                  PowerRegime regime = PowerRegime::Unnormalized);

    int bits() const noexcept { return bits_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::span<const ComplexPoint> points() const noexcept { return points_; }
    const ComplexPoint& operator[](std::size_t label) const { return points_[label]; }
    PowerRegime regime() const noexcept { return regime_; }

    ComplexPoint mean() const;
    double mean_power() const;

    friend bool operator==(const Constellation&, const Constellation&) = default;

private:
    int bits_ = 0;
    std::vector<ComplexPoint> points_;
    PowerRegime regime_ = PowerRegime::Unnormalized;
};

/// K users, per-user bit counts and received-power ratios. For two users the
/// ratios are (2 - alpha, alpha).
struct Scenario {
    std::vector<int> bits;
    std::vector<double> alpha;

    static Scenario two_user(double alpha, int k1, int k2);

    std::size_t users() const noexcept { return bits.size(); }
    int total_bits() const;
    std::size_t joint_size() const;
    /// Bit offset of user i's sub-label inside the joint label (user 0 is most significant).
    int label_shift(std::size_t user) const;
    std::uint32_t user_label(std::uint32_t joint, std::size_t user) const;
    std::uint32_t join_labels(std::span<const std::uint32_t> labels) const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws Error with AlphaSumMismatch, NonPositiveAlpha, LengthMismatch or ZeroBits.
void validate_scenario(const Scenario& s);

/// All prod(2^k_i) noiseless received points, indexed by joint label. Duplicates are kept.
struct SumConstellation {
    Scenario scenario;
    std::vector<ComplexPoint> points;

    std::size_t size() const noexcept { return points.size(); }
};

ComplexPoint mean_of(std::span<const ComplexPoint> pts);
double mean_power_of(std::span<const ComplexPoint> pts);

/// Center and scale to zero mean, unit mean power. The point count must be a power of two.
Constellation normalize(std::span<const ComplexPoint> points);

SumConstellation superimpose(const Scenario& s, std::span<const Constellation> users);

double min_distance(std::span<const ComplexPoint> pts);

Constellation rotate(const Constellation& c, double theta);

}  // namespace maclab
