#include "maclab/core.hpp"

#include "maclab/error.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace maclab {

namespace {

bool finite(const ComplexPoint& p)
{
    return std::isfinite(p.real()) && std::isfinite(p.imag());
}

}  // namespace

Constellation::Constellation(int bits, std::vector<ComplexPoint> points, PowerRegime regime)
    : bits_(bits), points_(std::move(points)), regime_(regime)
{
    if (bits_ < 1 || bits_ > 20)
        throw Error(ErrorCode::ZeroBits, "constellation needs 1..20 bits per symbol, got " + std::to_string(bits_));
    if (points_.size() != (std::size_t{1} << bits_))
        throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(std::size_t{1} << bits_) +
                                                   " points, got " + std::to_string(points_.size()));
    for (const auto& p : points_)
        if (!finite(p))
            throw Error(ErrorCode::InvalidArgument, "constellation point is not finite");
    if (regime_ != PowerRegime::Unnormalized) {
        const double power = mean_power();
        const bool centered = std::abs(mean()) <= kStructuralTol;
        const bool power_ok = regime_ == PowerRegime::Unit ? std::abs(power - 1.0) <= kStructuralTol
                                                           : power <= 1.0 + kStructuralTol;
        if (!centered || !power_ok)
            throw Error(ErrorCode::InvalidArgument, "constellation flagged normalized violates mean/power contract");
    }
}

ComplexPoint Constellation::mean() const { return mean_of(points_); }
double Constellation::mean_power() const { return mean_power_of(points_); }

Scenario Scenario::two_user(double alpha, int k1, int k2)
{
    return Scenario{{k1, k2}, {2.0 - alpha, alpha}};
}

int Scenario::total_bits() const
{
    int total = 0;
    for (int k : bits)
        total += k;
    return total;
}

std::size_t Scenario::joint_size() const { return std::size_t{1} << total_bits(); }

int Scenario::label_shift(std::size_t user) const
{
    int shift = 0;
    for (std::size_t j = user + 1; j < bits.size(); ++j)
        shift += bits[j];
    return shift;
}

std::uint32_t Scenario::user_label(std::uint32_t joint, std::size_t user) const
{
    const std::uint32_t mask = (std::uint32_t{1} << bits[user]) - 1;
    return (joint >> label_shift(user)) & mask;
}

std::uint32_t Scenario::join_labels(std::span<const std::uint32_t> labels) const
{
    std::uint32_t joint = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        joint = (joint << bits[i]) | labels[i];
    return joint;
}

void validate_scenario(const Scenario& s)
{
    if (s.bits.empty() || s.bits.size() != s.alpha.size())
        throw Error(ErrorCode::LengthMismatch, "bits and alpha must be non-empty and of equal length (got " +
                                                   std::to_string(s.bits.size()) + " and " +
                                                   std::to_string(s.alpha.size()) + ")");
    for (std::size_t i = 0; i < s.bits.size(); ++i)
        if (s.bits[i] < 1)
            throw Error(ErrorCode::ZeroBits, "user " + std::to_string(i + 1) + " has no bits");
    if (s.total_bits() > 20)
        throw Error(ErrorCode::InvalidArgument, "total bits above 20 is not supported");
    double sum = 0.0;
    for (std::size_t i = 0; i < s.alpha.size(); ++i) {
        if (!(s.alpha[i] > 0.0) || !std::isfinite(s.alpha[i]))
            throw Error(ErrorCode::NonPositiveAlpha, "alpha of user " + std::to_string(i + 1) + " must be positive");
        sum += s.alpha[i];
    }
    const double users = static_cast<double>(s.users());
    if (std::abs(sum - users) > kStructuralTol)
        throw Error(ErrorCode::AlphaSumMismatch,
                    "alpha must sum to the user count " + std::to_string(s.users()) + ", got " + std::to_string(sum));
}

ComplexPoint mean_of(std::span<const ComplexPoint> pts)
{
    ComplexPoint acc{};
    for (const auto& p : pts)
        acc += p;
    return acc / static_cast<double>(pts.size());
}

double mean_power_of(std::span<const ComplexPoint> pts)
{
    double acc = 0.0;
    for (const auto& p : pts)
        acc += std::norm(p);
    return acc / static_cast<double>(pts.size());
}

Constellation normalize(std::span<const ComplexPoint> points)
{
    if (points.size() < 2)
        throw Error(ErrorCode::TooFewPoints, "normalize needs at least two points");
    if (!std::has_single_bit(points.size()))
        throw Error(ErrorCode::LengthMismatch, "point count must be a power of two");
    const ComplexPoint center = mean_of(points);
    std::vector<ComplexPoint> out(points.begin(), points.end());
    for (auto& p : out)
        p -= center;
    const double power = mean_power_of(out);
    if (power < 1e-12)
        throw Error(ErrorCode::DegenerateConstellation, "all points coincide");
    const double scale = 1.0 / std::sqrt(power);
    for (auto& p : out)
        p *= scale;
    const int bits = std::countr_zero(out.size());
    return Constellation(bits, std::move(out), PowerRegime::Unit);
}

SumConstellation superimpose(const Scenario& s, std::span<const Constellation> users)
{
    validate_scenario(s);
    if (users.size() != s.users())
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(s.users()) + " constellations, got " +
                                                  std::to_string(users.size()));
    for (std::size_t i = 0; i < users.size(); ++i)
        if (users[i].bits() != s.bits[i])
            throw Error(ErrorCode::ShapeMismatch, "user " + std::to_string(i + 1) + " constellation has " +
                                                      std::to_string(users[i].bits()) + " bits, scenario expects " +
                                                      std::to_string(s.bits[i]));

    std::vector<double> gain(s.users());
    for (std::size_t i = 0; i < gain.size(); ++i)
        gain[i] = std::sqrt(s.alpha[i]);

    SumConstellation out{s, std::vector<ComplexPoint>(s.joint_size())};
    for (std::uint32_t joint = 0; joint < out.points.size(); ++joint) {
        ComplexPoint acc{};
        for (std::size_t i = 0; i < users.size(); ++i)
            acc += gain[i] * users[i][s.user_label(joint, i)];
        out.points[joint] = acc;
    }
    return out;
}

double min_distance(std::span<const ComplexPoint> pts)
{
    if (pts.size() < 2)
        throw Error(ErrorCode::TooFewPoints, "min_distance needs at least two points");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a + 1 < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b)
            best = std::min(best, std::norm(pts[a] - pts[b]));
    return std::sqrt(best);
}

Constellation rotate(const Constellation& c, double theta)
{
    const ComplexPoint phasor = std::polar(1.0, theta);
    std::vector<ComplexPoint> out(c.points().begin(), c.points().end());
    for (auto& p : out)
        p *= phasor;
    return Constellation(c.bits(), std::move(out), c.regime());
}

}  // namespace maclab
