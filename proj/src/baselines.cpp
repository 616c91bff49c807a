#include "maclab/baselines.hpp"

#include "maclab/channel.hpp"
#include "maclab/error.hpp"
#include "maclab/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace maclab {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Parameter vector of one parallelogram-family candidate (angles in degrees).
/// Four-point user 2: {delta1, ratio1, theta2, delta2, ratio2}.
/// Two-point user 2:  {delta1, ratio1, theta2}.
using Params = std::array<double, 5>;

struct Family {
    Scenario scenario;
    int dims = 5;
    double min_ratio = 0.1;
    std::array<double, 2> gain{};

    std::vector<ComplexPoint> user1(const Params& p) const
    {
        return parallelogram_points(1.0, std::polar(p[1], p[0] * kDeg));
    }

    std::vector<ComplexPoint> user2(const Params& p) const
    {
        const ComplexPoint u = std::polar(1.0, p[2] * kDeg);
        if (dims == 3)
            return {u, -u};
        return parallelogram_points(u, std::polar(p[4], (p[2] + p[3]) * kDeg));
    }

    /// Sum-constellation MD, or -1 for invalid candidates (a user with coincident points).
    double score(const Params& p) const
    {
        const auto a = user1(p);
        const auto b = user2(p);
        if (min_distance(a) < 1e-9 || min_distance(b) < 1e-9)
            return -1.0;
        std::array<ComplexPoint, 16> sum{};
        std::size_t n = 0;
        for (const auto& x : a)
            for (const auto& y : b)
                sum[n++] = gain[0] * x + gain[1] * y;
        return min_distance(std::span<const ComplexPoint>(sum.data(), n));
    }

    Params clamp(Params p) const
    {
        auto fold_delta = [](double d) { return std::clamp(d, 1e-6, 180.0 - 1e-6); };
        p[0] = fold_delta(p[0]);
        p[1] = std::clamp(p[1], min_ratio, 1.0);
        p[2] = std::fmod(std::fmod(p[2], 180.0) + 180.0, 180.0);
        if (dims == 5) {
            p[3] = fold_delta(p[3]);
            p[4] = std::clamp(p[4], min_ratio, 1.0);
        }
        return p;
    }
};

std::vector<double> grid(double first, double step, double last)
{
    std::vector<double> out;
    for (int j = 0;; ++j) {
        const double v = first + j * step;
        if (v > last + 1e-9)
            break;
        out.push_back(v);
    }
    return out;
}

struct Candidate {
    double score;
    Params params;
};

/// Keeps the best `capacity` candidates, earlier ones winning ties.
class TopK {
public:
    explicit TopK(std::size_t capacity) : capacity_(capacity) {}

    void offer(double score, const Params& p)
    {
        if (items_.size() == capacity_ && score <= items_.back().score)
            return;
        auto pos = std::upper_bound(items_.begin(), items_.end(), score,
                                    [](double s, const Candidate& c) { return s > c.score; });
        items_.insert(pos, Candidate{score, p});
        if (items_.size() > capacity_)
            items_.pop_back();
    }

    const std::vector<Candidate>& items() const { return items_; }

private:
    std::size_t capacity_;
    std::vector<Candidate> items_;
};

/// Full-neighborhood pattern search (all 3^d - 1 sign combinations) with step halving.
Candidate polish(const Family& f, Candidate start, Params step, double final_angle, std::size_t& evaluations)
{
    Candidate best = start;
    const int dims = f.dims;
    int combos = 1;
    for (int d = 0; d < dims; ++d)
        combos *= 3;
    while (step[0] >= final_angle) {
        Candidate move = best;
        for (int c = 0; c < combos; ++c) {
            if (c == combos / 2)
                continue;  // all-zero offset
            Params p = best.params;
            int code = c;
            for (int d = 0; d < dims; ++d) {
                p[d] += (code % 3 - 1) * step[d];
                code /= 3;
            }
            p = f.clamp(p);
            const double s = f.score(p);
            ++evaluations;
            if (s > move.score) {
                move.score = s;
                move.params = p;
            }
        }
        if (move.score > best.score)
            best = move;
        else
            for (int d = 0; d < dims; ++d)
                step[d] *= 0.5;
    }
    return best;
}

/// Nelder-Mead simplex ascent, restarted from the incumbent with a shrinking
/// simplex. Follows the ridges of the max-min objective that axis moves miss.
Candidate simplex_polish(const Family& f, Candidate best, double scale, std::size_t& evaluations)
{
    const int n = f.dims;
    auto eval = [&](const Params& p) {
        ++evaluations;
        return f.score(f.clamp(p));
    };
    for (; scale > 1e-7; scale *= 0.5) {
        std::vector<Candidate> simplex{best};
        for (int d = 0; d < n; ++d) {
            Params p = best.params;
            p[d] += (d == 1 || d == 4) ? scale / 90.0 : scale;
            simplex.push_back(Candidate{eval(p), p});
        }
        for (int iter = 0; iter < 400 * n; ++iter) {
            std::sort(simplex.begin(), simplex.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
            Params centroid{};
            for (int i = 0; i < n; ++i)
                for (int d = 0; d < n; ++d)
                    centroid[d] += simplex[i].params[d] / n;
            auto along = [&](double t) {
                Params p{};
                for (int d = 0; d < n; ++d)
                    p[d] = centroid[d] + t * (simplex[n].params[d] - centroid[d]);
                return Candidate{eval(p), p};
            };
            const Candidate r = along(-1.0);
            if (r.score > simplex[0].score) {
                const Candidate e = along(-2.0);
                simplex[n] = e.score > r.score ? e : r;
            } else if (r.score > simplex[n - 1].score) {
                simplex[n] = r;
            } else {
                const Candidate c = along(r.score > simplex[n].score ? -0.5 : 0.5);
                if (c.score > std::max(r.score, simplex[n].score)) {
                    simplex[n] = c;
                } else {
                    for (int i = 1; i <= n; ++i) {
                        for (int d = 0; d < n; ++d)
                            simplex[i].params[d] = 0.5 * (simplex[0].params[d] + simplex[i].params[d]);
                        simplex[i].score = eval(simplex[i].params);
                    }
                }
            }
        }
        for (const auto& c : simplex)
            if (c.score > best.score)
                best = Candidate{c.score, f.clamp(c.params)};
    }
    return best;
}

}  // namespace

Constellation pam(int k)
{
    if (k < 1)
        throw Error(ErrorCode::ZeroBits, "PAM needs at least one bit");
    const std::size_t n = std::size_t{1} << k;
    std::vector<ComplexPoint> raw(n);
    for (std::size_t l = 0; l < n; ++l)
        raw[l] = {2.0 * static_cast<double>(l) - static_cast<double>(n - 1), 0.0};
    return normalize(raw);
}

std::vector<Constellation> pam_orthogonal(int k1, int k2)
{
    Constellation second = pam(k2);
    std::vector<ComplexPoint> pts(second.points().begin(), second.points().end());
    for (auto& p : pts)
        p = {0.0, p.real()};
    return {pam(k1), Constellation(k2, std::move(pts), PowerRegime::Unit)};
}

Constellation qpsk()
{
    const double a = std::numbers::sqrt2 / 2;
    std::vector<ComplexPoint> pts{{a, a}, {-a, a}, {-a, -a}, {a, -a}};
    return Constellation(2, std::move(pts), PowerRegime::Unit);
}

Constellation bpsk() { return Constellation(1, {{1.0, 0.0}, {-1.0, 0.0}}, PowerRegime::Unit); }

std::string_view to_string(RotationObjective objective)
{
    return objective == RotationObjective::SumRate ? "cc_sum_rate" : "min_distance";
}

RotationResult rotation_optimize(const Constellation& base1, const Constellation& base2, const Scenario& s,
                                 RotationObjective objective, double grid_step, std::optional<double> snr_db)
{
    validate_scenario(s);
    if (s.users() != 2)
        throw Error(ErrorCode::InvalidArgument, "rotation search is defined for two users");
    if (!(grid_step > 0.0) || grid_step > std::numbers::pi / 8 + 1e-15)
        throw Error(ErrorCode::InvalidArgument, "grid step must lie in (0, pi/8]");
    if (objective == RotationObjective::SumRate && !snr_db)
        throw Error(ErrorCode::MissingSnrForRateObjective, "the sum-rate objective needs an SNR");

    auto evaluate = [&](double theta, int order) {
        const std::array<Constellation, 2> users{base1, rotate(base2, theta)};
        const SumConstellation sum = superimpose(s, users);
        if (objective == RotationObjective::MinDistance)
            return min_distance(sum.points);
        return cc_sum_rate_gh(sum, NoiseSpec::from_snr_db(*snr_db), order).rate_bits;
    };

    double best_theta = 0.0;
    double best_value = -1.0;
    for (int j = 0;; ++j) {
        const double theta = j * grid_step;
        if (theta >= std::numbers::pi / 2 - 1e-12)
            break;
        const double v = evaluate(theta, kSweepQuadOrder);
        if (v > best_value + 1e-12 * std::max(1.0, std::abs(best_value))) {
            best_value = v;
            best_theta = theta;
        }
    }

    RotationResult out;
    out.theta_star = best_theta;
    out.objective = objective;
    out.grid_step = grid_step;
    if (objective == RotationObjective::SumRate)
        out.snr_db = snr_db;
    out.objective_value = evaluate(best_theta, kFinalQuadOrder);
    out.users = {base1, rotate(base2, best_theta)};
    return out;
}

std::vector<ComplexPoint> parallelogram_points(ComplexPoint u, ComplexPoint v)
{
    std::vector<ComplexPoint> pts{(u + v) / 2.0, (u - v) / 2.0, -(u - v) / 2.0, -(u + v) / 2.0};
    const double power = mean_power_of(pts);
    if (power < 1e-24)
        throw Error(ErrorCode::DegenerateConstellation, "parallelogram generators are both zero");
    const double scale = 1.0 / std::sqrt(power);
    for (auto& p : pts)
        p *= scale;
    return pts;
}

ParallelogramResult parallelogram_md(const Scenario& s, const SearchBudget& budget)
{
    validate_scenario(s);
    if (s.users() != 2 || s.bits[0] != 2 || (s.bits[1] != 1 && s.bits[1] != 2))
        throw Error(ErrorCode::UnsupportedOrder,
                    "parallelogram baseline supports two users with k1 = 2 and k2 in {1, 2}");
    Family f{s, s.bits[1] == 2 ? 5 : 3, budget.min_ratio, {std::sqrt(s.alpha[0]), std::sqrt(s.alpha[1])}};

    const bool segment = f.dims == 3;
    const double angle_step = segment ? budget.segment_angle_deg : budget.coarse_angle_deg;
    const double ratio_step = segment ? budget.segment_ratio_step : budget.coarse_ratio_step;
    const auto deltas = grid(angle_step, angle_step, 180.0 - angle_step);
    const auto ratios = grid(budget.min_ratio, ratio_step, 1.0);
    const auto thetas = grid(0.0, angle_step, 180.0 - angle_step);

    ParallelogramResult result;
    TopK top(static_cast<std::size_t>(std::max(budget.refine_starts, 1)));
    for (double d1 : deltas)
        for (double r1 : ratios)
            for (double t2 : thetas) {
                if (segment) {
                    const Params p{d1, r1, t2, 0.0, 0.0};
                    top.offer(f.score(p), p);
                    ++result.evaluations;
                    continue;
                }
                for (double d2 : deltas)
                    for (double r2 : ratios) {
                        const Params p{d1, r1, t2, d2, r2};
                        top.offer(f.score(p), p);
                        ++result.evaluations;
                    }
            }

    std::vector<Candidate> starts = top.items();
    if (!segment) {
        // Rotated QPSK pairs are squares: delta = 90 deg, ratio = 1.
        const auto rot = rotation_optimize(qpsk(), qpsk(), s, RotationObjective::MinDistance);
        const Params p{90.0, 1.0, rot.theta_star / kDeg, 90.0, 1.0};
        starts.push_back(Candidate{f.score(p), p});
        ++result.evaluations;
    }

    const Params step{angle_step / 2, ratio_step / 2, angle_step / 2, angle_step / 2, ratio_step / 2};
    Candidate best{-1.0, {}};
    for (const auto& start : starts) {
        const Candidate c = simplex_polish(f, polish(f, start, step, budget.final_angle_deg, result.evaluations),
                                           angle_step / 4, result.evaluations);
        if (c.score > best.score)
            best = c;
    }
    if (best.score <= 0.0)
        throw Error(ErrorCode::DegenerateConstellation, "no valid parallelogram candidate in the search grid");

    result.min_distance = best.score;
    result.users.push_back(normalize(f.user1(best.params)));
    const auto second = f.user2(best.params);
    result.users.push_back(normalize(second));
    return result;
}

}  // namespace maclab
