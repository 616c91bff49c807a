#include "maclab/metrics.hpp"

#include "maclab/dae.hpp"
#include "maclab/error.hpp"
#include "maclab/parallel.hpp"
#include "maclab/quadrature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace maclab {

namespace {

constexpr std::uint64_t kTrialChunk = 8192;

/// log2 sum_m' exp(-(|d_m' + n|^2 - |n|^2) / N0) with d_m' = s_m - s_m'.
/// Exponents are formed in the distance domain, then shifted by their maximum.
double log2_likelihood_sum(std::span<const ComplexPoint> pts, ComplexPoint sm, ComplexPoint noise, double inv_n0,
                           std::vector<double>& exponents)
{
    const double noise_norm = std::norm(noise);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
        const double e = -(std::norm(sm - pts[j] + noise) - noise_norm) * inv_n0;
        exponents[j] = e;
        peak = std::max(peak, e);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j)
        acc += std::exp(exponents[j] - peak);
    return (peak + std::log(acc)) / std::numbers::ln2;
}

struct TrialCounts {
    std::uint64_t joint_errors = 0;
    std::vector<std::uint64_t> symbol_errors;
    std::vector<std::uint64_t> bit_errors;
};

/// Shared SER driver: detect maps a block of received samples to joint labels.
template <class Detect>
SerReport run_ser(const SumConstellation& sum, const NoiseSpec& spec, std::uint64_t trials, const RngSeed& seed,
                  const EvalOptions& opts, Detect&& detect)
{
    if (trials < 1)
        throw Error(ErrorCode::InvalidArgument, "SER needs at least one trial");
    const Scenario& s = sum.scenario;
    const std::size_t users = s.users();
    const RngSeed label_stream = seed.substream(1);
    const RngSeed noise_stream = seed.substream(2);
    const double sigma = spec.component_sigma();

    const std::size_t chunks = static_cast<std::size_t>((trials + kTrialChunk - 1) / kTrialChunk);
    std::vector<TrialCounts> partial(chunks);
    for_each_index(chunks, opts.workers, [&](std::size_t c) {
        const std::uint64_t begin = c * kTrialChunk;
        const std::uint64_t end = std::min<std::uint64_t>(trials, begin + kTrialChunk);
        std::vector<std::uint32_t> sent(end - begin);
        std::vector<ComplexPoint> received(end - begin);
        for (std::uint64_t t = begin; t < end; ++t) {
            const auto label = uniform_label(label_stream, t, sum.size());
            sent[t - begin] = label;
            received[t - begin] = sum.points[label] + sigma * standard_normal_pair(noise_stream, t);
        }
        std::vector<std::uint32_t> decided(sent.size());
        detect(std::span<const ComplexPoint>(received), std::span<std::uint32_t>(decided));

        TrialCounts counts;
        counts.symbol_errors.assign(users, 0);
        counts.bit_errors.assign(users, 0);
        for (std::size_t t = 0; t < sent.size(); ++t) {
            if (sent[t] != decided[t])
                ++counts.joint_errors;
            for (std::size_t i = 0; i < users; ++i) {
                const auto a = s.user_label(sent[t], i);
                const auto b = s.user_label(decided[t], i);
                if (a != b) {
                    ++counts.symbol_errors[i];
                    counts.bit_errors[i] += static_cast<std::uint64_t>(std::popcount(a ^ b));
                }
            }
        }
        partial[c] = std::move(counts);
    });

    TrialCounts total;
    total.symbol_errors.assign(users, 0);
    total.bit_errors.assign(users, 0);
    for (const auto& p : partial) {
        total.joint_errors += p.joint_errors;
        for (std::size_t i = 0; i < users; ++i) {
            total.symbol_errors[i] += p.symbol_errors[i];
            total.bit_errors[i] += p.bit_errors[i];
        }
    }

    SerReport report;
    report.snr_db = spec.snr_db();
    report.trials = trials;
    const auto n = static_cast<double>(trials);
    report.joint_ser = static_cast<double>(total.joint_errors) / n;
    double ser_sum = 0.0;
    for (std::size_t i = 0; i < users; ++i) {
        report.per_user_ser.push_back(static_cast<double>(total.symbol_errors[i]) / n);
        report.per_user_ber.push_back(static_cast<double>(total.bit_errors[i]) / (n * s.bits[i]));
        ser_sum += report.per_user_ser.back();
    }
    report.avg_ser = ser_sum / static_cast<double>(users);
    return report;
}

}  // namespace

std::string_view to_string(RateMethod method)
{
    return method == RateMethod::MonteCarlo ? "montecarlo" : "quadrature";
}

RatePoint cc_sum_rate_mc(const SumConstellation& sum, const NoiseSpec& spec, std::uint64_t samples_per_point,
                         const RngSeed& seed, const EvalOptions& opts)
{
    if (sum.size() < 1 || samples_per_point < 1)
        throw Error(ErrorCode::InvalidArgument, "Monte Carlo rate needs points and samples");
    RatePoint out{spec.snr_db(), 0.0, RateMethod::MonteCarlo, 0.0};
    const std::size_t m_count = sum.size();
    if (m_count == 1)
        return out;

    const double inv_n0 = 1.0 / spec.n0();
    const double sigma = spec.component_sigma();
    std::vector<double> means(m_count), variances(m_count);
    for_each_index(m_count, opts.workers, [&](std::size_t m) {
        std::vector<double> scratch(m_count);
        // Welford accumulation of the per-sample log-sum term.
        double mean = 0.0, m2 = 0.0;
        const std::uint64_t base = m * samples_per_point;
        for (std::uint64_t j = 0; j < samples_per_point; ++j) {
            const ComplexPoint noise = sigma * standard_normal_pair(seed, base + j);
            const double term = log2_likelihood_sum(sum.points, sum.points[m], noise, inv_n0, scratch);
            const double delta = term - mean;
            mean += delta / static_cast<double>(j + 1);
            m2 += delta * (term - mean);
        }
        means[m] = mean;
        variances[m] = samples_per_point > 1 ? m2 / static_cast<double>(samples_per_point - 1) : 0.0;
    });

    double acc = 0.0, var = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
        acc += means[m];
        var += variances[m] / static_cast<double>(samples_per_point);
    }
    const auto m_real = static_cast<double>(m_count);
    out.rate_bits = std::log2(m_real) - acc / m_real;
    out.std_error = std::sqrt(var) / m_real;
    return out;
}

RatePoint cc_sum_rate_gh(const SumConstellation& sum, const NoiseSpec& spec, int quad_order, const EvalOptions& opts)
{
    if (quad_order < 2)
        throw Error(ErrorCode::InvalidArgument, "quadrature order must be at least 2");
    RatePoint out{spec.snr_db(), 0.0, RateMethod::Quadrature, 0.0};
    const std::size_t m_count = sum.size();
    if (m_count <= 1)
        return out;

    const QuadratureRule rule = gauss_hermite(quad_order);
    const double inv_n0 = 1.0 / spec.n0();
    const double scale = std::sqrt(spec.n0());
    std::vector<double> per_point(m_count);
    for_each_index(m_count, opts.workers, [&](std::size_t m) {
        std::vector<double> scratch(m_count);
        double acc = 0.0;
        for (int a = 0; a < quad_order; ++a) {
            double row = 0.0;
            for (int b = 0; b < quad_order; ++b) {
                const ComplexPoint noise{scale * rule.nodes[a], scale * rule.nodes[b]};
                row += rule.weights[b] * log2_likelihood_sum(sum.points, sum.points[m], noise, inv_n0, scratch);
            }
            acc += rule.weights[a] * row;
        }
        per_point[m] = acc / std::numbers::pi;
    });

    double acc = 0.0;
    for (double v : per_point)
        acc += v;
    const auto m_real = static_cast<double>(m_count);
    out.rate_bits = std::log2(m_real) - acc / m_real;
    return out;
}

std::uint32_t ml_detect(ComplexPoint y, const SumConstellation& sum)
{
    std::uint32_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t m = 0; m < sum.size(); ++m) {
        const double d = std::norm(y - sum.points[m]);
        if (d < best_dist) {
            best_dist = d;
            best = m;
        }
    }
    return best;
}

SerReport ser_ml(const Scenario& s, std::span<const Constellation> users, const NoiseSpec& spec,
                 std::uint64_t trials, const RngSeed& seed, const EvalOptions& opts)
{
    const SumConstellation sum = superimpose(s, users);
    return run_ser(sum, spec, trials, seed, opts,
                   [&](std::span<const ComplexPoint> ys, std::span<std::uint32_t> out) {
                       for (std::size_t t = 0; t < ys.size(); ++t)
                           out[t] = ml_detect(ys[t], sum);
                   });
}

SerReport ser_dae(const DaeModel& model, const Scenario& s, const NoiseSpec& spec, std::uint64_t trials,
                  const RngSeed& seed, const EvalOptions& opts)
{
    if (!(model.config().scenario == s))
        throw Error(ErrorCode::ModelScenarioMismatch, "model was trained for a different scenario");
    const auto users = extract_constellations(model);
    const SumConstellation sum = superimpose(s, users);
    const int total_bits = s.total_bits();
    return run_ser(sum, spec, trials, seed, opts,
                   [&](std::span<const ComplexPoint> ys, std::span<std::uint32_t> out) {
                       const Eigen::MatrixXd z = decode_batch(model, ys);
                       for (Eigen::Index t = 0; t < z.rows(); ++t) {
                           std::uint32_t joint = 0;
                           for (int j = 0; j < total_bits; ++j)
                               joint = (joint << 1) | static_cast<std::uint32_t>(decide_bit(z(t, j)));
                           out[t] = joint;
                       }
                   });
}

}  // namespace maclab
