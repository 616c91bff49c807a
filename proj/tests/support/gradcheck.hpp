#pragma once

#include "maclab/dae.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testgen {

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t near_kink = 0;
};

/// Sign pattern of every ReLU input in a forward pass, plus the raw scales.
inline std::vector<bool> relu_mask(const maclab::ForwardPass& pass, const maclab::ParamLayout& layout,
                                   const std::vector<double>& params)
{
    std::vector<bool> mask;
    auto add = [&](const maclab::RowMatrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i)
            mask.push_back(m.data()[i] > 0.0);
    };
    for (const auto& m : pass.enc_pre)
        add(m);
    for (std::size_t l = 0; l + 1 < pass.dec_pre.size(); ++l)
        add(pass.dec_pre[l]);
    for (const auto& b : layout.scale_raw)
        for (std::size_t j = 0; j < b.size(); ++j)
            mask.push_back(params[b.offset + j] > 0.0);
    return mask;
}

/// Fourth-order central differences on every parameter against backward(), with the
/// bit batch and noise held fixed. The step starts at 1e-3 and shrinks while the
/// stencil crosses a ReLU kink; parameters still crossing at 1e-7 count as near_kink
/// and are skipped. Relative error uses max(|a|, |n|, floor).
inline GradCheck check_gradient(const maclab::DaeConfig& config, const std::vector<double>& params,
                                const maclab::RowMatrix& bits, const std::vector<maclab::ComplexPoint>& noise,
                                double floor = 1e-7)
{
    using namespace maclab;
    const ParamLayout layout(config.scenario, config.hidden_sizes);
    const ForwardPass pass = forward(config, layout, params, bits, noise);
    const std::vector<double> analytic = backward(config, layout, params, pass);
    const std::vector<bool> base_mask = relu_mask(pass, layout, params);
    GradCheck out;
    std::vector<double> p = params;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double saved = p[j];
        bool smooth = false;
        double numeric = 0.0;
        for (double h = 1e-3; h >= 1e-7 * 0.99 && !smooth; h /= 10) {
            double loss[4];
            smooth = true;
            const double offsets[4] = {-2 * h, -h, h, 2 * h};
            for (int s = 0; s < 4; ++s) {
                p[j] = saved + offsets[s];
                const ForwardPass shifted = forward(config, layout, p, bits, noise);
                loss[s] = shifted.loss;
                smooth = smooth && relu_mask(shifted, layout, p) == base_mask;
            }
            numeric = (loss[0] - 8 * loss[1] + 8 * loss[2] - loss[3]) / (12 * h);
        }
        p[j] = saved;
        if (!smooth) {
            ++out.near_kink;
            continue;
        }
        const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[j] - numeric) / denom;
        if (rel > out.max_rel_error) {
            out.max_rel_error = rel;
            out.worst_index = j;
        }
        ++out.checked;
    }
    return out;
}

}  // namespace testgen
