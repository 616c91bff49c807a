#pragma once

#include "maclab/io.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maclab {

inline constexpr std::size_t kMaxPlotPoints = 4096;
inline constexpr std::size_t kMaxLabeledPoints = 64;

/// One panel per user plus the sum constellation.
std::string plot_constellations_svg(const ConstellationFile& file, std::string_view title);

struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string plot_curves_svg(std::span<const CurveSeries> series, std::string_view x_label, std::string_view y_label,
                            bool log_y, std::string_view title);

}  // namespace maclab
