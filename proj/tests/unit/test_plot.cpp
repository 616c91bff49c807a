#include "maclab/baselines.hpp"
#include "maclab/error.hpp"
#include "maclab/plot.hpp"

#include <doctest.h>

using namespace maclab;

namespace {

std::size_t count(const std::string& s, std::string_view needle)
{
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1))
        ++n;
    return n;
}

}  // namespace

TEST_CASE("two-user constellation plot has three labelled panels")
{
    ConstellationFile f{Scenario{{2, 2}, {1, 1}}, pam_orthogonal(2, 2), {}};
    const std::string svg = plot_constellations_svg(f, "PAM pair");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find(">User 1<") != std::string::npos);
    CHECK(svg.find(">User 2<") != std::string::npos);
    CHECK(svg.find(">Sum constellation<") != std::string::npos);
    CHECK(count(svg, "<circle") == 4 + 4 + 16);
    CHECK(svg.find(">0110<") != std::string::npos);
    CHECK(svg.find(">In-phase<") != std::string::npos);
    CHECK(svg.find(">Quadrature<") != std::string::npos);
}

TEST_CASE("three-user plot has four panels and unlabelled 64-point sum only when above the limit")
{
    ConstellationFile f{Scenario{{2, 2, 2}, {1, 1, 1}}, {qpsk(), rotate(qpsk(), 0.3), rotate(qpsk(), 0.6)}, {}};
    const std::string svg = plot_constellations_svg(f, "three users");
    CHECK(count(svg, ">Sum constellation<") == 1);
    CHECK(svg.find(">User 3<") != std::string::npos);
    CHECK(count(svg, "<circle") == 4 * 3 + 64);
    CHECK(svg.find(">111111<") != std::string::npos);

    ConstellationFile big{Scenario{{4, 4}, {1, 1}}, {pam(4), rotate(pam(4), 1.0)}, {}};
    const std::string svg_big = plot_constellations_svg(big, "big");
    CHECK(svg_big.find(">00000000<") == std::string::npos);
    CHECK(svg_big.find(">0000<") != std::string::npos);
}

TEST_CASE("oversized plots are rejected")
{
    ConstellationFile f{Scenario{{6, 7}, {1, 1}}, {pam(6), pam(7)}, {}};
    CHECK_THROWS_AS(plot_constellations_svg(f, "too big"), Error);
    CurveSeries s{"x", std::vector<double>(5000, 1.0), std::vector<double>(5000, 1.0)};
    CHECK_THROWS_AS(plot_curves_svg(std::span<const CurveSeries>(&s, 1), "x", "y", false, ""), Error);
}

TEST_CASE("curve plot draws one polyline per series with a legend")
{
    const std::vector<CurveSeries> series{{"pam", {0, 10, 20}, {1.5, 3.7, 4.0}}, {"dae", {0, 10, 20}, {1.4, 3.6, 4.0}}};
    const std::string svg = plot_curves_svg(series, "SNR (dB)", "rate", false, "MI");
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find(">pam<") != std::string::npos);
    CHECK(svg.find(">dae<") != std::string::npos);
    CHECK(svg.find(">SNR (dB)<") != std::string::npos);
}

TEST_CASE("log axis skips non-positive values and escapes text")
{
    const std::vector<CurveSeries> series{{"a<b", {0, 5, 10}, {0.1, 0.0, 1e-4}}};
    const std::string svg = plot_curves_svg(series, "x", "SER", true, "t&t");
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("t&amp;t") != std::string::npos);
    CHECK(svg.find(">1e-4<") != std::string::npos);
}
