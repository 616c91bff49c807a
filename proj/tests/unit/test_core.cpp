#include "gen.hpp"
#include "maclab/core.hpp"
#include "maclab/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace maclab;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("constellation size must be a power of two matching bits")
{
    CHECK(code_of([] { Constellation(2, {{1, 0}, {-1, 0}}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { Constellation(0, {{1, 0}}); }) == ErrorCode::ZeroBits);
    CHECK_NOTHROW(Constellation(1, {{1, 0}, {-1, 0}}));
}

TEST_CASE("unit regime is enforced")
{
    CHECK_THROWS_AS(Constellation(1, {{2, 0}, {-2, 0}}, PowerRegime::Unit), Error);
    CHECK_THROWS_AS(Constellation(1, {{1, 0}, {0, 0}}, PowerRegime::Unit), Error);
    CHECK_NOTHROW(Constellation(1, {{1, 0}, {-1, 0}}, PowerRegime::Unit));
    CHECK_NOTHROW(Constellation(1, {{0.5, 0}, {-0.5, 0}}, PowerRegime::SubUnit));
    CHECK_THROWS_AS(Constellation(1, {{1.5, 0}, {-1.5, 0}}, PowerRegime::SubUnit), Error);
}

TEST_CASE("non-finite points are rejected")
{
    CHECK_THROWS_AS(Constellation(1, {{NAN, 0}, {-1, 0}}), Error);
}

TEST_CASE("scenario validation")
{
    CHECK_NOTHROW(validate_scenario(Scenario::two_user(0.8, 2, 1)));
    CHECK(code_of([] { validate_scenario({{2, 2}, {1.0, 1.1}}); }) == ErrorCode::AlphaSumMismatch);
    CHECK(code_of([] { validate_scenario({{2, 2}, {2.0, 0.0}}); }) == ErrorCode::NonPositiveAlpha);
    CHECK(code_of([] { validate_scenario({{2, 2}, {2.0}}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { validate_scenario({{2, 0}, {1.0, 1.0}}); }) == ErrorCode::ZeroBits);
    CHECK(code_of([] { validate_scenario({{}, {}}); }) == ErrorCode::LengthMismatch);
    CHECK_NOTHROW(validate_scenario({{2, 2, 2}, {1.0, 1.0, 1.0}}));
}

TEST_CASE("joint labels put user 1 in the most significant bits")
{
    const Scenario s{{2, 1}, {1.2, 0.8}};
    CHECK(s.joint_size() == 8);
    CHECK(s.user_label(0b101, 0) == 0b10);
    CHECK(s.user_label(0b101, 1) == 0b1);
    const std::uint32_t labels[] = {3, 0};
    CHECK(s.join_labels(labels) == 0b110);
}

TEST_CASE("property: join_labels inverts user_label")
{
    testgen::Gen g(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Scenario s = g.scenario(g.integer(1, 4), 4);
        for (std::uint32_t joint = 0; joint < s.joint_size(); ++joint) {
            std::vector<std::uint32_t> parts;
            for (std::size_t i = 0; i < s.users(); ++i)
                parts.push_back(s.user_label(joint, i));
            REQUIRE(s.join_labels(parts) == joint);
        }
    }
}

TEST_CASE("normalize gives zero mean and unit power")
{
    const auto c = normalize(std::vector<ComplexPoint>{{3, 1}, {5, 1}, {3, 3}, {5, 3}});
    CHECK(c.regime() == PowerRegime::Unit);
    CHECK(std::abs(c.mean()) < 1e-12);
    CHECK(c.mean_power() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.bits() == 2);
}

TEST_CASE("normalize rejects degenerate input")
{
    CHECK(code_of([] { normalize(std::vector<ComplexPoint>{{1, 1}, {1, 1}}); }) == ErrorCode::DegenerateConstellation);
    CHECK(code_of([] { normalize(std::vector<ComplexPoint>{{1, 1}}); }) == ErrorCode::TooFewPoints);
    CHECK(code_of([] { normalize(std::vector<ComplexPoint>{{1, 1}, {0, 0}, {2, 2}}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("property: normalize is idempotent and affine invariant")
{
    testgen::Gen g(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int bits = g.integer(1, 6);
        const auto pts = g.points(std::size_t{1} << bits);
        const Constellation a = normalize(pts);
        const Constellation b = normalize(a.points());
        REQUIRE(std::abs(a.mean()) < 1e-12);
        REQUIRE(std::abs(a.mean_power() - 1.0) < 1e-12);
        for (std::size_t l = 0; l < a.size(); ++l)
            REQUIRE(std::abs(a[l] - b[l]) < 1e-12);

        const ComplexPoint shift{g.uniform(-5, 5), g.uniform(-5, 5)};
        const double scale = g.uniform(0.1, 10);
        std::vector<ComplexPoint> moved(pts);
        for (auto& p : moved)
            p = scale * p + shift;
        const Constellation c = normalize(moved);
        for (std::size_t l = 0; l < a.size(); ++l)
            REQUIRE(std::abs(a[l] - c[l]) < 1e-10);
    }
}

TEST_CASE("superimpose follows joint label order with sqrt(alpha) gains")
{
    const Constellation u1(1, {{1, 0}, {-1, 0}}, PowerRegime::Unit);
    const Constellation u2(1, {{0, 1}, {0, -1}}, PowerRegime::Unit);
    const Scenario s{{1, 1}, {1.5, 0.5}};
    const std::vector<Constellation> users{u1, u2};
    const SumConstellation sum = superimpose(s, users);
    REQUIRE(sum.size() == 4);
    const double g1 = std::sqrt(1.5), g2 = std::sqrt(0.5);
    CHECK(std::abs(sum.points[0] - ComplexPoint(g1, g2)) < 1e-15);
    CHECK(std::abs(sum.points[1] - ComplexPoint(g1, -g2)) < 1e-15);
    CHECK(std::abs(sum.points[2] - ComplexPoint(-g1, g2)) < 1e-15);
    CHECK(std::abs(sum.points[3] - ComplexPoint(-g1, -g2)) < 1e-15);
}

TEST_CASE("superimpose checks shapes")
{
    const Constellation u1(1, {{1, 0}, {-1, 0}});
    const std::vector<Constellation> one{u1};
    CHECK_THROWS_AS(superimpose(Scenario{{1, 1}, {1, 1}}, one), Error);
    const std::vector<Constellation> two{u1, u1};
    CHECK_THROWS_AS(superimpose(Scenario{{2, 1}, {1, 1}}, two), Error);
}

TEST_CASE("property: sum constellation of unit users has mean power sum(alpha)")
{
    testgen::Gen g(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Scenario s = g.scenario(g.integer(1, 3), 3);
        std::vector<Constellation> users;
        for (int k : s.bits)
            users.push_back(g.unit_constellation(k));
        const SumConstellation sum = superimpose(s, users);
        REQUIRE(sum.size() == s.joint_size());
        REQUIRE(std::abs(mean_power_of(sum.points) - static_cast<double>(s.users())) < 1e-9);
        REQUIRE(std::abs(mean_of(sum.points)) < 1e-9);
    }
}

TEST_CASE("min distance")
{
    CHECK(min_distance(std::vector<ComplexPoint>{{0, 0}, {3, 4}, {10, 0}}) == doctest::Approx(5.0));
    CHECK(min_distance(std::vector<ComplexPoint>{{1, 1}, {1, 1}}) == 0.0);
    CHECK_THROWS_AS(min_distance(std::vector<ComplexPoint>{{1, 1}}), Error);
}

TEST_CASE("property: rotation preserves distances and power")
{
    testgen::Gen g(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Constellation c = g.unit_constellation(g.integer(1, 5));
        const double theta = g.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi);
        const Constellation r = rotate(c, theta);
        REQUIRE(r.regime() == c.regime());
        REQUIRE(std::abs(min_distance(r.points()) - min_distance(c.points())) < 1e-12);
        REQUIRE(std::abs(r.mean_power() - 1.0) < 1e-12);
        const Constellation back = rotate(r, -theta);
        for (std::size_t l = 0; l < c.size(); ++l)
            REQUIRE(std::abs(back[l] - c[l]) < 1e-12);
    }
}
