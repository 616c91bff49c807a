#pragma once

#include "maclab/core.hpp"

#include <random>
#include <vector>

namespace testgen {

/// Small deterministic generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::vector<maclab::ComplexPoint> points(std::size_t n, double spread = 3.0)
    {
        std::vector<maclab::ComplexPoint> out(n);
        for (auto& p : out)
            p = {uniform(-spread, spread), uniform(-spread, spread)};
        return out;
    }

    maclab::Constellation unit_constellation(int bits)
    {
        return maclab::normalize(points(std::size_t{1} << bits));
    }

    /// Random valid scenario with K users and at most max_total bits.
    maclab::Scenario scenario(int users, int max_bits_per_user)
    {
        maclab::Scenario s;
        double sum = 0.0;
        for (int i = 0; i < users; ++i) {
            s.bits.push_back(integer(1, max_bits_per_user));
            s.alpha.push_back(uniform(0.2, 1.8));
            sum += s.alpha.back();
        }
        for (double& a : s.alpha)
            a *= users / sum;
        return s;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace testgen
