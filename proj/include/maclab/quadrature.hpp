#pragma once

#include <vector>

namespace maclab {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule for integrals against exp(-x^2), via Golub-Welsch.
/// Weights sum to sqrt(pi).
QuadratureRule gauss_hermite(int order);

}  // namespace maclab
