#include "maclab/quadrature.hpp"

#include "maclab/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace maclab {

QuadratureRule gauss_hermite(int order)
{
    if (order < 1 || order > 200)
        throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite order must be in [1, 200]");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int i = 1; i < order; ++i)
        sub[i - 1] = std::sqrt(0.5 * i);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double mass = std::sqrt(std::numbers::pi);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = solver.eigenvalues()[i];
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mass * v0 * v0;
    }
    // Symmetrize to remove eigen-solver rounding asymmetry.
    for (int i = 0; i < order / 2; ++i) {
        const int j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (order % 2 == 1)
        rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace maclab
