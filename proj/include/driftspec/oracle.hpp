#pragma once

#include "driftspec/limit.hpp"

namespace driftspec {

/// Validation-only reference solve of the correction equation
///   N phi = F,  int(phi Q) = 0
/// on a dense uniform grid over [-R, R]^N, deliberately independent of the
/// Hermite-spectral path: the Laplacian uses cardinal (sinc) differentiation
/// matrices, which converge superalgebraically for functions with Gaussian
/// decay, and the constraint is enforced through a Lagrange multiplier in a
/// brute-force dense LU solve.
struct DenseCorrectionOracle {
    double radius = 7.0;
    int points_per_axis = 57;

    std::vector<double> nodes;  // per-axis coordinates (shared by all axes)
    std::vector<double> phi;    // solution samples on the tensor grid

    /// grid point for a flat row-major index
    void point(std::size_t flat, int dim, std::span<double> x) const;
};

DenseCorrectionOracle dense_constrained_solve(
    const DriftSpec& drift, double eps,
    const std::function<double(std::span<const double>)>& rhs, double radius = 7.0,
    int points_per_axis = 57);

}  // namespace driftspec
