#pragma once

#include <iosfwd>

#include "driftspec/kernels.hpp"
#include "driftspec/model.hpp"

namespace driftspec {

/// Sparse symmetric discretization of the gauge-transformed operator
///   physical:  -eps*Lap + (alpha^2/eps)|grad m|^2 + alpha*Lap(m) + V(x)
///   rescaled:  -eps*Lap_y + (4/eps) sum a_i^2 y_i^2 + V(y/sqrt(alpha))/alpha
/// on the interior of a tensor grid with homogeneous Dirichlet boundary.
/// The smallest eigenvalue approximates lambda_alpha (physical) or
/// lambda_alpha / alpha (rescaled).
struct SymmetricOperator {
    CsrMatrix matrix;
    Grid grid;
    Frame frame;
    double eps = 1.0;
    double alpha = 0.0;
    double mass_weight = 0.0;         // quadrature weight per interior point
    std::vector<double> v_diag;       // the V-part of the diagonal (scaled in rescaled frame)
    std::vector<double> drift_coeffs; // a_i, for diagnostics that rebuild the oscillator part
};

/// Centered-difference discretization of the original advection form
///   -eps*Lap - 2*alpha*grad(m).grad + V(x),
/// kept for small-alpha cross-validation of the gauge transform.
struct NonSymmetricOperator {
    CsrMatrix matrix;
    Grid grid;
    double eps = 1.0;
    double alpha = 0.0;
};

/// (4 alpha^2 / eps) sum_i a_i^2 x_i^2 + V(x); the zero-order term of the
/// gauge-transformed operator (the alpha*Lap(m) part vanishes identically).
double effective_potential(const DriftSpec& drift, const PotentialSpec& V, double eps,
                           double alpha, std::span<const double> x);

SymmetricOperator assemble_symmetric(const DriftSpec& drift, const PotentialSpec& V,
                                     const Grid& grid, double eps, double alpha, Frame frame);

/// Throws if alpha * max|m| / eps > 600 (gauge factor would overflow).
NonSymmetricOperator assemble_nonsymmetric(const DriftSpec& drift, const PotentialSpec& V,
                                           const Grid& grid, double eps, double alpha);

/// (u^T A u) / (u^T u) for a field on the operator's grid.
double rayleigh_quotient(const SymmetricOperator& op, const GridField& u);

/// Exact diagonal similarity transform of the advection-form matrix into a
/// symmetric one (same spectrum). Requires the mesh Peclet number below one,
/// i.e. h * |2 alpha a_j x_j| < eps on every axis; throws otherwise.
/// `scale` holds the diagonal factors: if S y = lambda y then the
/// advection-form eigenvector is phi_i = y_i / scale_i.
struct SymmetrizedOperator {
    SymmetricOperator op;
    std::vector<double> scale;
};
SymmetrizedOperator symmetrize_nonsymmetric(const NonSymmetricOperator& ns,
                                            const DriftSpec& drift);

/// Coordinate text export: one "row col value" line per entry.
void write_coo(std::ostream& out, const CsrMatrix& A);

}  // namespace driftspec
