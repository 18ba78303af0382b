#pragma once

#include <optional>

#include "driftspec/operators.hpp"

namespace driftspec {

struct SolveOptions {
    double tol = 1e-9;       // relative residual ||Au - lambda u|| / (max(|lambda|,1) ||u||)
    int max_matvecs = 10000;
};

/// Converged principal eigenpair; the eigenvector is sign-fixed positive and
/// normalized so that mass_weight * sum(u_i^2) = 1.
struct EigenPair {
    double lambda = 0.0;
    GridField u;
    double residual = 0.0;   // ||Au - lambda u||_2 / ||u||_2
    int iterations = 0;      // matrix-vector products consumed
    std::optional<double> gap_estimate;
};

struct SolverError : std::runtime_error {
    double best_residual;
    SolverError(const std::string& what, double res)
        : std::runtime_error(what), best_residual(res) {}
};

/// Smallest eigenpair of a sparse symmetric operator. Inverse iteration with a
/// diagonally preconditioned CG warmup, then a locally optimal block iteration
/// (block size 2) that also yields a gap estimate. Deterministic start vector
/// and reduction order make repeated runs bit-identical.
EigenPair smallest_eigenpair(const SymmetricOperator& op, SolveOptions opts = {});

/// Smallest eigenvalue in the orthogonal complement of first.u.
double second_eigenvalue(const SymmetricOperator& op, const EigenPair& first, double tol = 1e-8);

}  // namespace driftspec
