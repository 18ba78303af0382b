#pragma once

#include "driftspec/eigensolver.hpp"
#include "driftspec/limit.hpp"

namespace driftspec {

enum class ExpansionKind { Smooth, Homogeneous };

/// Eigenvalue expansion as ordered (power of alpha, coefficient) pairs with
/// strictly decreasing powers.
///   Smooth:      (1, 2 sum|a_i|), (0, V(0)), (-1/2, int(x.gradV(0)) Q^2),
///                (-1, sum_{|tau|=2} D^tau V(0)/tau! int x^tau Q^2)
///   Homogeneous: (1, 2 sum|a_i|), (-k0/2, int h0 Q^2), (-k0-1, int h0 phi3 Q)
struct EigenvalueExpansion {
    ExpansionKind kind = ExpansionKind::Smooth;
    std::vector<std::pair<double, double>> coefficients;
};

EigenvalueExpansion smooth_expansion(const DriftSpec& drift, const LocalModel& local,
                                     double eps);
EigenvalueExpansion homogeneous_expansion(const DriftSpec& drift, const PotentialSpec& V,
                                          const HermiteBasis& basis,
                                          const HermiteCoeffs& phi3);

/// Partial sum over the first `order` coefficients at a given alpha.
double predict_lambda(const EigenvalueExpansion& exp, double alpha, int order);

/// Eigenfunction expansion terms: Q plus the populated corrections, including
/// the -1/2 (int phi3^2) Q renormalization of the homogeneous second order.
struct EigenfunctionExpansion {
    ExpansionKind kind = ExpansionKind::Smooth;
    const HermiteBasis* basis = nullptr;
    const LimitPair* limit = nullptr;
    std::optional<HermiteCoeffs> first, second;  // phi1/phi2 or phi3/phi4
    double phi3_sq_integral = 0.0;               // used for the Homogeneous kind
    double k0 = 0.0;

    double evaluate(std::span<const double> x, double alpha, int order) const;
};

enum class RescaleCenter { Origin, Argmax };

/// w(y) = alpha^(-N/4) u(alpha^(-1/2) y + c) with multilinear interpolation on
/// the physical grid; c = 0 or the refined argmax of u. Throws if the target
/// grid maps outside the physical box.
GridField rescale_eigenfunction(const GridField& u, double alpha, RescaleCenter center,
                                const Grid& target);

struct MaxPointInfo {
    std::vector<double> d_alpha;  // argmax in physical coordinates
    double scaled = 0.0;          // alpha^(1/2) |d_alpha|
    int count = 0;                // strict local maxima on the grid
};

/// Grid argmax refined by a log-space quadratic fit over the 3^N neighborhood.
/// Throws if the argmax sits in the outermost interior layer (unresolved
/// concentration).
MaxPointInfo track_max_point(const GridField& u, double alpha);

/// Quadrature of (N (w - Q)) Q over the Euclidean ball of the given radius,
/// where N is the discrete rescaled-frame operator minus its potential part
/// minus mu. Exponentially small in alpha once the expansion holds; at fixed
/// alpha it is dominated by discretization error and must shrink under grid
/// refinement.
double pohozaev_projection(const SymmetricOperator& op, const GridField& w,
                           const LimitPair& limit, double radius);

struct SweepRecord {
    double alpha = 0.0;
    double lambda_numeric = 0.0;
    std::vector<double> partial_sums;  // S1..S4 (S4 repeats S3 for Homogeneous)
    double rescaled_sup_error = 0.0;   // ||w_alpha - Q||_inf
    std::vector<double> d_alpha;
    double scaled_max_drift = 0.0;
    int max_count = 0;
    double boundary_tail_mass = 0.0;
    double pohozaev_residual = 0.0;
    double solver_residual = 0.0;
    double runtime_seconds = 0.0;
};

struct OrderFit {
    double slope = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
    bool at_floor = false;  // residuals at solver precision; slope meaningless
};

/// Log-log least squares of |lambda_numeric - partial_sums[order-1]| against
/// alpha, using only records whose residual exceeds `floor`.
OrderFit fit_residual_order(std::span<const SweepRecord> records, int order, double floor);

}  // namespace driftspec
