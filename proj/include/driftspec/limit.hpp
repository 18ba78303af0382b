#pragma once

#include "driftspec/model.hpp"

namespace driftspec {

/// Principal pair of the limiting oscillator problem: mu = 2 sum|a_i| and the
/// normalized Gaussian ground state Q with per-axis standard deviations
/// sigma_j = sqrt(eps / (4 |a_j|)) for the density Q^2.
struct LimitPair {
    double mu = 0.0;
    std::vector<double> sigma;
    double eps = 1.0;
    std::vector<double> abs_coeffs;  // |a_j|
    double q_origin = 0.0;           // Q(0) = prod (2|a_i|/(eps pi))^(1/4)

    double q(std::span<const double> x) const;
    int dim() const { return static_cast<int>(sigma.size()); }
};

LimitPair closed_form_limit(const DriftSpec& drift, double eps);

/// Closed-form Gaussian moment  int x^tau Q^2 dx  for |tau| <= 4.
double gaussian_moment(const DriftSpec& drift, double eps, std::span<const int> tau);

/// Gauss-Hermite rule for weight exp(-t^2): `t` are the nodes and `w` the
/// weights premultiplied by exp(t^2), so  int f(t) exp(-t^2) dt = sum w_i'
/// f(t_i) becomes  int g(t) dt ~= sum w_i g(t_i) for g with Gaussian decay.
struct GaussHermiteRule {
    std::vector<double> t, w;
};
GaussHermiteRule gauss_hermite(int n);

/// Normalized Hermite function values h_0..h_upto at t (stable recurrence on
/// the functions themselves, not the raw polynomials).
void hermite_values(int upto, double t, std::span<double> out);

/// Coefficients over the tensor Hermite basis, full (M+1)^N tensor in
/// row-major order (last axis fastest).
struct HermiteCoeffs {
    int dim = 0;
    int max_degree = 0;
    std::vector<double> c;

    std::size_t index(std::span<const int> n) const;
    double& at(std::span<const int> n);
    double norm() const;
};

/// Orthonormal eigenbasis of the shifted oscillator
///   N = -eps Lap + (4/eps) sum a_i^2 x_i^2 - 2 sum |a_i|,
/// psi_n with N psi_n = (sum_j 4 |a_j| n_j) psi_n and psi_0 = Q. Holds the
/// per-axis quadrature rule (size 2M+2, exact for polynomial degree <= 4M+3
/// against the Gaussian weight) and tabulated basis values at the nodes.
class HermiteBasis {
public:
    HermiteBasis(const DriftSpec& drift, double eps, int max_degree);

    int dim() const { return dim_; }
    int max_degree() const { return M_; }
    int quad_points() const { return nq_; }
    double eps() const { return eps_; }
    const std::vector<double>& beta() const { return beta_; }
    const std::vector<double>& abs_coeffs() const { return abs_a_; }
    double node(int axis, int q) const { return rule_.t[q] / beta_[axis]; }
    /// quadrature weight of node q on `axis` for integrals in x
    double node_weight(int axis, int q) const { return rule_.w[q] / beta_[axis]; }
    double hermite_at_node(int degree, int q) const { return htab_[q * (M_ + 1) + degree]; }

    std::size_t num_nodes() const;            // nq^N
    std::size_t num_coeffs() const;           // (M+1)^N
    void node_point(std::size_t flat, std::span<double> x) const;
    double total_weight(std::size_t flat) const;
    double eigenvalue(std::span<const int> n) const;  // sum_j 4 |a_j| n_j

    /// Samples of a function at all quadrature nodes.
    std::vector<double> sample(const std::function<double(std::span<const double>)>& f) const;
    /// Samples of Q at all quadrature nodes.
    std::vector<double> sample_q() const;
    /// <F, psi_n> for all multi-indices n.
    HermiteCoeffs project(std::span<const double> samples) const;
    /// Reconstruct sum c_n psi_n at all quadrature nodes.
    std::vector<double> reconstruct(const HermiteCoeffs& c) const;
    double evaluate(const HermiteCoeffs& c, std::span<const double> x) const;
    /// int f dx by the tensor quadrature.
    double integrate(std::span<const double> samples) const;

private:
    int dim_ = 0, M_ = 0, nq_ = 0;
    double eps_ = 1.0;
    std::vector<double> beta_, abs_a_;
    GaussHermiteRule rule_;
    std::vector<double> htab_;  // nq x (M+1), normalized Hermite functions at t-nodes
};

enum class RhsKind { F1, F2, F3, F4 };

/// Right-hand sides of the correction equations, sampled at quadrature nodes.
/// F1/F2 need the potential's local model (gradient resp. Hessian at 0);
/// F3/F4 need the homogeneous part, and F4 additionally phi3.
std::vector<double> build_rhs(RhsKind kind, const PotentialSpec& V, const LimitPair& limit,
                              const HermiteBasis& basis, const HermiteCoeffs* phi3);

struct CorrectionSolve {
    HermiteCoeffs phi;
    double solvability = 0.0;     // |<F, Q>| / (1 + ||F||)
    double tail_rel = 0.0;        // coefficient mass in the top two degree shells
    bool tail_warned = false;
};

/// Constrained solve of N phi = F with int(phi Q) = 0: coefficients
/// c_n = <F, psi_n> / eigenvalue(n) for n != 0 and c_0 = 0 exactly.
/// Throws if the solvability threshold (1e-8) is violated, or if the
/// truncation tail exceeds `tail_threshold` and `relax_tail` is false;
/// with relax_tail the result is flagged instead (non-smooth right-hand
/// sides decay only algebraically).
CorrectionSolve solve_correction(const HermiteBasis& basis, std::span<const double> F,
                                 double tail_threshold = 1e-10, bool relax_tail = false);

/// Populated corrections for a potential (phi1/phi2 from the local model,
/// phi3/phi4 from the homogeneous part).
struct CorrectionSet {
    std::optional<CorrectionSolve> phi1, phi2, phi3, phi4;
};

}  // namespace driftspec
