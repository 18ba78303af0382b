#include "driftspec/oracle.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace driftspec {

void DenseCorrectionOracle::point(std::size_t flat, int dim, std::span<double> x) const {
    const std::size_t p = nodes.size();
    for (int j = dim - 1; j >= 0; --j) {
        x[j] = nodes[flat % p];
        flat /= p;
    }
}

DenseCorrectionOracle dense_constrained_solve(
    const DriftSpec& drift, double eps,
    const std::function<double(std::span<const double>)>& rhs, double radius,
    int points_per_axis) {
    const int dim = drift.dim();
    const int p = points_per_axis;
    if (p < 5) throw std::invalid_argument("dense oracle: need at least 5 points per axis");
    const double h = 2.0 * radius / (p - 1);

    DenseCorrectionOracle out;
    out.radius = radius;
    out.points_per_axis = p;
    out.nodes.resize(p);
    for (int i = 0; i < p; ++i) out.nodes[i] = -radius + i * h;
    // re-center exactly for odd p
    if (p % 2 == 1) out.nodes[p / 2] = 0.0;

    // 1-D cardinal second-derivative matrix on the uniform lattice
    Eigen::MatrixXd D2(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (i == j)
                D2(i, j) = -M_PI * M_PI / (3.0 * h * h);
            else {
                const int k = i - j;
                D2(i, j) = -2.0 * ((k & 1) ? -1.0 : 1.0) / (h * h * k * k);
            }
        }

    std::size_t n = 1;
    for (int j = 0; j < dim; ++j) n *= static_cast<std::size_t>(p);
    const LimitPair limit = closed_form_limit(drift, eps);

    Eigen::MatrixXd K(n + 1, n + 1);
    K.setZero();
    std::vector<int> mi(dim), mj(dim);
    std::vector<double> x(dim);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t f = r;
        for (int j = dim - 1; j >= 0; --j) {
            mi[j] = static_cast<int>(f % static_cast<std::size_t>(p));
            f /= static_cast<std::size_t>(p);
        }
        // -eps * (sum_ax D2 along ax)
        for (int ax = 0; ax < dim; ++ax) {
            std::size_t stride = 1;
            for (int j = ax + 1; j < dim; ++j) stride *= static_cast<std::size_t>(p);
            const std::size_t base = r - static_cast<std::size_t>(mi[ax]) * stride;
            for (int k = 0; k < p; ++k)
                K(r, base + static_cast<std::size_t>(k) * stride) -= eps * D2(mi[ax], k);
        }
        out.point(r, dim, x);
        double osc = 0.0;
        for (int j = 0; j < dim; ++j)
            osc += drift.coeffs()[j] * drift.coeffs()[j] * x[j] * x[j];
        K(r, r) += (4.0 / eps) * osc - limit.mu;
    }
    // constraint row/column: quadrature-weighted Q samples
    double w = 1.0;
    for (int j = 0; j < dim; ++j) w *= h;
    Eigen::VectorXd b(n + 1);
    for (std::size_t r = 0; r < n; ++r) {
        out.point(r, dim, x);
        const double q = w * limit.q(x);
        K(r, n) = q;
        K(n, r) = q;
        b(r) = rhs(x);
    }
    K(n, n) = 0.0;
    b(n) = 0.0;

    const Eigen::VectorXd sol = K.partialPivLu().solve(b);
    out.phi.assign(sol.data(), sol.data() + n);
    return out;
}

}  // namespace driftspec
