#include "driftspec/operators.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace driftspec {

double effective_potential(const DriftSpec& drift, const PotentialSpec& V, double eps,
                           double alpha, std::span<const double> x) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    if (alpha < 0) throw std::invalid_argument("alpha must be nonnegative");
    double s = 0.0;
    const auto& a = drift.coeffs();
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i] * x[i] * x[i];
    return (4.0 * alpha * alpha / eps) * s + V(x);
}

namespace {

// Centered 2N+1-point stencil on the grid interior, entries emitted in
// ascending column order so the CSR layout is reproducible.
CsrMatrix assemble_stencil(const Grid& grid,
                           const std::function<double(std::span<const double>)>& diag_pot,
                           const std::function<double(int, std::span<const double>)>& adv_coeff,
                           double eps) {
    const int dim = grid.dim();
    const std::size_t n = grid.size();
    CsrMatrix A;
    A.rows = A.cols = n;
    A.row_ptr.assign(n + 1, 0);

    // Count entries per row first (rows at the boundary have fewer neighbors).
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r) {
        std::vector<int> multi(dim);
        grid.decode(static_cast<std::size_t>(r), multi);
        std::size_t cnt = 1;
        for (int ax = 0; ax < dim; ++ax) {
            if (multi[ax] > 0) ++cnt;
            if (multi[ax] + 1 < grid.points(ax)) ++cnt;
        }
        A.row_ptr[r + 1] = cnt;
    }
    for (std::size_t r = 0; r < n; ++r) A.row_ptr[r + 1] += A.row_ptr[r];
    A.col.resize(A.row_ptr[n]);
    A.val.resize(A.row_ptr[n]);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r) {
        std::vector<int> multi(dim);
        std::vector<double> x(dim);
        grid.decode(static_cast<std::size_t>(r), multi);
        grid.point(static_cast<std::size_t>(r), x);
        std::size_t k = A.row_ptr[r];
        double diag = diag_pot(x);
        for (int ax = 0; ax < dim; ++ax) {
            const double h = grid.spacing(ax);
            diag += 2.0 * eps / (h * h);
        }
        // lower neighbors, axes in order give ascending columns: -stride_0 < ... < -stride_{d-1}
        for (int ax = 0; ax < dim; ++ax) {
            if (multi[ax] > 0) {
                const double h = grid.spacing(ax);
                const double b = adv_coeff ? adv_coeff(ax, x) : 0.0;
                A.col[k] = static_cast<std::int32_t>(static_cast<std::size_t>(r) - grid.stride(ax));
                A.val[k] = -eps / (h * h) + b / (2.0 * h);
                ++k;
            }
        }
        A.col[k] = static_cast<std::int32_t>(r);
        A.val[k] = diag;
        ++k;
        for (int ax = dim - 1; ax >= 0; --ax) {
            if (multi[ax] + 1 < grid.points(ax)) {
                const double h = grid.spacing(ax);
                const double b = adv_coeff ? adv_coeff(ax, x) : 0.0;
                A.col[k] = static_cast<std::int32_t>(static_cast<std::size_t>(r) + grid.stride(ax));
                A.val[k] = -eps / (h * h) - b / (2.0 * h);
                ++k;
            }
        }
    }
    return A;
}

}  // namespace

SymmetricOperator assemble_symmetric(const DriftSpec& drift, const PotentialSpec& V,
                                     const Grid& grid, double eps, double alpha, Frame frame) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    const auto& a = drift.coeffs();
    if (grid.dim() != drift.dim()) throw std::invalid_argument("grid/drift dimension mismatch");

    // alpha * Lap(m) = 2 alpha sum a_i; exactly zero for a balanced drift,
    // but carried along so the physical form matches its definition.
    double lap_m = 0.0;
    for (double c : a) lap_m += 2.0 * c;

    SymmetricOperator op;
    op.grid = grid;
    op.frame = frame;
    op.eps = eps;
    op.alpha = alpha;
    op.mass_weight = grid.cell_volume();
    for (double c : a) op.drift_coeffs.push_back(c);

    op.v_diag.resize(grid.size());
    const int dim = grid.dim();
    if (frame.kind == FrameKind::Physical) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(grid.size()); ++r) {
            std::vector<double> x(dim);
            grid.point(static_cast<std::size_t>(r), x);
            op.v_diag[r] = V(x);
        }
        auto pot = [&](std::span<const double> x) {
            double osc = 0.0;
            for (int i = 0; i < dim; ++i) osc += a[i] * a[i] * x[i] * x[i];
            return (4.0 * alpha * alpha / eps) * osc + alpha * lap_m + V(x);
        };
        op.matrix = assemble_stencil(grid, pot, nullptr, eps);
    } else {
        if (alpha <= 0) throw std::invalid_argument("rescaled frame needs alpha > 0");
        const double s = 1.0 / std::sqrt(alpha);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(grid.size()); ++r) {
            std::vector<double> y(dim), x(dim);
            grid.point(static_cast<std::size_t>(r), y);
            for (int i = 0; i < dim; ++i) x[i] = s * y[i];
            op.v_diag[r] = V(x) / alpha;
        }
        auto pot = [&](std::span<const double> y) {
            double osc = 0.0;
            for (int i = 0; i < dim; ++i) osc += a[i] * a[i] * y[i] * y[i];
            std::vector<double> x(dim);
            for (int i = 0; i < dim; ++i) x[i] = s * y[i];
            return (4.0 / eps) * osc + V(x) / alpha;
        };
        op.matrix = assemble_stencil(grid, pot, nullptr, eps);
    }
    return op;
}

NonSymmetricOperator assemble_nonsymmetric(const DriftSpec& drift, const PotentialSpec& V,
                                           const Grid& grid, double eps, double alpha) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    const double m_max = drift.max_abs_m(grid.box().lo, grid.box().hi);
    if (alpha * m_max / eps > 600.0)
        throw std::domain_error("gauge factor exp(alpha*m/eps) would overflow: alpha*max|m|/eps = " +
                                std::to_string(alpha * m_max / eps));
    const auto& a = drift.coeffs();
    NonSymmetricOperator op;
    op.grid = grid;
    op.eps = eps;
    op.alpha = alpha;
    auto pot = [&](std::span<const double> x) { return V(x); };
    // -2 alpha grad(m).grad = sum_ax (-4 alpha a_ax x_ax) d/dx_ax; assemble_stencil
    // puts -b/(2h) on the upper neighbor, so b = 4 alpha a_ax x_ax.
    auto adv = [&](int ax, std::span<const double> x) { return 4.0 * alpha * a[ax] * x[ax]; };
    op.matrix = assemble_stencil(grid, pot, adv, eps);
    return op;
}

double rayleigh_quotient(const SymmetricOperator& op, const GridField& u) {
    if (u.values.size() != op.matrix.rows)
        throw std::invalid_argument("rayleigh_quotient: field/operator size mismatch");
    const double uu = kernels::dot(u.values, u.values);
    if (uu == 0.0) throw std::invalid_argument("rayleigh_quotient: zero field");
    std::vector<double> Au(u.values.size());
    kernels::spmv(op.matrix, u.values, Au);
    return kernels::dot(u.values, Au) / uu;
}

SymmetrizedOperator symmetrize_nonsymmetric(const NonSymmetricOperator& ns,
                                            const DriftSpec& drift) {
    const Grid& grid = ns.grid;
    const int dim = grid.dim();
    const auto& a = drift.coeffs();
    const double eps = ns.eps;

    // Mesh Peclet check: the off-diagonal pair products must stay positive.
    for (int ax = 0; ax < dim; ++ax) {
        const double h = grid.spacing(ax);
        const double xmax = std::max(std::abs(grid.box().lo[ax]), std::abs(grid.box().hi[ax]));
        if (h * 2.0 * ns.alpha * std::abs(a[ax]) * xmax >= eps)
            throw std::domain_error("symmetrize_nonsymmetric: mesh Peclet >= 1 on axis " +
                                    std::to_string(ax) + "; refine the grid");
    }

    // Per-axis scale factors f_ax(k) with (f(k+1)/f(k))^2 = east(k)/west(k+1),
    // where east/west are the upper/lower stencil entries
    //   east(k) = -eps/h^2 - b(x_k)/(2h), west(k) = -eps/h^2 + b(x_k)/(2h),
    // b(x) = 4 alpha a_ax x as in the assembly. The total scale is the tensor
    // product of the per-axis factors.
    std::vector<std::vector<double>> fax(dim);
    for (int ax = 0; ax < dim; ++ax) {
        const double h = grid.spacing(ax);
        const int p = grid.points(ax);
        fax[ax].assign(p, 1.0);
        for (int k = 0; k + 1 < p; ++k) {
            const double bk = 4.0 * ns.alpha * a[ax] * grid.coord(ax, k);
            const double bk1 = 4.0 * ns.alpha * a[ax] * grid.coord(ax, k + 1);
            const double east = -eps / (h * h) - bk / (2.0 * h);
            const double west = -eps / (h * h) + bk1 / (2.0 * h);
            fax[ax][k + 1] = fax[ax][k] * std::sqrt(east / west);
        }
    }

    SymmetrizedOperator out;
    out.scale.resize(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(grid.size()); ++r) {
        std::vector<int> multi(dim);
        grid.decode(static_cast<std::size_t>(r), multi);
        double f = 1.0;
        for (int ax = 0; ax < dim; ++ax) f *= fax[ax][multi[ax]];
        out.scale[r] = f;
    }

    // S = E L E^{-1} built entrywise: S_ij = e_i L_ij / e_j; enforce exact
    // symmetry by writing the geometric mean +-sqrt(L_ij L_ji) instead.
    CsrMatrix S = ns.matrix;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(S.rows); ++r) {
        for (std::size_t k = S.row_ptr[r]; k < S.row_ptr[r + 1]; ++k) {
            const std::size_t c = static_cast<std::size_t>(S.col[k]);
            if (c == static_cast<std::size_t>(r)) continue;
            // locate the transposed entry
            double lcr = 0.0;
            for (std::size_t k2 = ns.matrix.row_ptr[c]; k2 < ns.matrix.row_ptr[c + 1]; ++k2)
                if (static_cast<std::size_t>(ns.matrix.col[k2]) == static_cast<std::size_t>(r)) {
                    lcr = ns.matrix.val[k2];
                    break;
                }
            S.val[k] = -std::sqrt(S.val[k] * lcr);
        }
    }

    out.op.matrix = std::move(S);
    out.op.grid = grid;
    out.op.frame = Frame::physical();
    out.op.eps = eps;
    out.op.alpha = ns.alpha;
    out.op.mass_weight = grid.cell_volume();
    for (double c : a) out.op.drift_coeffs.push_back(c);
    out.op.v_diag.assign(grid.size(), 0.0);
    return out;
}

void write_coo(std::ostream& out, const CsrMatrix& A) {
    char buf[96];
    for (std::size_t r = 0; r < A.rows; ++r)
        for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%zu %d %.17g\n", r, A.col[k], A.val[k]);
            out << buf;
        }
}

}  // namespace driftspec
