#include "driftspec/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace driftspec {

using kernels::axpy;
using kernels::copy;
using kernels::dot;
using kernels::fill;
using kernels::norm2;
using kernels::scale;
using kernels::spmv;

namespace {

// Cyclic Jacobi eigensolver for small dense symmetric matrices (k <= 8).
// Returns eigenvalues ascending; V columns are the eigenvectors.
void jacobi_eig(int k, std::vector<double>& A, std::vector<double>& V,
                std::vector<double>& lam) {
    V.assign(static_cast<std::size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i) V[i * k + i] = 1.0;
    auto at = [&](int i, int j) -> double& { return A[i * k + j]; };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < k; ++p) {
            for (int q = p + 1; q < k; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < k; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < k; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < k; ++i) {
                    const double vip = V[i * k + p], viq = V[i * k + q];
                    V[i * k + p] = c * vip - s * viq;
                    V[i * k + q] = s * vip + c * viq;
                }
            }
        }
    }
    lam.resize(k);
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return at(a, a) < at(b, b); });
    std::vector<double> Vs(V.size());
    for (int j = 0; j < k; ++j) {
        lam[j] = at(order[j], order[j]);
        for (int i = 0; i < k; ++i) Vs[i * k + j] = V[i * k + order[j]];
    }
    V.swap(Vs);
}

struct Work {
    const CsrMatrix& A;
    const std::vector<double>* deflate = nullptr;  // unit vector to project out
    int matvecs = 0;
    int budget = 0;

    void project(std::span<double> v) const {
        if (!deflate) return;
        const double c = dot(*deflate, v);
        axpy(-c, *deflate, v);
    }
    void apply(std::span<const double> x, std::span<double> y) {
        spmv(A, x, y);
        ++matvecs;
        project(y);
    }
    bool exhausted() const { return matvecs >= budget; }
};

// Jacobi-preconditioned CG for A y = b, stopping on relative residual or
// matvec budget. b and y live in the deflated subspace when applicable.
void pcg(Work& wk, std::span<const double> diag_inv, std::span<const double> b,
         std::span<double> y, double rel_tol, int max_iters) {
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), Ap(n);
    fill(y, 0.0);
    copy(b, r);
    kernels::hadamard(r, diag_inv, z);
    copy(z, p);
    double rz = dot(r, z);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return;
    for (int it = 0; it < max_iters && !wk.exhausted(); ++it) {
        wk.apply(p, Ap);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) break;
        const double a = rz / pAp;
        axpy(a, p, y);
        axpy(-a, Ap, r);
        if (norm2(r) <= rel_tol * bnorm) break;
        kernels::hadamard(r, diag_inv, z);
        const double rz_new = dot(r, z);
        kernels::xpby(z, rz_new / rz, p);
        rz = rz_new;
    }
}

void normalize(std::span<double> v) {
    const double n = norm2(v);
    if (n > 0) scale(1.0 / n, v);
}

// Orthonormalize candidate columns with modified Gram-Schmidt, applying the
// same column operations to the cached A-images. Columns that lose 7+ digits
// are dropped. Returns the surviving count.
int mgs(std::vector<std::vector<double>>& cols, std::vector<std::vector<double>>& acols) {
    int kept = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        auto& v = cols[j];
        auto& av = acols[j];
        const double before = norm2(v);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < kept; ++i) {
                const double c = dot(cols[i], v);
                axpy(-c, cols[i], v);
                axpy(-c, acols[i], av);
            }
        }
        const double after = norm2(v);
        if (after <= 1e-7 * std::max(before, 1e-300)) continue;
        scale(1.0 / after, v);
        scale(1.0 / after, av);
        if (static_cast<std::size_t>(kept) != j) {
            cols[kept].swap(v);
            acols[kept].swap(av);
        }
        ++kept;
    }
    cols.resize(kept);
    acols.resize(kept);
    return kept;
}

struct BlockResult {
    double lambda = 0.0;
    double lambda2 = 0.0;
    std::vector<double> x;
    double residual = 0.0;
    int matvecs = 0;
    bool converged = false;
};

// Locally optimal block iteration, block size 2, with a Jacobi preconditioner
// and an inexact inverse-iteration warmup. Everything is deterministic.
BlockResult lobpcg2(Work& wk, std::span<const double> diag, double tol) {
    const std::size_t n = wk.A.rows;
    std::vector<double> diag_inv(n);
    for (std::size_t i = 0; i < n; ++i) diag_inv[i] = diag[i] > 0 ? 1.0 / diag[i] : 1.0;

    std::vector<double> x1(n, 1.0), x2(n);
    for (std::size_t i = 0; i < n; ++i) x2[i] = static_cast<double>(i % 37) / 37.0 - 0.48;
    wk.project(x1);
    wk.project(x2);
    normalize(x1);

    // warmup: two inexact inverse-iteration steps on x1
    {
        std::vector<double> y(n);
        for (int s = 0; s < 2 && !wk.exhausted(); ++s) {
            pcg(wk, diag_inv, x1, y, 1e-2, 200);
            wk.project(y);
            if (norm2(y) == 0.0) break;
            copy(y, x1);
            normalize(x1);
        }
    }
    {
        const double c = dot(x1, x2);
        axpy(-c, x1, x2);
        normalize(x2);
    }

    std::vector<std::vector<double>> P, AP;
    std::vector<double> ax1(n), ax2(n);
    wk.apply(x1, ax1);
    wk.apply(x2, ax2);

    BlockResult best;
    best.residual = std::numeric_limits<double>::infinity();

    while (true) {
        const double rho1 = dot(x1, ax1);
        // residual of the leading Ritz pair
        std::vector<double> r1(n);
        copy(ax1, r1);
        axpy(-rho1, x1, r1);
        const double res = norm2(r1);
        if (res < best.residual) {
            best.residual = res;
            best.lambda = rho1;
            best.x = x1;
            best.matvecs = wk.matvecs;
        }
        if (res <= tol * std::max(std::abs(rho1), 1.0)) {
            best.converged = true;
            best.lambda = rho1;
            best.x = x1;
            best.lambda2 = dot(x2, ax2);
            best.residual = res;
            best.matvecs = wk.matvecs;
            return best;
        }
        if (wk.exhausted()) return best;

        // preconditioned residuals for both block vectors
        std::vector<double> r2(n);
        copy(ax2, r2);
        axpy(-dot(x2, ax2), x2, r2);
        std::vector<std::vector<double>> cols, acols;
        cols.reserve(6);
        acols.reserve(6);
        cols.push_back(x1);
        acols.push_back(ax1);
        cols.push_back(x2);
        acols.push_back(ax2);
        std::vector<double> w1(n), w2(n), aw(n);
        kernels::hadamard(r1, diag_inv, w1);
        kernels::hadamard(r2, diag_inv, w2);
        wk.project(w1);
        wk.project(w2);
        for (auto* w : {&w1, &w2}) {
            wk.apply(*w, aw);
            cols.push_back(*w);
            acols.push_back(aw);
        }
        for (std::size_t i = 0; i < P.size(); ++i) {
            cols.push_back(P[i]);
            acols.push_back(AP[i]);
        }
        const int k = mgs(cols, acols);
        if (k < 2) return best;

        std::vector<double> H(static_cast<std::size_t>(k) * k);
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) {
                const double v = dot(cols[i], acols[j]);
                H[i * k + j] = v;
                H[j * k + i] = v;
            }
        std::vector<double> V, lam;
        jacobi_eig(k, H, V, lam);

        auto combine = [&](int ritz, const std::vector<std::vector<double>>& basis,
                           int from, std::vector<double>& out) {
            fill(out, 0.0);
            for (int i = from; i < k; ++i) axpy(V[i * k + ritz], basis[i], out);
        };
        std::vector<double> nx1(n), nx2(n), nax1(n), nax2(n), p1(n), p2(n), pa1(n), pa2(n);
        combine(0, cols, 0, nx1);
        combine(0, acols, 0, nax1);
        combine(1, cols, 0, nx2);
        combine(1, acols, 0, nax2);
        combine(0, cols, 2, p1);
        combine(0, acols, 2, pa1);
        combine(1, cols, 2, p2);
        combine(1, acols, 2, pa2);

        x1.swap(nx1);
        x2.swap(nx2);
        ax1.swap(nax1);
        ax2.swap(nax2);
        wk.project(x1);
        wk.project(x2);
        P.clear();
        AP.clear();
        P.push_back(std::move(p1));
        AP.push_back(std::move(pa1));
        P.push_back(std::move(p2));
        AP.push_back(std::move(pa2));
    }
}

std::vector<double> matrix_diag(const CsrMatrix& A) {
    std::vector<double> d(A.rows, 0.0);
    for (std::size_t r = 0; r < A.rows; ++r)
        for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
            if (static_cast<std::size_t>(A.col[k]) == r) d[r] = A.val[k];
    return d;
}

}  // namespace

EigenPair smallest_eigenpair(const SymmetricOperator& op, SolveOptions opts) {
    if (opts.tol <= 0) throw std::invalid_argument("solver.tol must be positive");
    Work wk{op.matrix};
    wk.budget = opts.max_matvecs;
    const std::vector<double> diag = matrix_diag(op.matrix);
    BlockResult r = lobpcg2(wk, diag, opts.tol);
    if (!r.converged)
        throw SolverError("eigensolver: no convergence within " +
                              std::to_string(opts.max_matvecs) +
                              " matvecs; best residual " + std::to_string(r.residual),
                          r.residual);

    EigenPair out;
    out.lambda = r.lambda;
    out.residual = r.residual;
    out.iterations = r.matvecs;
    out.gap_estimate = r.lambda2 - r.lambda;
    out.u = GridField(op.grid, op.frame);
    out.u.values = std::move(r.x);

    // sign fix: entry of maximal absolute value becomes positive
    std::size_t imax = 0;
    double vmax = 0.0;
    for (std::size_t i = 0; i < out.u.values.size(); ++i)
        if (std::abs(out.u.values[i]) > vmax) {
            vmax = std::abs(out.u.values[i]);
            imax = i;
        }
    if (out.u.values[imax] < 0) scale(-1.0, out.u.values);

    double mn = out.u.values[0], mx = out.u.values[0];
    for (double v : out.u.values) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mn < -1e-8 * mx)
        throw SolverError("eigensolver: principal eigenvector not positive (min " +
                              std::to_string(mn) + ", max " + std::to_string(mx) + ")",
                          out.residual);

    // quadrature normalization: mass_weight * sum u_i^2 = 1
    const double s2 = dot(out.u.values, out.u.values) * op.mass_weight;
    scale(1.0 / std::sqrt(s2), out.u.values);
    return out;
}

double second_eigenvalue(const SymmetricOperator& op, const EigenPair& first, double tol) {
    std::vector<double> u1 = first.u.values;
    normalize(u1);
    Work wk{op.matrix};
    wk.deflate = &u1;
    wk.budget = 40000;
    const std::vector<double> diag = matrix_diag(op.matrix);
    BlockResult r = lobpcg2(wk, diag, tol);
    if (!r.converged)
        throw SolverError("second_eigenvalue: no convergence; best residual " +
                              std::to_string(r.residual),
                          r.residual);
    if (r.lambda <= first.lambda)
        throw SolverError("second_eigenvalue: ordering violated", r.residual);
    return r.lambda;
}

}  // namespace driftspec
