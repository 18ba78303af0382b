#include "driftspec/asymptotics.hpp"

#include <algorithm>
#include <cmath>

namespace driftspec {

EigenvalueExpansion smooth_expansion(const DriftSpec& drift, const LocalModel& local,
                                     double eps) {
    const int dim = drift.dim();
    EigenvalueExpansion e;
    e.kind = ExpansionKind::Smooth;
    e.coefficients.emplace_back(1.0, 2.0 * drift.sum_abs());
    e.coefficients.emplace_back(0.0, local.value_at_origin);

    std::vector<int> tau(dim, 0);
    double grad_term = 0.0;
    for (int j = 0; j < dim; ++j) {
        tau.assign(dim, 0);
        tau[j] = 1;
        grad_term += local.gradient_at_origin[j] * gaussian_moment(drift, eps, tau);
    }
    e.coefficients.emplace_back(-0.5, grad_term);

    double hess_term = 0.0;
    for (int i = 0; i < dim; ++i) {
        tau.assign(dim, 0);
        tau[i] = 2;
        hess_term += 0.5 * local.hessian_at_origin[i * dim + i] * gaussian_moment(drift, eps, tau);
        for (int j = i + 1; j < dim; ++j) {
            tau.assign(dim, 0);
            tau[i] = 1;
            tau[j] = 1;
            hess_term += local.hessian_at_origin[i * dim + j] * gaussian_moment(drift, eps, tau);
        }
    }
    e.coefficients.emplace_back(-1.0, hess_term);
    return e;
}

EigenvalueExpansion homogeneous_expansion(const DriftSpec& drift, const PotentialSpec& V,
                                          const HermiteBasis& basis,
                                          const HermiteCoeffs& phi3) {
    if (!V.homogeneous_part())
        throw std::invalid_argument("homogeneous_expansion: potential has no homogeneous part");
    const double k0 = V.homogeneous_part()->degree;
    EigenvalueExpansion e;
    e.kind = ExpansionKind::Homogeneous;
    e.coefficients.emplace_back(1.0, 2.0 * drift.sum_abs());

    const auto& h0 = V.homogeneous_part()->evaluator;
    const std::vector<double> Q = basis.sample_q();
    const std::vector<double> h0s = basis.sample(h0);
    std::vector<double> tmp(Q.size());
    for (std::size_t q = 0; q < Q.size(); ++q) tmp[q] = h0s[q] * Q[q] * Q[q];
    e.coefficients.emplace_back(-k0 / 2.0, basis.integrate(tmp));

    const std::vector<double> p3 = basis.reconstruct(phi3);
    for (std::size_t q = 0; q < Q.size(); ++q) tmp[q] = h0s[q] * p3[q] * Q[q];
    e.coefficients.emplace_back(-k0 - 1.0, basis.integrate(tmp));
    return e;
}

double predict_lambda(const EigenvalueExpansion& exp, double alpha, int order) {
    if (alpha <= 0) throw std::invalid_argument("predict_lambda: alpha must be positive");
    if (order < 1 || order > static_cast<int>(exp.coefficients.size()))
        throw std::invalid_argument("predict_lambda: order out of range");
    double s = 0.0;
    for (int k = 0; k < order; ++k)
        s += exp.coefficients[k].second * std::pow(alpha, exp.coefficients[k].first);
    return s;
}

double EigenfunctionExpansion::evaluate(std::span<const double> x, double alpha,
                                        int order) const {
    double v = limit->q(x);
    if (order >= 2 && first) {
        const double p = kind == ExpansionKind::Smooth ? -1.5 : -(k0 + 2.0) / 2.0;
        v += std::pow(alpha, p) * basis->evaluate(*first, x);
    }
    if (order >= 3 && second) {
        const double p = kind == ExpansionKind::Smooth ? -2.0 : -k0 - 2.0;
        double t = basis->evaluate(*second, x);
        if (kind == ExpansionKind::Homogeneous) t -= 0.5 * phi3_sq_integral * limit->q(x);
        v += std::pow(alpha, p) * t;
    }
    return v;
}

GridField rescale_eigenfunction(const GridField& u, double alpha, RescaleCenter center,
                                const Grid& target) {
    if (alpha <= 0) throw std::invalid_argument("rescale: alpha must be positive");
    if (u.frame.kind != FrameKind::Physical)
        throw std::invalid_argument("rescale: input must be a physical-frame field");
    const int dim = u.grid.dim();
    std::vector<double> c(dim, 0.0);
    if (center == RescaleCenter::Argmax) c = track_max_point(u, alpha).d_alpha;

    const double s = 1.0 / std::sqrt(alpha);
    const double amp = std::pow(alpha, -0.25 * dim);
    GridField w(target, Frame::rescaled(alpha));

    const Grid& g = u.grid;
    std::vector<double> y(dim), x(dim);
    std::vector<int> base(dim);
    std::vector<double> frac(dim);
    for (std::size_t r = 0; r < target.size(); ++r) {
        target.point(r, y);
        bool inside = true;
        for (int j = 0; j < dim; ++j) {
            x[j] = s * y[j] + c[j];
            if (x[j] < g.box().lo[j] || x[j] > g.box().hi[j]) inside = false;
        }
        if (!inside)
            throw std::invalid_argument("rescale: target grid exits the physical box");
        // multilinear interpolation; nodes at lo + (i+1)h, zero beyond the
        // first/last interior node consistent with the Dirichlet extension
        for (int j = 0; j < dim; ++j) {
            const double t = (x[j] - g.box().lo[j]) / g.spacing(j) - 1.0;
            const double fl = std::floor(t);
            base[j] = static_cast<int>(fl);
            frac[j] = t - fl;
        }
        double acc = 0.0;
        for (int corner = 0; corner < (1 << dim); ++corner) {
            double wgt = 1.0;
            std::size_t idx = 0;
            bool valid = true;
            for (int j = 0; j < dim; ++j) {
                const int bit = (corner >> j) & 1;
                const int ij = base[j] + bit;
                wgt *= bit ? frac[j] : 1.0 - frac[j];
                if (ij < 0 || ij >= g.points(j)) {
                    valid = false;  // Dirichlet zero outside the interior
                    break;
                }
                idx += static_cast<std::size_t>(ij) * g.stride(j);
            }
            if (valid) acc += wgt * u.values[idx];
        }
        w.values[r] = amp * acc;
    }
    return w;
}

namespace {

// Least-squares quadratic model on the 3^N neighborhood in log space; returns
// the vertex offset relative to the center node. Falls back to the center
// when the fit is degenerate.
std::vector<double> quadratic_vertex(const GridField& u, std::span<const int> center) {
    const Grid& g = u.grid;
    const int dim = g.dim();
    const int nterms = 1 + dim + dim * (dim + 1) / 2;
    std::vector<double> AtA(static_cast<std::size_t>(nterms) * nterms, 0.0);
    std::vector<double> Atb(nterms, 0.0);
    std::vector<int> off(dim, -1), idx(dim);
    std::vector<double> row(nterms), d(dim);

    bool positive = true;
    while (true) {
        for (int j = 0; j < dim; ++j) {
            idx[j] = center[j] + off[j];
            d[j] = off[j] * g.spacing(j);
        }
        const double v = u.values[g.encode(idx)];
        if (v <= 0) {
            positive = false;
            break;
        }
        int t = 0;
        row[t++] = 1.0;
        for (int j = 0; j < dim; ++j) row[t++] = d[j];
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) row[t++] = d[i] * d[j];
        const double b = std::log(v);
        for (int i = 0; i < nterms; ++i) {
            Atb[i] += row[i] * b;
            for (int j = 0; j < nterms; ++j) AtA[i * nterms + j] += row[i] * row[j];
        }
        int ax = dim - 1;
        while (ax >= 0 && off[ax] == 1) off[ax--] = -1;
        if (ax < 0) break;
        ++off[ax];
    }

    std::vector<double> vertex(dim, 0.0);
    if (!positive) return vertex;  // raw-value fallback: keep the grid argmax

    // solve the normal equations by Gaussian elimination with partial pivoting
    std::vector<double> M = AtA, rhs = Atb;
    for (int k = 0; k < nterms; ++k) {
        int piv = k;
        for (int i = k + 1; i < nterms; ++i)
            if (std::abs(M[i * nterms + k]) > std::abs(M[piv * nterms + k])) piv = i;
        if (std::abs(M[piv * nterms + k]) < 1e-14) return vertex;
        if (piv != k) {
            for (int j = 0; j < nterms; ++j) std::swap(M[k * nterms + j], M[piv * nterms + j]);
            std::swap(rhs[k], rhs[piv]);
        }
        for (int i = k + 1; i < nterms; ++i) {
            const double f = M[i * nterms + k] / M[k * nterms + k];
            for (int j = k; j < nterms; ++j) M[i * nterms + j] -= f * M[k * nterms + j];
            rhs[i] -= f * rhs[k];
        }
    }
    std::vector<double> coef(nterms);
    for (int i = nterms - 1; i >= 0; --i) {
        double s = rhs[i];
        for (int j = i + 1; j < nterms; ++j) s -= M[i * nterms + j] * coef[j];
        coef[i] = s / M[i * nterms + i];
    }
    // gradient g_j = coef[1+j]; Hessian from the quadratic terms
    std::vector<double> H(static_cast<std::size_t>(dim) * dim, 0.0);
    int t = 1 + dim;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            if (i == j)
                H[i * dim + i] = 2.0 * coef[t];
            else
                H[i * dim + j] = H[j * dim + i] = coef[t];
            ++t;
        }
    // vertex = -H^{-1} grad, small dense solve
    std::vector<double> Hm = H, gv(dim);
    for (int j = 0; j < dim; ++j) gv[j] = -coef[1 + j];
    for (int k = 0; k < dim; ++k) {
        int piv = k;
        for (int i = k + 1; i < dim; ++i)
            if (std::abs(Hm[i * dim + k]) > std::abs(Hm[piv * dim + k])) piv = i;
        if (std::abs(Hm[piv * dim + k]) < 1e-300) return vertex;
        if (piv != k) {
            for (int j = 0; j < dim; ++j) std::swap(Hm[k * dim + j], Hm[piv * dim + j]);
            std::swap(gv[k], gv[piv]);
        }
        for (int i = k + 1; i < dim; ++i) {
            const double f = Hm[i * dim + k] / Hm[k * dim + k];
            for (int j = k; j < dim; ++j) Hm[i * dim + j] -= f * Hm[k * dim + j];
            gv[i] -= f * gv[k];
        }
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = gv[i];
        for (int j = i + 1; j < dim; ++j) s -= Hm[i * dim + j] * vertex[j];
        vertex[i] = s / Hm[i * dim + i];
    }
    // clamp to one cell; larger offsets mean the fit left its validity region
    for (int j = 0; j < dim; ++j)
        vertex[j] = std::clamp(vertex[j], -g.spacing(j), g.spacing(j));
    return vertex;
}

}  // namespace

MaxPointInfo track_max_point(const GridField& u, double alpha) {
    const Grid& g = u.grid;
    const int dim = g.dim();
    std::size_t imax = 0;
    for (std::size_t i = 1; i < u.values.size(); ++i)
        if (u.values[i] > u.values[imax]) imax = i;
    std::vector<int> center(dim);
    g.decode(imax, center);
    for (int j = 0; j < dim; ++j)
        if (center[j] == 0 || center[j] == g.points(j) - 1)
            throw std::runtime_error(
                "track_max_point: argmax on the boundary layer; concentration unresolved");

    // strict local maxima over full 3^N neighborhoods (missing neighbors are
    // Dirichlet zeros, which any positive value beats)
    int count = 0;
    std::vector<int> mi(dim), nb(dim);
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        g.decode(i, mi);
        bool strict = true;
        std::vector<int> off(dim, -1);
        while (strict) {
            bool all_zero = true;
            for (int j = 0; j < dim; ++j) all_zero = all_zero && off[j] == 0;
            if (!all_zero) {
                bool valid = true;
                for (int j = 0; j < dim; ++j) {
                    nb[j] = mi[j] + off[j];
                    if (nb[j] < 0 || nb[j] >= g.points(j)) valid = false;
                }
                const double nv = valid ? u.values[g.encode(nb)] : 0.0;
                if (nv >= u.values[i]) strict = false;
            }
            int ax = dim - 1;
            while (ax >= 0 && off[ax] == 1) off[ax--] = -1;
            if (ax < 0) break;
            ++off[ax];
        }
        if (strict) ++count;
    }

    MaxPointInfo out;
    out.count = count;
    const std::vector<double> vert = quadratic_vertex(u, center);
    out.d_alpha.resize(dim);
    double norm = 0.0;
    const bool rescaled = u.frame.kind == FrameKind::Rescaled;
    for (int j = 0; j < dim; ++j) {
        const double peak = g.coord(j, center[j]) + vert[j];
        out.d_alpha[j] = rescaled ? peak / std::sqrt(alpha) : peak;
        norm += out.d_alpha[j] * out.d_alpha[j];
    }
    out.scaled = std::sqrt(alpha) * std::sqrt(norm);
    return out;
}

double pohozaev_projection(const SymmetricOperator& op, const GridField& w,
                           const LimitPair& limit, double radius) {
    if (op.frame.kind != FrameKind::Rescaled)
        throw std::invalid_argument("pohozaev_projection: operator must be in the rescaled frame");
    const Grid& g = op.grid;
    if (w.values.size() != g.size())
        throw std::invalid_argument("pohozaev_projection: field/grid mismatch");
    for (int j = 0; j < g.dim(); ++j)
        if (radius > std::max(std::abs(g.box().lo[j]), std::abs(g.box().hi[j])))
            throw std::invalid_argument("pohozaev_projection: radius exceeds the box");

    const std::size_t n = g.size();
    std::vector<double> qs(n), z(n), Nz(n);
    std::vector<double> x(g.dim());
    for (std::size_t i = 0; i < n; ++i) {
        g.point(i, x);
        qs[i] = limit.q(x);
        z[i] = w.values[i] - qs[i];
    }
    kernels::spmv(op.matrix, z, Nz);
    // strip the sampled V part and the limit shift: N = A - v_diag - mu
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g.point(i, x);
        double r2 = 0.0;
        for (int j = 0; j < g.dim(); ++j) r2 += x[j] * x[j];
        if (r2 > radius * radius) continue;
        acc += (Nz[i] - (op.v_diag[i] + limit.mu) * z[i]) * qs[i];
    }
    return acc * op.mass_weight;
}

OrderFit fit_residual_order(std::span<const SweepRecord> records, int order, double floor) {
    if (records.size() < 4)
        throw std::invalid_argument("fit_residual_order: need at least 4 records");
    std::vector<double> la, lr;
    for (const auto& rec : records) {
        if (order < 1 || order > static_cast<int>(rec.partial_sums.size()))
            throw std::invalid_argument("fit_residual_order: order out of range");
        const double r = std::abs(rec.lambda_numeric - rec.partial_sums[order - 1]);
        if (r <= floor * std::max(std::abs(rec.lambda_numeric), 1.0)) continue;
        la.push_back(std::log(rec.alpha));
        lr.push_back(std::log(r));
    }
    OrderFit fit;
    fit.points_used = static_cast<int>(la.size());
    if (la.size() < 2) {
        fit.at_floor = true;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(la.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        sx += la[i];
        sy += lr[i];
        sxx += la[i] * la[i];
        sxy += la[i] * lr[i];
        syy += lr[i] * lr[i];
    }
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    const double ss_tot = syy - sy * sy / n;
    const double ss_res = ss_tot - fit.slope * (sxy - sx * sy / n);
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace driftspec
