#include "driftspec/limit.hpp"

#include <algorithm>
#include <cmath>

namespace driftspec {

double LimitPair::q(std::span<const double> x) const {
    double e = 0.0;
    for (std::size_t j = 0; j < abs_coeffs.size(); ++j) e += abs_coeffs[j] * x[j] * x[j];
    return q_origin * std::exp(-e / eps);
}

LimitPair closed_form_limit(const DriftSpec& drift, double eps) {
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    LimitPair lp;
    lp.eps = eps;
    lp.mu = 2.0 * drift.sum_abs();
    double pref = 1.0;
    for (double a : drift.coeffs()) {
        const double aa = std::abs(a);
        lp.abs_coeffs.push_back(aa);
        lp.sigma.push_back(std::sqrt(eps / (4.0 * aa)));
        pref *= 2.0 * aa / (eps * M_PI);
    }
    lp.q_origin = std::pow(pref, 0.25);
    return lp;
}

double gaussian_moment(const DriftSpec& drift, double eps, std::span<const int> tau) {
    if (static_cast<int>(tau.size()) != drift.dim())
        throw std::invalid_argument("gaussian_moment: tau dimension mismatch");
    int total = 0;
    for (int t : tau) {
        if (t < 0) throw std::invalid_argument("gaussian_moment: negative multi-index");
        total += t;
    }
    if (total > 4) throw std::invalid_argument("gaussian_moment: |tau| > 4 unsupported");
    double m = 1.0;
    for (int j = 0; j < drift.dim(); ++j) {
        const double s2 = eps / (4.0 * std::abs(drift.coeffs()[j]));
        switch (tau[j]) {
            case 0: break;
            case 2: m *= s2; break;
            case 4: m *= 3.0 * s2 * s2; break;
            default: return 0.0;  // odd per-axis moment
        }
    }
    return m;
}

namespace {

// Eigenvalues of a symmetric tridiagonal matrix by the implicit-shift QL
// algorithm (values only).
std::vector<double> tridiag_eigenvalues(std::vector<double> d, std::vector<double> e) {
    const int n = static_cast<int>(d.size());
    e.push_back(0.0);
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) throw std::runtime_error("tridiag_eigenvalues: no convergence");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? r : -r));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

}  // namespace

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    std::vector<double> d(n, 0.0), e(n - 1);
    for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(k / 2.0);
    GaussHermiteRule rule;
    rule.t = tridiag_eigenvalues(std::move(d), std::move(e));
    // enforce exact +- symmetry of the node set
    for (int i = 0; i < n / 2; ++i) {
        const double v = 0.5 * (rule.t[n - 1 - i] - rule.t[i]);
        rule.t[i] = -v;
        rule.t[n - 1 - i] = v;
    }
    if (n % 2 == 1) rule.t[n / 2] = 0.0;
    // Christoffel weights through the orthonormal Hermite functions:
    // w_i * exp(t_i^2) = 1 / sum_k hhat_k(t_i)^2, no overflow anywhere.
    rule.w.resize(n);
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) {
        hermite_values(n - 1, rule.t[i], h);
        double s = 0.0;
        for (double v : h) s += v * v;
        rule.w[i] = 1.0 / s;
    }
    return rule;
}

void hermite_values(int upto, double t, std::span<double> out) {
    out[0] = std::pow(M_PI, -0.25) * std::exp(-0.5 * t * t);
    if (upto >= 1) out[1] = std::sqrt(2.0) * t * out[0];
    for (int k = 1; k < upto; ++k)
        out[k + 1] = std::sqrt(2.0 / (k + 1)) * t * out[k] - std::sqrt(k / (k + 1.0)) * out[k - 1];
}

std::size_t HermiteCoeffs::index(std::span<const int> n) const {
    std::size_t f = 0;
    for (int j = 0; j < dim; ++j) f = f * static_cast<std::size_t>(max_degree + 1) +
                                      static_cast<std::size_t>(n[j]);
    return f;
}

double& HermiteCoeffs::at(std::span<const int> n) { return c[index(n)]; }

double HermiteCoeffs::norm() const {
    double s = 0.0;
    for (double v : c) s += v * v;
    return std::sqrt(s);
}

HermiteBasis::HermiteBasis(const DriftSpec& drift, double eps, int max_degree)
    : dim_(drift.dim()), M_(max_degree), eps_(eps) {
    if (M_ < 1) throw std::invalid_argument("hermite basis: max_degree >= 1 required");
    if (M_ > 200)
        throw std::invalid_argument("hermite basis: max_degree > 200 rejected (recurrence range)");
    if (eps <= 0) throw std::invalid_argument("eps must be positive");
    nq_ = 2 * M_ + 2;
    for (double a : drift.coeffs()) {
        abs_a_.push_back(std::abs(a));
        beta_.push_back(std::sqrt(2.0 * std::abs(a) / eps));
    }
    rule_ = gauss_hermite(nq_);
    htab_.resize(static_cast<std::size_t>(nq_) * (M_ + 1));
    for (int q = 0; q < nq_; ++q)
        hermite_values(M_, rule_.t[q], std::span<double>(htab_).subspan(
                                           static_cast<std::size_t>(q) * (M_ + 1), M_ + 1));
}

std::size_t HermiteBasis::num_nodes() const {
    std::size_t s = 1;
    for (int j = 0; j < dim_; ++j) s *= static_cast<std::size_t>(nq_);
    return s;
}

std::size_t HermiteBasis::num_coeffs() const {
    std::size_t s = 1;
    for (int j = 0; j < dim_; ++j) s *= static_cast<std::size_t>(M_ + 1);
    return s;
}

void HermiteBasis::node_point(std::size_t flat, std::span<double> x) const {
    for (int j = dim_ - 1; j >= 0; --j) {
        x[j] = node(j, static_cast<int>(flat % nq_));
        flat /= nq_;
    }
}

double HermiteBasis::total_weight(std::size_t flat) const {
    double w = 1.0;
    for (int j = dim_ - 1; j >= 0; --j) {
        w *= node_weight(j, static_cast<int>(flat % nq_));
        flat /= nq_;
    }
    return w;
}

double HermiteBasis::eigenvalue(std::span<const int> n) const {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += 4.0 * abs_a_[j] * n[j];
    return s;
}

std::vector<double> HermiteBasis::sample(
    const std::function<double(std::span<const double>)>& f) const {
    std::vector<double> out(num_nodes());
    std::vector<double> x(dim_);
    for (std::size_t q = 0; q < out.size(); ++q) {
        node_point(q, x);
        out[q] = f(x);
    }
    return out;
}

std::vector<double> HermiteBasis::sample_q() const {
    std::vector<double> out(num_nodes(), 1.0);
    // Q = psi_0 = prod sqrt(beta_j) hhat_0(t_j)
    for (std::size_t q = 0; q < out.size(); ++q) {
        std::size_t f = q;
        double v = 1.0;
        for (int j = dim_ - 1; j >= 0; --j) {
            const int qq = static_cast<int>(f % nq_);
            f /= nq_;
            v *= std::sqrt(beta_[j]) * htab_[static_cast<std::size_t>(qq) * (M_ + 1)];
        }
        out[q] = v;
    }
    return out;
}

namespace {

// Contract the leading axis of a tensor with a matrix: out[k, rest] =
// sum_q G[k, q] * in[q, rest]; then the tensor is "rotated" so the next axis
// becomes leading after dim passes.
std::vector<double> contract_lead(const std::vector<double>& in, std::size_t lead,
                                  std::size_t rest, const std::vector<double>& G,
                                  std::size_t rows) {
    std::vector<double> out(rows * rest, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(rows); ++k)
        for (std::size_t q = 0; q < lead; ++q) {
            const double g = G[static_cast<std::size_t>(k) * lead + q];
            if (g == 0.0) continue;
            const double* src = in.data() + q * rest;
            double* dst = out.data() + static_cast<std::size_t>(k) * rest;
            for (std::size_t r = 0; r < rest; ++r) dst[r] += g * src[r];
        }
    return out;
}

// Move the leading axis to the back: out[rest, lead] = in[lead, rest].
std::vector<double> rotate_axis(const std::vector<double>& in, std::size_t lead,
                                std::size_t rest) {
    std::vector<double> out(in.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(lead); ++q)
        for (std::size_t r = 0; r < rest; ++r)
            out[r * lead + static_cast<std::size_t>(q)] = in[static_cast<std::size_t>(q) * rest + r];
    return out;
}

}  // namespace

HermiteCoeffs HermiteBasis::project(std::span<const double> samples) const {
    if (samples.size() != num_nodes())
        throw std::invalid_argument("hermite project: sample count mismatch");
    std::vector<double> cur(samples.begin(), samples.end());
    std::size_t lead = static_cast<std::size_t>(nq_);
    // After processing axis j the tensor holds coefficients along it; axes are
    // consumed front-to-back and rotated to the rear, restoring the original
    // order after dim passes.
    for (int j = 0; j < dim_; ++j) {
        const std::size_t rest = cur.size() / static_cast<std::size_t>(nq_);
        std::vector<double> G(static_cast<std::size_t>(M_ + 1) * nq_);
        const double f = 1.0 / std::sqrt(beta_[j]);  // sqrt(beta)*h * w/beta
        for (int k = 0; k <= M_; ++k)
            for (int q = 0; q < nq_; ++q)
                G[static_cast<std::size_t>(k) * nq_ + q] =
                    f * htab_[static_cast<std::size_t>(q) * (M_ + 1) + k] * rule_.w[q];
        cur = contract_lead(cur, static_cast<std::size_t>(nq_), rest, G, M_ + 1);
        cur = rotate_axis(cur, static_cast<std::size_t>(M_ + 1), rest);
        lead = static_cast<std::size_t>(M_ + 1);
    }
    (void)lead;
    HermiteCoeffs out;
    out.dim = dim_;
    out.max_degree = M_;
    out.c = std::move(cur);
    return out;
}

std::vector<double> HermiteBasis::reconstruct(const HermiteCoeffs& c) const {
    if (c.c.size() != num_coeffs())
        throw std::invalid_argument("hermite reconstruct: coefficient count mismatch");
    std::vector<double> cur = c.c;
    for (int j = 0; j < dim_; ++j) {
        const std::size_t rest = cur.size() / static_cast<std::size_t>(M_ + 1);
        std::vector<double> G(static_cast<std::size_t>(nq_) * (M_ + 1));
        const double f = std::sqrt(beta_[j]);
        for (int q = 0; q < nq_; ++q)
            for (int k = 0; k <= M_; ++k)
                G[static_cast<std::size_t>(q) * (M_ + 1) + k] =
                    f * htab_[static_cast<std::size_t>(q) * (M_ + 1) + k];
        cur = contract_lead(cur, static_cast<std::size_t>(M_ + 1), rest, G, nq_);
        cur = rotate_axis(cur, static_cast<std::size_t>(nq_), rest);
    }
    return cur;
}

double HermiteBasis::evaluate(const HermiteCoeffs& c, std::span<const double> x) const {
    std::vector<std::vector<double>> hx(dim_);
    for (int j = 0; j < dim_; ++j) {
        hx[j].resize(M_ + 1);
        hermite_values(M_, beta_[j] * x[j], hx[j]);
        for (double& v : hx[j]) v *= std::sqrt(beta_[j]);
    }
    double s = 0.0;
    std::vector<int> n(dim_, 0);
    for (std::size_t f = 0; f < c.c.size(); ++f) {
        std::size_t r = f;
        double b = 1.0;
        for (int j = dim_ - 1; j >= 0; --j) {
            b *= hx[j][r % static_cast<std::size_t>(M_ + 1)];
            r /= static_cast<std::size_t>(M_ + 1);
        }
        s += c.c[f] * b;
    }
    return s;
}

double HermiteBasis::integrate(std::span<const double> samples) const {
    double s = 0.0;
    for (std::size_t q = 0; q < samples.size(); ++q) s += total_weight(q) * samples[q];
    return s;
}

std::vector<double> build_rhs(RhsKind kind, const PotentialSpec& V, const LimitPair& limit,
                              const HermiteBasis& basis, const HermiteCoeffs* phi3) {
    const int dim = basis.dim();
    const std::vector<double> Q = basis.sample_q();
    std::vector<double> F(basis.num_nodes());
    std::vector<double> x(dim);

    auto moment = [&](std::span<const int> tau) {
        // per-axis Gaussian moments with variance sigma_j^2
        double m = 1.0;
        for (int j = 0; j < dim; ++j) {
            const double s2 = limit.sigma[j] * limit.sigma[j];
            switch (tau[j]) {
                case 0: break;
                case 2: m *= s2; break;
                case 4: m *= 3.0 * s2 * s2; break;
                default: return 0.0;
            }
        }
        return m;
    };

    switch (kind) {
        case RhsKind::F1: {
            if (!V.local_model()) throw std::invalid_argument("F1 requires gradient_at_origin");
            const auto& g = V.local_model()->gradient_at_origin;
            std::vector<int> tau(dim, 0);
            double c = 0.0;
            for (int j = 0; j < dim; ++j) {
                tau.assign(dim, 0);
                tau[j] = 1;
                c += g[j] * moment(tau);  // zero by parity, kept for the formula
            }
            for (std::size_t q = 0; q < F.size(); ++q) {
                basis.node_point(q, x);
                double xg = 0.0;
                for (int j = 0; j < dim; ++j) xg += x[j] * g[j];
                F[q] = (c - xg) * Q[q];
            }
            break;
        }
        case RhsKind::F2: {
            if (!V.local_model()) throw std::invalid_argument("F2 requires hessian_at_origin");
            const auto& H = V.local_model()->hessian_at_origin;
            std::vector<int> tau(dim, 0);
            for (std::size_t q = 0; q < F.size(); ++q) {
                basis.node_point(q, x);
                double s = 0.0;
                for (int i = 0; i < dim; ++i) {
                    tau.assign(dim, 0);
                    tau[i] = 2;
                    s += 0.5 * H[i * dim + i] * (moment(tau) - x[i] * x[i]);
                    for (int j = i + 1; j < dim; ++j) s += H[i * dim + j] * (0.0 - x[i] * x[j]);
                }
                F[q] = s * Q[q];
            }
            break;
        }
        case RhsKind::F3:
        case RhsKind::F4: {
            if (!V.homogeneous_part())
                throw std::invalid_argument("F3/F4 require a homogeneous_part");
            const auto& h0 = V.homogeneous_part()->evaluator;
            std::vector<double> h0s(F.size()), q2(F.size());
            for (std::size_t q = 0; q < F.size(); ++q) {
                basis.node_point(q, x);
                h0s[q] = h0(x);
                q2[q] = h0s[q] * Q[q] * Q[q];
            }
            const double c = basis.integrate(q2);  // int h0 Q^2
            if (kind == RhsKind::F3) {
                for (std::size_t q = 0; q < F.size(); ++q) F[q] = (c - h0s[q]) * Q[q];
            } else {
                if (!phi3) throw std::invalid_argument("F4 requires phi3 coefficients");
                const std::vector<double> p3 = basis.reconstruct(*phi3);
                std::vector<double> t(F.size());
                for (std::size_t q = 0; q < F.size(); ++q) t[q] = h0s[q] * p3[q] * Q[q];
                const double c3 = basis.integrate(t);  // int h0 phi3 Q
                for (std::size_t q = 0; q < F.size(); ++q)
                    F[q] = c3 * Q[q] + (c - h0s[q]) * p3[q];
            }
            break;
        }
    }
    return F;
}

CorrectionSolve solve_correction(const HermiteBasis& basis, std::span<const double> F,
                                 double tail_threshold, bool relax_tail) {
    std::vector<double> F2(F.size());
    for (std::size_t q = 0; q < F.size(); ++q) F2[q] = F[q] * F[q];
    const double fnorm = std::sqrt(std::max(basis.integrate(F2), 0.0));

    CorrectionSolve out;
    out.phi = basis.project(F);
    const double c0 = out.phi.c[0];
    out.solvability = std::abs(c0) / (1.0 + fnorm);
    if (out.solvability > 1e-8)
        throw std::invalid_argument("solve_correction: solvability <F,Q>=0 violated (" +
                                    std::to_string(c0) + ")");
    const int dim = basis.dim();
    const int M = basis.max_degree();
    std::vector<int> n(dim);
    double tail = 0.0, total = 0.0;
    for (std::size_t f = 0; f < out.phi.c.size(); ++f) {
        std::size_t r = f;
        int nmax = 0;
        for (int j = dim - 1; j >= 0; --j) {
            n[j] = static_cast<int>(r % static_cast<std::size_t>(M + 1));
            nmax = std::max(nmax, n[j]);
            r /= static_cast<std::size_t>(M + 1);
        }
        if (f == 0) {
            out.phi.c[0] = 0.0;  // kernel exclusion: ker N = span{Q}
            continue;
        }
        out.phi.c[f] /= basis.eigenvalue(n);
        total += out.phi.c[f] * out.phi.c[f];
        if (nmax >= M - 1) tail += out.phi.c[f] * out.phi.c[f];
    }
    out.tail_rel = total > 0 ? std::sqrt(tail / total) : 0.0;
    if (out.tail_rel > tail_threshold) {
        if (!relax_tail)
            throw std::runtime_error("solve_correction: truncation tail " +
                                     std::to_string(out.tail_rel) + " above threshold " +
                                     std::to_string(tail_threshold) +
                                     "; raise max_degree or allow relaxed tails");
        out.tail_warned = true;
    }
    return out;
}

}  // namespace driftspec
