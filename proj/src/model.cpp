#include "driftspec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace driftspec {

DriftSpec::DriftSpec(double a0, std::vector<double> coeffs) : a0_(a0), coeffs_(std::move(coeffs)) {
    const int n = static_cast<int>(coeffs_.size());
    if (n < 2) throw std::invalid_argument("drift.coeffs: need N >= 2 coefficients");
    double sum = 0.0;
    for (double c : coeffs_) sum += c;
    if (std::abs(sum) > 1e-12)
        throw std::invalid_argument("drift.coeffs: sum must vanish (|sum| <= 1e-12), got " +
                                    std::to_string(sum));
    // Rebalance so the stored sum is exactly zero.
    const double shift = sum / n;
    for (double& c : coeffs_) c -= shift;
    double rest = 0.0;
    for (int i = 0; i + 1 < n; ++i) rest += coeffs_[i];
    coeffs_[n - 1] = -rest;
    for (double c : coeffs_)
        if (c == 0.0) throw std::invalid_argument("drift.coeffs: every a_i must be nonzero");
}

double DriftSpec::eval_m(std::span<const double> x) const {
    double s = a0_;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) s += coeffs_[i] * x[i] * x[i];
    return s;
}

std::vector<double> DriftSpec::eval_grad_m(std::span<const double> x) const {
    std::vector<double> g(coeffs_.size());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) g[i] = 2.0 * coeffs_[i] * x[i];
    return g;
}

bool DriftSpec::check_divergence_free() const {
    double s = 0.0;
    for (double c : coeffs_) s += c;
    return 2.0 * s == 0.0;
}

double DriftSpec::sum_abs() const {
    double s = 0.0;
    for (double c : coeffs_) s += std::abs(c);
    return s;
}

double DriftSpec::max_abs_m(std::span<const double> lo, std::span<const double> hi) const {
    double mmax = a0_, mmin = a0_;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        const double r = std::max(lo[i] * lo[i], hi[i] * hi[i]);
        if (coeffs_[i] > 0)
            mmax += coeffs_[i] * r;
        else
            mmin += coeffs_[i] * r;
    }
    return std::max(std::abs(mmax), std::abs(mmin));
}

PotentialSpec::PotentialSpec(int dim, std::function<double(std::span<const double>)> evaluator,
                             std::optional<LocalModel> local,
                             std::optional<HomogeneousPart> homogeneous)
    : dim_(dim), evaluator_(std::move(evaluator)), local_(std::move(local)),
      homogeneous_(std::move(homogeneous)) {
    if (local_) {
        const auto& H = local_->hessian_at_origin;
        if (static_cast<int>(local_->gradient_at_origin.size()) != dim_ ||
            static_cast<int>(H.size()) != dim_ * dim_)
            throw std::invalid_argument("potential: local model dimensions do not match");
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < i; ++j)
                if (std::abs(H[i * dim_ + j] - H[j * dim_ + i]) > 1e-12)
                    throw std::invalid_argument("potential.hessian: not symmetric");
    }
}

LocalModel PotentialSpec::fd_local_model(double box_width) const {
    const double h0 = 1e-4 * box_width;
    LocalModel lm;
    std::vector<double> x(dim_, 0.0);
    lm.value_at_origin = evaluator_(x);
    lm.gradient_at_origin.assign(dim_, 0.0);
    lm.hessian_at_origin.assign(static_cast<std::size_t>(dim_) * dim_, 0.0);

    auto at = [&](std::span<const double> p) { return evaluator_(p); };
    // Richardson-extrapolated central differences: D(h), D(h/2) -> (4 D(h/2) - D(h)) / 3.
    for (int i = 0; i < dim_; ++i) {
        auto d1 = [&](double h) {
            x[i] = h;
            const double fp = at(x);
            x[i] = -h;
            const double fm = at(x);
            x[i] = 0.0;
            return (fp - fm) / (2 * h);
        };
        lm.gradient_at_origin[i] = (4 * d1(h0 / 2) - d1(h0)) / 3;
        auto d2 = [&](double h) {
            x[i] = h;
            const double fp = at(x);
            x[i] = -h;
            const double fm = at(x);
            x[i] = 0.0;
            return (fp - 2 * lm.value_at_origin + fm) / (h * h);
        };
        lm.hessian_at_origin[i * dim_ + i] = (4 * d2(h0 / 2) - d2(h0)) / 3;
        for (int j = 0; j < i; ++j) {
            auto dij = [&](double h) {
                double s = 0.0;
                for (int si : {+1, -1})
                    for (int sj : {+1, -1}) {
                        x[i] = si * h;
                        x[j] = sj * h;
                        s += si * sj * at(x);
                    }
                x[i] = x[j] = 0.0;
                return s / (4 * h * h);
            };
            const double v = (4 * dij(h0 / 2) - dij(h0)) / 3;
            lm.hessian_at_origin[i * dim_ + j] = v;
            lm.hessian_at_origin[j * dim_ + i] = v;
        }
    }
    return lm;
}

namespace {

std::vector<double> zeros(int n) { return std::vector<double>(n, 0.0); }

double quad_form(std::span<const double> H, std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += H[i * n + j] * x[i] * x[j];
    return s;
}

}  // namespace

PotentialSpec PotentialSpec::zero(int dim) {
    LocalModel lm{0.0, zeros(dim), zeros(dim * dim)};
    return PotentialSpec(dim, [](std::span<const double>) { return 0.0; }, lm);
}

PotentialSpec PotentialSpec::quadratic(int dim, std::vector<double> H) {
    if (static_cast<int>(H.size()) != dim * dim)
        throw std::invalid_argument("potential.hessian: expected N*N entries");
    LocalModel lm{0.0, zeros(dim), {}};
    lm.hessian_at_origin.resize(H.size());
    for (std::size_t k = 0; k < H.size(); ++k) lm.hessian_at_origin[k] = 2.0 * H[k];
    auto ev = [H, dim](std::span<const double> x) { return quad_form(H, x); };
    HomogeneousPart hp{ev, 2.0};
    return PotentialSpec(dim, ev, lm, hp);
}

PotentialSpec PotentialSpec::shifted_quadratic(int dim, double c0, std::vector<double> x0,
                                               std::vector<double> H) {
    if (static_cast<int>(H.size()) != dim * dim || static_cast<int>(x0.size()) != dim)
        throw std::invalid_argument("potential: shifted-quadratic parameter sizes");
    auto ev = [H, x0, c0, dim](std::span<const double> x) {
        std::vector<double> d(dim);
        for (int i = 0; i < dim; ++i) d[i] = x[i] - x0[i];
        return c0 + quad_form(H, d);
    };
    LocalModel lm{c0 + quad_form(H, x0), zeros(dim), {}};
    for (int i = 0; i < dim; ++i) {
        double g = 0.0;
        for (int j = 0; j < dim; ++j) g += (H[i * dim + j] + H[j * dim + i]) * x0[j];
        lm.gradient_at_origin[i] = -g;
    }
    lm.hessian_at_origin.resize(H.size());
    for (std::size_t k = 0; k < H.size(); ++k) lm.hessian_at_origin[k] = 2.0 * H[k];
    std::optional<HomogeneousPart> hp;
    bool at_origin = c0 == 0.0 && std::all_of(x0.begin(), x0.end(), [](double v) { return v == 0.0; });
    if (at_origin) hp = HomogeneousPart{[H](std::span<const double> x) { return quad_form(H, x); }, 2.0};
    return PotentialSpec(dim, ev, lm, hp);
}

PotentialSpec PotentialSpec::linear_quadratic(int dim, double c0, std::vector<double> g,
                                              std::vector<double> H) {
    if (static_cast<int>(H.size()) != dim * dim || static_cast<int>(g.size()) != dim)
        throw std::invalid_argument("potential: linear-quadratic parameter sizes");
    if (c0 < 0) throw std::invalid_argument("potential.c0: must be >= 0 so V(0) >= 0");
    auto ev = [c0, g, H, dim](std::span<const double> x) {
        double s = c0 + quad_form(H, x);
        for (int i = 0; i < dim; ++i) s += g[i] * x[i];
        return std::max(s, 0.0);
    };
    LocalModel lm{c0, g, {}};
    lm.hessian_at_origin.resize(H.size());
    for (std::size_t k = 0; k < H.size(); ++k) lm.hessian_at_origin[k] = 2.0 * H[k];
    return PotentialSpec(dim, ev, lm);
}

PotentialSpec PotentialSpec::power_radial(int dim, double scale, double k0) {
    if (k0 <= 0 || scale < 0) throw std::invalid_argument("potential.power: need k0 > 0, scale >= 0");
    auto ev = [scale, k0](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return scale * std::pow(r2, k0 / 2.0);
    };
    std::optional<LocalModel> lm;
    if (k0 == 2.0) {
        lm = LocalModel{0.0, zeros(dim), zeros(dim * dim)};
        for (int i = 0; i < dim; ++i) lm->hessian_at_origin[i * dim + i] = 2.0 * scale;
    } else if (k0 > 2.0) {
        lm = LocalModel{0.0, zeros(dim), zeros(dim * dim)};
    }
    return PotentialSpec(dim, ev, lm, HomogeneousPart{ev, k0});
}

PotentialSpec PotentialSpec::power_axes(int dim, std::vector<double> scales, double k0) {
    if (static_cast<int>(scales.size()) != dim)
        throw std::invalid_argument("potential.power.scales: expected N entries");
    if (k0 <= 0) throw std::invalid_argument("potential.power: need k0 > 0");
    auto ev = [scales, k0, dim](std::span<const double> x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += scales[i] * std::pow(std::abs(x[i]), k0);
        return s;
    };
    std::optional<LocalModel> lm;
    if (k0 == 2.0) {
        lm = LocalModel{0.0, zeros(dim), zeros(dim * dim)};
        for (int i = 0; i < dim; ++i) lm->hessian_at_origin[i * dim + i] = 2.0 * scales[i];
    } else if (k0 > 2.0) {
        lm = LocalModel{0.0, zeros(dim), zeros(dim * dim)};
    }
    return PotentialSpec(dim, ev, lm, HomogeneousPart{ev, k0});
}

PotentialSpec PotentialSpec::from_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("potential.table: cannot open " + path);
    int dim = 0;
    in >> dim;
    if (dim < 1 || dim > 3) throw std::invalid_argument("potential.table: dimension out of range");
    std::vector<double> lo(dim), hi(dim);
    std::vector<int> counts(dim);
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) {
        in >> lo[i] >> hi[i] >> counts[i];
        if (counts[i] < 2 || hi[i] <= lo[i])
            throw std::invalid_argument("potential.table: bad axis header");
        total *= static_cast<std::size_t>(counts[i]);
    }
    auto data = std::make_shared<std::vector<double>>(total);
    for (std::size_t k = 0; k < total; ++k)
        if (!(in >> (*data)[k])) throw std::invalid_argument("potential.table: short value list");

    auto ev = [=](std::span<const double> x) {
        // multilinear interpolation, clamped to the table box
        std::vector<int> base(dim);
        std::vector<double> frac(dim);
        for (int i = 0; i < dim; ++i) {
            const double h = (hi[i] - lo[i]) / (counts[i] - 1);
            double t = (std::clamp(x[i], lo[i], hi[i]) - lo[i]) / h;
            int b = std::min(static_cast<int>(t), counts[i] - 2);
            base[i] = b;
            frac[i] = t - b;
        }
        double acc = 0.0;
        const int corners = 1 << dim;
        for (int c = 0; c < corners; ++c) {
            double wgt = 1.0;
            std::size_t idx = 0;
            for (int i = 0; i < dim; ++i) {
                const int bit = (c >> i) & 1;
                wgt *= bit ? frac[i] : 1.0 - frac[i];
                idx = idx * static_cast<std::size_t>(counts[i]) +
                      static_cast<std::size_t>(base[i] + bit);
            }
            acc += wgt * (*data)[idx];
        }
        return acc;
    };
    return PotentialSpec(dim, ev);
}

bool check_homogeneity(const HomogeneousPart& h, std::span<const double> probe, double tol) {
    const int dim = static_cast<int>(probe.size());
    std::vector<double> tx(dim);
    const double hx = h.evaluator(probe);
    for (double t : {0.5, 2.0, 3.0}) {
        for (int i = 0; i < dim; ++i) tx[i] = t * probe[i];
        const double lhs = h.evaluator(tx);
        const double rhs = std::pow(t, h.degree) * hx;
        if (std::abs(lhs - rhs) > tol * (1.0 + std::abs(rhs))) return false;
    }
    return true;
}

BoxDomain::BoxDomain(std::vector<double> lo_, std::vector<double> hi_)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || lo.empty())
        throw std::invalid_argument("box: lo/hi size mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < 0.0 && 0.0 < hi[i]))
            throw std::invalid_argument("box: origin must be interior (lo_j < 0 < hi_j)");
}

BoxDomain BoxDomain::cube(int dim, double half_width) {
    return BoxDomain(std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width));
}

Grid::Grid(BoxDomain box, std::vector<int> points_per_axis)
    : box_(std::move(box)), counts_(std::move(points_per_axis)) {
    if (static_cast<int>(counts_.size()) != box_.dim())
        throw std::invalid_argument("grid: points_per_axis size mismatch");
    const int n = box_.dim();
    spacing_.resize(n);
    strides_.assign(n, 1);
    size_ = 1;
    for (int i = 0; i < n; ++i) {
        if (counts_[i] < 3) throw std::invalid_argument("grid: need at least 3 points per axis");
        spacing_[i] = box_.width(i) / (counts_[i] + 1);
        size_ *= static_cast<std::size_t>(counts_[i]);
    }
    for (int i = n - 2; i >= 0; --i)
        strides_[i] = strides_[i + 1] * static_cast<std::size_t>(counts_[i + 1]);
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (double h : spacing_) v *= h;
    return v;
}

void Grid::decode(std::size_t flat, std::span<int> multi) const {
    for (int i = 0; i < dim(); ++i) {
        multi[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
}

std::size_t Grid::encode(std::span<const int> multi) const {
    std::size_t f = 0;
    for (int i = 0; i < dim(); ++i) f += static_cast<std::size_t>(multi[i]) * strides_[i];
    return f;
}

void Grid::point(std::size_t flat, std::span<double> x) const {
    for (int i = 0; i < dim(); ++i) {
        const std::size_t idx = flat / strides_[i];
        flat %= strides_[i];
        x[i] = coord(i, static_cast<int>(idx));
    }
}

double GridField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace driftspec
