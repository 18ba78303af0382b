#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftspec {

/// Quadratic drift potential m(x) = a0 + sum_i a_i x_i^2 with sum_i a_i = 0
/// and every a_i nonzero. The zero-sum constraint makes the drift field
/// grad(m) divergence free; construction rebalances the coefficients so the
/// stored sum is exactly zero.
class DriftSpec {
public:
    DriftSpec(double a0, std::vector<double> coeffs);

    double a0() const { return a0_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    int dim() const { return static_cast<int>(coeffs_.size()); }

    double eval_m(std::span<const double> x) const;
    std::vector<double> eval_grad_m(std::span<const double> x) const;
    /// true iff 2*sum(a_i) == 0, which is exact for a constructed spec.
    bool check_divergence_free() const;

    /// sum_i |a_i|; appears in the limit eigenvalue mu = 2*sum|a_i|.
    double sum_abs() const;
    /// max over the box of |m(x)| (exact; m is separable and per-axis monotone
    /// in x_i^2).
    double max_abs_m(std::span<const double> lo, std::span<const double> hi) const;

private:
    double a0_ = 0.0;
    std::vector<double> coeffs_;
};

struct LocalModel {
    double value_at_origin = 0.0;
    std::vector<double> gradient_at_origin;         // size N
    std::vector<double> hessian_at_origin;          // N*N row-major, symmetric
};

struct HomogeneousPart {
    std::function<double(std::span<const double>)> evaluator;
    double degree = 0.0;  // k0 > 0
};

/// Potential V >= 0 given as a closed-form evaluator plus optional analytic
/// data at the origin and an optional homogeneous leading part. (The Holder
/// exponent gamma of V plays no computational role here and is not recorded.)
class PotentialSpec {
public:
    PotentialSpec() = default;
    PotentialSpec(int dim, std::function<double(std::span<const double>)> evaluator,
                  std::optional<LocalModel> local = std::nullopt,
                  std::optional<HomogeneousPart> homogeneous = std::nullopt);

    double operator()(std::span<const double> x) const { return evaluator_(x); }
    int dim() const { return dim_; }
    const std::optional<LocalModel>& local_model() const { return local_; }
    const std::optional<HomogeneousPart>& homogeneous_part() const { return homogeneous_; }

    /// Central-difference local model with Richardson extrapolation, used when
    /// no analytic data was supplied. `step` defaults to 1e-4 * box_width.
    LocalModel fd_local_model(double box_width) const;

    // Preset factories (see README for the config spellings).
    static PotentialSpec zero(int dim);
    static PotentialSpec quadratic(int dim, std::vector<double> hessian_half);  // V = x.Hx
    static PotentialSpec shifted_quadratic(int dim, double c0, std::vector<double> x0,
                                           std::vector<double> hessian_half);
    /// V = max(c0 + g.x + x.Hx, 0); the clamp keeps V nonnegative away from
    /// the origin and is inactive near it when c0 > 0.
    static PotentialSpec linear_quadratic(int dim, double c0, std::vector<double> g,
                                          std::vector<double> hessian_half);
    /// Radial power s*|x|^k0.
    static PotentialSpec power_radial(int dim, double scale, double k0);
    /// Per-axis powers sum_j s_j |x_j|^k0.
    static PotentialSpec power_axes(int dim, std::vector<double> scales, double k0);
    /// Table-sampled potential with multilinear interpolation (escape hatch).
    static PotentialSpec from_table(const std::string& path);

private:
    int dim_ = 0;
    std::function<double(std::span<const double>)> evaluator_;
    std::optional<LocalModel> local_;
    std::optional<HomogeneousPart> homogeneous_;
};

/// Verifies h(t x) = t^k h(x) on sampled points, the literal homogeneity test.
bool check_homogeneity(const HomogeneousPart& h, std::span<const double> probe,
                       double tol = 1e-9);

/// Axis-aligned box [lo, hi] with the origin strictly inside.
struct BoxDomain {
    std::vector<double> lo, hi;

    BoxDomain() = default;
    BoxDomain(std::vector<double> lo_, std::vector<double> hi_);
    static BoxDomain cube(int dim, double half_width);
    int dim() const { return static_cast<int>(lo.size()); }
    double width(int axis) const { return hi[axis] - lo[axis]; }
};

/// Uniform tensor grid of interior points over a box; Dirichlet values on the
/// box boundary are implicitly zero.
class Grid {
public:
    Grid() = default;
    Grid(BoxDomain box, std::vector<int> points_per_axis);

    const BoxDomain& box() const { return box_; }
    int dim() const { return box_.dim(); }
    int points(int axis) const { return counts_[axis]; }
    const std::vector<int>& points_per_axis() const { return counts_; }
    double spacing(int axis) const { return spacing_[axis]; }
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return strides_[axis]; }
    /// Quadrature weight per interior point (midpoint rule): prod_j h_j.
    double cell_volume() const;

    double coord(int axis, int idx) const {
        return box_.lo[axis] + spacing_[axis] * (idx + 1);
    }
    void decode(std::size_t flat, std::span<int> multi) const;
    std::size_t encode(std::span<const int> multi) const;
    void point(std::size_t flat, std::span<double> x) const;

private:
    BoxDomain box_;
    std::vector<int> counts_;
    std::vector<double> spacing_;
    std::vector<std::size_t> strides_;  // row-major, last axis fastest
    std::size_t size_ = 0;
};

enum class FrameKind { Physical, Rescaled };

/// Coordinate frame of a sampled field: physical x, or the zoomed frame
/// y = alpha^(1/2) x used for large drift strengths.
struct Frame {
    FrameKind kind = FrameKind::Physical;
    double alpha = 0.0;  // meaningful for Rescaled

    static Frame physical() { return {FrameKind::Physical, 0.0}; }
    static Frame rescaled(double alpha) { return {FrameKind::Rescaled, alpha}; }
};

/// Real field sampled on the interior of a grid, stored in lexicographic
/// (row-major) order.
struct GridField {
    Grid grid;
    Frame frame;
    std::vector<double> values;

    GridField() = default;
    GridField(Grid g, Frame f) : grid(std::move(g)), frame(f), values(grid.size(), 0.0) {}
    double max_abs() const;
};

}  // namespace driftspec
