#include "driftspec/kernels.hpp"

#include <cmath>

namespace driftspec::kernels {

namespace {
constexpr std::size_t kChunks = 256;
constexpr std::size_t kSerialCutoff = 2048;
}  // namespace

double dot_serial(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void spmv_serial(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
            s += A.val[k] * x[static_cast<std::size_t>(A.col[k])];
        y[r] = s;
    }
}

void axpy_serial(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale_serial(double s, std::span<double> x) {
    for (double& v : x) v *= s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n < kSerialCutoff) return dot_serial(a, b);
    double partial[kChunks];
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(kChunks); ++c) {
        const std::size_t lo = n * static_cast<std::size_t>(c) / kChunks;
        const std::size_t hi = n * (static_cast<std::size_t>(c) + 1) / kChunks;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[c] = s;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < kChunks; ++c) s += partial[c];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(A.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
            s += A.val[k] * x[static_cast<std::size_t>(A.col[k])];
        y[r] = s;
    }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(double s, std::span<double> x) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) x[i] *= s;
}

void copy(std::span<const double> x, std::span<double> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i];
}

void fill(std::span<double> x, double v) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) x[i] = v;
}

void hadamard(std::span<const double> x, std::span<const double> d, std::span<double> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] * d[i];
}

}  // namespace driftspec::kernels
