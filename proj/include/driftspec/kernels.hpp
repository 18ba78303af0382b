#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Data-parallel vector and sparse-matrix kernels, plus serial reference
// implementations kept for testing and benchmarking.
//
// Reductions use a fixed chunk decomposition combined in index order, so a
// result is bitwise identical no matter how many OpenMP threads execute it
// (including when a kernel runs inside an outer parallel region).

namespace driftspec {

struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // size rows+1
    std::vector<std::int32_t> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }
};

namespace kernels {

// ---- serial reference implementations ----
double dot_serial(std::span<const double> a, std::span<const double> b);
void spmv_serial(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
void axpy_serial(double alpha, std::span<const double> x, std::span<double> y);
void scale_serial(double s, std::span<double> x);

// ---- OpenMP kernels ----
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
void scale(double s, std::span<double> x);
void copy(std::span<const double> x, std::span<double> y);
void fill(std::span<double> x, double v);
// y = x .* d (elementwise)
void hadamard(std::span<const double> x, std::span<const double> d, std::span<double> y);

}  // namespace kernels
}  // namespace driftspec
