#pragma once
// Dense vector and CSR kernels used by the iterative eigensolvers.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled in a separate translation unit and selected at runtime
// when the CPU reports support. Setting STRIP_LOCALIZER_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace strip::kernels {

/// Read-only view of a row-major CSR matrix (Eigen RowMajor compatible).
struct CsrView {
    std::size_t rows = 0;
    const int* row_ptr = nullptr;  // rows + 1 entries
    const int* col_idx = nullptr;
    const double* values = nullptr;
};

struct KernelTable {
    std::string_view name;
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*sum_squares)(const double* x, std::size_t n);
    // y = A x
    void (*spmv)(const CsrView& a, const double* x, double* y);
};

const KernelTable& scalar_table();

/// Null when the AVX2 translation unit is absent or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// The table chosen once per process.
const KernelTable& active();

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);
double norm2(std::span<const double> x);
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);

}  // namespace strip::kernels
