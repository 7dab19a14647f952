#include "strip/kernels.hpp"

namespace strip::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_squares_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

void spmv_scalar(const CsrView& a, const double* x, double* y) {
    for (std::size_t r = 0; r < a.rows; ++r) {
        double s = 0.0;
        for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) s += a.values[p] * x[a.col_idx[p]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", dot_scalar, axpy_scalar, scale_scalar,
                                   sum_squares_scalar, spmv_scalar};
    return table;
}

}  // namespace strip::kernels
