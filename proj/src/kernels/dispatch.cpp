#include <cassert>
#include <cmath>
#include <cstdlib>
#include <string_view>

#include "strip/kernels.hpp"

namespace strip::kernels {

namespace detail {
const KernelTable* avx2_table_impl();
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select() {
    if (const char* env = std::getenv("STRIP_LOCALIZER_SIMD"); env && std::string_view(env) == "scalar")
        return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table_impl() : nullptr;
    return table;
}

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    return active().dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

double norm2(std::span<const double> x) { return std::sqrt(active().sum_squares(x.data(), x.size())); }

void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) {
    assert(y.size() == a.rows);
    (void)x;
    active().spmv(a, x.data(), y.data());
}

}  // namespace strip::kernels
