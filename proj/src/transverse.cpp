#include "strip/transverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "strip/errors.hpp"

namespace strip {
namespace {

// Symmetric tridiagonal form W^{-1/2} K W^{-1/2} over the retained nodes.
struct Tridiagonal {
    std::vector<int> nodes;     // grid index of each unknown
    std::vector<double> diag;
    std::vector<double> off;    // off[i] couples i and i+1
    std::vector<double> weights;  // full grid, size m+1
};

Tridiagonal discretize(const TransverseProblem& p) {
    if (!(p.d > 0.0)) throw ConfigError("transverse width d must be positive");
    if (p.m < 8) throw ConfigError("transverse divisions m must be >= 8");
    const int m = p.m;
    const double h = p.d / m;
    Tridiagonal t;
    t.weights.assign(static_cast<std::size_t>(m + 1), h);
    t.weights.front() = t.weights.back() = 0.5 * h;

    const bool drop_first = p.bc_bottom == BoundaryKind::Dirichlet;
    const bool drop_last = p.bc_top == BoundaryKind::Dirichlet;
    for (int j = drop_first ? 1 : 0; j <= (drop_last ? m - 1 : m); ++j) t.nodes.push_back(j);

    const std::size_t n = t.nodes.size();
    t.diag.assign(n, 0.0);
    t.off.assign(n > 0 ? n - 1 : 0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const int j = t.nodes[i];
        // One edge to each existing neighbour; edges to eliminated Dirichlet
        // nodes contribute to the diagonal only.
        double k = 0.0;
        if (j > 0) k += 1.0 / h;
        if (j < m) k += 1.0 / h;
        const double y = j * h;
        const double v = p.V0 ? p.V0(y) : 0.0;
        if (!std::isfinite(v)) throw ConfigError("transverse potential is not finite");
        const double w = t.weights[static_cast<std::size_t>(j)];
        t.diag[i] = k / w + v;
        if (i + 1 < n) t.off[i] = -1.0 / (h * std::sqrt(w * t.weights[static_cast<std::size_t>(j + 1)]));
    }
    return t;
}

// Number of eigenvalues strictly below x (Sturm count via LDL^T pivots).
std::size_t count_below(const Tridiagonal& t, double x) {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        const double b2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
        q = (t.diag[i] - x) - (i == 0 ? 0.0 : b2 / q);
        if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(t.diag[i]) + std::abs(x) + 1.0);
        if (q < 0.0) ++count;
    }
    return count;
}

double kth_eigenvalue(const Tridiagonal& t, std::size_t k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const std::size_t n = t.diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.off[i - 1]);
        if (i + 1 < n) r += std::abs(t.off[i]);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(t, mid) > k) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Solves (T - sigma) z = rhs with the Thomas algorithm; sigma below the
// spectrum keeps every pivot positive.
std::vector<double> shifted_solve(const Tridiagonal& t, double sigma, const std::vector<double>& rhs) {
    const std::size_t n = t.diag.size();
    std::vector<double> c(n, 0.0), z(n, 0.0);
    double piv = t.diag[0] - sigma;
    if (piv == 0.0) throw NumericalError("transverse inverse iteration hit a zero pivot");
    c[0] = n > 1 ? t.off[0] / piv : 0.0;
    z[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = (t.diag[i] - sigma) - t.off[i - 1] * c[i - 1];
        if (piv == 0.0) throw NumericalError("transverse inverse iteration hit a zero pivot");
        c[i] = i + 1 < n ? t.off[i] / piv : 0.0;
        z[i] = (rhs[i] - t.off[i - 1] * z[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) z[i] -= c[i] * z[i + 1];
    return z;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> multiply(const Tridiagonal& t, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = t.diag[i] * v[i];
        if (i > 0) s += t.off[i - 1] * v[i - 1];
        if (i + 1 < n) s += t.off[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

}  // namespace

TransverseMode solve_transverse(const TransverseProblem& problem) {
    const Tridiagonal t = discretize(problem);
    const std::size_t n = t.diag.size();
    if (n == 0) throw ConfigError("transverse problem has no unknowns");

    const double lambda_bis = kth_eigenvalue(t, 0);
    const double lambda_next = n > 1 ? kth_eigenvalue(t, 1) : lambda_bis + 1.0;
    const double gap = std::max(lambda_next - lambda_bis, 1e-300);
    const double sigma = lambda_bis - std::min(1e-3 * gap, 1e-8 * (1.0 + std::abs(lambda_bis)));

    // Rounding puts a floor of about eps |T| under the residual.
    double tnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        tnorm = std::max(tnorm, std::abs(t.diag[i]) + (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.off[i]) : 0.0));
    std::vector<double> y(n, 1.0);
    double lambda = lambda_bis;
    double residual = std::numeric_limits<double>::infinity();
    constexpr int kMaxIterations = 50;
    int it = 0;
    for (; it < kMaxIterations; ++it) {
        y = shifted_solve(t, sigma, y);
        const double nrm = norm(y);
        for (double& v : y) v /= nrm;
        const std::vector<double> ty = multiply(t, y);
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += y[i] * ty[i];
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += (ty[i] - rq * y[i]) * (ty[i] - rq * y[i]);
        lambda = rq;
        residual = std::sqrt(r2);
        if (residual <= std::max(1e-11 * (1.0 + std::abs(lambda)), 1e-14 * tnorm)) break;
    }
    if (it == kMaxIterations) throw NumericalError("transverse eigensolver did not converge");

    TransverseMode mode;
    mode.lambda0 = lambda;
    mode.residual = residual;
    mode.d = problem.d;
    mode.m = problem.m;
    mode.weights = t.weights;
    mode.psi0.assign(static_cast<std::size_t>(problem.m + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(t.nodes[i]);
        mode.psi0[j] = y[i] / std::sqrt(t.weights[j]);
    }
    double norm2 = 0.0;
    for (std::size_t j = 0; j < mode.psi0.size(); ++j) norm2 += t.weights[j] * mode.psi0[j] * mode.psi0[j];
    const double scale = 1.0 / std::sqrt(norm2);
    std::size_t jmax = 0;
    for (std::size_t j = 0; j < mode.psi0.size(); ++j) {
        mode.psi0[j] *= scale;
        if (std::abs(mode.psi0[j]) > std::abs(mode.psi0[jmax])) jmax = j;
    }
    if (mode.psi0[jmax] < 0.0)
        for (double& v : mode.psi0) v = -v;
    return mode;
}

std::vector<double> transverse_eigenvalues(const TransverseProblem& problem, int count) {
    const Tridiagonal t = discretize(problem);
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(count, 0)), t.diag.size());
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(kth_eigenvalue(t, k));
    return out;
}

double psi0_at(const TransverseMode& mode, double y) {
    const double tol = 1e-12 * mode.d;
    if (!(y >= -tol && y <= mode.d + tol)) throw std::out_of_range("psi0_at: y outside [0, d]");
    const double s = std::clamp(y / mode.h(), 0.0, static_cast<double>(mode.m));
    const int j = std::min(static_cast<int>(std::floor(s)), mode.m - 1);
    const double f = s - j;
    return (1.0 - f) * mode.psi0[static_cast<std::size_t>(j)] + f * mode.psi0[static_cast<std::size_t>(j + 1)];
}

}  // namespace strip
