#include "strip/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "strip/errors.hpp"
#include "strip/kernels.hpp"
#include "strip/rng.hpp"

namespace strip {
namespace {

using Vec = Eigen::VectorXd;
using Op = std::function<void(const Vec&, Vec&)>;

std::span<const double> cspan(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vec start_vector(Eigen::Index n, std::uint64_t salt) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = 1.0 + 0.5 * (counter_uniform(0x5eed5eedULL, salt, static_cast<std::uint64_t>(i)) - 0.5);
    return v / kernels::norm2(cspan(v));
}

// Two passes of classical Gram-Schmidt against the columns of basis.
void orthogonalize(const std::vector<Vec>& basis, Vec& w) {
    for (int pass = 0; pass < 2; ++pass)
        for (const Vec& q : basis) kernels::axpy(-kernels::dot(cspan(q), cspan(w)), cspan(q), mspan(w));
}

Vec spmv(const SparseMatrix& S, const Vec& x) {
    Vec y(S.rows());
    const kernels::CsrView view{static_cast<std::size_t>(S.rows()), S.outerIndexPtr(), S.innerIndexPtr(),
                                S.valuePtr()};
    kernels::spmv(view, cspan(x), mspan(y));
    return y;
}

struct Ritz {
    std::vector<double> theta;  // descending
    std::vector<Vec> vectors;
};

// Lanczos with full reorthogonalization; returns the `want` largest Ritz pairs.
Ritz lanczos(const Op& op, const Vec& v0, int steps, int want, const std::vector<Vec>& deflate = {}) {
    const Eigen::Index n = v0.size();
    std::vector<Vec> V;
    V.reserve(static_cast<std::size_t>(steps));
    std::vector<double> alpha, beta;
    Vec v = v0;
    orthogonalize(deflate, v);
    v /= kernels::norm2(cspan(v));
    Vec w(n);
    for (int j = 0; j < steps; ++j) {
        V.push_back(v);
        op(v, w);
        orthogonalize(deflate, w);
        const double a = kernels::dot(cspan(v), cspan(w));
        alpha.push_back(a);
        orthogonalize(V, w);
        const double b = kernels::norm2(cspan(w));
        if (j + 1 == steps || b <= 1e-14 * std::max(std::abs(a), 1e-300)) break;
        beta.push_back(b);
        v = w / b;
    }
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Ritz out;
    const int take = std::min(want, m);
    for (int r = 0; r < take; ++r) {
        const int col = m - 1 - r;
        out.theta.push_back(es.eigenvalues()[col]);
        Vec x = Vec::Zero(n);
        for (int i = 0; i < m; ++i) x += es.eigenvectors()(i, col) * V[static_cast<std::size_t>(i)];
        x /= x.norm();
        out.vectors.push_back(std::move(x));
    }
    return out;
}

// Residuals cannot drop below roughly eps_mach |A|; fine grids push that
// floor above a purely eigenvalue-relative tolerance.
template <class Sparse>
double residual_floor(const Sparse& A) {
    Vec rows = Vec::Zero(A.rows());
    for (Eigen::Index j = 0; j < A.outerSize(); ++j)
        for (typename Sparse::InnerIterator it(A, j); it; ++it) rows[it.row()] += std::abs(it.value());
    return 1e-14 * rows.maxCoeff();
}

GeneralSparse shifted(const SparseMatrix& S, double sigma) {
    GeneralSparse A(S);
    GeneralSparse I(A.rows(), A.cols());
    I.setIdentity();
    A = A - sigma * I;
    A.makeCompressed();
    return A;
}

bool positive_definite(const SparseMatrix& S, double sigma) {
    Eigen::SimplicialLLT<GeneralSparse> llt(shifted(S, sigma));
    return llt.info() == Eigen::Success;
}

double gershgorin_lower(const SparseMatrix& S) {
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < S.outerSize(); ++r) {
        double diag = 0.0, off = 0.0;
        for (SparseMatrix::InnerIterator it(S, r); it; ++it) {
            if (it.col() == r) diag += it.value();
            else off += std::abs(it.value());
        }
        lo = std::min(lo, diag - off);
    }
    return lo;
}

EigenResult dense_symmetric(const SparseMatrix& S, int k, bool want_vectors) {
    const Eigen::MatrixXd A = Eigen::MatrixXd(GeneralSparse(S));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    EigenResult r;
    for (int i = 0; i < k; ++i) {
        r.eigenvalues.push_back(es.eigenvalues()[i]);
        const Vec v = es.eigenvectors().col(i);
        r.residuals.push_back((A * v - es.eigenvalues()[i] * v).norm());
        if (want_vectors) r.vectors.push_back(v);
    }
    return r;
}

}  // namespace

int count_below(const SparseMatrix& S, double sigma) {
    Eigen::SimplicialLDLT<GeneralSparse> ldlt(shifted(S, sigma));
    if (ldlt.info() != Eigen::Success) throw NumericalError("LDL^T factorization failed at the requested shift");
    const Vec& D = ldlt.vectorD();
    int count = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
        if (D[i] == 0.0) throw NumericalError("shift coincides with an eigenvalue");
        count += D[i] < 0.0;
    }
    return count;
}

EigenResult smallest_eigs_symmetric(const SparseMatrix& S, const EigenOptions& options) {
    const Eigen::Index n = S.rows();
    if (n == 0) throw ConfigError("empty operator");
    if (options.k < 1 || options.k > 10) throw ConfigError("smallest_eigs: k must lie in [1, 10]");
    const int k = static_cast<int>(std::min<Eigen::Index>(options.k, n));
    if (n <= 80) return dense_symmetric(S, k, options.want_vectors);

    EigenResult result;
    // Shift certified below the spectrum.
    double sigma;
    const double gersh = gershgorin_lower(S);
    if (options.shift_hint) {
        sigma = *options.shift_hint;
        double step = 1e-3 * (1.0 + std::abs(sigma));
        while (!positive_definite(S, sigma)) {
            ++result.factorizations;
            sigma -= step;
            step *= 4.0;
            if (sigma < gersh) {
                sigma = gersh - 1e-8 * (1.0 + std::abs(gersh));
                break;
            }
        }
    } else {
        sigma = gersh - 1e-8 * (1.0 + std::abs(gersh));
    }

    const int steps = static_cast<int>(std::min<Eigen::Index>(n, std::max(3 * k + 30, 40)));
    const double floor = residual_floor(S);
    Vec v0 = start_vector(n, 1);
    for (int restart = 0; restart < options.max_restarts; ++restart) {
        Eigen::SimplicialLDLT<GeneralSparse> solver(shifted(S, sigma));
        ++result.factorizations;
        if (solver.info() != Eigen::Success) throw NumericalError("factorization of shifted operator failed");
        const Op op = [&](const Vec& x, Vec& y) { y = solver.solve(x); };
        const Ritz ritz = lanczos(op, v0, steps, k + 1);
        ++result.iterations;

        std::vector<double> lam, res;
        for (int i = 0; i < std::min<int>(k, static_cast<int>(ritz.vectors.size())); ++i) {
            const Vec& x = ritz.vectors[static_cast<std::size_t>(i)];
            const Vec sx = spmv(S, x);
            const double rq = x.dot(sx);
            lam.push_back(rq);
            res.push_back((sx - rq * x).norm());
        }
        if (static_cast<int>(lam.size()) < k) throw NumericalError("Krylov space exhausted before k eigenpairs");
        bool converged = true;
        for (int i = 0; i < k; ++i)
            converged = converged && res[static_cast<std::size_t>(i)] <= std::max(options.tol * (1.0 + std::abs(lam[static_cast<std::size_t>(i)])), floor);

        if (converged) {
            std::vector<int> order(static_cast<std::size_t>(k));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[static_cast<std::size_t>(a)] < lam[static_cast<std::size_t>(b)]; });
            // Every eigenvalue below the largest accepted one must have been found.
            const double top = lam[static_cast<std::size_t>(order.back())];
            const double probe = top + 2.0 * res[static_cast<std::size_t>(order.back())] + 1e-9 * (1.0 + std::abs(top));
            bool complete = true;
            try {
                complete = count_below(S, probe) <= k;
                ++result.factorizations;
            } catch (const NumericalError&) {
            }
            if (!complete) {
                v0 = start_vector(n, static_cast<std::uint64_t>(restart) + 7);
                continue;
            }
            for (int i : order) {
                result.eigenvalues.push_back(lam[static_cast<std::size_t>(i)]);
                result.residuals.push_back(res[static_cast<std::size_t>(i)]);
                if (options.want_vectors) result.vectors.push_back(ritz.vectors[static_cast<std::size_t>(i)]);
            }
            return result;
        }

        // Move the shift toward the bottom of the spectrum, keeping it certified.
        const double lam1 = *std::min_element(lam.begin(), lam.end());
        double next_gap = lam1 - sigma;
        if (ritz.theta.size() > static_cast<std::size_t>(k)) next_gap = sigma + 1.0 / ritz.theta[static_cast<std::size_t>(k)] - lam1;
        double candidate = lam1 - std::max(2.0 * res[0], 0.05 * std::max(next_gap, 0.0));
        while (candidate > sigma && !positive_definite(S, candidate)) {
            ++result.factorizations;
            candidate = 0.5 * (sigma + candidate);
            if (candidate - sigma < 1e-3 * (lam1 - sigma)) candidate = sigma;
        }
        if (candidate > sigma) sigma = candidate;
        v0 = Vec::Zero(n);
        for (int i = 0; i < k; ++i) v0 += ritz.vectors[static_cast<std::size_t>(i)];
        v0 += 1e-3 * start_vector(n, static_cast<std::uint64_t>(restart) + 2);
    }
    throw NumericalError("smallest_eigs: Lanczos did not converge");
}

EigenResult smallest_eigs(const DiscreteOperator& H, int k, double tol) {
    EigenOptions o;
    o.k = k;
    o.tol = tol;
    return smallest_eigs_symmetric(H.matrix, o);
}

EigenResult smallest_eigs_general(const GeneralSparse& A, double shift, const EigenOptions& options) {
    const Eigen::Index n = A.rows();
    if (n == 0) throw ConfigError("empty operator");
    const int k = static_cast<int>(std::min<Eigen::Index>(options.k, n));
    GeneralSparse B = A;
    {
        GeneralSparse I(n, n);
        I.setIdentity();
        B = B - shift * I;
        B.makeCompressed();
    }
    Eigen::SparseLU<GeneralSparse> lu;
    lu.analyzePattern(B);
    lu.factorize(B);
    if (lu.info() != Eigen::Success) throw NumericalError("sparse LU of shifted operator failed");
    const double floor = residual_floor(A);

    EigenResult result;
    result.factorizations = 1;
    const int steps = static_cast<int>(std::min<Eigen::Index>(n, std::max(3 * k + 30, 40)));
    Vec v = start_vector(n, 3);
    for (int restart = 0; restart < options.max_restarts; ++restart) {
        ++result.iterations;
        std::vector<Vec> V;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(steps + 1, steps);
        V.push_back(v / v.norm());
        int m = 0;
        for (; m < steps; ++m) {
            Vec w = lu.solve(V.back());
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= m; ++i) {
                    const double h = V[static_cast<std::size_t>(i)].dot(w);
                    H(i, m) += h;
                    w -= h * V[static_cast<std::size_t>(i)];
                }
            const double b = w.norm();
            H(m + 1, m) = b;
            if (b <= 1e-14) {
                ++m;
                break;
            }
            V.push_back(w / b);
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(m, m));
        if (es.info() != Eigen::Success) throw NumericalError("Hessenberg eigensolver failed");
        std::vector<int> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        const auto& mu = es.eigenvalues();
        std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(mu[a]) > std::abs(mu[b]); });

        std::vector<double> lam, res;
        std::vector<Vec> vecs;
        for (int r = 0; r < k; ++r) {
            const auto z = mu[order[static_cast<std::size_t>(r)]];
            if (std::abs(z.imag()) > 1e-8 * std::abs(z)) throw NumericalError("complex Ritz value for a transformed operator");
            const Eigen::VectorXd y = es.eigenvectors().col(order[static_cast<std::size_t>(r)]).real();
            Vec x = Vec::Zero(n);
            for (int i = 0; i < m; ++i) x += y[i] * V[static_cast<std::size_t>(i)];
            x /= x.norm();
            const Vec ax = A * x;
            const double l = x.dot(ax);
            lam.push_back(l);
            res.push_back((ax - l * x).norm());
            vecs.push_back(std::move(x));
        }
        bool converged = true;
        for (int i = 0; i < k; ++i) converged = converged && res[static_cast<std::size_t>(i)] <= std::max(options.tol * (1.0 + std::abs(lam[static_cast<std::size_t>(i)])), floor);
        if (converged) {
            std::vector<int> idx(static_cast<std::size_t>(k));
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lam[static_cast<std::size_t>(a)] < lam[static_cast<std::size_t>(b)]; });
            for (int i : idx) {
                result.eigenvalues.push_back(lam[static_cast<std::size_t>(i)]);
                result.residuals.push_back(res[static_cast<std::size_t>(i)]);
                if (options.want_vectors) result.vectors.push_back(vecs[static_cast<std::size_t>(i)]);
            }
            return result;
        }
        v = Vec::Zero(n);
        for (const Vec& x : vecs) v += x;
    }
    throw NumericalError("smallest_eigs_general: Arnoldi did not converge");
}

double transverse_h_tolerance(const TransverseProblem& problem) {
    TransverseProblem fine = problem;
    fine.m = 2 * problem.m;
    return 10.0 * std::abs(solve_transverse(problem).lambda0 - solve_transverse(fine).lambda0);
}

TwoSidedReport two_sided_check(double lambda_min, double lambda0, int N, double C_hat, double h_tolerance) {
    TwoSidedReport r;
    r.gap = lambda_min - lambda0;
    r.bound = C_hat / (static_cast<double>(N) * N);
    r.lower_ok = lambda_min >= lambda0 - h_tolerance;
    r.upper_ok = r.gap <= r.bound;
    return r;
}

double box_distance(const CellBox& a, const CellBox& b, const LatticeSpec& lattice) {
    double s = 0.0;
    for (int i = 0; i < lattice.n; ++i) {
        const double l = lattice.basis_lengths[static_cast<std::size_t>(i)];
        const double gap = std::max({0.0, (b.lo[i] - a.hi[i] - 1) * l, (a.lo[i] - b.hi[i] - 1) * l});
        s += gap * gap;
    }
    return std::sqrt(s);
}

std::vector<int> box_unknowns(const WindowGrid& grid, const CellBox& box) {
    std::vector<int> out;
    for (std::size_t u = 0; u < grid.unknown_count(); ++u) {
        const MultiIndex c = grid.cell_of_node(grid.node_of_unknown(u));
        bool inside = true;
        for (int i = 0; i < grid.n(); ++i) inside = inside && c[i] >= box.lo[i] && c[i] <= box.hi[i];
        if (inside) out.push_back(static_cast<int>(u));
    }
    return out;
}

struct ResolventProbe::Impl {
    const DiscreteOperator* H;
    Eigen::SimplicialLLT<GeneralSparse> llt;
};

ResolventProbe::ResolventProbe(const DiscreteOperator& H, double lambda) : impl_(new Impl) {
    impl_->H = &H;
    impl_->llt.compute(shifted(H.matrix, lambda));
    if (impl_->llt.info() != Eigen::Success) {
        delete impl_;
        throw NumericalError("lambda is not below the spectrum");
    }
}

ResolventProbe::~ResolventProbe() { delete impl_; }

double ResolventProbe::block_norm(const CellBox& b1, const CellBox& b2, const BlockNormOptions& options) const {
    const WindowGrid& g = *impl_->H->grid;
    return block_norm(box_unknowns(g, b1), box_unknowns(g, b2), options);
}

double ResolventProbe::block_norm(const std::vector<int>& rows, const std::vector<int>& cols,
                                  const BlockNormOptions& options) const {
    if (rows.empty() || cols.empty()) return 0.0;
    const Eigen::Index n = static_cast<Eigen::Index>(impl_->H->size());
    const auto nc = static_cast<Eigen::Index>(cols.size());
    Vec full(n), sol(n);
    // x on cols -> P_cols R P_rows R x
    const Op op = [&](const Vec& x, Vec& y) {
        full.setZero();
        for (Eigen::Index i = 0; i < nc; ++i) full[cols[static_cast<std::size_t>(i)]] = x[i];
        sol = impl_->llt.solve(full);
        full.setZero();
        for (int r : rows) full[r] = sol[r];
        sol = impl_->llt.solve(full);
        y.resize(nc);
        for (Eigen::Index i = 0; i < nc; ++i) y[i] = sol[cols[static_cast<std::size_t>(i)]];
    };
    const int cap = static_cast<int>(std::min<Eigen::Index>(nc, options.max_iterations));
    // Grow the Krylov space until the top Ritz value settles.
    double prev = 0.0;
    for (int steps = std::min(cap, 20);; steps = std::min(cap, 2 * steps)) {
        const Ritz r = lanczos(op, start_vector(nc, 11), steps, 1);
        const double theta = r.theta.front();
        if (steps == cap || (prev > 0.0 && std::abs(theta - prev) <= 0.1 * options.rel_tol * theta)) return std::sqrt(std::max(theta, 0.0));
        prev = theta;
    }
}

double resolvent_block_norm(const DiscreteOperator& H, double lambda, const CellBox& b1, const CellBox& b2,
                            const BlockNormOptions& options) {
    return ResolventProbe(H, lambda).block_norm(b1, b2, options);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs matching samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae coincide");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.slope * x[i] + f.intercept);
        sse += e * e;
    }
    f.r_squared = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
    return f;
}

DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples, double delta) {
    if (samples.size() < 4) throw std::invalid_argument("fit_decay needs at least 4 samples");
    std::vector<double> x, y;
    DecayFit out;
    for (const auto& [dist, norm] : samples) {
        if (!(norm > 0.0)) throw std::invalid_argument("fit_decay: nonpositive norm sample");
        x.push_back(dist);
        y.push_back(std::log(norm));
        out.points.emplace_back(dist, std::log(norm));
    }
    const LineFit f = fit_line(x, y);
    out.slope = f.slope;
    out.intercept = f.intercept;
    out.r_squared = f.r_squared;
    out.rate = -f.slope;
    out.c1 = delta * std::exp(f.intercept);
    return out;
}

}  // namespace strip
