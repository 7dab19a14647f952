#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "strip/errors.hpp"
#include "strip/spectral.hpp"
#include "strip/transverse.hpp"

using namespace strip;

namespace {

// Independent oracle: dense symmetric tridiagonal QL on the same finite-volume
// discretization, built from the weighted form directly.
double dense_lambda0(const TransverseProblem& p) {
    const int m = p.m;
    const double h = p.d / m;
    std::vector<int> nodes;
    for (int j = 0; j <= m; ++j) {
        const bool dir = (j == 0 && p.bc_bottom == BoundaryKind::Dirichlet) || (j == m && p.bc_top == BoundaryKind::Dirichlet);
        if (!dir) nodes.push_back(j);
    }
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 0);
    auto weight = [&](int j) { return (j == 0 || j == m) ? 0.5 * h : h; };
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = nodes[static_cast<std::size_t>(i)];
        const double edges = (j > 0 ? 1.0 : 0.0) + (j < m ? 1.0 : 0.0);
        diag[i] = edges / h / weight(j) + (p.V0 ? p.V0(j * h) : 0.0);
        if (i + 1 < n) sub[i] = -1.0 / h / std::sqrt(weight(j) * weight(j + 1));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

}  // namespace

TEST_CASE("Dirichlet ground mode converges to pi^2 at second order") {
    double prev = 0.0;
    for (int m : {32, 64, 128, 256}) {
        TransverseProblem p;
        p.m = m;
        const TransverseMode mode = solve_transverse(p);
        const double err = std::abs(mode.lambda0 - std::numbers::pi * std::numbers::pi);
        CHECK(err <= 20.0 / (m * m));
        if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
        prev = err;
        // shape: sqrt(2) sin(pi y)
        CHECK(psi0_at(mode, 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
    }
}

TEST_CASE("Neumann ground mode is constant") {
    TransverseProblem p;
    p.d = 2.0;
    p.m = 16;
    p.bc_bottom = p.bc_top = BoundaryKind::Neumann;
    const TransverseMode mode = solve_transverse(p);
    CHECK(std::abs(mode.lambda0) < 1e-12);
    for (double y : {0.0, 0.3, 1.1, 2.0}) CHECK(psi0_at(mode, y) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("cosine potential matches the dense oracle at m = 2048") {
    TransverseProblem p;
    p.m = 2048;
    p.V0 = [](double y) { return std::cos(2.0 * std::numbers::pi * y); };
    const TransverseMode mode = solve_transverse(p);
    CHECK(mode.lambda0 == doctest::Approx(dense_lambda0(p)).epsilon(1e-10));
    TransverseProblem q = p;
    q.m = 64;
    q.bc_top = BoundaryKind::Neumann;
    q.V0 = [](double y) { return 5.0 * y * y; };
    CHECK(solve_transverse(q).lambda0 == doctest::Approx(dense_lambda0(q)).epsilon(1e-10));
    const auto ev = transverse_eigenvalues(q, 3);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0] == doctest::Approx(dense_lambda0(q)).epsilon(1e-10));
    CHECK(ev[0] < ev[1]);
    CHECK(ev[1] < ev[2]);
}

TEST_CASE("psi0 interpolation and normalization") {
    TransverseProblem p;
    p.m = 40;
    const TransverseMode mode = solve_transverse(p);
    double norm = 0.0;
    for (std::size_t j = 0; j < mode.psi0.size(); ++j) norm += mode.weights[j] * mode.psi0[j] * mode.psi0[j];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(psi0_at(mode, 10 * mode.h()) == mode.psi0[10]);
    CHECK(psi0_at(mode, 10.5 * mode.h()) == doctest::Approx(0.5 * (mode.psi0[10] + mode.psi0[11])));
    CHECK(mode.psi0.front() == 0.0);
    CHECK(mode.psi0.back() == 0.0);
    CHECK_THROWS_AS(psi0_at(mode, 1.5), std::out_of_range);
}

TEST_CASE("transverse h tolerance shrinks with m") {
    TransverseProblem p;
    p.m = 32;
    const double t32 = transverse_h_tolerance(p);
    p.m = 64;
    CHECK(transverse_h_tolerance(p) < t32);
}

TEST_CASE("bad transverse problems") {
    TransverseProblem p;
    p.m = 4;
    CHECK_THROWS_AS(solve_transverse(p), ConfigError);
    p.m = 16;
    p.d = 0.0;
    CHECK_THROWS_AS(solve_transverse(p), ConfigError);
}
