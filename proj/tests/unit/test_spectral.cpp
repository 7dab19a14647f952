#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "strip/errors.hpp"
#include "strip/spectral.hpp"

using namespace strip;

namespace {

std::shared_ptr<const WindowGrid> grid(int N, int m, int mt, BoundaryKind bc) {
    Window w;
    w.N = N;
    GridParams gp;
    gp.m_per_cell = m;
    gp.m_transverse = mt;
    gp.bc_bottom = gp.bc_top = bc;
    return std::make_shared<const WindowGrid>(WindowGrid::build(LatticeSpec::unit(1), w, gp));
}

Eigen::MatrixXd dense(const SparseMatrix& s) { return Eigen::MatrixXd(s); }

// Spectral norm of the (rows, cols) block of the dense resolvent.
double dense_block_norm(const Eigen::MatrixXd& S, double lambda, const std::vector<int>& rows, const std::vector<int>& cols) {
    const Eigen::MatrixXd R = (S - lambda * Eigen::MatrixXd::Identity(S.rows(), S.cols())).inverse();
    Eigen::MatrixXd B(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = R(rows[i], cols[j]);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(B).singularValues()[0];
}

DiscreteOperator perturbed(int N, int m, int mt) {
    auto g = grid(N, m, mt, BoundaryKind::Dirichlet);
    const DiscreteOperator H0 = assemble_unperturbed(g, [](double y) { return 2.0 * y; });
    RandomField om = sample_omega(MeasureSpec::uniform(), g->window(), 3, 0);
    return assemble_loc(H0, LocSpec{}, 0.08, om);
}

}  // namespace

TEST_CASE("bottom eigenvalues against a dense oracle") {
    const DiscreteOperator H = perturbed(3, 8, 8);  // 25 * 7 = 175 unknowns
    REQUIRE(H.size() > 80);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H.matrix), Eigen::EigenvaluesOnly);
    EigenOptions o;
    o.k = 4;
    o.tol = 1e-11;
    const EigenResult r = smallest_eigs_symmetric(H.matrix, o);
    REQUIRE(r.eigenvalues.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(r.eigenvalues[static_cast<std::size_t>(i)] == doctest::Approx(es.eigenvalues()[i]).epsilon(1e-8));
    // a wrong hint above the spectrum must be corrected
    o.shift_hint = es.eigenvalues()[2] + 0.1;
    const EigenResult r2 = smallest_eigs_symmetric(H.matrix, o);
    CHECK(r2.eigenvalues[0] == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-8));
    // dense path on a small matrix
    const DiscreteOperator small = perturbed(1, 4, 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(dense(small.matrix), Eigen::EigenvaluesOnly);
    CHECK(smallest_eigs(small).eigenvalues[0] == doctest::Approx(es2.eigenvalues()[0]).epsilon(1e-10));
}

TEST_CASE("unperturbed bottoms") {
    auto gn = grid(3, 8, 8, BoundaryKind::Neumann);
    CHECK(std::abs(smallest_eigs(assemble_unperturbed(gn, {})).eigenvalues[0]) < 1e-9);
    auto gd = grid(4, 16, 32, BoundaryKind::Dirichlet);
    TransverseProblem p;
    p.m = 32;
    CHECK(smallest_eigs(assemble_unperturbed(gd, {})).eigenvalues[0] == doctest::Approx(solve_transverse(p).lambda0).epsilon(1e-9));
}

TEST_CASE("inertia count") {
    const DiscreteOperator H = perturbed(3, 8, 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H.matrix), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    CHECK(count_below(H.matrix, ev[0] - 1e-6) == 0);
    CHECK(count_below(H.matrix, 0.5 * (ev[2] + ev[3])) == 3);
}

TEST_CASE("non-symmetric solver on a similarity transform") {
    const DiscreteOperator H = perturbed(3, 8, 8);
    Eigen::VectorXd g(static_cast<Eigen::Index>(H.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = 1.0 + 0.3 * std::sin(0.1 * static_cast<double>(i));
    GeneralSparse A = (g.cwiseInverse().asDiagonal() * GeneralSparse(H.matrix) * g.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H.matrix), Eigen::EigenvaluesOnly);
    EigenOptions o;
    o.k = 2;
    const EigenResult r = smallest_eigs_general(A, es.eigenvalues()[0] - 1.0, o);
    CHECK(r.eigenvalues[0] == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-9));
    CHECK(r.eigenvalues[1] == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-9));
}

TEST_CASE("two-sided check") {
    const TwoSidedReport ok = two_sided_check(10.0, 9.9, 4, 10.0, 1e-3);
    CHECK(ok.ok());
    CHECK(ok.bound == doctest::Approx(10.0 / 16.0));
    CHECK_FALSE(two_sided_check(11.0, 9.9, 4, 10.0, 1e-3).upper_ok);
    CHECK_FALSE(two_sided_check(9.8, 9.9, 4, 10.0, 1e-3).lower_ok);
}

TEST_CASE("box geometry") {
    const LatticeSpec l = LatticeSpec::unit(1);
    CellBox a, b;
    a.lo[0] = a.hi[0] = 0;
    b.lo[0] = b.hi[0] = 3;
    CHECK(box_distance(a, b, l) == doctest::Approx(2.0));
    CHECK(box_distance(a, a, l) == 0.0);
    auto g = grid(4, 4, 8, BoundaryKind::Dirichlet);
    // cell 0 owns longitudinal indices 0..4, cell 3 owns 13..16
    CHECK(box_unknowns(*g, a).size() == 5 * 7);
    CHECK(box_unknowns(*g, b).size() == 4 * 7);
}

TEST_CASE("resolvent block norms") {
    const DiscreteOperator H = perturbed(4, 6, 8);
    const Eigen::MatrixXd S = dense(H.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double lambda = es.eigenvalues()[0] - 0.7;
    CellBox all;
    all.lo[0] = 0;
    all.hi[0] = 3;
    CHECK(resolvent_block_norm(H, lambda, all, all) == doctest::Approx(1.0 / 0.7).epsilon(1e-3));
    CellBox b1, b2;
    b1.lo[0] = b1.hi[0] = 0;
    b2.lo[0] = b2.hi[0] = 3;
    const double oracle = dense_block_norm(S, lambda, box_unknowns(*H.grid, b1), box_unknowns(*H.grid, b2));
    CHECK(resolvent_block_norm(H, lambda, b1, b2) == doctest::Approx(oracle).epsilon(1e-3));
    // nested boxes never increase the norm
    CellBox big;
    big.lo[0] = 0;
    big.hi[0] = 1;
    CHECK(resolvent_block_norm(H, lambda, b1, b2) <= resolvent_block_norm(H, lambda, big, b2) * (1 + 1e-6));
    CHECK(resolvent_block_norm(H, lambda, b1, b2) <= 1.0 / 0.7);
    CHECK_THROWS_AS(resolvent_block_norm(H, es.eigenvalues()[0] + 1e-3, b1, b2), NumericalError);
}

TEST_CASE("block norm of a diagonal operator") {
    auto g = grid(2, 4, 8, BoundaryKind::Neumann);
    DiscreteOperator H = assemble_unperturbed(g, {});
    SparseMatrix D(static_cast<Eigen::Index>(H.size()), static_cast<Eigen::Index>(H.size()));
    for (Eigen::Index i = 0; i < D.rows(); ++i) D.insert(i, i) = 1.0 + static_cast<double>(i);
    H.matrix = D;
    ResolventProbe probe(H, 0.0);
    CHECK(probe.block_norm(std::vector<int>{3, 5}, std::vector<int>{3, 5}) == doctest::Approx(1.0 / 4.0).epsilon(1e-6));
    CHECK(probe.block_norm(std::vector<int>{3}, std::vector<int>{5}) < 1e-12);
}

TEST_CASE("decay fits") {
    std::vector<std::pair<double, double>> s;
    for (double d : {1.0, 2.0, 3.0, 4.0, 5.0}) s.emplace_back(d, 3.0 * std::exp(-0.8 * d));
    const DecayFit f = fit_decay(s, 0.5);
    CHECK(f.rate == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(f.c1 == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(1.0));
    std::vector<std::pair<double, double>> c;
    for (double d : {1.0, 2.0, 3.0, 4.0}) c.emplace_back(d, 2.0);
    CHECK(std::abs(fit_decay(c, 1.0).slope) < 1e-14);
    c[1].second = 0.0;
    CHECK_THROWS(fit_decay(c, 1.0));
}

TEST_CASE("unperturbed strip decays at the transverse-channel rate") {
    // Below the spectrum by delta the slowest channel decays like exp(-sqrt(delta) x).
    auto g = grid(12, 8, 16, BoundaryKind::Dirichlet);
    const DiscreteOperator H = assemble_unperturbed(g, {});
    TransverseProblem p;
    p.m = 16;
    const double lambda = solve_transverse(p).lambda0 - 1.0;
    ResolventProbe probe(H, lambda);
    std::vector<std::pair<double, double>> s;
    CellBox b1;
    b1.lo[0] = b1.hi[0] = 0;
    for (int o : {3, 5, 7, 9}) {
        CellBox b2;
        b2.lo[0] = b2.hi[0] = o;
        s.emplace_back(box_distance(b1, b2, g->lattice()), probe.block_norm(b1, b2));
    }
    const DecayFit f = fit_decay(s, 1.0);
    CHECK(f.rate > 0.0);
    CHECK(f.rate == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("line fit") {
    const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
}

TEST_CASE("converges on a very fine longitudinal grid") {
    // |S| ~ 4/h^2 ~ 2.6e8 puts the residual floor above a 1e-10 relative target.
    const DiscreteOperator H = assemble_unperturbed(grid(1, 8000, 8, BoundaryKind::Neumann), nullptr);
    EigenOptions o;
    o.k = 3;
    o.tol = 1e-10;
    const EigenResult r = smallest_eigs_symmetric(H.matrix, o);
    CHECK(std::abs(r.eigenvalues[0]) < 1e-8);
    // cos(pi y) on the 8-division transverse grid, then cos(pi x) along the window
    const double ht = 1.0 / 8, h = 1.0 / 8000;
    CHECK(r.eigenvalues[1] == doctest::Approx(2.0 * (1.0 - std::cos(std::numbers::pi * ht)) / (ht * ht)).epsilon(1e-8));
    CHECK(r.eigenvalues[2] == doctest::Approx(2.0 * (1.0 - std::cos(std::numbers::pi * h)) / (h * h)).epsilon(1e-8));
}
