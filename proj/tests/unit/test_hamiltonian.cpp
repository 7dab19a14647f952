#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "strip/errors.hpp"
#include "strip/hamiltonian.hpp"
#include "strip/quadrature.hpp"
#include "strip/transverse.hpp"

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

double diag_sum(const SparseMatrix& a) { return a.diagonal().sum(); }

}  // namespace

TEST_CASE("unperturbed all-Neumann operator") {
    auto g = grid(2, 4, 4, BoundaryKind::Neumann);
    const DiscreteOperator H = assemble_unperturbed(g, {});
    const Eigen::MatrixXd K = dense(H.form);
    CHECK((K - K.transpose()).norm() == 0.0);
    for (Eigen::Index i = 0; i < K.rows(); ++i) CHECK(std::abs(K.row(i).sum()) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H.matrix));
    CHECK(std::abs(es.eigenvalues()[0]) < 1e-12);
    // the ground vector in the symmetric basis is M^{1/2} 1
    Eigen::VectorXd v = es.eigenvectors().col(0);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        CHECK(std::abs(v[i] / std::sqrt(H.mass[static_cast<std::size_t>(i)])) == doctest::Approx(std::abs(v[0] / std::sqrt(H.mass[0]))));
}

TEST_CASE("Dirichlet transverse, lateral Neumann: bottom equals the discrete transverse eigenvalue") {
    for (int mt : {8, 16, 32}) {
        auto g = grid(2, 6, mt, BoundaryKind::Dirichlet);
        const DiscreteOperator H = assemble_unperturbed(g, {});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(H.matrix), Eigen::EigenvaluesOnly);
        TransverseProblem p;
        p.m = mt;
        const double l0 = solve_transverse(p).lambda0;
        CHECK(es.eigenvalues()[0] == doctest::Approx(l0).epsilon(1e-11));
        CHECK(std::abs(l0 - std::numbers::pi * std::numbers::pi) < 20.0 / (mt * mt));
    }
}

TEST_CASE("transverse potential enters the diagonal") {
    auto g = grid(1, 4, 8, BoundaryKind::Dirichlet);
    const auto V = [](double y) { return 3.0 + y; };
    const DiscreteOperator H0 = assemble_unperturbed(g, {});
    const DiscreteOperator H1 = assemble_unperturbed(g, V);
    const Eigen::MatrixXd D = dense(H1.matrix) - dense(H0.matrix);
    for (std::size_t u = 0; u < H0.size(); ++u) {
        const Point x = g->coordinates(g->node_of_unknown(u));
        CHECK(D(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) == doctest::Approx(V(x[1])));
    }
}

TEST_CASE("localized potential evaluation") {
    LocSpec s;
    CHECK(eval_loc_potential(s, 0.3, 0.0) == 0.0);
    CHECK(eval_loc_potential(s, 0.0, 0.1) == doctest::Approx(std::pow(0.1, -0.5)));
    const double t = 0.1;
    const double total = integrate_adaptive([&](double x) { return eval_loc_potential(s, x, t); }, -0.5, 0.0).value +
                         integrate_adaptive([&](double x) { return eval_loc_potential(s, x, t); }, 0.0, 0.5).value;
    CHECK(total == doctest::Approx(std::pow(t, 0.5)).epsilon(1e-10));
}

TEST_CASE("localized assembly conserves the deposited mass") {
    auto g = grid(4, 32, 8, BoundaryKind::Neumann);
    const DiscreteOperator H0 = assemble_unperturbed(g, {});
    LocSpec s;
    s.profile = c2_bump_profile(1.7);
    const double eps = 0.07;
    const RandomField zero = constant_field(g->window(), 0.0);
    CHECK((dense(assemble_loc(H0, s, eps, zero).matrix) - dense(H0.matrix)).norm() == 0.0);

    RandomField om = constant_field(g->window(), 0.0);
    om.omega = {0.3, 1.0, 0.0005, 0.77};
    const DiscreteOperator H = assemble_loc(H0, s, eps, om);
    const double integral = integrate_adaptive([&](double z) { return s.profile(z); }, -1.0, 1.0).value;
    double expected = 0.0;
    for (double w : om.omega) expected += std::pow(eps * w, 1.0 - s.a) * integral;
    CHECK(diag_sum(H.form) - diag_sum(H0.form) == doctest::Approx(expected).epsilon(1e-8));

    LocSpec a0;
    a0.a = 0.0;
    const auto cols = loc_column_masses(*g, a0, 0.1, constant_field(g->window(), 1.0));
    double sum = 0.0;
    for (double c : cols) sum += c;
    CHECK(sum == doctest::Approx(4 * 0.1).epsilon(1e-12));
}

TEST_CASE("localized support must fit in the cell") {
    auto g = grid(1, 16, 8, BoundaryKind::Neumann);
    const DiscreteOperator H0 = assemble_unperturbed(g, {});
    CHECK_THROWS_AS(assemble_loc(H0, LocSpec{}, 0.6, constant_field(g->window(), 1.0)), ConfigError);
}

TEST_CASE("oscillating assembly") {
    auto g = grid(2, 200, 16, BoundaryKind::Neumann);
    const DiscreteOperator H0 = assemble_unperturbed(g, {});
    OscSpec s;
    OscMode m;
    m.envelope.dims = 2;
    m.envelope.center = {0.0, 0.5};
    m.envelope.radius = {0.4, 0.4};
    m.kappa = {1, 0};
    s.modes.push_back(m);
    s.W.amplitude = 0.0;
    CHECK((dense(assemble_osc(H0, s, 0.05, constant_field(g->window(), 0.0)).matrix) - dense(H0.matrix)).norm() == 0.0);

    const DiscreteOperator H = assemble_osc(H0, s, 0.05, constant_field(g->window(), 1.0));
    // Mass-weighted sum of the added values against the sum of their sizes.
    double net = 0.0, size = 0.0, net_psi = 0.0;
    TransverseProblem p;
    p.m = 16;
    for (std::size_t u = 0; u < H.size(); ++u) {
        const auto i = static_cast<Eigen::Index>(u);
        const double add = H.form.coeff(i, i) - H0.form.coeff(i, i);
        net += add;
        size += std::abs(add);
        const double y = g->coordinates(g->node_of_unknown(u))[1];
        const double psi = std::sin(std::numbers::pi * y);
        net_psi += add * psi * psi;
    }
    CHECK(std::abs(net) < 1e-3 * size);
    CHECK(std::abs(net_psi) < 1e-3 * size);

    // too coarse a grid for the oscillation
    CHECK_THROWS_AS(assemble_osc(H0, s, 0.01, constant_field(g->window(), 1.0)), ConfigError);
}

TEST_CASE("surface delta assembly") {
    auto g = grid(2, 32, 32, BoundaryKind::Neumann);
    const DiscreteOperator H0 = assemble_unperturbed(g, {});
    DltSpec s;
    s.surface = Surface::circle(0.0, 0.5, 0.2, 256);
    CHECK(s.surface.measure() == doctest::Approx(2 * std::numbers::pi * 0.2));
    const double eps = 0.03;
    CHECK((dense(assemble_dlt(H0, s, eps, constant_field(g->window(), 0.0)).matrix) - dense(H0.matrix)).norm() == 0.0);
    DltSpec zero = s;
    zero.b = [](const Point&) { return 0.0; };
    CHECK((dense(assemble_dlt(H0, zero, eps, constant_field(g->window(), 1.0)).matrix) - dense(H0.matrix)).norm() == 0.0);

    RandomField om = constant_field(g->window(), 0.0);
    om.omega = {0.25, 0.9};
    const DiscreteOperator H = assemble_dlt(H0, s, eps, om);
    const Eigen::MatrixXd D = dense(H.form) - dense(H0.form);
    CHECK(D.sum() == doctest::Approx(eps * (0.25 + 0.9) * 2 * std::numbers::pi * 0.2).epsilon(1e-6));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] > -1e-12);
}

TEST_CASE("form value and basis changes") {
    auto g = grid(1, 4, 8, BoundaryKind::Dirichlet);
    const DiscreteOperator H = assemble_unperturbed(g, {});
    std::vector<double> u(H.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.3 * static_cast<double>(i));
    const auto y = H.to_symmetric_basis(u);
    const auto back = H.from_symmetric_basis(y);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[i] == doctest::Approx(u[i]));
    Eigen::Map<const Eigen::VectorXd> ym(y.data(), static_cast<Eigen::Index>(y.size()));
    CHECK(H.form_value(u) == doctest::Approx(ym.dot(H.matrix * ym)));
}
