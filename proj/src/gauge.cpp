#include "strip/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "strip/errors.hpp"

namespace strip {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Triplet = Eigen::Triplet<double>;

std::vector<Triplet> symmetric_triplets(const DiscreteOperator& H) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(H.matrix.nonZeros()));
    for (Eigen::Index r = 0; r < H.matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(H.matrix, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    return t;
}

GeneralSparse from_triplets(Eigen::Index n, const std::vector<Triplet>& t) {
    GeneralSparse A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

void check_cells(const WindowGrid& g, const RandomField& omega, std::vector<MultiIndex>& cells) {
    cells = cells_of(g.window());
    if (omega.omega.size() != cells.size()) throw ConfigError("random field does not match window");
}

// Central difference u -> (u[+1] - u[-1]) / (2h) along dir at unknown u,
// scaled by coeff and mapped to the symmetric basis.
void add_first_order(const WindowGrid& g, const std::vector<double>& mass, std::size_t u, int dir, double coeff,
                     std::vector<Triplet>& t) {
    if (coeff == 0.0) return;
    const std::size_t node = g.node_of_unknown(u);
    const MultiIndex idx = g.node_multi_index(node);
    const double h = dir < g.n() ? g.h_long(dir) : g.h_trans();
    const int last = dir < g.n() ? g.points_long() - 1 : g.params().m_transverse;
    for (int s : {-1, 1}) {
        MultiIndex nb = idx;
        nb[dir] += s;
        if (nb[dir] < 0 || nb[dir] > last) continue;
        const auto q = g.unknown_of_node(g.node_from_multi_index(nb));
        if (!q) continue;
        const double scale = std::sqrt(mass[u] / mass[*q]);
        t.emplace_back(static_cast<int>(u), static_cast<int>(*q), coeff * s / (2.0 * h) * scale);
    }
}

void check_loc_scale(const LocSpec& spec, const Cutoff& cutoff, double t, const MultiIndex& cell) {
    if (t * spec.profile.radius > cutoff.rho1)
        throw ConfigError("localized support exceeds the gauge cutoff plateau in cell " + std::to_string(cell[0]) +
                          " (eps too large)");
}

void finish_gauge(GaugeField& g) {
    g.min_value = 1.0;
    g.max_deviation = 0.0;
    for (double v : g.values) {
        g.min_value = std::min(g.min_value, v);
        g.max_deviation = std::max(g.max_deviation, std::abs(v - 1.0));
    }
    if (!(g.min_value > 0.0)) throw ConfigError("gauge is not invertible (eps too large)");
}

}  // namespace

double Cutoff::value(double x) const {
    const double r = std::abs(x);
    if (r <= rho1) return 1.0;
    if (r >= rho2) return 0.0;
    const double u = (r - rho1) / (rho2 - rho1);
    return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double Cutoff::d1(double x) const {
    const double r = std::abs(x);
    if (r <= rho1 || r >= rho2) return 0.0;
    const double w = rho2 - rho1, u = (r - rho1) / w;
    const double ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
    return -(x < 0.0 ? -1.0 : 1.0) * ds / w;
}

double Cutoff::d2(double x) const {
    const double r = std::abs(x);
    if (r <= rho1 || r >= rho2) return 0.0;
    const double w = rho2 - rho1, u = (r - rho1) / w;
    return -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (w * w);
}

LocCoefficients loc_coefficients(const LocCorrector& wstar, const LocSpec& spec, const Cutoff& cutoff, double x1,
                                 double t) {
    LocCoefficients c;
    const double chi = cutoff.value(x1);
    if (chi == 0.0 && cutoff.d1(x1) == 0.0) return c;
    const double z = x1 / t;
    const double w = wstar(z), dw = wstar.derivative(z);
    const double chi1 = cutoff.d1(x1), chi2 = cutoff.d2(x1);
    c.gauge = 1.0 + std::pow(t, 2.0 - spec.a) * w * chi;
    c.a1 = -2.0 * (dw * chi + t * w * chi1) / c.gauge;
    c.a0 = -(2.0 * dw * chi1 + t * w * chi2) / c.gauge + std::pow(t, 1.0 - spec.a) * chi * w * spec.profile(z) / c.gauge;
    return c;
}

OscCorrectorValue osc_corrector(const OscSpec& spec, const Point& x, const Point& xi, int dims) {
    OscCorrectorValue v;
    for (const OscMode& m : spec.modes) {
        const Envelope& e = m.envelope;
        if (!e.in_support(x)) continue;
        double k2 = 0.0, phase = 0.0;
        for (int i = 0; i < dims; ++i) {
            k2 += static_cast<double>(m.kappa[i]) * m.kappa[i];
            phase += m.kappa[i] * xi[i];
        }
        phase *= kTwoPi;
        const double c = -1.0 / (2.0 * kTwoPi * std::numbers::pi * k2);  // -1/(4 pi^2 |kappa|^2)
        const double trig = m.cosine ? std::cos(phase) : std::sin(phase);
        const double dtrig = m.cosine ? -std::sin(phase) : std::cos(phase);
        const double g = e.value(x);
        v.value += c * g * trig;
        v.lap_x += c * e.laplacian(x) * trig;
        for (int j = 0; j < dims; ++j) {
            const double gj = e.d1(x, j);
            const double kj = kTwoPi * m.kappa[j];
            v.dx[j] += c * gj * trig;
            v.dxi[j] += c * g * kj * dtrig;
            v.dxdxi[j] += c * gj * kj * dtrig;
        }
    }
    return v;
}

OscCoefficients osc_coefficients(const OscSpec& spec, const Point& x, int dims, double t) {
    OscCoefficients c;
    Point xi{};
    for (int i = 0; i < dims; ++i) xi[i] = x[i] / t;
    const OscCorrectorValue w = osc_corrector(spec, x, xi, dims);
    c.gauge = 1.0 + std::pow(t, 2.0 - spec.a) * w.value;
    double mixed = 0.0;
    for (int j = 0; j < dims; ++j) {
        c.a[j] = -2.0 * (t * w.dx[j] + w.dxi[j]) / c.gauge;
        mixed += w.dxdxi[j];
    }
    const double q = spec.Q(x, xi, dims);
    c.a0 = -(2.0 * mixed + t * w.lap_x - std::pow(t, 1.0 - spec.a) * q * w.value) / c.gauge +
           std::pow(t, 1.0 - spec.a) * spec.W_at(x);
    return c;
}

GaugeField build_gauge_loc(const WindowGrid& g, const LocSpec& spec, double eps, const RandomField& omega) {
    return build_gauge_loc(g, spec, eps, omega, Cutoff::for_cell(g.lattice().basis_lengths[0]));
}

GaugeField build_gauge_loc(const WindowGrid& g, const LocSpec& spec, double eps, const RandomField& omega,
                           const Cutoff& cutoff) {
    validate_perturbation(spec, g);
    std::vector<MultiIndex> cells;
    check_cells(g, omega, cells);
    GaugeField field;
    field.cutoff = cutoff;
    const LocCorrector wstar = wstar_loc(spec);
    // The gauge depends on x1 only; evaluate per column.
    std::vector<double> column(static_cast<std::size_t>(g.points_long()), 1.0);
    const double x0 = g.window().alpha[0] * g.lattice().basis_lengths[0];
    for (int i = 0; i < g.points_long(); ++i) {
        const double x = x0 + i * g.h_long(0);
        const MultiIndex cell = g.cell_of_point(std::span<const double>(&x, 1));
        const double t = eps * omega.omega[g.cell_ordinal(cell)];
        if (t == 0.0) continue;
        check_loc_scale(spec, cutoff, t, cell);
        const double local = x - g.cell_center(cell, 0);
        const double chi = cutoff.value(local);
        if (chi != 0.0) column[static_cast<std::size_t>(i)] = 1.0 + std::pow(t, 2.0 - spec.a) * wstar(local / t) * chi;
    }
    field.values.resize(g.unknown_count());
    for (std::size_t u = 0; u < field.values.size(); ++u)
        field.values[u] = column[static_cast<std::size_t>(g.node_multi_index(g.node_of_unknown(u))[0])];
    finish_gauge(field);
    return field;
}

GaugeField build_gauge_osc(const WindowGrid& g, const OscSpec& spec, double eps, const RandomField& omega,
                           double omega_floor) {
    validate_perturbation(spec, g);
    std::vector<MultiIndex> cells;
    check_cells(g, omega, cells);
    GaugeField field;
    field.values.assign(g.unknown_count(), 1.0);
    for (std::size_t u = 0; u < field.values.size(); ++u) {
        const std::size_t node = g.node_of_unknown(u);
        const MultiIndex cell = g.cell_of_node(node);
        const double w = omega.omega[g.cell_ordinal(cell)];
        if (w < omega_floor || eps == 0.0) continue;
        const double t = eps * w;
        const Point x = g.local_coordinates(node, cell);
        Point xi{};
        for (int i = 0; i < g.dims(); ++i) xi[i] = x[i] / t;
        const double ws = osc_corrector(spec, x, xi, g.dims()).value;
        if (ws != 0.0) field.values[u] = 1.0 + std::pow(t, 2.0 - spec.a) * ws;
    }
    finish_gauge(field);
    return field;
}

TransformedAssembly transform_similarity(const DiscreteOperator& H, const GaugeField& gauge) {
    if (gauge.values.size() != H.size()) throw ConfigError("gauge does not match operator");
    if (!(gauge.min_value > 0.0)) throw ConfigError("gauge is not invertible");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(H.matrix.nonZeros()));
    for (Eigen::Index r = 0; r < H.matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(H.matrix, r); it; ++it) {
            const double qi = gauge.values[static_cast<std::size_t>(it.row())];
            const double qj = gauge.values[static_cast<std::size_t>(it.col())];
            t.emplace_back(it.row(), it.col(), qi == qj ? it.value() : it.value() * (qj / qi));
        }
    TransformedAssembly out;
    out.method = "similarity";
    out.matrix = from_triplets(static_cast<Eigen::Index>(H.size()), t);
    return out;
}

TransformedAssembly assemble_transformed_loc(const DiscreteOperator& base, const LocSpec& spec, double eps,
                                             const RandomField& omega) {
    const WindowGrid& g = *base.grid;
    validate_perturbation(spec, g);
    std::vector<MultiIndex> cells;
    check_cells(g, omega, cells);
    const Cutoff cutoff = Cutoff::for_cell(g.lattice().basis_lengths[0]);
    const LocCorrector wstar = wstar_loc(spec);

    // Coefficients per column, already multiplied by t^{1-a}.
    const auto pl = static_cast<std::size_t>(g.points_long());
    std::vector<double> a1(pl, 0.0), a0(pl, 0.0);
    TransformedAssembly out;
    out.method = "analytic";
    const double x0 = g.window().alpha[0] * g.lattice().basis_lengths[0];
    for (std::size_t i = 0; i < pl; ++i) {
        const double x = x0 + static_cast<double>(i) * g.h_long(0);
        const MultiIndex cell = g.cell_of_point(std::span<const double>(&x, 1));
        const double t = eps * omega.omega[g.cell_ordinal(cell)];
        if (t == 0.0) continue;
        check_loc_scale(spec, cutoff, t, cell);
        const LocCoefficients c = loc_coefficients(wstar, spec, cutoff, x - g.cell_center(cell, 0), t);
        if (!(c.gauge > 0.0)) throw ConfigError("gauge is not invertible (eps too large)");
        const double s = std::pow(t, 1.0 - spec.a);
        a1[i] = s * c.a1;
        a0[i] = s * c.a0;
        out.max_first_order = std::max(out.max_first_order, std::abs(c.a1));
        out.max_zeroth_order = std::max(out.max_zeroth_order, std::abs(c.a0));
    }

    std::vector<Triplet> t = symmetric_triplets(base);
    for (std::size_t u = 0; u < base.size(); ++u) {
        const auto col = static_cast<std::size_t>(g.node_multi_index(g.node_of_unknown(u))[0]);
        if (a0[col] != 0.0) t.emplace_back(static_cast<int>(u), static_cast<int>(u), a0[col]);
        add_first_order(g, base.mass, u, 0, a1[col], t);
    }
    out.matrix = from_triplets(static_cast<Eigen::Index>(base.size()), t);
    return out;
}

TransformedAssembly assemble_transformed_osc(const DiscreteOperator& base, const OscSpec& spec, double eps,
                                             const RandomField& omega, double omega_floor) {
    const WindowGrid& g = *base.grid;
    validate_perturbation(spec, g);
    std::vector<MultiIndex> cells;
    check_cells(g, omega, cells);
    TransformedAssembly out;
    out.method = "analytic";
    std::vector<Triplet> t = symmetric_triplets(base);
    for (std::size_t u = 0; u < base.size(); ++u) {
        const std::size_t node = g.node_of_unknown(u);
        const MultiIndex cell = g.cell_of_node(node);
        const double w = omega.omega[g.cell_ordinal(cell)];
        if (w < omega_floor || eps == 0.0) continue;
        const double tk = eps * w;
        const OscCoefficients c = osc_coefficients(spec, g.local_coordinates(node, cell), g.dims(), tk);
        if (!(c.gauge > 0.0)) throw ConfigError("gauge is not invertible (eps too large)");
        const double s = std::pow(tk, 1.0 - spec.a);
        if (c.a0 != 0.0) t.emplace_back(static_cast<int>(u), static_cast<int>(u), s * c.a0);
        out.max_zeroth_order = std::max(out.max_zeroth_order, std::abs(c.a0));
        for (int j = 0; j < g.dims(); ++j) {
            add_first_order(g, base.mass, u, j, s * c.a[j], t);
            out.max_first_order = std::max(out.max_first_order, std::abs(c.a[j]));
        }
    }
    out.matrix = from_triplets(static_cast<Eigen::Index>(base.size()), t);
    return out;
}

double first_order_coeff(const PerturbationSpec& spec, const TransverseMode& mode, const LatticeSpec& lattice) {
    const double vol = lattice.cell_volume();
    if (const auto* loc = std::get_if<LocSpec>(&spec)) return hypothesis_loc(*loc).value / vol;
    if (std::holds_alternative<OscSpec>(spec)) return 0.0;
    return hypothesis_dlt(std::get<DltSpec>(spec), mode, lattice.n).value / vol;
}

double second_order_coeff_osc(const OscSpec& spec, const TransverseMode& mode, const LatticeSpec& lattice) {
    return hypothesis_osc(spec, mode, lattice.n).value / lattice.cell_volume();
}

}  // namespace strip
