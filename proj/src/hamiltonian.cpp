#include "strip/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "strip/errors.hpp"
#include "strip/kernels.hpp"
#include "strip/quadrature.hpp"

namespace strip {
namespace {

using Triplet = Eigen::Triplet<double>;

// K and S from triplets; symmetrized so that (i, j) and (j, i) agree bit for bit.
void finalize(DiscreteOperator& op, const std::vector<Triplet>& triplets) {
    const auto n = static_cast<Eigen::Index>(op.mass.size());
    SparseMatrix k(n, n);
    k.setFromTriplets(triplets.begin(), triplets.end());
    SparseMatrix kt = k.transpose();
    op.form = (k + kt) * 0.5;
    op.form.makeCompressed();

    std::vector<double> isq(op.mass.size());
    for (std::size_t i = 0; i < isq.size(); ++i) isq[i] = 1.0 / std::sqrt(op.mass[i]);
    op.matrix = op.form;
    for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(op.matrix, r); it; ++it)
            it.valueRef() *= isq[static_cast<std::size_t>(it.row())] * isq[static_cast<std::size_t>(it.col())];
}

std::vector<Triplet> form_triplets(const SparseMatrix& form) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(form.nonZeros()));
    for (Eigen::Index r = 0; r < form.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(form, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    return t;
}

DiscreteOperator with_diagonal(const DiscreteOperator& base, const std::vector<double>& diag_add, std::string tag) {
    DiscreteOperator op;
    op.grid = base.grid;
    op.mass = base.mass;
    op.tag = std::move(tag);
    bool any = false;
    for (double v : diag_add) any = any || v != 0.0;
    if (!any) {
        op.form = base.form;
        op.matrix = base.matrix;
        return op;
    }
    std::vector<Triplet> t = form_triplets(base.form);
    for (std::size_t i = 0; i < diag_add.size(); ++i)
        if (diag_add[i] != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), diag_add[i]);
    finalize(op, t);
    return op;
}

std::size_t stride_of(const WindowGrid& g, int dir) {
    std::size_t s = 1;
    if (dir == g.n()) return s;
    s = static_cast<std::size_t>(g.points_trans());
    for (int i = g.n() - 1; i > dir; --i) s *= static_cast<std::size_t>(g.points_long());
    return s;
}

std::string cell_label(const MultiIndex& k, int n) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < n; ++i) os << (i ? "," : "") << k[i];
    os << ")";
    return os.str();
}

}  // namespace

double OscMode::trig(const Point& xi, int dims) const {
    double phase = 0.0;
    for (int i = 0; i < dims; ++i) phase += kappa[i] * xi[i];
    phase *= 2.0 * std::numbers::pi;
    return cosine ? std::cos(phase) : std::sin(phase);
}

double OscSpec::Q(const Point& x, const Point& xi, int dims) const {
    double s = 0.0;
    for (const OscMode& m : modes) {
        const double g = m.envelope.value(x);
        if (g != 0.0) s += g * m.trig(xi, dims);
    }
    return s;
}

double OscSpec::W_at(const Point& x) const { return W.amplitude == 0.0 ? 0.0 : W.value(x); }

Surface Surface::circle(double center_x1, double center_y, double radius, int count) {
    if (!(radius > 0.0) || count < 3) throw ConfigError("circle needs a positive radius and >= 3 nodes");
    Surface s;
    s.name = "circle";
    const double w = 2.0 * std::numbers::pi * radius / count;
    for (int j = 0; j < count; ++j) {
        const double th = 2.0 * std::numbers::pi * j / count;
        Point p{};
        p[0] = center_x1 + radius * std::cos(th);
        p[1] = center_y + radius * std::sin(th);
        s.nodes.push_back(p);
        s.weights.push_back(w);
    }
    return s;
}

double Surface::measure() const {
    double m = 0.0;
    for (double w : weights) m += w;
    return m;
}

const char* kind_name(const PerturbationSpec& spec) {
    switch (spec.index()) {
    case 0: return "loc";
    case 1: return "osc";
    default: return "dlt";
    }
}

namespace {

// Strictly inside the reference cell (-l/2, l/2)^n x (0, d).
bool strictly_inside(const Point& x, const WindowGrid& g) {
    for (int i = 0; i < g.n(); ++i)
        if (!(std::abs(x[i]) < 0.5 * g.lattice().basis_lengths[i])) return false;
    return x[g.n()] > 0.0 && x[g.n()] < g.d();
}

void check_envelope(const Envelope& e, const WindowGrid& g, const char* what) {
    if (e.amplitude == 0.0) return;
    if (e.dims != g.dims()) throw ConfigError(std::string(what) + " envelope has wrong dimension");
    for (int i = 0; i < g.dims(); ++i) {
        if (!(e.radius[i] > 0.0)) throw ConfigError(std::string(what) + " envelope radius must be positive");
        Point lo = e.center, hi = e.center;
        lo[i] -= e.radius[i];
        hi[i] += e.radius[i];
        const bool ok = i < g.n() ? (std::abs(lo[i]) < 0.5 * g.lattice().basis_lengths[i] &&
                                     std::abs(hi[i]) < 0.5 * g.lattice().basis_lengths[i])
                                  : (lo[i] > 0.0 && hi[i] < g.d());
        if (!ok) throw ConfigError(std::string(what) + " support must lie strictly inside the cell");
    }
}

}  // namespace

void validate_perturbation(const PerturbationSpec& spec, const WindowGrid& g) {
    if (const auto* loc = std::get_if<LocSpec>(&spec)) {
        if (g.n() != 1) throw ConfigError("localized perturbation requires n = 1");
        if (!(loc->a >= 0.0 && loc->a < 1.0)) throw ConfigError("exponent a must lie in [0, 1)");
        if (!loc->profile.f || !(loc->profile.radius > 0.0)) throw ConfigError("localized profile is empty");
    } else if (const auto* osc = std::get_if<OscSpec>(&spec)) {
        if (!(osc->a >= 0.0 && osc->a < 1.0)) throw ConfigError("exponent a must lie in [0, 1)");
        for (const OscMode& m : osc->modes) {
            bool nonzero = false;
            for (int i = 0; i < g.dims(); ++i) nonzero = nonzero || m.kappa[i] != 0;
            if (!nonzero) throw ConfigError("oscillating mode with kappa = 0 has nonzero xi-mean");
            check_envelope(m.envelope, g, "oscillating");
        }
        check_envelope(osc->W, g, "W");
        // Zero xi-mean, checked numerically at the envelope centres.
        constexpr int kGrid = 64;
        for (const OscMode& probe : osc->modes) {
            double sum = 0.0, amax = 0.0;
            MultiIndex c{};
            const std::size_t total = static_cast<std::size_t>(std::pow(kGrid, g.dims()));
            for (std::size_t idx = 0; idx < total; ++idx) {
                Point xi{};
                std::size_t r = idx;
                for (int i = 0; i < g.dims(); ++i) {
                    c[i] = static_cast<int>(r % kGrid);
                    r /= kGrid;
                    xi[i] = static_cast<double>(c[i]) / kGrid;
                }
                const double q = osc->Q(probe.envelope.center, xi, g.dims());
                sum += q;
                amax = std::max(amax, std::abs(q));
            }
            if (std::abs(sum / static_cast<double>(total)) > 1e-8 * std::max(amax, 1.0))
                throw ConfigError("oscillating profile does not have zero xi-mean");
        }
    } else {
        const auto& dlt = std::get<DltSpec>(spec);
        if (dlt.surface.nodes.empty() || dlt.surface.nodes.size() != dlt.surface.weights.size())
            throw ConfigError("surface quadrature is empty or inconsistent");
        for (std::size_t j = 0; j < dlt.surface.nodes.size(); ++j) {
            if (!strictly_inside(dlt.surface.nodes[j], g)) throw ConfigError("surface leaves the reference cell");
            if (!(dlt.b_at(dlt.surface.nodes[j]) >= 0.0)) throw ConfigError("surface density b must be nonnegative");
        }
    }
}

double DiscreteOperator::form_value(std::span<const double> u) const {
    std::vector<double> ku(u.size());
    const kernels::CsrView view{static_cast<std::size_t>(form.rows()), form.outerIndexPtr(), form.innerIndexPtr(),
                                form.valuePtr()};
    kernels::spmv(view, u, ku);
    return kernels::dot(u, ku);
}

std::vector<double> DiscreteOperator::to_symmetric_basis(std::span<const double> u) const {
    std::vector<double> y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) y[i] = std::sqrt(mass[i]) * u[i];
    return y;
}

std::vector<double> DiscreteOperator::from_symmetric_basis(std::span<const double> y) const {
    std::vector<double> u(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) u[i] = y[i] / std::sqrt(mass[i]);
    return u;
}

DiscreteOperator assemble_unperturbed(std::shared_ptr<const WindowGrid> grid, const TransversePotential& V0) {
    if (!grid) throw ConfigError("assemble_unperturbed: null grid");
    const WindowGrid& g = *grid;
    DiscreteOperator op;
    op.grid = grid;
    op.tag = "unperturbed";
    const std::size_t nu = g.unknown_count();
    op.mass.resize(nu);
    std::vector<Triplet> t;
    t.reserve(nu * static_cast<std::size_t>(2 * g.dims() + 1));

    for (std::size_t u = 0; u < nu; ++u) {
        const std::size_t node = g.node_of_unknown(u);
        const MultiIndex idx = g.node_multi_index(node);
        op.mass[u] = g.dual_volume(node);
        const double v = V0 ? V0(idx[g.n()] * g.h_trans()) : 0.0;
        if (v != 0.0) t.emplace_back(static_cast<int>(u), static_cast<int>(u), op.mass[u] * v);

        for (int dir = 0; dir < g.dims(); ++dir) {
            const int last = dir == g.n() ? g.params().m_transverse : g.points_long() - 1;
            if (idx[dir] == last) continue;
            // Edge to the next node along dir; the dual face area is the
            // product of the other directions' weights.
            double face = 1.0;
            for (int o = 0; o < g.dims(); ++o) {
                if (o == dir) continue;
                face *= o == g.n() ? g.trans_weight(idx[o]) : g.long_weight(o, idx[o]);
            }
            const double h = dir == g.n() ? g.h_trans() : g.h_long(dir);
            const double c = face / h;
            t.emplace_back(static_cast<int>(u), static_cast<int>(u), c);
            const std::size_t next = node + stride_of(g, dir);
            if (auto q = g.unknown_of_node(next)) {
                t.emplace_back(static_cast<int>(*q), static_cast<int>(*q), c);
                t.emplace_back(static_cast<int>(u), static_cast<int>(*q), -c);
                t.emplace_back(static_cast<int>(*q), static_cast<int>(u), -c);
            }
        }
        // Edge from an eliminated Dirichlet node below/above.
        if (idx[g.n()] == 1 && !g.transverse_is_unknown(0)) {
            double face = 1.0;
            for (int o = 0; o < g.n(); ++o) face *= g.long_weight(o, idx[o]);
            t.emplace_back(static_cast<int>(u), static_cast<int>(u), face / g.h_trans());
        }
    }
    finalize(op, t);
    return op;
}

double eval_loc_potential(const LocSpec& spec, double x1, double t) {
    if (t < 0.0) throw std::invalid_argument("eval_loc_potential: negative scale");
    if (t == 0.0) return 0.0;
    return std::pow(t, -spec.a) * spec.profile(x1 / t);
}

namespace {

double profile_integral(const Profile1D& p) {
    return integrate_adaptive(p.f, -p.radius, 0.0).value + integrate_adaptive(p.f, 0.0, p.radius).value;
}

// Integral of the profile over zeta in [lo, hi], split at the origin.
double profile_integral(const Profile1D& p, double lo, double hi) {
    lo = std::max(lo, -p.radius);
    hi = std::min(hi, p.radius);
    if (!(hi > lo)) return 0.0;
    if (lo < 0.0 && hi > 0.0)
        return integrate_adaptive(p.f, lo, 0.0).value + integrate_adaptive(p.f, 0.0, hi).value;
    return integrate_adaptive(p.f, lo, hi).value;
}

}  // namespace

std::vector<double> loc_column_masses(const WindowGrid& g, const LocSpec& spec, double eps, const RandomField& omega) {
    validate_perturbation(spec, g);
    if (!(eps >= 0.0)) throw ConfigError("eps must be nonnegative");
    const std::vector<MultiIndex> cells = cells_of(g.window());
    if (omega.omega.size() != cells.size()) throw ConfigError("random field does not match window");
    const double l = g.lattice().basis_lengths[0];
    const double h = g.h_long(0);
    const double x0 = g.window().alpha[0] * l;
    const int pl = g.points_long();
    std::vector<double> mass(static_cast<std::size_t>(pl), 0.0);
    const double total_profile = profile_integral(spec.profile);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const double w = omega.omega[c];
        if (w == 0.0 || eps == 0.0) continue;
        const double t = eps * w;
        const double center = g.cell_center(cells[c], 0);
        const double reach = t * spec.profile.radius;
        if (!(reach < 0.5 * l))
            throw ConfigError("localized support exceeds cell " + cell_label(cells[c], 1) + " (eps too large)");
        const double scale = std::pow(t, 1.0 - spec.a);
        if (w < kOmegaFloor) {
            const auto col = static_cast<std::size_t>(std::lround((center - x0) / h));
            mass[col] += scale * total_profile;
            continue;
        }
        const int first = std::max(0, static_cast<int>(std::floor((center - reach - x0) / h - 0.5)));
        const int last = std::min(pl - 1, static_cast<int>(std::ceil((center + reach - x0) / h + 0.5)));
        for (int i = first; i <= last; ++i) {
            const double xi = x0 + i * h;
            const double lo = std::max(xi - 0.5 * h, x0);
            const double hi = std::min(xi + 0.5 * h, x0 + (pl - 1) * h);
            // Substituting zeta = (x - center)/t turns the dual-cell integral of
            // t^{-a} W((x - center)/t) into t^{1-a} * int W dzeta.
            mass[static_cast<std::size_t>(i)] += scale * profile_integral(spec.profile, (lo - center) / t, (hi - center) / t);
        }
    }
    return mass;
}

DiscreteOperator assemble_loc(const DiscreteOperator& base, const LocSpec& spec, double eps, const RandomField& omega) {
    const WindowGrid& g = *base.grid;
    const std::vector<double> columns = loc_column_masses(g, spec, eps, omega);
    std::vector<double> diag(base.size(), 0.0);
    for (std::size_t u = 0; u < diag.size(); ++u) {
        const MultiIndex idx = g.node_multi_index(g.node_of_unknown(u));
        const double m = columns[static_cast<std::size_t>(idx[0])];
        if (m != 0.0) diag[u] = m * g.trans_weight(idx[1]);
    }
    return with_diagonal(base, diag, "loc");
}

DiscreteOperator assemble_osc(const DiscreteOperator& base, const OscSpec& spec, double eps, const RandomField& omega,
                              double omega_floor) {
    const WindowGrid& g = *base.grid;
    validate_perturbation(spec, g);
    const std::vector<MultiIndex> cells = cells_of(g.window());
    if (omega.omega.size() != cells.size()) throw ConfigError("random field does not match window");
    std::vector<std::string> notes;
    std::vector<double> scale(cells.size(), 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const double w = omega.omega[c];
        if (w == 0.0 || eps == 0.0) continue;
        if (w < omega_floor) {
            notes.push_back("cutoff cell " + cell_label(cells[c], g.n()));
            continue;
        }
        const double t = eps * w;
        for (int i = 0; i < g.dims(); ++i) {
            bool oscillates = false;
            for (const OscMode& m : spec.modes) oscillates = oscillates || m.kappa[i] != 0;
            const double h = i < g.n() ? g.h_long(i) : g.h_trans();
            if (oscillates && h > t / 10.0)
                throw ConfigError("oscillation unresolved in cell " + cell_label(cells[c], g.n()) +
                                  ": need h <= eps*omega/10");
        }
        scale[c] = t;
    }

    std::vector<double> diag(base.size(), 0.0);
    for (std::size_t u = 0; u < diag.size(); ++u) {
        const std::size_t node = g.node_of_unknown(u);
        const MultiIndex cell = g.cell_of_node(node);
        const double t = scale[g.cell_ordinal(cell)];
        if (t == 0.0) continue;
        const Point x = g.local_coordinates(node, cell);
        Point xi{};
        for (int i = 0; i < g.dims(); ++i) xi[i] = x[i] / t;
        const double v = std::pow(t, -spec.a) * spec.Q(x, xi, g.dims()) + std::pow(t, 2.0 - 2.0 * spec.a) * spec.W_at(x);
        diag[u] = base.mass[u] * v;
    }
    DiscreteOperator op = with_diagonal(base, diag, "osc");
    op.notes = std::move(notes);
    return op;
}

DiscreteOperator assemble_dlt(const DiscreteOperator& base, const DltSpec& spec, double eps, const RandomField& omega) {
    const WindowGrid& g = *base.grid;
    validate_perturbation(spec, g);
    const std::vector<MultiIndex> cells = cells_of(g.window());
    if (omega.omega.size() != cells.size()) throw ConfigError("random field does not match window");

    DiscreteOperator op;
    op.grid = base.grid;
    op.mass = base.mass;
    op.tag = "dlt";
    std::vector<Triplet> t = form_triplets(base.form);
    const std::size_t base_count = t.size();
    const int D = g.dims();
    const int corners = 1 << D;
    std::vector<std::pair<int, double>> c;

    for (std::size_t k = 0; k < cells.size(); ++k) {
        const double strength = eps * omega.omega[k];
        if (strength == 0.0) continue;
        for (std::size_t j = 0; j < spec.surface.nodes.size(); ++j) {
            const double bw = spec.b_at(spec.surface.nodes[j]) * spec.surface.weights[j];
            if (bw == 0.0) continue;
            Point x = spec.surface.nodes[j];
            MultiIndex base_idx{};
            Point frac{};
            for (int i = 0; i < D; ++i) {
                double s;
                int limit;
                if (i < g.n()) {
                    x[i] += g.cell_center(cells[k], i);
                    s = (x[i] - g.window().alpha[i] * g.lattice().basis_lengths[i]) / g.h_long(i);
                    limit = g.points_long() - 2;
                } else {
                    s = x[i] / g.h_trans();
                    limit = g.params().m_transverse - 1;
                }
                base_idx[i] = std::clamp(static_cast<int>(std::floor(s)), 0, limit);
                frac[i] = s - base_idx[i];
            }
            c.clear();
            for (int corner = 0; corner < corners; ++corner) {
                MultiIndex idx = base_idx;
                double weight = 1.0;
                for (int i = 0; i < D; ++i) {
                    const bool up = (corner >> i) & 1;
                    idx[i] += up ? 1 : 0;
                    weight *= up ? frac[i] : 1.0 - frac[i];
                }
                if (weight == 0.0) continue;
                if (auto u = g.unknown_of_node(g.node_from_multi_index(idx))) c.emplace_back(static_cast<int>(*u), weight);
            }
            const double s = strength * bw;
            for (const auto& [p, wp] : c)
                for (const auto& [q, wq] : c) t.emplace_back(p, q, s * wp * wq);
        }
    }
    if (t.size() == base_count) {
        op.form = base.form;
        op.matrix = base.matrix;
        return op;
    }
    finalize(op, t);
    return op;
}

DiscreteOperator assemble(const DiscreteOperator& base, const PerturbationSpec& spec, double eps, const RandomField& omega) {
    return std::visit(
        [&](const auto& s) -> DiscreteOperator {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LocSpec>) return assemble_loc(base, s, eps, omega);
            else if constexpr (std::is_same_v<T, OscSpec>) return assemble_osc(base, s, eps, omega);
            else return assemble_dlt(base, s, eps, omega);
        },
        spec);
}

}  // namespace strip
