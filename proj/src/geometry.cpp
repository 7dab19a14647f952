#include "strip/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "strip/errors.hpp"

namespace strip {

const char* to_string(BoundaryKind kind) { return kind == BoundaryKind::Dirichlet ? "dirichlet" : "neumann"; }

BoundaryKind boundary_kind_from_string(std::string_view name) {
    if (name == "dirichlet" || name == "Dirichlet") return BoundaryKind::Dirichlet;
    if (name == "neumann" || name == "Neumann") return BoundaryKind::Neumann;
    throw ConfigError("unknown boundary condition '" + std::string(name) + "'");
}

LatticeSpec LatticeSpec::unit(int n) {
    LatticeSpec spec;
    spec.n = n;
    spec.basis_lengths.assign(static_cast<std::size_t>(std::max(n, 0)), 1.0);
    spec.validate();
    return spec;
}

void LatticeSpec::validate() const {
    if (n < 1 || n + 1 > kMaxDims) throw ConfigError("lattice dimension must be in [1, 3]");
    if (basis_lengths.size() != static_cast<std::size_t>(n))
        throw ConfigError("lattice needs one basis length per direction");
    for (double l : basis_lengths)
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lattice basis lengths must be positive");
}

double LatticeSpec::cell_volume() const {
    double v = 1.0;
    for (double l : basis_lengths) v *= l;
    return v;
}

std::size_t Window::cell_count() const {
    std::size_t c = 1;
    for (int i = 0; i < dims(); ++i) c *= static_cast<std::size_t>(N);
    return c;
}

std::vector<MultiIndex> cells_of(const Window& window) {
    if (window.N < 1) throw ConfigError("window side count N must be >= 1");
    const int n = window.dims();
    std::vector<MultiIndex> cells;
    cells.reserve(window.cell_count());
    MultiIndex offset{};
    for (std::size_t c = 0; c < window.cell_count(); ++c) {
        MultiIndex k{};
        for (int i = 0; i < n; ++i) k[i] = window.alpha[i] + offset[i];
        cells.push_back(k);
        for (int i = n - 1; i >= 0; --i) {
            if (++offset[i] < window.N) break;
            offset[i] = 0;
        }
    }
    return cells;
}

WindowGrid WindowGrid::build(const LatticeSpec& lattice, const Window& window, const GridParams& params) {
    lattice.validate();
    if (window.dims() != lattice.n) throw ConfigError("window alpha must have n components");
    if (window.N < 1) throw ConfigError("window side count N must be >= 1");
    if (!(params.d > 0.0) || !std::isfinite(params.d)) throw ConfigError("strip width d must be positive");
    if (params.m_per_cell < 4) throw ConfigError("m_per_cell must be >= 4");
    if (params.m_transverse < 4) throw ConfigError("m_transverse must be >= 4");

    const std::int64_t per_dir = static_cast<std::int64_t>(window.N) * params.m_per_cell + 1;
    if (per_dir > std::numeric_limits<int>::max()) throw ConfigError("grid index range overflow");
    std::int64_t total = params.m_transverse + 1;
    for (int i = 0; i < lattice.n; ++i) {
        if (total > std::numeric_limits<int>::max() / per_dir) throw ConfigError("grid index range overflow");
        total *= per_dir;
    }

    WindowGrid g;
    g.lattice_ = lattice;
    g.window_ = window;
    g.params_ = params;
    g.points_long_ = static_cast<int>(per_dir);
    g.node_count_ = static_cast<std::size_t>(total);
    g.node_to_unknown_.assign(g.node_count_, -1);
    g.unknown_to_node_.reserve(g.node_count_);
    const int pt = g.points_trans();
    for (std::size_t node = 0; node < g.node_count_; ++node) {
        const int j = static_cast<int>(node % static_cast<std::size_t>(pt));
        if (!g.transverse_is_unknown(j)) continue;
        g.node_to_unknown_[node] = static_cast<std::int64_t>(g.unknown_to_node_.size());
        g.unknown_to_node_.push_back(node);
    }
    return g;
}

bool WindowGrid::transverse_is_unknown(int j) const {
    if (j == 0 && params_.bc_bottom == BoundaryKind::Dirichlet) return false;
    if (j == params_.m_transverse && params_.bc_top == BoundaryKind::Dirichlet) return false;
    return true;
}

// Transverse index varies fastest, then the last longitudinal direction.
MultiIndex WindowGrid::node_multi_index(std::size_t node) const {
    MultiIndex idx{};
    const std::size_t pt = static_cast<std::size_t>(points_trans());
    idx[n()] = static_cast<int>(node % pt);
    node /= pt;
    for (int i = n() - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(node % static_cast<std::size_t>(points_long_));
        node /= static_cast<std::size_t>(points_long_);
    }
    return idx;
}

std::size_t WindowGrid::node_from_multi_index(const MultiIndex& idx) const {
    std::size_t node = 0;
    for (int i = 0; i < n(); ++i) node = node * static_cast<std::size_t>(points_long_) + static_cast<std::size_t>(idx[i]);
    return node * static_cast<std::size_t>(points_trans()) + static_cast<std::size_t>(idx[n()]);
}

std::optional<std::size_t> WindowGrid::unknown_of_node(std::size_t node) const {
    const std::int64_t u = node_to_unknown_.at(node);
    if (u < 0) return std::nullopt;
    return static_cast<std::size_t>(u);
}

Point WindowGrid::coordinates(std::size_t node) const {
    const MultiIndex idx = node_multi_index(node);
    Point x{};
    for (int i = 0; i < n(); ++i)
        x[i] = window_.alpha[i] * lattice_.basis_lengths[i] + idx[i] * h_long(i);
    x[n()] = idx[n()] * h_trans();
    return x;
}

double WindowGrid::long_weight(int dir, int index) const {
    const double h = h_long(dir);
    return (index == 0 || index == points_long_ - 1) ? 0.5 * h : h;
}

double WindowGrid::trans_weight(int index) const {
    const double h = h_trans();
    return (index == 0 || index == params_.m_transverse) ? 0.5 * h : h;
}

double WindowGrid::dual_volume(std::size_t node) const {
    const MultiIndex idx = node_multi_index(node);
    double v = trans_weight(idx[n()]);
    for (int i = 0; i < n(); ++i) v *= long_weight(i, idx[i]);
    return v;
}

MultiIndex WindowGrid::cell_of_node(std::size_t node) const {
    const MultiIndex idx = node_multi_index(node);
    const int m = params_.m_per_cell;
    MultiIndex k{};
    for (int i = 0; i < n(); ++i) {
        const int off = idx[i] == 0 ? 0 : (idx[i] + m - 1) / m - 1;
        k[i] = window_.alpha[i] + off;
    }
    return k;
}

std::size_t WindowGrid::cell_ordinal(const MultiIndex& cell) const {
    std::size_t ord = 0;
    for (int i = 0; i < n(); ++i) {
        const int off = cell[i] - window_.alpha[i];
        if (off < 0 || off >= window_.N) throw std::out_of_range("cell outside window");
        ord = ord * static_cast<std::size_t>(window_.N) + static_cast<std::size_t>(off);
    }
    return ord;
}

MultiIndex WindowGrid::cell_of_point(std::span<const double> x) const {
    if (x.size() < static_cast<std::size_t>(n())) throw std::invalid_argument("point has too few coordinates");
    MultiIndex k{};
    for (int i = 0; i < n(); ++i) {
        const double l = lattice_.basis_lengths[i];
        const double s = x[i] / l - window_.alpha[i];
        if (!(s >= 0.0 && s <= window_.N)) throw std::out_of_range("point outside window");
        const int off = std::clamp(static_cast<int>(std::ceil(s)) - 1, 0, window_.N - 1);
        k[i] = window_.alpha[i] + off;
    }
    if (x.size() > static_cast<std::size_t>(n())) {
        const double y = x[n()];
        if (!(y >= 0.0 && y <= params_.d)) throw std::out_of_range("point outside window");
    }
    return k;
}

double WindowGrid::cell_center(const MultiIndex& cell, int dir) const {
    return (cell[dir] + 0.5) * lattice_.basis_lengths[dir];
}

Point WindowGrid::local_coordinates(std::size_t node, const MultiIndex& cell) const {
    Point x = coordinates(node);
    for (int i = 0; i < n(); ++i) x[i] -= cell_center(cell, i);
    return x;
}

}  // namespace strip
