#pragma once
// Lattice, cells, windows and tensor grids for finite pieces of the strip
// {0 < x_{n+1} < d}.
//
// Cell k of a window occupies prod_i (k_i l_i, (k_i + 1) l_i] in the
// longitudinal directions; a point on a shared face belongs to the lower cell.
// Perturbation profiles are evaluated in cell-local coordinates measured from
// the cell center, so the reference cell seen by a profile is
// prod_i (-l_i/2, l_i/2], which contains the origin.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace strip {

inline constexpr int kMaxDims = 4;  // n <= 3 longitudinal + 1 transverse

using MultiIndex = std::array<int, kMaxDims>;
using Point = std::array<double, kMaxDims>;

enum class BoundaryKind { Dirichlet, Neumann };

const char* to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string_view name);

struct LatticeSpec {
    int n = 1;
    std::vector<double> basis_lengths{1.0};

    static LatticeSpec unit(int n);
    void validate() const;
    double cell_volume() const;
};

struct Window {
    std::vector<int> alpha{0};
    int N = 1;

    int dims() const { return static_cast<int>(alpha.size()); }
    std::size_t cell_count() const;
};

/// Lattice points of the window in lexicographic order (first coordinate most
/// significant). Random fields are indexed by position in this list.
std::vector<MultiIndex> cells_of(const Window& window);

struct GridParams {
    double d = 1.0;
    int m_per_cell = 16;
    int m_transverse = 16;
    BoundaryKind bc_bottom = BoundaryKind::Dirichlet;
    BoundaryKind bc_top = BoundaryKind::Dirichlet;
};

class WindowGrid {
public:
    static WindowGrid build(const LatticeSpec& lattice, const Window& window, const GridParams& params);

    const LatticeSpec& lattice() const { return lattice_; }
    const Window& window() const { return window_; }
    const GridParams& params() const { return params_; }

    int n() const { return lattice_.n; }
    int dims() const { return lattice_.n + 1; }
    double d() const { return params_.d; }
    double h_long(int dir) const { return lattice_.basis_lengths[dir] / params_.m_per_cell; }
    double h_trans() const { return params_.d / params_.m_transverse; }

    /// Points per longitudinal direction, N * m_per_cell + 1.
    int points_long() const { return points_long_; }
    int points_trans() const { return params_.m_transverse + 1; }

    /// Full tensor node count, before Dirichlet elimination.
    std::size_t node_count() const { return node_count_; }
    std::size_t unknown_count() const { return unknown_to_node_.size(); }

    MultiIndex node_multi_index(std::size_t node) const;
    std::size_t node_from_multi_index(const MultiIndex& idx) const;
    std::optional<std::size_t> unknown_of_node(std::size_t node) const;
    std::size_t node_of_unknown(std::size_t unknown) const { return unknown_to_node_[unknown]; }

    Point coordinates(std::size_t node) const;
    /// Product of the per-direction trapezoid weights (half spacing on the
    /// window boundary).
    double dual_volume(std::size_t node) const;
    double long_weight(int dir, int index) const;
    double trans_weight(int index) const;

    /// Lattice cell owning a node; exact integer arithmetic on grid indices.
    MultiIndex cell_of_node(std::size_t node) const;
    /// Position of a window cell in cells_of(window).
    std::size_t cell_ordinal(const MultiIndex& cell) const;
    std::size_t cell_ordinal_of_node(std::size_t node) const { return cell_ordinal(cell_of_node(node)); }

    /// Cell containing x (closure of the window); ties toward the lower cell.
    MultiIndex cell_of_point(std::span<const double> x) const;

    /// Center of cell k along longitudinal direction dir.
    double cell_center(const MultiIndex& cell, int dir) const;

    /// Coordinates relative to the owning cell's center (transverse unchanged).
    Point local_coordinates(std::size_t node, const MultiIndex& cell) const;

    bool transverse_is_unknown(int j) const;

private:
    LatticeSpec lattice_;
    Window window_;
    GridParams params_;
    int points_long_ = 0;
    std::size_t node_count_ = 0;
    std::vector<std::int64_t> node_to_unknown_;
    std::vector<std::size_t> unknown_to_node_;
};

}  // namespace strip
