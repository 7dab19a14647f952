#pragma once
// Discrete Hamiltonians on a WindowGrid: the unperturbed operator -Laplacian +
// V0(x_{n+1}) with lateral Neumann faces, plus the three random perturbations
// (localized potential, fast-oscillating potential, surface delta interaction).
//
// Discretization: vertex-centred finite volumes on the tensor grid. The
// quadratic form matrix K (stiffness + potential + surface terms) and the
// lumped mass M (dual-cell volumes) satisfy M^{-1} K = mirrored-ghost finite
// differences. Spectral work uses the exactly symmetric S = M^{-1/2} K M^{-1/2}.

#include <Eigen/Sparse>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "strip/geometry.hpp"
#include "strip/profiles.hpp"
#include "strip/rng.hpp"
#include "strip/transverse.hpp"

namespace strip {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Localized potential eps^{-a} W(x'/eps) centred in each cell (n = 1).
struct LocSpec {
    Profile1D profile = hat_profile();
    double a = 0.5;
};

/// One separable term g(x) * trig(2 pi kappa . xi) of the oscillating profile.
struct OscMode {
    Envelope envelope;
    MultiIndex kappa{};
    bool cosine = true;

    double trig(const Point& xi, int dims) const;
};

/// Fast-oscillating potential eps^{-a} Q(x, x/eps) + eps^{2-2a} W(x), with
/// Q = sum of modes (zero xi-mean since every kappa != 0).
struct OscSpec {
    std::vector<OscMode> modes;
    Envelope W;  // amplitude 0 disables
    double a = 0.5;

    double Q(const Point& x, const Point& xi, int dims) const;
    double W_at(const Point& x) const;
};

/// Closed surface inside the reference cell, as quadrature nodes in cell-local
/// coordinates (longitudinal measured from the cell centre).
struct Surface {
    std::string name;
    std::vector<Point> nodes;
    std::vector<double> weights;

    /// Circle in the (x1, x_{n+1}) plane, trapezoid rule in arclength.
    static Surface circle(double center_x1, double center_y, double radius, int count);
    double measure() const;
};

struct DltSpec {
    Surface surface;
    std::function<double(const Point&)> b;  // empty means b = 1

    double b_at(const Point& x) const { return b ? b(x) : 1.0; }
};

using PerturbationSpec = std::variant<LocSpec, OscSpec, DltSpec>;

const char* kind_name(const PerturbationSpec& spec);

/// Checks the invariants of a perturbation against a grid's cell geometry.
void validate_perturbation(const PerturbationSpec& spec, const WindowGrid& grid);

struct DiscreteOperator {
    std::shared_ptr<const WindowGrid> grid;
    SparseMatrix form;         // K, exactly symmetric
    std::vector<double> mass;  // lumped mass per unknown
    SparseMatrix matrix;       // S = M^{-1/2} K M^{-1/2}, exactly symmetric
    std::string tag;
    std::vector<std::string> notes;

    std::size_t size() const { return mass.size(); }
    /// u^T K u for nodal values u over the unknowns.
    double form_value(std::span<const double> u) const;
    /// y = M^{1/2} u
    std::vector<double> to_symmetric_basis(std::span<const double> u) const;
    /// u = M^{-1/2} y
    std::vector<double> from_symmetric_basis(std::span<const double> y) const;
};

DiscreteOperator assemble_unperturbed(std::shared_ptr<const WindowGrid> grid, const TransversePotential& V0);

/// W_loc(x1, t) = t^{-a} W(x1 / t), zero at t = 0.
double eval_loc_potential(const LocSpec& spec, double x1, double t);

inline constexpr double kOmegaFloor = 1e-3;

/// Mass-lumped: each node receives the average of the potential over its dual
/// cell. Cells with omega below kOmegaFloor deposit the whole mass on the
/// column nearest the cell centre.
DiscreteOperator assemble_loc(const DiscreteOperator& unperturbed, const LocSpec& spec, double eps,
                              const RandomField& omega);

/// Pointwise sampling; requires h_long <= eps*omega_k/10 on every cell with
/// omega_k >= omega_floor. Cells below the floor are left unperturbed and noted.
DiscreteOperator assemble_osc(const DiscreteOperator& unperturbed, const OscSpec& spec, double eps,
                              const RandomField& omega, double omega_floor = kOmegaFloor);

/// Surface term eps * omega_k * sum_j b(s_j) w_j c_j c_j^T, with c_j the
/// multilinear interpolation weights of node s_j.
DiscreteOperator assemble_dlt(const DiscreteOperator& unperturbed, const DltSpec& spec, double eps,
                              const RandomField& omega);

DiscreteOperator assemble(const DiscreteOperator& unperturbed, const PerturbationSpec& spec, double eps,
                          const RandomField& omega);

/// Per-column masses added by assemble_loc (n = 1), indexed by longitudinal
/// grid index. Their sum is sum_k (eps omega_k)^{1-a} int W.
std::vector<double> loc_column_masses(const WindowGrid& grid, const LocSpec& spec, double eps,
                                      const RandomField& omega);

}  // namespace strip
