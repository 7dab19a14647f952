#pragma once
// Multiplication gauges that turn the singular perturbations into regular
// ones, the transformed operators built from their analytic coefficients, and
// perturbation-theory coefficient oracles.

#include <string>
#include <vector>

#include "strip/cellproblem.hpp"
#include "strip/hamiltonian.hpp"
#include "strip/spectral.hpp"

namespace strip {

/// C^2 cutoff: 1 for |x| <= rho1, 0 for |x| >= rho2, quintic blend between.
struct Cutoff {
    double rho1 = 0.15;
    double rho2 = 0.35;

    static Cutoff for_cell(double length) { return {0.15 * length, 0.35 * length}; }
    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
};

struct GaugeField {
    std::vector<double> values;  // per unknown
    double min_value = 1.0;
    double max_deviation = 0.0;  // sup |Q - 1|
    Cutoff cutoff;
};

/// 1 + sum_k t^{2-a} Wl*((x1 - c_k)/t) chi(x1 - c_k), t = eps omega_k.
GaugeField build_gauge_loc(const WindowGrid& grid, const LocSpec& spec, double eps, const RandomField& omega);
GaugeField build_gauge_loc(const WindowGrid& grid, const LocSpec& spec, double eps, const RandomField& omega,
                           const Cutoff& cutoff);

/// 1 + sum_k t^{2-a} Ws*(x - c_k, (x - c_k)/t).
GaugeField build_gauge_osc(const WindowGrid& grid, const OscSpec& spec, double eps, const RandomField& omega,
                           double omega_floor = kOmegaFloor);

struct TransformedAssembly {
    GeneralSparse matrix;  // acts on the symmetric basis y = M^{1/2} u
    std::string method;    // "similarity" or "analytic"
    double max_first_order = 0.0;   // max |A_1| (or max_j |A_j|)
    double max_zeroth_order = 0.0;  // max |A_0|
};

/// G^{-1} S G with G = diag(gauge); same spectrum as S.
TransformedAssembly transform_similarity(const DiscreteOperator& H, const GaugeField& gauge);

/// Unperturbed operator plus sum_k t^{1-a} (A_1 d/dx1 + A_0), central differences.
TransformedAssembly assemble_transformed_loc(const DiscreteOperator& unperturbed, const LocSpec& spec, double eps,
                                             const RandomField& omega);

/// Unperturbed operator plus sum_k t^{1-a} (sum_j A_j d/dx_j + A_0).
TransformedAssembly assemble_transformed_osc(const DiscreteOperator& unperturbed, const OscSpec& spec, double eps,
                                             const RandomField& omega, double omega_floor = kOmegaFloor);

/// Loc coefficients at a cell-local x1 for scale t > 0.
struct LocCoefficients {
    double a1 = 0.0;
    double a0 = 0.0;
    double gauge = 1.0;
};
LocCoefficients loc_coefficients(const LocCorrector& wstar, const LocSpec& spec, const Cutoff& cutoff, double x1,
                                 double t);

/// Osc coefficients at a cell-local x for scale t > 0; a[j] multiplies d/dx_j.
struct OscCoefficients {
    Point a{};
    double a0 = 0.0;
    double gauge = 1.0;
};
OscCoefficients osc_coefficients(const OscSpec& spec, const Point& x, int dims, double t);

/// Corrector of the oscillating profile and its derivatives at (x, xi):
/// every mode g trig(2 pi kappa.xi) contributes -g trig / (4 pi^2 |kappa|^2).
struct OscCorrectorValue {
    double value = 0.0;
    Point dx{};      // d/dx_j
    Point dxi{};     // d/dxi_j
    Point dxdxi{};   // d^2/dx_j dxi_j
    double lap_x = 0.0;
};
OscCorrectorValue osc_corrector(const OscSpec& spec, const Point& x, const Point& xi, int dims);

/// First-order eigenvalue coefficient per unit (eps omega)^{1-a} (loc), per
/// unit eps omega (dlt); zero for osc.
double first_order_coeff(const PerturbationSpec& spec, const TransverseMode& mode, const LatticeSpec& lattice);

/// Second-order coefficient of the oscillating perturbation per unit
/// (eps omega)^{2-2a}.
double second_order_coeff_osc(const OscSpec& spec, const TransverseMode& mode, const LatticeSpec& lattice);

}  // namespace strip
