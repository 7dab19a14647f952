#pragma once
// Periodic cell problem Laplace_xi W* = Q on the unit torus, the hypothesis
// integrals of the three perturbation types, and the oscillating-integral
// convergence checker.

#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "strip/hamiltonian.hpp"
#include "strip/transverse.hpp"

namespace strip {

/// Corrector for one fixed x, on an m^dims xi-grid. Samples are ordered with
/// the first xi coordinate varying fastest.
struct CorrectorSlice {
    int dims = 1;
    int m = 0;
    std::vector<std::complex<double>> coefficients;  // normalized DFT of W*, zero at kappa = 0
    std::vector<double> values;                      // W* at the grid nodes
    double energy = 0.0;                             // int |grad_xi W*|^2 dxi
    double residual = 0.0;                           // max |Laplace W* - Q| on the grid

    /// Signed integer frequency of DFT index c.
    int frequency(int c) const { return c <= m / 2 ? c : c - m; }
    /// Fourier synthesis at an arbitrary xi.
    double evaluate(const Point& xi) const;
};

inline constexpr int kDefaultXiGrid = 64;
inline constexpr int kDefaultXPoints = 32;

/// Rejects samples whose mean exceeds 1e-8 max(1, max|Q|).
CorrectorSlice solve_cell_poisson(const std::vector<double>& q_samples, int dims, int m);

/// sum_{kappa != 0} |Q^(kappa)|^2 / (4 pi^2 |kappa|^2).
double gradient_energy(const CorrectorSlice& slice);

/// Samples Q(x, .) on the m^dims xi-grid.
std::vector<double> sample_xi(const OscSpec& spec, const Point& x, int dims, int m);

/// Corrector data over the x-support of an oscillating profile: Gauss-Legendre
/// nodes over the bounding box of all mode envelopes with per-node energies.
struct CellCorrector {
    int dims = 0;
    std::vector<Point> nodes;
    std::vector<double> weights;
    std::vector<double> energy;
};

CellCorrector build_cell_corrector(const OscSpec& spec, int dims, int x_points = kDefaultXPoints,
                                   int m_xi = kDefaultXiGrid);

/// Localized corrector Wl*(xi) = 1/2 int |xi - zeta| W(zeta) dzeta, its
/// derivative 1/2 int sign(xi - zeta) W(zeta) dzeta, and W itself as second
/// derivative.
class LocCorrector {
public:
    explicit LocCorrector(Profile1D profile);

    double operator()(double xi) const;
    double derivative(double xi) const;
    double second_derivative(double xi) const { return profile_(xi); }
    double integral() const { return i0_; }
    double first_moment() const { return i1_; }
    double radius() const { return profile_.radius; }

private:
    Profile1D profile_;
    double i0_ = 0.0;
    double i1_ = 0.0;
    double integrate(const std::function<double(double)>& f, double a, double b) const;
};

LocCorrector wstar_loc(const LocSpec& spec);

struct HypothesisReport {
    const char* kind = "";
    double value = 0.0;
    double error_estimate = 0.0;
    bool passes = false;
};

HypothesisReport hypothesis_loc(const LocSpec& spec);

/// int W psi0^2 dx - int psi0^2 int |grad_xi Ws*|^2 dxi dx over the cell.
HypothesisReport hypothesis_osc(const OscSpec& spec, const TransverseMode& mode, int n,
                                int x_points = kDefaultXPoints, int m_xi = kDefaultXiGrid);

/// int_S b psi0^2 dS.
HypothesisReport hypothesis_dlt(const DltSpec& spec, const TransverseMode& mode, int n);

HypothesisReport hypothesis(const PerturbationSpec& spec, const TransverseMode& mode, int n);

struct OscillatingMeanReport {
    std::vector<double> eps;
    std::vector<double> errors;  // |int w(x, x/eps) dx - int int w dxi dx|
    double slope = std::numeric_limits<double>::infinity();  // infinite when every error is 0
};

/// Integrates w(x, x/eps) over the box [lo, hi] with a tensor trapezoid rule of
/// step <= eps/20 and compares with the xi-mean on the same x-nodes. The slope
/// is the least-squares order of log error against log eps.
OscillatingMeanReport oscillating_mean_check(const std::function<double(const Point&, const Point&)>& w, int dims,
                                             const Point& lo, const Point& hi, const std::vector<double>& eps_list,
                                             int m_xi = kDefaultXiGrid);

}  // namespace strip
