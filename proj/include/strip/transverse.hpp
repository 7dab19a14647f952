#pragma once
// Ground mode of the cross-sectional operator -d^2/dy^2 + V0 on (0, d).

#include <functional>
#include <vector>

#include "strip/geometry.hpp"

namespace strip {

using TransversePotential = std::function<double(double)>;

struct TransverseProblem {
    double d = 1.0;
    TransversePotential V0;  // empty means V0 = 0
    BoundaryKind bc_bottom = BoundaryKind::Dirichlet;
    BoundaryKind bc_top = BoundaryKind::Dirichlet;
    int m = 64;
};

struct TransverseMode {
    double lambda0 = 0.0;
    /// Samples at y_j = j d / m, j = 0..m (Dirichlet ends hold 0).
    std::vector<double> psi0;
    /// Trapezoid weights of the discrete L2(0, d) inner product.
    std::vector<double> weights;
    double residual = 0.0;
    double d = 1.0;
    int m = 0;

    double h() const { return d / m; }
};

/// Lowest eigenpair of the second-order vertex-centred discretization.
/// Neumann ends are the mirrored-ghost stencil, which is the symmetric
/// trapezoid-weighted form used here. psi0 is normalized in the discrete L2
/// norm and positive at its largest-magnitude interior node.
TransverseMode solve_transverse(const TransverseProblem& problem);

/// Up to `count` lowest eigenvalues (ascending), same discretization.
std::vector<double> transverse_eigenvalues(const TransverseProblem& problem, int count);

/// Linear interpolation of psi0 at y in [0, d].
double psi0_at(const TransverseMode& mode, double y);

}  // namespace strip
