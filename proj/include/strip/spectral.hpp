#pragma once
// Bottom-of-spectrum eigensolvers, two-sided gap checks, resolvent block norms
// and exponential decay fits.

#include <Eigen/Sparse>
#include <optional>
#include <utility>
#include <vector>

#include "strip/geometry.hpp"
#include "strip/hamiltonian.hpp"
#include "strip/transverse.hpp"

namespace strip {

using GeneralSparse = Eigen::SparseMatrix<double>;

struct EigenOptions {
    int k = 1;
    double tol = 1e-9;
    int max_restarts = 60;
    /// A value believed to lie at or below the bottom of the spectrum. The
    /// solver verifies it by inertia and moves it down if needed.
    std::optional<double> shift_hint;
    bool want_vectors = false;
};

struct EigenResult {
    std::vector<double> eigenvalues;  // ascending
    std::vector<double> residuals;    // ||A v - lambda v|| for unit v
    std::vector<Eigen::VectorXd> vectors;
    int iterations = 0;
    int factorizations = 0;
};

/// k smallest eigenvalues of a symmetric sparse matrix: shift-invert Lanczos
/// with full reorthogonalization, shifts certified below the spectrum by the
/// inertia of an LDL^T factorization.
EigenResult smallest_eigs_symmetric(const SparseMatrix& S, const EigenOptions& options = {});

EigenResult smallest_eigs(const DiscreteOperator& H, int k = 1, double tol = 1e-9);

/// Bottom real eigenvalues of a non-symmetric matrix similar to a symmetric
/// one: shift-invert Arnoldi with sparse LU. A complex Ritz value among the
/// wanted ones raises NumericalError.
EigenResult smallest_eigs_general(const GeneralSparse& A, double shift, const EigenOptions& options = {});

/// Number of eigenvalues of the symmetric S strictly below sigma (Sylvester
/// inertia of S - sigma I).
int count_below(const SparseMatrix& S, double sigma);

/// 10 |Lambda0(m) - Lambda0(2m)|.
double transverse_h_tolerance(const TransverseProblem& problem);

struct TwoSidedReport {
    double gap = 0.0;    // lambda - Lambda0
    double bound = 0.0;  // C_hat / N^2
    bool lower_ok = false;
    bool upper_ok = false;
    bool ok() const { return lower_ok && upper_ok; }
};

TwoSidedReport two_sided_check(double lambda_min, double lambda0, int N, double C_hat, double h_tolerance);

/// Inclusive range of lattice cells.
struct CellBox {
    MultiIndex lo{};
    MultiIndex hi{};
};

/// Euclidean distance between the closed boxes (closest faces).
double box_distance(const CellBox& a, const CellBox& b, const LatticeSpec& lattice);

/// Unknowns whose owning cell lies in the box.
std::vector<int> box_unknowns(const WindowGrid& grid, const CellBox& box);

struct BlockNormOptions {
    double rel_tol = 1e-4;
    int max_iterations = 300;
};

/// || chi_B1 (H - lambda)^{-1} chi_B2 || in the L2 norm of the grid. Requires
/// lambda below the spectrum of H; otherwise NumericalError.
double resolvent_block_norm(const DiscreteOperator& H, double lambda, const CellBox& b1, const CellBox& b2,
                            const BlockNormOptions& options = {});

/// Same, reusing one factorization of S - lambda for several box pairs.
class ResolventProbe {
public:
    ResolventProbe(const DiscreteOperator& H, double lambda);
    ~ResolventProbe();
    ResolventProbe(const ResolventProbe&) = delete;
    ResolventProbe& operator=(const ResolventProbe&) = delete;

    double block_norm(const CellBox& b1, const CellBox& b2, const BlockNormOptions& options = {}) const;
    double block_norm(const std::vector<int>& rows, const std::vector<int>& cols, const BlockNormOptions& options = {}) const;

private:
    struct Impl;
    Impl* impl_;
};

struct DecayFit {
    std::vector<std::pair<double, double>> points;  // (distance, log norm)
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double rate = 0.0;  // -slope, i.e. C2 * delta
    double c1 = 0.0;    // delta * exp(intercept)
};

DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples, double delta);

/// Least-squares line y = slope x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace strip
