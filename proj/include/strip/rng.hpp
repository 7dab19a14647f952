#pragma once
// Counter-based random streams and the distribution of the i.i.d. cell
// variables omega_k in [0, 1].

#include <cstdint>
#include <string>
#include <vector>

#include "strip/geometry.hpp"

namespace strip {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of one trial, derived from the master seed and the trial index.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

/// Uniform double in [0, 1) keyed by (master_seed, trial_index, counter).
/// Pure function of its arguments, so draws do not depend on scheduling.
double counter_uniform(std::uint64_t master_seed, std::uint64_t trial_index, std::uint64_t counter);

struct MeasureSpec {
    enum class Kind { Uniform, Bernoulli, Table };
    Kind kind = Kind::Uniform;
    double low = 0.0;   // Uniform
    double high = 1.0;  // Uniform
    double p = 0.5;     // Bernoulli: P(omega = 1)
    // Table: inverse CDF samples, u strictly increasing from 0 to 1, omega
    // nondecreasing in [0, 1]; linear in between.
    std::vector<double> table_u;
    std::vector<double> table_omega;

    static MeasureSpec uniform(double low = 0.0, double high = 1.0);
    static MeasureSpec bernoulli(double p);
    static MeasureSpec table(std::vector<double> u, std::vector<double> omega);

    void validate() const;
    /// Inverse CDF.
    double quantile(double u) const;
    /// E omega^s for s > 0.
    double moment(double s) const;
    std::string describe() const;
};

struct RandomField {
    std::vector<double> omega;  // indexed by position in cells_of(window)
    std::uint64_t master_seed = 0;
    std::uint64_t trial_index = 0;
    std::uint64_t seed = 0;
};

RandomField sample_omega(const MeasureSpec& measure, const Window& window, std::uint64_t master_seed,
                         std::uint64_t trial_index);

RandomField constant_field(const Window& window, double value);

}  // namespace strip
