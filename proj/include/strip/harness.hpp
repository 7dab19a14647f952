#pragma once
// Monte Carlo experiments: ratio batches, scaling studies, probability
// estimates for the low-gap event, resolvent decay, and result emission.

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "strip/config.hpp"
#include "strip/spectral.hpp"

namespace strip {

/// Worker count: STRIP_LOCALIZER_THREADS if set, else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on a bounded pool. Exceptions escaping
/// body are rethrown after all workers finish (first by index).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned workers = 0);

/// Shortest round-trip decimal.
std::string format_double(double v);

/// Grid, unperturbed operator and transverse data shared by a batch.
struct Setup {
    std::shared_ptr<const WindowGrid> grid;
    DiscreteOperator base;
    TransverseMode mode;
    double lambda0 = 0.0;  // discrete, same transverse resolution as the grid
    double htol = 0.0;     // 10 |Lambda0(m) - Lambda0(2m)|
    int N = 0;
    double eps = 0.0;
};

/// Longitudinal divisions per cell: the configured value, raised for the
/// oscillating kind so that h <= eps * omega / 10 on the measure's support.
int resolved_m_per_cell(const ExperimentConfig& config, double eps, double omega_low);

/// Smallest positive value the measure can produce (floored at omega_floor).
double lowest_positive_omega(const MeasureSpec& measure, double omega_floor);

Setup make_setup(const ExperimentConfig& config, int N, double eps, double omega_low = -1.0);

struct TrialRecord {
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    double omega_sum = 0.0;  // the sum entering the bound
    double lambda_min = 0.0;
    double gap = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    std::vector<std::string> flags;
    bool failed = false;
    std::string error;

    bool degenerate() const;
    std::string flag_string() const;
};

/// Exponent of omega in the bound's sum: 1 - a (loc), 2 - 2a (osc), 1 (dlt).
double omega_power(const char* kind, double a);
/// Bound RHS with c2 = 1.
double bound_rhs(const char* kind, double a, int n, int N, double eps, const std::vector<double>& omega);
/// Exponent p of the eps window eps < c1 / N^p.
double window_exponent(const char* kind, double a);

/// One draw: assemble, solve, compare with the bound.
TrialRecord run_trial(const Setup& setup, const ExperimentConfig& config, const RandomField& omega);

/// Trials [first, first + count) at (N, eps) with the configured measure.
std::vector<TrialRecord> run_trials(const ExperimentConfig& config, int N, double eps, int count,
                                    std::uint64_t first = 0);

/// config.trials draws at (config.N, config.eps).
std::vector<TrialRecord> run_ilse_trials(const ExperimentConfig& config);

struct C2Estimate {
    double value = 0.0;
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    int used = 0;
};

/// Infimum of ratios over non-degenerate, successful trials (needs >= 10).
C2Estimate estimate_c2(const std::vector<TrialRecord>& records);

/// lambda_min for omega = 1 on every cell.
double constant_omega_lambda(const ExperimentConfig& config, int N, double eps, double* lambda0 = nullptr,
                             double* htol = nullptr);

struct ScalingResult {
    std::vector<double> eps;
    std::vector<double> gaps;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double expected_slope = 0.0;
    double prefactor = 0.0;            // gap / eps^expected at the smallest eps
    double predicted_prefactor = 0.0;  // mu1 (loc, dlt) or mu2 (osc)
};

ScalingResult scaling_study(const ExperimentConfig& config, const std::vector<double>& eps_list, int N);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(lo <= hi); }
    bool contains(double x) const { return !empty() && x >= lo && x <= hi; }
};

Interval interval_IN(const char* kind, int N, double a, const MeasureSpec& measure, double c1_hat, double c2_hat,
                     int gamma);

struct ProbabilityEstimate {
    int events = 0;
    int trials = 0;
    double estimate = 0.0;
    double upper95 = 1.0;
};

/// One-sided exact (Clopper-Pearson) upper bound at level 1 - alpha.
double clopper_pearson_upper(int events, int trials, double alpha = 0.05);
ProbabilityEstimate probability_from_counts(int events, int trials);

struct ProbabilityResult {
    int N = 0;
    double eps = 0.0;
    double threshold = 0.0;  // N^{-1/2}
    ProbabilityEstimate estimate;
    double bound_prefactor = 0.0;  // N^{n(1 - 1/gamma)}
    double bound_scale = 0.0;      // N^{n/gamma}, multiplies -c4 in the exponent
    int failed = 0;
    std::vector<TrialRecord> records;
};

ProbabilityResult run_probability_experiment(const ExperimentConfig& config, int N, double eps);

/// Block norms between cell `origin` and cells origin + offset (n = 1), as
/// (face distance, norm) pairs.
std::vector<std::pair<double, double>> block_norm_profile(const DiscreteOperator& H, double lambda,
                                                          const std::vector<int>& offsets, int origin = 0);

struct CtTrial {
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    double lambda_min = 0.0;
    double gap = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    std::vector<std::pair<double, double>> samples;
    DecayFit fit;
    bool qualified = false;
    bool envelope_ok = false;
    bool rate_positive = false;
    bool pass = false;
    std::string note;
};

struct CtResult {
    int N = 0;
    double eps = 0.0;
    double envelope = 0.0;  // 2 sqrt(N)
    std::vector<CtTrial> trials;
    int qualified = 0;
    int passed = 0;
    ProbabilityEstimate pass_rate;
};

/// Draws trials until config.ct.target of them satisfy gap > N^{-1/2} (or
/// max_attempts draws), then probes the resolvent at Lambda0 + 1/(2 sqrt N).
CtResult run_ct_experiment(const ExperimentConfig& config, int N, double eps);

struct PilotConstants {
    double c1_hat = 0.0;
    double c2_hat = 0.0;
    double eps_max = 0.0;  // largest sweep eps passing the two-sided check at N_ref
    int N_ref = 0;
    C2Estimate c2;
    std::vector<std::pair<double, bool>> sweep;
};

PilotConstants estimate_pilot_constants(const ExperimentConfig& config);

std::string trials_csv(const std::vector<TrialRecord>& records);
void write_text_file(const std::string& path, const std::string& text);

nlohmann::json to_json(const TrialRecord& r);
nlohmann::json to_json(const ProbabilityEstimate& p);
nlohmann::json to_json(const ScalingResult& s);
nlohmann::json to_json(const Interval& i);
nlohmann::json to_json(const CtResult& c);
nlohmann::json to_json(const PilotConstants& p);

}  // namespace strip
