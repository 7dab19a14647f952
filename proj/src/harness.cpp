#include "strip/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/binomial.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "strip/cellproblem.hpp"
#include "strip/errors.hpp"
#include "strip/gauge.hpp"

namespace strip {

unsigned worker_count() {
    if (const char* env = std::getenv("STRIP_LOCALIZER_THREADS")) {
        unsigned v = 0;
        const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
        if (ec == std::errc() && ptr == env + std::strlen(env) && v > 0) return v;
        throw ConfigError("STRIP_LOCALIZER_THREADS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned workers) {
    if (count == 0) return;
    if (workers == 0) workers = worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

double lowest_positive_omega(const MeasureSpec& m, double omega_floor) {
    switch (m.kind) {
    case MeasureSpec::Kind::Uniform: return std::max(m.low, omega_floor);
    case MeasureSpec::Kind::Bernoulli: return 1.0;
    case MeasureSpec::Kind::Table:
        for (double w : m.table_omega)
            if (w > 0.0) return std::max(w, omega_floor);
        return 1.0;
    }
    return omega_floor;
}

namespace {

int divisions_for(double length, double eps, double omega_low) {
    return static_cast<int>(std::ceil(10.0 * length / (eps * omega_low) * (1.0 + 1e-12)));
}

bool oscillates_transversally(const OscSpec& s, int n) {
    for (const OscMode& m : s.modes)
        if (m.kappa[n] != 0) return true;
    return false;
}

constexpr int kMaxDivisions = 20000;

DiscreteOperator assemble_for(const Setup& setup, const ExperimentConfig& config, const RandomField& omega) {
    if (const auto* osc = std::get_if<OscSpec>(&config.perturbation))
        return assemble_osc(setup.base, *osc, setup.eps, omega, config.omega_floor);
    return assemble(setup.base, config.perturbation, setup.eps, omega);
}

double solve_bottom(const DiscreteOperator& H, const Setup& setup, double tol) {
    EigenOptions o;
    o.k = 1;
    o.tol = tol;
    o.shift_hint = setup.lambda0 - 1e-6 * (1.0 + std::abs(setup.lambda0));
    return smallest_eigs_symmetric(H.matrix, o).eigenvalues.front();
}

}  // namespace

int resolved_m_per_cell(const ExperimentConfig& config, double eps, double omega_low) {
    if (!std::holds_alternative<OscSpec>(config.perturbation)) return config.grid.m_per_cell;
    double lmax = 0.0;
    for (double l : config.lattice.basis_lengths) lmax = std::max(lmax, l);
    const int m = std::max(config.grid.m_per_cell, divisions_for(lmax, eps, omega_low));
    if (m > kMaxDivisions) throw ConfigError("oscillation too fine to resolve: raise the measure's lower support or eps");
    return m;
}

Setup make_setup(const ExperimentConfig& config, int N, double eps, double omega_low) {
    if (omega_low <= 0.0) omega_low = lowest_positive_omega(config.measure, config.omega_floor);
    Setup s;
    s.N = N;
    s.eps = eps;
    GridParams gp = config.grid;
    gp.m_per_cell = resolved_m_per_cell(config, eps, omega_low);
    if (const auto* osc = std::get_if<OscSpec>(&config.perturbation); osc && oscillates_transversally(*osc, config.lattice.n)) {
        gp.m_transverse = std::max(gp.m_transverse, divisions_for(gp.d, eps, omega_low));
        if (gp.m_transverse > kMaxDivisions) throw ConfigError("transverse oscillation too fine to resolve");
    }
    s.grid = std::make_shared<const WindowGrid>(WindowGrid::build(config.lattice, config.window(N), gp));
    TransverseProblem tp = config.transverse_problem();
    tp.m = gp.m_transverse;
    s.base = assemble_unperturbed(s.grid, tp.V0);
    s.mode = solve_transverse(tp);
    s.lambda0 = s.mode.lambda0;
    s.htol = transverse_h_tolerance(tp);
    return s;
}

bool TrialRecord::degenerate() const { return rhs == 0.0; }

std::string TrialRecord::flag_string() const {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

double omega_power(const char* kind, double a) {
    const std::string_view k(kind);
    if (k == "loc") return 1.0 - a;
    if (k == "osc") return 2.0 - 2.0 * a;
    return 1.0;
}

double bound_rhs(const char* kind, double a, int n, int N, double eps, const std::vector<double>& omega) {
    const double p = omega_power(kind, a);
    double sum = 0.0;
    for (double w : omega) sum += std::pow(w, p);
    const double denom = std::string_view(kind) == "loc" ? static_cast<double>(N) : std::pow(static_cast<double>(N), n);
    return std::pow(eps, p) / denom * sum;
}

double window_exponent(const char* kind, double a) {
    const std::string_view k(kind);
    if (k == "loc") return 8.0 / (1.0 - a);
    if (k == "osc") return 4.0 / (1.0 - a);
    return 8.0;
}

TrialRecord run_trial(const Setup& setup, const ExperimentConfig& config, const RandomField& omega) {
    TrialRecord r;
    r.trial = omega.trial_index;
    r.seed = omega.seed;
    const char* kind = config.kind();
    const double a = config.exponent_a();
    const double p = omega_power(kind, a);
    for (double w : omega.omega) r.omega_sum += std::pow(w, p);
    r.rhs = bound_rhs(kind, a, config.lattice.n, setup.N, setup.eps, omega.omega);
    try {
        const DiscreteOperator H = assemble_for(setup, config, omega);
        if (!H.notes.empty()) r.flags.push_back("cutoff");
        r.lambda_min = solve_bottom(H, setup, config.eigen_tol);
        r.gap = r.lambda_min - setup.lambda0;
        r.ratio = r.rhs > 0.0 ? r.gap / r.rhs : 0.0;
        if (r.rhs == 0.0) r.flags.push_back("degenerate");
        if (r.lambda_min < setup.lambda0 - setup.htol) r.flags.push_back("below_lambda0");
        if (config.c1_hat && setup.eps >= *config.c1_hat / std::pow(setup.N, window_exponent(kind, a)))
            r.flags.push_back("out_of_window");
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
        r.flags.push_back("error");
    }
    return r;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& config, int N, double eps, int count, std::uint64_t first) {
    const Setup setup = make_setup(config, N, eps);
    std::vector<TrialRecord> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), [&](std::size_t i) {
        const RandomField omega = sample_omega(config.measure, config.window(N), config.seed, first + i);
        out[i] = run_trial(setup, config, omega);
    });
    return out;
}

std::vector<TrialRecord> run_ilse_trials(const ExperimentConfig& config) {
    return run_trials(config, config.N, config.eps, config.trials);
}

C2Estimate estimate_c2(const std::vector<TrialRecord>& records) {
    C2Estimate est;
    bool first = true;
    for (const TrialRecord& r : records) {
        if (r.failed || r.degenerate()) continue;
        ++est.used;
        if (first || r.ratio < est.value) {
            est.value = r.ratio;
            est.trial = r.trial;
            est.seed = r.seed;
            first = false;
        }
    }
    if (est.used == 0) throw ConfigError("estimate_c2: every trial is degenerate or failed");
    if (est.used < 10) throw ConfigError("estimate_c2 needs at least 10 non-degenerate trials");
    return est;
}

double constant_omega_lambda(const ExperimentConfig& config, int N, double eps, double* lambda0, double* htol) {
    const Setup setup = make_setup(config, N, eps, 1.0);
    const RandomField omega = constant_field(config.window(N), 1.0);
    const DiscreteOperator H = assemble_for(setup, config, omega);
    if (lambda0) *lambda0 = setup.lambda0;
    if (htol) *htol = setup.htol;
    return solve_bottom(H, setup, config.eigen_tol);
}

ScalingResult scaling_study(const ExperimentConfig& config, const std::vector<double>& eps_list, int N) {
    if (eps_list.size() < 4) throw ConfigError("scaling study needs at least 4 eps values");
    ScalingResult res;
    const char* kind = config.kind();
    const double a = config.exponent_a();
    res.expected_slope = omega_power(kind, a);
    res.gaps.resize(eps_list.size());
    std::vector<double> lambda0(eps_list.size());
    parallel_for(eps_list.size(), [&](std::size_t i) {
        res.gaps[i] = constant_omega_lambda(config, N, eps_list[i], &lambda0[i], nullptr);
        res.gaps[i] -= lambda0[i];
    });
    res.eps = eps_list;
    std::vector<double> lx, ly;
    const double sign = res.gaps.front() < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(sign * res.gaps[i] > 0.0)) {
            std::string msg = "scaling study: gap vanishes or changes sign (gaps";
            for (double g : res.gaps) msg += " " + format_double(g);
            throw NumericalError(msg + ")");
        }
        lx.push_back(std::log(eps_list[i]));
        ly.push_back(std::log(sign * res.gaps[i]));
    }
    const LineFit f = fit_line(lx, ly);
    res.slope = f.slope;
    res.intercept = f.intercept;
    res.r_squared = f.r_squared;
    const auto imin = static_cast<std::size_t>(std::min_element(eps_list.begin(), eps_list.end()) - eps_list.begin());
    res.prefactor = res.gaps[imin] / std::pow(eps_list[imin], res.expected_slope);

    TransverseProblem tp = config.transverse_problem();
    const TransverseMode mode = solve_transverse(tp);
    if (const auto* osc = std::get_if<OscSpec>(&config.perturbation))
        res.predicted_prefactor = second_order_coeff_osc(*osc, mode, config.lattice);
    else
        res.predicted_prefactor = first_order_coeff(config.perturbation, mode, config.lattice);
    return res;
}

Interval interval_IN(const char* kind, int N, double a, const MeasureSpec& measure, double c1, double c2, int gamma) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("interval_IN needs positive c1_hat and c2_hat");
    if (gamma < 17) throw ConfigError("gamma must be >= 17");
    const std::string_view k(kind);
    const double Nd = N, g = gamma;
    Interval iv;
    if (k == "loc") {
        const double m = measure.moment((1.0 - a) / 2.0);
        if (!(m > 0.0)) throw ConfigError("interval_IN: zero moment");
        const double c3 = std::pow(2.0, 2.0 / (1.0 - a)) / std::pow(c2, 1.0 / (1.0 - a));
        iv.lo = c3 / (std::pow(m, 2.0 / (1.0 - a)) * std::pow(Nd, 8.0 / (1.0 - a)));
        iv.hi = c1 / std::pow(Nd, 8.0 / (g * (1.0 - a)));
    } else if (k == "osc") {
        const double m = measure.moment(1.0 - a);
        if (!(m > 0.0)) throw ConfigError("interval_IN: zero moment");
        const double c3 = std::pow(2.0, 1.0 / (1.0 - a)) / std::pow(c2, 1.0 / (2.0 * (1.0 - a)));
        iv.lo = c3 / (std::pow(m, 1.0 / (1.0 - a)) * std::pow(Nd, 1.0 / (4.0 * (1.0 - a))));
        iv.hi = c1 / std::pow(Nd, 4.0 / (g * (1.0 - a)));
    } else {
        const double m = measure.moment(0.5);
        if (!(m > 0.0)) throw ConfigError("interval_IN: zero moment");
        iv.lo = (4.0 / c2) / (m * m * std::sqrt(Nd));
        iv.hi = c1 / std::pow(Nd, 8.0 / g);
    }
    return iv;
}

double clopper_pearson_upper(int events, int trials, double alpha) {
    if (trials <= 0) return 1.0;
    if (events < 0 || events > trials) throw std::invalid_argument("clopper_pearson_upper: bad counts");
    return boost::math::binomial_distribution<double>::find_upper_bound_on_p(trials, events, alpha);
}

ProbabilityEstimate probability_from_counts(int events, int trials) {
    ProbabilityEstimate p;
    p.events = events;
    p.trials = trials;
    p.estimate = trials > 0 ? static_cast<double>(events) / trials : 0.0;
    p.upper95 = clopper_pearson_upper(events, trials);
    return p;
}

ProbabilityResult run_probability_experiment(const ExperimentConfig& config, int N, double eps) {
    ProbabilityResult res;
    res.N = N;
    res.eps = eps;
    res.threshold = 1.0 / std::sqrt(static_cast<double>(N));
    const int n = config.lattice.n;
    res.bound_prefactor = std::pow(static_cast<double>(N), n * (1.0 - 1.0 / config.gamma));
    res.bound_scale = std::pow(static_cast<double>(N), static_cast<double>(n) / config.gamma);
    res.records = run_trials(config, N, eps, config.trials);
    int events = 0, used = 0;
    for (const TrialRecord& r : res.records) {
        if (r.failed) {
            ++res.failed;
            continue;
        }
        ++used;
        events += r.gap <= res.threshold;
    }
    res.estimate = probability_from_counts(events, used);
    return res;
}

std::vector<std::pair<double, double>> block_norm_profile(const DiscreteOperator& H, double lambda,
                                                          const std::vector<int>& offsets, int origin) {
    const WindowGrid& g = *H.grid;
    if (g.n() != 1) throw ConfigError("block_norm_profile supports n = 1");
    const ResolventProbe probe(H, lambda);
    CellBox b1;
    b1.lo[0] = b1.hi[0] = g.window().alpha[0] + origin;
    std::vector<std::pair<double, double>> out;
    for (int o : offsets) {
        if (origin + o >= g.window().N || origin + o < 0) throw ConfigError("box offset outside the window");
        CellBox b2;
        b2.lo[0] = b2.hi[0] = b1.lo[0] + o;
        out.emplace_back(box_distance(b1, b2, g.lattice()), probe.block_norm(b1, b2));
    }
    return out;
}

CtResult run_ct_experiment(const ExperimentConfig& config, int N, double eps) {
    CtResult res;
    res.N = N;
    res.eps = eps;
    res.envelope = 2.0 * std::sqrt(static_cast<double>(N));
    const Setup setup = make_setup(config, N, eps);
    const double threshold = 1.0 / std::sqrt(static_cast<double>(N));
    const double lambda = setup.lambda0 + 0.5 * threshold;

    // Screen draws in index order until enough qualify.
    std::vector<TrialRecord> screened;
    const int batch = std::max(1, config.ct.target);
    for (int start = 0; start < config.ct.max_attempts; start += batch) {
        const int count = std::min(batch, config.ct.max_attempts - start);
        std::vector<TrialRecord> part(static_cast<std::size_t>(count));
        parallel_for(part.size(), [&](std::size_t i) {
            const RandomField omega = sample_omega(config.measure, config.window(N), config.seed, static_cast<std::uint64_t>(start) + i);
            part[i] = run_trial(setup, config, omega);
        });
        screened.insert(screened.end(), part.begin(), part.end());
        const auto q = std::count_if(screened.begin(), screened.end(), [&](const TrialRecord& r) { return !r.failed && r.gap > threshold; });
        if (q >= config.ct.target) break;
    }

    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < screened.size(); ++i) {
        CtTrial t;
        t.trial = screened[i].trial;
        t.seed = screened[i].seed;
        t.lambda_min = screened[i].lambda_min;
        t.gap = screened[i].gap;
        t.lambda = lambda;
        if (screened[i].failed) t.note = "error: " + screened[i].error;
        else if (!(t.gap > threshold)) t.note = "gap below N^-1/2";
        else if (static_cast<int>(chosen.size()) < config.ct.target) {
            t.qualified = true;
            chosen.push_back(res.trials.size());
        } else {
            t.note = "not needed";
        }
        res.trials.push_back(std::move(t));
    }

    parallel_for(chosen.size(), [&](std::size_t c) {
        CtTrial& t = res.trials[chosen[c]];
        const RandomField omega = sample_omega(config.measure, config.window(N), config.seed, t.trial);
        const DiscreteOperator H = assemble_for(setup, config, omega);
        t.delta = t.lambda_min - lambda;
        t.samples = block_norm_profile(H, lambda, config.ct.offsets);
        t.fit = fit_decay(t.samples, t.delta);
        t.envelope_ok = std::all_of(t.samples.begin(), t.samples.end(), [&](const auto& s) { return s.second <= res.envelope; });
        t.rate_positive = t.fit.rate > 0.0;
        t.pass = t.envelope_ok && t.rate_positive;
    });
    res.qualified = static_cast<int>(chosen.size());
    for (std::size_t c : chosen) res.passed += res.trials[c].pass;
    res.pass_rate = probability_from_counts(res.passed, res.qualified);
    return res;
}

PilotConstants estimate_pilot_constants(const ExperimentConfig& config) {
    if (config.pilot.eps_sweep.empty()) throw ConfigError("pilot eps sweep is empty");
    PilotConstants p;
    p.N_ref = config.pilot.N_ref;
    const char* kind = config.kind();
    const double a = config.exponent_a();

    std::vector<double> sweep = config.pilot.eps_sweep;
    std::sort(sweep.begin(), sweep.end());
    std::vector<char> ok(sweep.size(), 0);
    parallel_for(sweep.size(), [&](std::size_t i) {
        try {
            double l0 = 0.0, htol = 0.0;
            const double lam = constant_omega_lambda(config, p.N_ref, sweep[i], &l0, &htol);
            ok[i] = two_sided_check(lam, l0, p.N_ref, config.two_sided_C, htol).ok();
        } catch (const ConfigError&) {
            ok[i] = 0;
        }
    });
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        p.sweep.emplace_back(sweep[i], ok[i] != 0);
        if (ok[i]) p.eps_max = sweep[i];
    }
    if (!(p.eps_max > 0.0)) throw NumericalError("no pilot eps satisfies the two-sided estimate");
    p.c1_hat = p.eps_max * std::pow(static_cast<double>(p.N_ref), window_exponent(kind, a));

    const std::vector<TrialRecord> pilot = run_trials(config, p.N_ref, config.pilot.eps, config.pilot.trials, 1000000);
    p.c2 = estimate_c2(pilot);
    p.c2_hat = p.c2.value;
    if (!(p.c2_hat > 0.0)) throw NumericalError("pilot c2 estimate is not positive");
    return p;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
    std::vector<const TrialRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* x, const TrialRecord* y) { return x->trial < y->trial; });
    std::string out = "trial,seed,lambda_min,gap,rhs,ratio,flags\n";
    for (const TrialRecord* r : sorted) {
        out += std::to_string(r->trial) + ',' + std::to_string(r->seed) + ',' + format_double(r->lambda_min) + ',' +
               format_double(r->gap) + ',' + format_double(r->rhs) + ',' + format_double(r->ratio) + ',' +
               r->flag_string() + '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

nlohmann::json to_json(const TrialRecord& r) {
    nlohmann::json j{{"trial", r.trial}, {"seed", r.seed},   {"omega_sum", r.omega_sum}, {"lambda_min", r.lambda_min},
                     {"gap", r.gap},     {"rhs", r.rhs},     {"ratio", r.ratio},         {"flags", r.flags}};
    if (r.failed) j["error"] = r.error;
    return j;
}

nlohmann::json to_json(const ProbabilityEstimate& p) {
    return {{"events", p.events}, {"trials", p.trials}, {"estimate", p.estimate}, {"upper95", p.upper95}};
}

nlohmann::json to_json(const ScalingResult& s) {
    return {{"eps", s.eps},
            {"gaps", s.gaps},
            {"slope", s.slope},
            {"intercept", s.intercept},
            {"r_squared", s.r_squared},
            {"expected_slope", s.expected_slope},
            {"prefactor", s.prefactor},
            {"predicted_prefactor", s.predicted_prefactor}};
}

nlohmann::json to_json(const Interval& i) { return {{"lo", i.lo}, {"hi", i.hi}, {"empty", i.empty()}}; }

nlohmann::json to_json(const CtResult& c) {
    nlohmann::json trials = nlohmann::json::array();
    for (const CtTrial& t : c.trials) {
        if (!t.qualified) continue;
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& [d, v] : t.samples) samples.push_back({d, v});
        trials.push_back({{"trial", t.trial},
                          {"gap", t.gap},
                          {"delta", t.delta},
                          {"samples", samples},
                          {"rate", t.fit.rate},
                          {"r_squared", t.fit.r_squared},
                          {"envelope_ok", t.envelope_ok},
                          {"pass", t.pass}});
    }
    return {{"N", c.N},           {"eps", c.eps},       {"envelope", c.envelope},           {"qualified", c.qualified},
            {"passed", c.passed}, {"screened", c.trials.size()}, {"pass_rate", to_json(c.pass_rate)}, {"trials", trials}};
}

nlohmann::json to_json(const PilotConstants& p) {
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& [e, ok] : p.sweep) sweep.push_back({{"eps", e}, {"two_sided_ok", ok}});
    return {{"c1_hat", p.c1_hat},
            {"c2_hat", p.c2_hat},
            {"eps_max", p.eps_max},
            {"N_ref", p.N_ref},
            {"c2_trial", p.c2.trial},
            {"c2_seed", p.c2.seed},
            {"c2_used", p.c2.used},
            {"sweep", sweep}};
}

}  // namespace strip
