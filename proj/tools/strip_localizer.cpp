#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "strip/cellproblem.hpp"
#include "strip/config.hpp"
#include "strip/errors.hpp"
#include "strip/gauge.hpp"
#include "strip/harness.hpp"
#include "strip/spectral.hpp"

using nlohmann::json;
using namespace strip;

namespace {

struct Overrides {
    std::string config;
    int trials = 0;
    long long seed = -1;
    std::string csv;
    std::string summary;
};

ExperimentConfig load(const Overrides& o) {
    ExperimentConfig c = load_config(o.config);
    if (o.trials > 0) c.trials = o.trials;
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.csv.empty()) c.csv_path = o.csv;
    if (!o.summary.empty()) c.summary_path = o.summary;
    c.validate();
    return c;
}

void emit(const ExperimentConfig& c, json summary) {
    summary["name"] = c.name;
    summary["kind"] = c.kind();
    write_text_file(c.summary_path, summary.dump(2) + "\n");
}

std::string per_N_path(const std::string& path, int N) {
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + "_N" + std::to_string(N) + p.extension().string())).string();
}

int cmd_hypothesis(const ExperimentConfig& c) {
    const TransverseMode mode = solve_transverse(c.transverse_problem());
    const HypothesisReport r = hypothesis(c.perturbation, mode, c.lattice.n);
    std::printf("hypothesis (%s): value %.4f, error estimate %.2e, %s\n", r.kind, r.value, r.error_estimate,
                r.passes ? "passes" : "FAILS");
    emit(c, {{"command", "hypothesis"},
             {"value", r.value},
             {"error_estimate", r.error_estimate},
             {"passes", r.passes},
             {"lambda0", mode.lambda0}});
    return 0;
}

int cmd_ilse(const ExperimentConfig& c) {
    const std::vector<TrialRecord> records = run_ilse_trials(c);
    write_text_file(c.csv_path, trials_csv(records));
    int failed = 0, degenerate = 0, positive = 0, below = 0;
    for (const auto& r : records) {
        if (r.failed) ++failed;
        else if (r.degenerate()) ++degenerate;
        else positive += r.ratio > 0.0;
        for (const auto& f : r.flags) below += f == "below_lambda0";
    }
    json s{{"command", "ilse"}, {"N", c.N},           {"eps", c.eps},   {"trials", records.size()},
           {"failed", failed},  {"degenerate", degenerate}, {"positive_ratios", positive}, {"below_lambda0", below}};
    std::printf("ilse (%s): N=%d eps=%g, %zu trials, %d failed, %d degenerate, %d positive ratios\n", c.kind(), c.N,
                c.eps, records.size(), failed, degenerate, positive);
    try {
        const C2Estimate e = estimate_c2(records);
        s["c2_hat"] = e.value;
        s["c2_trial"] = e.trial;
        s["c2_seed"] = e.seed;
        std::printf("  empirical c2 = %.6g (trial %llu)\n", e.value, static_cast<unsigned long long>(e.trial));
    } catch (const ConfigError& e) {
        s["c2_hat"] = nullptr;
        std::printf("  c2 not estimated: %s\n", e.what());
    }
    emit(c, s);
    std::printf("  wrote %s and %s\n", c.csv_path.c_str(), c.summary_path.c_str());
    return 0;
}

int cmd_scaling(const ExperimentConfig& c) {
    const ScalingResult r = scaling_study(c, c.eps_schedule, c.N);
    std::string rows = "eps,gap\n";
    for (std::size_t i = 0; i < r.eps.size(); ++i) rows += format_double(r.eps[i]) + ',' + format_double(r.gaps[i]) + '\n';
    write_text_file(c.csv_path, rows);
    json s = to_json(r);
    s["command"] = "scaling";
    emit(c, s);
    std::printf("scaling (%s): slope %.4f (expected %.4f), R^2 %.5f, prefactor %.5g vs predicted %.5g\n", c.kind(),
                r.slope, r.expected_slope, r.r_squared, r.prefactor, r.predicted_prefactor);
    return 0;
}

int cmd_ct(const ExperimentConfig& c) {
    const CtResult r = run_ct_experiment(c, c.N, c.eps);
    std::string rows = "trial,seed,lambda_min,gap,qualified,rate,envelope_ok,pass\n";
    for (const CtTrial& t : r.trials)
        rows += std::to_string(t.trial) + ',' + std::to_string(t.seed) + ',' + format_double(t.lambda_min) + ',' +
                format_double(t.gap) + ',' + (t.qualified ? "1" : "0") + ',' + format_double(t.fit.rate) + ',' +
                (t.envelope_ok ? "1" : "0") + ',' + (t.pass ? "1" : "0") + '\n';
    write_text_file(c.csv_path, rows);
    json s = to_json(r);
    s["command"] = "ct";
    emit(c, s);
    std::printf("ct (%s): N=%d, %d qualified of %zu screened, %d pass (upper 95%% on pass rate %.3f)\n", c.kind(), r.N,
                r.qualified, r.trials.size(), r.passed, r.pass_rate.upper95);
    return 0;
}

int cmd_probability(const ExperimentConfig& c) {
    json runs = json::array();
    for (int N : c.N_schedule) {
        json entry{{"N", N}};
        if (c.c1_hat && c.c2_hat) {
            const Interval iv = interval_IN(c.kind(), N, c.exponent_a(), c.measure, *c.c1_hat, *c.c2_hat, c.gamma);
            entry["interval"] = to_json(iv);
            entry["eps_in_interval"] = iv.contains(c.eps);
        }
        const ProbabilityResult r = run_probability_experiment(c, N, c.eps);
        const std::string path = per_N_path(c.csv_path, N);
        write_text_file(path, trials_csv(r.records));
        entry["threshold"] = r.threshold;
        entry["failed"] = r.failed;
        entry["estimate"] = to_json(r.estimate);
        entry["bound_prefactor"] = r.bound_prefactor;
        entry["bound_scale"] = r.bound_scale;
        entry["csv"] = path;
        std::printf("probability (%s): N=%d eps=%g, events %d/%d, frequency %.4f, upper95 %.4f\n", c.kind(), N, c.eps,
                    r.estimate.events, r.estimate.trials, r.estimate.estimate, r.estimate.upper95);
        runs.push_back(entry);
    }
    emit(c, {{"command", "probability"}, {"eps", c.eps}, {"runs", runs}});
    return 0;
}

int cmd_gauge_check(const ExperimentConfig& c) {
    if (std::holds_alternative<DltSpec>(c.perturbation)) throw ConfigError("gauge-check applies to loc and osc perturbations");
    const Setup setup = make_setup(c, c.N, c.eps, 1.0);
    const RandomField omega = constant_field(c.window(c.N), 1.0);
    DiscreteOperator H;
    GaugeField gauge;
    TransformedAssembly analytic;
    if (const auto* loc = std::get_if<LocSpec>(&c.perturbation)) {
        H = assemble_loc(setup.base, *loc, c.eps, omega);
        gauge = build_gauge_loc(*setup.grid, *loc, c.eps, omega);
        analytic = assemble_transformed_loc(setup.base, *loc, c.eps, omega);
    } else {
        const auto& osc = std::get<OscSpec>(c.perturbation);
        H = assemble_osc(setup.base, osc, c.eps, omega, c.omega_floor);
        gauge = build_gauge_osc(*setup.grid, osc, c.eps, omega, c.omega_floor);
        analytic = assemble_transformed_osc(setup.base, osc, c.eps, omega, c.omega_floor);
    }
    EigenOptions o;
    o.tol = c.eigen_tol;
    const double lam = smallest_eigs_symmetric(H.matrix, o).eigenvalues.front();
    const TransformedAssembly sim = transform_similarity(H, gauge);
    const double shift = setup.lambda0 - 1.0;
    const double lam_sim = smallest_eigs_general(sim.matrix, shift, o).eigenvalues.front();
    const double lam_an = smallest_eigs_general(analytic.matrix, shift, o).eigenvalues.front();
    emit(c, {{"command", "gauge-check"},
             {"unknowns", H.size()},
             {"lambda_direct", lam},
             {"lambda_similarity", lam_sim},
             {"lambda_analytic", lam_an},
             {"gauge_min", gauge.min_value},
             {"gauge_max_deviation", gauge.max_deviation},
             {"max_first_order", analytic.max_first_order},
             {"max_zeroth_order", analytic.max_zeroth_order}});
    std::printf("gauge-check (%s): %zu unknowns, lambda direct %.10g, similarity %.10g (diff %.2e), analytic %.10g (diff %.2e)\n",
                c.kind(), H.size(), lam, lam_sim, std::abs(lam_sim - lam), lam_an, std::abs(lam_an - lam));
    return 0;
}

int cmd_cell_check(const ExperimentConfig& c) {
    if (const auto* loc = std::get_if<LocSpec>(&c.perturbation)) {
        const LocCorrector w = wstar_loc(*loc);
        const double R = w.radius();
        const json s{{"command", "cell-check"},
                     {"value_at_0", w(0.0)},
                     {"integral", w.integral()},
                     {"first_moment", w.first_moment()},
                     {"slope_right", w.derivative(2.0 * R)},
                     {"slope_left", w.derivative(-2.0 * R)}};
        emit(c, s);
        std::printf("cell-check (loc): W*(0) = %.10g, tail slopes %.10g / %.10g, int W = %.10g\n", w(0.0),
                    w.derivative(-2.0 * R), w.derivative(2.0 * R), w.integral());
        return 0;
    }
    const auto* osc = std::get_if<OscSpec>(&c.perturbation);
    if (!osc) throw ConfigError("cell-check applies to loc and osc perturbations");
    const int dims = c.lattice.n + 1;
    const CellCorrector cc = build_cell_corrector(*osc, dims);
    double energy = 0.0;
    for (std::size_t i = 0; i < cc.nodes.size(); ++i) energy += cc.weights[i] * cc.energy[i];
    json s{{"command", "cell-check"}, {"corrector_energy", energy}};
    std::printf("cell-check (osc): integrated corrector energy %.10g\n", energy);
    if (c.eps_schedule.size() >= 2) {
        Point lo{}, hi{};
        bool first = true;
        for (const OscMode& m : osc->modes) {
            for (int j = 0; j < dims; ++j) {
                const double a = m.envelope.center[j] - m.envelope.radius[j];
                const double b = m.envelope.center[j] + m.envelope.radius[j];
                lo[j] = first ? a : std::min(lo[j], a);
                hi[j] = first ? b : std::max(hi[j], b);
            }
            first = false;
        }
        // A single trig term is averaged exactly by more xi points than its frequency.
        int kmax = 0;
        for (const OscMode& m : osc->modes)
            for (int j = 0; j < dims; ++j) kmax = std::max(kmax, std::abs(m.kappa[j]));
        const OscillatingMeanReport r = oscillating_mean_check(
            [&](const Point& x, const Point& xi) { return osc->Q(x, xi, dims); }, dims, lo, hi, c.eps_schedule,
            std::max(4, kmax + 1));
        s["mean_check"] = {{"eps", r.eps}, {"errors", r.errors}, {"slope", std::isfinite(r.slope) ? json(r.slope) : json("inf")}};
        std::printf("  oscillating mean: convergence order %.3f over %zu eps values\n", r.slope, r.eps.size());
    }
    emit(c, s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random perturbations of a waveguide: spectral bottom experiments"};
    app.require_subcommand(1);
    Overrides o;
    const auto add = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config,-c", o.config, "JSON experiment config")->required();
        sub->add_option("--trials", o.trials, "override the trial count");
        sub->add_option("--seed", o.seed, "override the master seed");
        sub->add_option("--csv", o.csv, "override the CSV output path");
        sub->add_option("--summary", o.summary, "override the JSON summary path");
        return sub;
    };
    CLI::App* hyp = add("hypothesis", "evaluate the nondegeneracy integral of the perturbation");
    CLI::App* ilse = add("ilse", "Monte Carlo trials of the bottom-of-spectrum lift");
    CLI::App* scaling = add("scaling", "eps scaling study with omega = 1");
    CLI::App* ct = add("ct", "resolvent decay on conditioned trials");
    CLI::App* prob = add("probability", "frequency of a small spectral lift over an N schedule");
    CLI::App* gauge = add("gauge-check", "compare direct, similarity and analytic gauge spectra");
    CLI::App* cell = add("cell-check", "corrector diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const ExperimentConfig c = load(o);
        if (hyp->parsed()) return cmd_hypothesis(c);
        if (ilse->parsed()) return cmd_ilse(c);
        if (scaling->parsed()) return cmd_scaling(c);
        if (ct->parsed()) return cmd_ct(c);
        if (prob->parsed()) return cmd_probability(c);
        if (gauge->parsed()) return cmd_gauge_check(c);
        if (cell->parsed()) return cmd_cell_check(c);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
