#pragma once
// Experiment configuration, read from a JSON file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "strip/geometry.hpp"
#include "strip/hamiltonian.hpp"
#include "strip/rng.hpp"
#include "strip/transverse.hpp"

namespace strip {

/// V0 as a closed-form family: zero, constant c, or amplitude * cos(2 pi k y / d).
struct PotentialSpec {
    std::string type = "zero";
    double value = 0.0;
    double amplitude = 0.0;
    double frequency = 1.0;

    TransversePotential build(double d) const;
};

struct PilotSpec {
    int N_ref = 4;
    std::vector<double> eps_sweep;  // for c1_hat
    double eps = 0.0;               // for c2_hat
    int trials = 20;
};

struct CtSpec {
    int target = 20;         // conditioned trials wanted
    int max_attempts = 200;  // trials drawn at most
    std::vector<int> offsets{2, 4, 6, 8};
};

struct ExperimentConfig {
    std::string name = "experiment";
    PerturbationSpec perturbation;
    nlohmann::json perturbation_json;
    LatticeSpec lattice;
    std::vector<int> alpha{0};
    int N = 4;
    GridParams grid;
    PotentialSpec V0;
    MeasureSpec measure;
    double eps = 0.05;
    std::vector<double> eps_schedule;
    std::vector<int> N_schedule{4, 8, 16};
    int gamma = 17;
    int trials = 50;
    std::uint64_t seed = 1;
    std::optional<double> c1_hat;
    std::optional<double> c2_hat;
    double two_sided_C = 10.0;
    double eigen_tol = 1e-9;
    double omega_floor = kOmegaFloor;
    PilotSpec pilot;
    CtSpec ct;
    std::string csv_path = "results.csv";
    std::string summary_path = "summary.json";

    const char* kind() const { return kind_name(perturbation); }
    double exponent_a() const;
    Window window(int N_override = 0) const;
    TransverseProblem transverse_problem() const;
    void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

PerturbationSpec parse_perturbation(const nlohmann::json& j, const LatticeSpec& lattice, double d);
MeasureSpec parse_measure(const nlohmann::json& j);

}  // namespace strip
