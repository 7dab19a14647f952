#include "strip/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "strip/errors.hpp"

namespace strip {
namespace {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

Point to_point(const json& j, const char* what) {
    if (!j.is_array() || j.size() > static_cast<std::size_t>(kMaxDims)) throw ConfigError(std::string(what) + " must be an array");
    Point p{};
    for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
    return p;
}

Envelope parse_envelope(const json& j, int dims) {
    Envelope e;
    e.dims = dims;
    e.kind = bump_kind_from_string(get_or<std::string>(j, "kind", "c2"));
    e.amplitude = get_or(j, "amplitude", 1.0);
    if (!j.contains("center") || !j.contains("radius")) throw ConfigError("envelope needs center and radius");
    e.center = to_point(j.at("center"), "envelope center");
    e.radius = to_point(j.at("radius"), "envelope radius");
    if (j.at("center").size() != static_cast<std::size_t>(dims) || j.at("radius").size() != static_cast<std::size_t>(dims))
        throw ConfigError("envelope center/radius must have n+1 entries");
    return e;
}

Profile1D parse_profile(const json& j) {
    const std::string type = get_or<std::string>(j, "type", "hat");
    const double amp = get_or(j, "amplitude", 1.0);
    if (type == "hat") return hat_profile(amp);
    if (type == "c2_bump") return c2_bump_profile(amp);
    if (type == "odd_bump") return odd_bump_profile(amp);
    throw ConfigError("unknown localized profile '" + type + "'");
}

}  // namespace

TransversePotential PotentialSpec::build(double d) const {
    if (type == "zero") return {};
    if (type == "constant") {
        const double c = value;
        return [c](double) { return c; };
    }
    if (type == "cosine") {
        const double a = amplitude, k = frequency;
        return [a, k, d](double y) { return a * std::cos(2.0 * std::numbers::pi * k * y / d); };
    }
    throw ConfigError("unknown V0 type '" + type + "'");
}

double ExperimentConfig::exponent_a() const {
    if (const auto* l = std::get_if<LocSpec>(&perturbation)) return l->a;
    if (const auto* o = std::get_if<OscSpec>(&perturbation)) return o->a;
    return 0.0;
}

Window ExperimentConfig::window(int N_override) const {
    Window w;
    w.alpha = alpha;
    w.N = N_override > 0 ? N_override : N;
    return w;
}

TransverseProblem ExperimentConfig::transverse_problem() const {
    TransverseProblem p;
    p.d = grid.d;
    p.V0 = V0.build(grid.d);
    p.bc_bottom = grid.bc_bottom;
    p.bc_top = grid.bc_top;
    p.m = grid.m_transverse;
    return p;
}

void ExperimentConfig::validate() const {
    lattice.validate();
    if (static_cast<int>(alpha.size()) != lattice.n) throw ConfigError("alpha must have n entries");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (gamma < 17) throw ConfigError("gamma must be >= 17");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (N_schedule.empty()) throw ConfigError("N schedule must be nonempty");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    for (double e : eps_schedule)
        if (!(e > 0.0)) throw ConfigError("eps schedule entries must be positive");
    for (int n : N_schedule)
        if (n < 1) throw ConfigError("N schedule entries must be >= 1");
    if (grid.m_transverse < 8) throw ConfigError("m_transverse must be >= 8");
    measure.validate();
}

MeasureSpec parse_measure(const json& j) {
    const std::string kind = get_or<std::string>(j, "kind", "uniform");
    MeasureSpec m;
    if (kind == "uniform") m = MeasureSpec::uniform(get_or(j, "low", 0.0), get_or(j, "high", 1.0));
    else if (kind == "bernoulli") m = MeasureSpec::bernoulli(get_or(j, "p", 0.5));
    else if (kind == "table") m = MeasureSpec::table(get_or<std::vector<double>>(j, "u", {}), get_or<std::vector<double>>(j, "omega", {}));
    else throw ConfigError("unsupported measure kind '" + kind + "'");
    m.validate();
    return m;
}

PerturbationSpec parse_perturbation(const json& j, const LatticeSpec& lattice, double d) {
    const std::string kind = get_or<std::string>(j, "kind", "");
    const int dims = lattice.n + 1;
    if (kind == "loc") {
        LocSpec s;
        s.a = get_or(j, "a", 0.5);
        s.profile = parse_profile(j.value("profile", json::object()));
        return s;
    }
    if (kind == "osc") {
        OscSpec s;
        s.a = get_or(j, "a", 0.5);
        for (const json& mj : j.value("modes", json::array())) {
            OscMode m;
            m.envelope = parse_envelope(mj.at("envelope"), dims);
            const auto kappa = get_or<std::vector<int>>(mj, "kappa", {});
            if (kappa.size() != static_cast<std::size_t>(dims)) throw ConfigError("kappa must have n+1 entries");
            for (int i = 0; i < dims; ++i) m.kappa[i] = kappa[static_cast<std::size_t>(i)];
            const std::string trig = get_or<std::string>(mj, "trig", "cos");
            if (trig != "cos" && trig != "sin") throw ConfigError("trig must be cos or sin");
            m.cosine = trig == "cos";
            s.modes.push_back(m);
        }
        if (j.contains("W")) s.W = parse_envelope(j.at("W"), dims);
        else s.W.amplitude = 0.0;
        return s;
    }
    if (kind == "dlt") {
        DltSpec s;
        const json sj = j.value("surface", json::object());
        const std::string type = get_or<std::string>(sj, "type", "circle");
        if (type != "circle") throw ConfigError("only circle surfaces are supported");
        if (lattice.n != 1) throw ConfigError("circle surfaces require n = 1");
        const double r = get_or(sj, "radius", 0.2 * std::min(lattice.basis_lengths[0], d));
        const auto c = get_or<std::vector<double>>(sj, "center", {0.0, 0.5 * d});
        if (c.size() != 2) throw ConfigError("circle center must have 2 entries");
        s.surface = Surface::circle(c[0], c[1], r, get_or(sj, "nodes", 256));
        const json bj = j.value("b", json::object());
        const std::string btype = get_or<std::string>(bj, "type", "constant");
        if (btype != "constant") throw ConfigError("only constant surface densities are supported");
        const double b = get_or(bj, "value", 1.0);
        if (b < 0.0) throw ConfigError("surface density must be nonnegative");
        if (b != 1.0) s.b = [b](const Point&) { return b; };
        return s;
    }
    throw ConfigError("perturbation kind must be loc, osc or dlt");
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    const json lj = j.value("lattice", json::object());
    c.lattice.n = get_or(lj, "n", 1);
    c.lattice.basis_lengths = get_or<std::vector<double>>(lj, "basis_lengths", std::vector<double>(static_cast<std::size_t>(std::max(c.lattice.n, 1)), 1.0));
    c.lattice.validate();

    const json wj = j.value("window", json::object());
    c.alpha = get_or<std::vector<int>>(wj, "alpha", std::vector<int>(static_cast<std::size_t>(c.lattice.n), 0));
    c.N = get_or(wj, "N", c.N);

    const json gj = j.value("grid", json::object());
    c.grid.d = get_or(gj, "d", c.grid.d);
    c.grid.m_per_cell = get_or(gj, "m_per_cell", c.grid.m_per_cell);
    c.grid.m_transverse = get_or(gj, "m_transverse", c.grid.m_transverse);
    c.grid.bc_bottom = boundary_kind_from_string(get_or<std::string>(gj, "bc_bottom", "dirichlet"));
    c.grid.bc_top = boundary_kind_from_string(get_or<std::string>(gj, "bc_top", "dirichlet"));

    const json vj = j.value("V0", json::object());
    c.V0.type = get_or<std::string>(vj, "type", "zero");
    c.V0.value = get_or(vj, "value", 0.0);
    c.V0.amplitude = get_or(vj, "amplitude", 0.0);
    c.V0.frequency = get_or(vj, "frequency", 1.0);
    (void)c.V0.build(c.grid.d);

    if (!j.contains("perturbation")) throw ConfigError("missing 'perturbation'");
    c.perturbation_json = j.at("perturbation");
    c.perturbation = parse_perturbation(c.perturbation_json, c.lattice, c.grid.d);
    c.measure = parse_measure(j.value("measure", json::object()));

    c.eps = get_or(j, "eps", c.eps);
    c.eps_schedule = get_or<std::vector<double>>(j, "eps_schedule", {});
    c.N_schedule = get_or<std::vector<int>>(j, "N_schedule", c.N_schedule);
    c.gamma = get_or(j, "gamma", c.gamma);
    c.trials = get_or(j, "trials", c.trials);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("c1_hat")) c.c1_hat = j.at("c1_hat").get<double>();
    if (j.contains("c2_hat")) c.c2_hat = j.at("c2_hat").get<double>();
    c.two_sided_C = get_or(j, "two_sided_C", c.two_sided_C);
    c.eigen_tol = get_or(j, "eigen_tol", c.eigen_tol);
    c.omega_floor = get_or(j, "omega_floor", c.omega_floor);

    const json pj = j.value("pilot", json::object());
    c.pilot.N_ref = get_or(pj, "N_ref", c.pilot.N_ref);
    c.pilot.eps_sweep = get_or<std::vector<double>>(pj, "eps_sweep", {});
    c.pilot.eps = get_or(pj, "eps", c.eps);
    c.pilot.trials = get_or(pj, "trials", c.pilot.trials);

    const json cj = j.value("ct", json::object());
    c.ct.target = get_or(cj, "target", c.ct.target);
    c.ct.max_attempts = get_or(cj, "max_attempts", c.ct.max_attempts);
    c.ct.offsets = get_or<std::vector<int>>(cj, "offsets", c.ct.offsets);

    const json oj = j.value("output", json::object());
    c.csv_path = get_or<std::string>(oj, "csv", c.csv_path);
    c.summary_path = get_or<std::string>(oj, "summary", c.summary_path);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

}  // namespace strip
