#include "strip/rng.hpp"

#include <cmath>
#include <sstream>

#include "strip/errors.hpp"
#include "strip/quadrature.hpp"

namespace strip {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
}

double counter_uniform(std::uint64_t master_seed, std::uint64_t trial_index, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(trial_seed(master_seed, trial_index) ^ splitmix64(~counter));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

MeasureSpec MeasureSpec::uniform(double low, double high) {
    MeasureSpec m;
    m.kind = Kind::Uniform;
    m.low = low;
    m.high = high;
    m.validate();
    return m;
}

MeasureSpec MeasureSpec::bernoulli(double p) {
    MeasureSpec m;
    m.kind = Kind::Bernoulli;
    m.p = p;
    m.validate();
    return m;
}

MeasureSpec MeasureSpec::table(std::vector<double> u, std::vector<double> omega) {
    MeasureSpec m;
    m.kind = Kind::Table;
    m.table_u = std::move(u);
    m.table_omega = std::move(omega);
    m.validate();
    return m;
}

void MeasureSpec::validate() const {
    switch (kind) {
    case Kind::Uniform:
        if (!(low >= 0.0 && high <= 1.0 && low <= high)) throw ConfigError("uniform measure must satisfy 0 <= low <= high <= 1");
        break;
    case Kind::Bernoulli:
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("Bernoulli parameter must lie in [0, 1]");
        break;
    case Kind::Table:
        if (table_u.size() < 2 || table_u.size() != table_omega.size())
            throw ConfigError("inverse-CDF table needs matching u/omega columns with >= 2 rows");
        if (table_u.front() != 0.0 || table_u.back() != 1.0) throw ConfigError("inverse-CDF table must span u in [0, 1]");
        for (std::size_t i = 0; i < table_u.size(); ++i) {
            if (!(table_omega[i] >= 0.0 && table_omega[i] <= 1.0)) throw ConfigError("inverse-CDF values must lie in [0, 1]");
            if (i > 0 && !(table_u[i] > table_u[i - 1])) throw ConfigError("inverse-CDF u column must increase");
            if (i > 0 && table_omega[i] < table_omega[i - 1]) throw ConfigError("inverse-CDF omega column must not decrease");
        }
        break;
    }
}

double MeasureSpec::quantile(double u) const {
    switch (kind) {
    case Kind::Uniform:
        return low + (high - low) * u;
    case Kind::Bernoulli:
        return u < p ? 1.0 : 0.0;
    case Kind::Table: {
        std::size_t i = 1;
        while (i + 1 < table_u.size() && table_u[i] <= u) ++i;
        const double f = (u - table_u[i - 1]) / (table_u[i] - table_u[i - 1]);
        return table_omega[i - 1] + f * (table_omega[i] - table_omega[i - 1]);
    }
    }
    return 0.0;
}

double MeasureSpec::moment(double s) const {
    switch (kind) {
    case Kind::Uniform:
        if (high == low) return std::pow(low, s);
        return (std::pow(high, s + 1.0) - std::pow(low, s + 1.0)) / ((s + 1.0) * (high - low));
    case Kind::Bernoulli:
        return p;
    case Kind::Table: {
        double total = 0.0;
        for (std::size_t i = 1; i < table_u.size(); ++i) {
            const double u0 = table_u[i - 1], u1 = table_u[i];
            const double w0 = table_omega[i - 1], w1 = table_omega[i];
            total += integrate_adaptive(
                         [&](double u) { return std::pow(w0 + (u - u0) / (u1 - u0) * (w1 - w0), s); }, u0, u1)
                         .value;
        }
        return total;
    }
    }
    return 0.0;
}

std::string MeasureSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::Uniform: os << "uniform[" << low << "," << high << "]"; break;
    case Kind::Bernoulli: os << "bernoulli(" << p << ")"; break;
    case Kind::Table: os << "table(" << table_u.size() << " rows)"; break;
    }
    return os.str();
}

RandomField sample_omega(const MeasureSpec& measure, const Window& window, std::uint64_t master_seed,
                         std::uint64_t trial_index) {
    measure.validate();
    RandomField field;
    field.master_seed = master_seed;
    field.trial_index = trial_index;
    field.seed = trial_seed(master_seed, trial_index);
    const std::size_t cells = window.cell_count();
    field.omega.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) field.omega[c] = measure.quantile(counter_uniform(master_seed, trial_index, c));
    return field;
}

RandomField constant_field(const Window& window, double value) {
    RandomField field;
    field.omega.assign(window.cell_count(), value);
    return field;
}

}  // namespace strip
