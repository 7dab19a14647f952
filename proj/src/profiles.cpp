#include "strip/profiles.hpp"

#include <cmath>
#include <string>

#include "strip/errors.hpp"
#include "strip/quadrature.hpp"

namespace strip {

BumpKind bump_kind_from_string(std::string_view name) {
    if (name == "c2") return BumpKind::C2;
    if (name == "smooth") return BumpKind::Smooth;
    throw ConfigError("unknown bump kind '" + std::string(name) + "'");
}

const char* to_string(BumpKind kind) { return kind == BumpKind::C2 ? "c2" : "smooth"; }

double bump(BumpKind kind, double z) {
    const double u = 1.0 - z * z;
    if (u <= 0.0) return 0.0;
    if (kind == BumpKind::C2) return u * u * u;
    return std::exp(1.0 - 1.0 / u);
}

double bump_d1(BumpKind kind, double z) {
    const double u = 1.0 - z * z;
    if (u <= 0.0) return 0.0;
    if (kind == BumpKind::C2) return -6.0 * z * u * u;
    return bump(kind, z) * (-2.0 * z / (u * u));
}

double bump_d2(BumpKind kind, double z) {
    const double u = 1.0 - z * z;
    if (u <= 0.0) return 0.0;
    if (kind == BumpKind::C2) return u * (30.0 * z * z - 6.0);
    const double g1 = -2.0 * z / (u * u);
    const double g2 = -2.0 / (u * u) - 8.0 * z * z / (u * u * u);
    return bump(kind, z) * (g1 * g1 + g2);
}

double bump_integral(BumpKind kind) {
    if (kind == BumpKind::C2) return 32.0 / 35.0;
    static const double smooth = integrate_adaptive([](double z) { return bump(BumpKind::Smooth, z); }, -1.0, 1.0).value;
    return smooth;
}

double Envelope::value(const Point& x) const {
    double v = amplitude;
    for (int i = 0; i < dims; ++i) {
        v *= bump(kind, (x[i] - center[i]) / radius[i]);
        if (v == 0.0) return 0.0;
    }
    return v;
}

double Envelope::d1(const Point& x, int dir) const {
    double v = amplitude;
    for (int i = 0; i < dims; ++i) {
        const double z = (x[i] - center[i]) / radius[i];
        v *= i == dir ? bump_d1(kind, z) / radius[i] : bump(kind, z);
        if (v == 0.0) return 0.0;
    }
    return v;
}

double Envelope::d2(const Point& x, int dir) const {
    double v = amplitude;
    for (int i = 0; i < dims; ++i) {
        const double z = (x[i] - center[i]) / radius[i];
        v *= i == dir ? bump_d2(kind, z) / (radius[i] * radius[i]) : bump(kind, z);
        if (v == 0.0) return 0.0;
    }
    return v;
}

double Envelope::laplacian(const Point& x) const {
    double s = 0.0;
    for (int i = 0; i < dims; ++i) s += d2(x, i);
    return s;
}

bool Envelope::in_support(const Point& x) const {
    for (int i = 0; i < dims; ++i)
        if (std::abs(x[i] - center[i]) >= radius[i]) return false;
    return true;
}

double Envelope::integral() const {
    double v = amplitude;
    for (int i = 0; i < dims; ++i) v *= radius[i] * bump_integral(kind);
    return v;
}

Profile1D hat_profile(double amplitude) {
    return {"hat", [amplitude](double z) { return amplitude * std::max(0.0, 1.0 - std::abs(z)); }, 1.0};
}

Profile1D c2_bump_profile(double amplitude) {
    return {"c2_bump", [amplitude](double z) { return amplitude * bump(BumpKind::C2, z); }, 1.0};
}

Profile1D odd_bump_profile(double amplitude) {
    return {"odd_bump", [amplitude](double z) { return amplitude * z * bump(BumpKind::C2, z); }, 1.0};
}

}  // namespace strip
