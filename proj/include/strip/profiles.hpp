#pragma once
// Compactly supported shape functions used to describe perturbations.

#include <functional>
#include <string>

#include "strip/geometry.hpp"

namespace strip {

enum class BumpKind {
    C2,      // (1 - z^2)^3, twice continuously differentiable
    Smooth,  // exp(1 - 1/(1 - z^2)), infinitely differentiable
};

BumpKind bump_kind_from_string(std::string_view name);
const char* to_string(BumpKind kind);

double bump(BumpKind kind, double z);
double bump_d1(BumpKind kind, double z);
double bump_d2(BumpKind kind, double z);
/// Integral of the bump over [-1, 1].
double bump_integral(BumpKind kind);

/// Tensor-product bump A * prod_i b((x_i - c_i) / r_i) in `dims` dimensions.
struct Envelope {
    BumpKind kind = BumpKind::C2;
    double amplitude = 1.0;
    int dims = 2;
    Point center{};
    Point radius{};

    double value(const Point& x) const;
    double d1(const Point& x, int dir) const;
    double d2(const Point& x, int dir) const;
    double laplacian(const Point& x) const;
    bool in_support(const Point& x) const;
    double integral() const;
};

/// One-dimensional profile on the reference variable zeta, supported in
/// [-radius, radius].
struct Profile1D {
    std::string name;
    std::function<double(double)> f;
    double radius = 1.0;

    double operator()(double zeta) const { return std::abs(zeta) >= radius ? 0.0 : f(zeta); }
};

/// amplitude * (1 - |zeta|) on [-1, 1].
Profile1D hat_profile(double amplitude = 1.0);
/// amplitude * (1 - zeta^2)^3 on [-1, 1].
Profile1D c2_bump_profile(double amplitude = 1.0);
/// amplitude * zeta * (1 - zeta^2)^3; zero integral.
Profile1D odd_bump_profile(double amplitude = 1.0);

}  // namespace strip
