#include "strip/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>

#include "strip/errors.hpp"

namespace strip {

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (a == b) return {};
    double err = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 25, abs_tol / std::max(std::abs(b - a), 1e-300), &err, &l1);
    return {value, err * std::max(l1, 1.0)};
}

GaussRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
    GaussRule rule;
    // legendre_p_zeros returns the nonnegative zeros in ascending order.
    const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(n));
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
        if (*it != 0.0) x.push_back(-*it);
    for (double z : zeros) x.push_back(z);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (double z : x) {
        const double dp = boost::math::legendre_p_prime(n, z);
        rule.nodes.push_back(mid + half * z);
        rule.weights.push_back(half * 2.0 / ((1.0 - z * z) * dp * dp));
    }
    return rule;
}

}  // namespace strip
