#include "strip/cellproblem.hpp"

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "strip/errors.hpp"
#include "strip/quadrature.hpp"
#include "strip/spectral.hpp"

namespace strip {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t ipow(int base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

// In-place multidimensional DFT, first axis fastest.
void fft_nd(std::vector<std::complex<double>>& data, int dims, int m, bool inverse) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> line(static_cast<std::size_t>(m)), out;
    const std::size_t total = data.size();
    std::size_t stride = 1;
    for (int axis = 0; axis < dims; ++axis) {
        const std::size_t block = stride * static_cast<std::size_t>(m);
        for (std::size_t base = 0; base < total; base += block)
            for (std::size_t off = 0; off < stride; ++off) {
                for (int c = 0; c < m; ++c) line[static_cast<std::size_t>(c)] = data[base + off + static_cast<std::size_t>(c) * stride];
                if (inverse) fft.inv(out, line);
                else fft.fwd(out, line);
                for (int c = 0; c < m; ++c) data[base + off + static_cast<std::size_t>(c) * stride] = out[static_cast<std::size_t>(c)];
            }
        stride = block;
    }
}

template <class F>
void for_each_grid_point(int dims, int m, F&& f) {
    const std::size_t total = ipow(m, dims);
    MultiIndex c{};
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        for (int i = 0; i < dims; ++i) {
            c[i] = static_cast<int>(r % static_cast<std::size_t>(m));
            r /= static_cast<std::size_t>(m);
        }
        f(idx, c);
    }
}

// Bounding box of the mode envelopes (or of W when requested).
void envelope_box(const Envelope& e, int dims, Point& lo, Point& hi, bool& any) {
    if (e.amplitude == 0.0) return;
    for (int i = 0; i < dims; ++i) {
        const double a = e.center[i] - e.radius[i], b = e.center[i] + e.radius[i];
        lo[i] = any ? std::min(lo[i], a) : a;
        hi[i] = any ? std::max(hi[i], b) : b;
    }
    any = true;
}

// Tensor Gauss-Legendre rule over a box.
void tensor_rule(const Point& lo, const Point& hi, int dims, int points, std::vector<Point>& nodes,
                 std::vector<double>& weights) {
    std::vector<GaussRule> rules;
    for (int i = 0; i < dims; ++i) rules.push_back(gauss_legendre(points, lo[i], hi[i]));
    nodes.clear();
    weights.clear();
    for_each_grid_point(dims, points, [&](std::size_t, const MultiIndex& c) {
        Point x{};
        double w = 1.0;
        for (int i = 0; i < dims; ++i) {
            x[i] = rules[static_cast<std::size_t>(i)].nodes[static_cast<std::size_t>(c[i])];
            w *= rules[static_cast<std::size_t>(i)].weights[static_cast<std::size_t>(c[i])];
        }
        nodes.push_back(x);
        weights.push_back(w);
    });
}

}  // namespace

double CorrectorSlice::evaluate(const Point& xi) const {
    double s = 0.0;
    for_each_grid_point(dims, m, [&](std::size_t idx, const MultiIndex& c) {
        const std::complex<double> a = coefficients[idx];
        if (a == 0.0) return;
        double phase = 0.0;
        for (int i = 0; i < dims; ++i) phase += frequency(c[i]) * xi[i];
        s += (a * std::polar(1.0, kTwoPi * phase)).real();
    });
    return s;
}

CorrectorSlice solve_cell_poisson(const std::vector<double>& q, int dims, int m) {
    if (dims < 1 || dims > kMaxDims || m < 4) throw ConfigError("solve_cell_poisson: bad grid");
    const std::size_t total = ipow(m, dims);
    if (q.size() != total) throw ConfigError("solve_cell_poisson: sample count does not match grid");
    double mean = 0.0, qmax = 0.0;
    for (double v : q) {
        mean += v;
        qmax = std::max(qmax, std::abs(v));
    }
    mean /= static_cast<double>(total);
    if (std::abs(mean) > 1e-8 * std::max(1.0, qmax)) throw ConfigError("cell problem data must have zero xi-mean");

    CorrectorSlice s;
    s.dims = dims;
    s.m = m;
    std::vector<std::complex<double>> hat(q.begin(), q.end());
    fft_nd(hat, dims, m, false);
    const double norm = 1.0 / static_cast<double>(total);
    s.coefficients.assign(total, 0.0);
    std::vector<std::complex<double>> lap(total, 0.0);
    for_each_grid_point(dims, m, [&](std::size_t idx, const MultiIndex& c) {
        double k2 = 0.0;
        for (int i = 0; i < dims; ++i) k2 += static_cast<double>(s.frequency(c[i])) * s.frequency(c[i]);
        if (k2 == 0.0) return;
        const std::complex<double> qh = hat[idx] * norm;
        const double denom = 4.0 * std::numbers::pi * std::numbers::pi * k2;
        s.coefficients[idx] = -qh / denom;
        s.energy += std::norm(qh) / denom;
        lap[idx] = qh;
    });
    // Back to the grid; Eigen's inverse transform divides by m per axis.
    std::vector<std::complex<double>> w = s.coefficients;
    fft_nd(w, dims, m, true);
    fft_nd(lap, dims, m, true);
    s.values.resize(total);
    const double scale = static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) {
        s.values[i] = w[i].real() * scale;
        s.residual = std::max(s.residual, std::abs(lap[i].real() * scale - (q[i] - mean)));
    }
    return s;
}

double gradient_energy(const CorrectorSlice& slice) { return slice.energy; }

std::vector<double> sample_xi(const OscSpec& spec, const Point& x, int dims, int m) {
    std::vector<double> q(ipow(m, dims));
    for_each_grid_point(dims, m, [&](std::size_t idx, const MultiIndex& c) {
        Point xi{};
        for (int i = 0; i < dims; ++i) xi[i] = static_cast<double>(c[i]) / m;
        q[idx] = spec.Q(x, xi, dims);
    });
    return q;
}

CellCorrector build_cell_corrector(const OscSpec& spec, int dims, int x_points, int m_xi) {
    CellCorrector cc;
    cc.dims = dims;
    Point lo{}, hi{};
    bool any = false;
    for (const OscMode& mode : spec.modes) envelope_box(mode.envelope, dims, lo, hi, any);
    if (!any) return cc;
    tensor_rule(lo, hi, dims, x_points, cc.nodes, cc.weights);
    cc.energy.reserve(cc.nodes.size());
    for (const Point& x : cc.nodes) {
        bool active = false;
        for (const OscMode& mode : spec.modes) active = active || mode.envelope.value(x) != 0.0;
        cc.energy.push_back(active ? gradient_energy(solve_cell_poisson(sample_xi(spec, x, dims, m_xi), dims, m_xi)) : 0.0);
    }
    return cc;
}

LocCorrector::LocCorrector(Profile1D profile) : profile_(std::move(profile)) {
    i0_ = integrate([&](double z) { return profile_(z); }, -profile_.radius, profile_.radius);
    i1_ = integrate([&](double z) { return z * profile_(z); }, -profile_.radius, profile_.radius);
}

double LocCorrector::integrate(const std::function<double(double)>& f, double a, double b) const {
    if (!(b > a)) return 0.0;
    // Split at the origin, where common profiles have a kink.
    if (a < 0.0 && b > 0.0) return integrate_adaptive(f, a, 0.0, 1e-13).value + integrate_adaptive(f, 0.0, b, 1e-13).value;
    return integrate_adaptive(f, a, b, 1e-13).value;
}

double LocCorrector::operator()(double xi) const {
    const double R = profile_.radius;
    if (xi >= R) return 0.5 * (xi * i0_ - i1_);
    if (xi <= -R) return 0.5 * (i1_ - xi * i0_);
    const double left = integrate([&](double z) { return (xi - z) * profile_(z); }, -R, xi);
    const double right = integrate([&](double z) { return (z - xi) * profile_(z); }, xi, R);
    return 0.5 * (left + right);
}

double LocCorrector::derivative(double xi) const {
    const double R = profile_.radius;
    if (xi >= R) return 0.5 * i0_;
    if (xi <= -R) return -0.5 * i0_;
    const auto f = [&](double z) { return profile_(z); };
    return 0.5 * (integrate(f, -R, xi) - integrate(f, xi, R));
}

LocCorrector wstar_loc(const LocSpec& spec) { return LocCorrector(spec.profile); }

HypothesisReport hypothesis_loc(const LocSpec& spec) {
    HypothesisReport r;
    r.kind = "loc";
    const auto f = [&](double z) { return spec.profile(z); };
    const double R = spec.profile.radius;
    const QuadratureResult a = integrate_adaptive(f, -R, 0.0), b = integrate_adaptive(f, 0.0, R);
    r.value = a.value + b.value;
    r.error_estimate = a.error + b.error + 1e-14 * (1.0 + std::abs(r.value));
    r.passes = r.value > r.error_estimate;
    return r;
}

namespace {

double osc_value(const OscSpec& spec, const TransverseMode& mode, int n, int x_points, int m_xi) {
    const int dims = n + 1;
    const auto psi2 = [&](const Point& x) {
        const double p = psi0_at(mode, x[n]);
        return p * p;
    };
    double value = 0.0;
    if (spec.W.amplitude != 0.0) {
        Point lo{}, hi{};
        bool any = false;
        envelope_box(spec.W, dims, lo, hi, any);
        std::vector<Point> nodes;
        std::vector<double> weights;
        tensor_rule(lo, hi, dims, x_points, nodes, weights);
        for (std::size_t i = 0; i < nodes.size(); ++i) value += weights[i] * spec.W_at(nodes[i]) * psi2(nodes[i]);
    }
    const CellCorrector cc = build_cell_corrector(spec, dims, x_points, m_xi);
    for (std::size_t i = 0; i < cc.nodes.size(); ++i) value -= cc.weights[i] * cc.energy[i] * psi2(cc.nodes[i]);
    return value;
}

}  // namespace

HypothesisReport hypothesis_osc(const OscSpec& spec, const TransverseMode& mode, int n, int x_points, int m_xi) {
    HypothesisReport r;
    r.kind = "osc";
    r.value = osc_value(spec, mode, n, x_points, m_xi);
    const double coarse = osc_value(spec, mode, n, std::max(2, x_points / 2), m_xi);
    r.error_estimate = std::abs(r.value - coarse) + 1e-13 * (1.0 + std::abs(r.value));
    r.passes = r.value > r.error_estimate;
    return r;
}

HypothesisReport hypothesis_dlt(const DltSpec& spec, const TransverseMode& mode, int n) {
    HypothesisReport r;
    r.kind = "dlt";
    double full = 0.0, half = 0.0;
    for (std::size_t j = 0; j < spec.surface.nodes.size(); ++j) {
        const Point& s = spec.surface.nodes[j];
        const double p = psi0_at(mode, s[n]);
        const double v = spec.b_at(s) * spec.surface.weights[j] * p * p;
        full += v;
        if (j % 2 == 0) half += 2.0 * v;
    }
    r.value = full;
    r.error_estimate = (spec.surface.nodes.size() >= 4 ? std::abs(full - half) : std::abs(full)) + 1e-14 * (1.0 + std::abs(full));
    r.passes = r.value > r.error_estimate;
    return r;
}

HypothesisReport hypothesis(const PerturbationSpec& spec, const TransverseMode& mode, int n) {
    if (const auto* loc = std::get_if<LocSpec>(&spec)) return hypothesis_loc(*loc);
    if (const auto* osc = std::get_if<OscSpec>(&spec)) return hypothesis_osc(*osc, mode, n);
    return hypothesis_dlt(std::get<DltSpec>(spec), mode, n);
}

OscillatingMeanReport oscillating_mean_check(const std::function<double(const Point&, const Point&)>& w, int dims,
                                             const Point& lo, const Point& hi, const std::vector<double>& eps_list,
                                             int m_xi) {
    if (eps_list.size() < 4) throw ConfigError("oscillating_mean_check needs at least 4 eps values");
    OscillatingMeanReport rep;
    std::vector<double> lx, ly;
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw ConfigError("eps must be positive");
        std::vector<int> count(static_cast<std::size_t>(dims));
        std::vector<double> step(static_cast<std::size_t>(dims));
        double total = 1.0;
        for (int i = 0; i < dims; ++i) {
            const double width = hi[i] - lo[i];
            const int cells = std::max(1, static_cast<int>(std::ceil(width / (eps / 20.0) - 1e-9)));
            count[static_cast<std::size_t>(i)] = cells + 1;
            step[static_cast<std::size_t>(i)] = width / cells;
            total *= cells + 1;
        }
        if (total > 5e7) throw ConfigError("oscillating_mean_check: grid too fine");
        const double cell_mean_weight = 1.0 / static_cast<double>(ipow(m_xi, dims));
        double diff = 0.0;
        MultiIndex c{};
        const auto n_total = static_cast<std::size_t>(total);
        for (std::size_t idx = 0; idx < n_total; ++idx) {
            std::size_t r = idx;
            Point x{}, xi{};
            double wt = 1.0;
            for (int i = 0; i < dims; ++i) {
                const auto cnt = static_cast<std::size_t>(count[static_cast<std::size_t>(i)]);
                c[i] = static_cast<int>(r % cnt);
                r /= cnt;
                x[i] = lo[i] + c[i] * step[static_cast<std::size_t>(i)];
                xi[i] = x[i] / eps;
                wt *= step[static_cast<std::size_t>(i)] * ((c[i] == 0 || c[i] + 1 == count[static_cast<std::size_t>(i)]) ? 0.5 : 1.0);
            }
            double mean = 0.0;
            for_each_grid_point(dims, m_xi, [&](std::size_t, const MultiIndex& k) {
                Point z{};
                for (int i = 0; i < dims; ++i) z[i] = static_cast<double>(k[i]) / m_xi;
                mean += w(x, z);
            });
            diff += wt * (w(x, xi) - mean * cell_mean_weight);
        }
        rep.eps.push_back(eps);
        rep.errors.push_back(std::abs(diff));
        if (diff != 0.0) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(std::abs(diff)));
        }
    }
    if (lx.size() >= 2) rep.slope = fit_line(lx, ly).slope;
    return rep;
}

}  // namespace strip
