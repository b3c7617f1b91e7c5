#pragma once

// Finite-horizon surrogates for limsup statements: basin labels, forcing
// response ratios, the scalar saddle lemma and the ultimate bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "duffing/lyapunov.hpp"

namespace duffing {

inline constexpr double kDefaultTailFraction = 0.2;
inline constexpr std::size_t kMinTailSamples = 100;
inline constexpr double kAmbiguousMargin = 0.5;

/// First sample index of the trailing window.
inline std::size_t tail_begin(const Trajectory& traj, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "tail fraction must lie in (0, 1]");
    if (traj.size() < 2) throw Error(ErrorKind::HorizonTooShort, "trajectory has fewer than two samples");
    const double t_end = traj.times.back();
    const double t_start = t_end - tail_fraction * (t_end - traj.times.front());
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t_start - 1e-12 * std::max(1.0, t_end));
    const auto first = static_cast<std::size_t>(it - traj.times.begin());
    if (traj.size() - first < kMinTailSamples)
        throw Error(ErrorKind::HorizonTooShort, "tail window holds " + std::to_string(traj.size() - first) +
                                                    " samples, at least 100 required");
    return first;
}

struct BasinLabel {
    double sigma = 0.0;
    int sign = 0;                  // -1, 0, +1
    double tail_metric = 0.0;      // max over the tail of |u'| + |B(u - sigma e1)|
    double margin = 0.0;           // best / second best
    bool unresolved = false;       // margin above kAmbiguousMargin
    std::array<double, 3> metrics; // for sign -1, 0, +1
};

inline BasinLabel classify(const Trajectory& traj, const MatrixPair& pair, const GapSpectrum& spectrum,
                           double lambda, double tail_fraction = kDefaultTailFraction) {
    require_in_gap(spectrum, lambda);
    const std::size_t first = tail_begin(traj, tail_fraction);
    const double sigma0 = std::sqrt(lambda - spectrum.lambda1);
    const Vec e1 = spectrum.e1();

    BasinLabel out;
    out.metrics = {0.0, 0.0, 0.0};
    for (std::size_t i = first; i < traj.size(); ++i) {
        const double kinetic = traj.v[i].norm();
        for (int k = 0; k < 3; ++k) {
            const double sigma = (k - 1) * sigma0;
            const double m = kinetic + pair.b_norm(traj.u[i] - sigma * e1);
            out.metrics[k] = std::max(out.metrics[k], m);
        }
    }
    std::array<int, 3> order = {0, 1, 2};
    // ties resolve toward sigma = 0, then -sigma0
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (out.metrics[a] != out.metrics[b]) return out.metrics[a] < out.metrics[b];
        return (a == 1) > (b == 1);
    });
    out.sign = order[0] - 1;
    out.sigma = out.sign * sigma0;
    out.tail_metric = out.metrics[order[0]];
    const double second = out.metrics[order[1]];
    out.margin = second > 0.0 ? out.tail_metric / second : 0.0;
    out.unresolved = out.margin > kAmbiguousMargin;
    return out;
}

/// Maximum of a sample series over the trailing window.
inline double tail_max(const Trajectory& traj, const std::vector<double>& series,
                       double tail_fraction = kDefaultTailFraction) {
    const std::size_t first = tail_begin(traj, tail_fraction);
    return *std::max_element(series.begin() + static_cast<std::ptrdiff_t>(first), series.end());
}

// ---------------------------------------------------------------- forcing response

struct ResponseScenario {
    State initial;
    Vec shape;              // forcing direction, normalized internally
    double frequency = 1.0; // sinusoidal forcing eps sin(frequency t) shape
    IntegratorOptions integrator;
    double tail_fraction = kDefaultTailFraction;
};

struct ResponseRow {
    double eps;
    double tail_metric;
    double ratio; // tail_metric / eps, NaN at eps = 0
    int sign;
};

struct ResponseTable {
    std::vector<ResponseRow> rows;
    double ratio_spread = 1.0; // max / min ratio over positive eps
    bool stable = true;        // spread within a factor of two
};

inline ResponseTable forcing_response_ratio(const MatrixPair& pair, const GapSpectrum& spectrum, double lambda,
                                            const std::vector<double>& eps_list, const ResponseScenario& scenario) {
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw Error(ErrorKind::InvalidArgument, "eps values must be strictly decreasing");
    const Integrator integrator(pair, lambda);
    ResponseTable table;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double eps : eps_list) {
        if (eps < 0.0) throw Error(ErrorKind::InvalidArgument, "eps must be nonnegative");
        const Forcing f =
            eps > 0.0 ? Forcing::sinusoidal(eps, scenario.shape, scenario.frequency) : Forcing::zero(pair.n());
        const Trajectory traj = integrator.run(f, scenario.initial, scenario.integrator);
        const BasinLabel label = classify(traj, pair, spectrum, lambda, scenario.tail_fraction);
        const double ratio = eps > 0.0 ? label.tail_metric / eps : std::numeric_limits<double>::quiet_NaN();
        table.rows.push_back({eps, label.tail_metric, ratio, label.sign});
        if (eps > 0.0) {
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    if (hi > 0.0 && std::isfinite(lo)) {
        table.ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        table.stable = table.ratio_spread <= 2.0;
    }
    return table;
}

// ---------------------------------------------------------------- scalar lemma

/// y'' + y' - m y = psi(t), m > 0.
struct ScalarScenario {
    std::string name;
    std::function<double(double)> psi;
};

inline ScalarScenario scalar_zero() { return {"zero", [](double) { return 0.0; }}; }
inline ScalarScenario scalar_constant(double c) { return {"constant", [c](double) { return c; }}; }
inline ScalarScenario scalar_sine(double amplitude, double omega) {
    return {"sine", [amplitude, omega](double t) { return amplitude * std::sin(omega * t); }};
}

struct ScalarSolution {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> dy;
};

struct ScalarLemmaReport {
    double m = 0.0;
    double tail_y = 0.0;
    double tail_dy = 0.0;
    double tail_psi = 0.0;
    double bound_y = 0.0;  // tail|psi| / m
    double bound_dy = 0.0; // 2 tail|psi|
    bool y_ok = false;
    bool dy_ok = false;
    ScalarSolution solution;
};

inline constexpr double kScalarSlack = 0.05;

namespace detail {

inline void require_positive_m(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorKind::InvalidArgument, "m must be positive");
}

inline std::pair<double, double> saddle_rates(double m) {
    const double s = std::sqrt(1.0 + 4.0 * m);
    return {(-1.0 - s) / 2.0, (-1.0 + s) / 2.0};
}

} // namespace detail

/// Bounded solution through the exponential dichotomy. With r- < 0 < r+ the
/// roots of r^2 + r - m, z = y' - r- y solves z' = r+ z + psi and is taken as
/// the unique bounded solution (integrated backward from a padded horizon);
/// then y' = r- y + z is integrated forward from y(0) = y0.
inline ScalarSolution scalar_bounded_solution(double m, const ScalarScenario& scenario, double horizon, double y0,
                                              double dt = 1e-3) {
    detail::require_positive_m(m);
    if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    const auto [rm, rp] = detail::saddle_rates(m);
    // the backward sweep forgets its terminal value like exp(-r+ pad)
    const double pad = 40.0 / rp;
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt));
    const double h = horizon / static_cast<double>(n);
    const auto n_pad = n + static_cast<std::size_t>(std::ceil(pad / h));
    // z on a half-step grid: index j is time j h/2
    const std::size_t nz = 2 * n_pad + 1;
    std::vector<double> z(nz, 0.0);
    const double hz = 0.5 * h;
    auto fz = [&](double t, double zz) { return rp * zz + scenario.psi(t); };
    for (std::size_t j = nz - 1; j > 0; --j) {
        const double t = static_cast<double>(j) * hz;
        const double k1 = fz(t, z[j]);
        const double k2 = fz(t - hz / 2, z[j] - hz / 2 * k1);
        const double k3 = fz(t - hz / 2, z[j] - hz / 2 * k2);
        const double k4 = fz(t - hz, z[j] - hz * k3);
        z[j - 1] = z[j] - hz / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }

    ScalarSolution out;
    out.t.resize(n + 1);
    out.y.resize(n + 1);
    out.dy.resize(n + 1);
    double y = y0;
    for (std::size_t i = 0; i <= n; ++i) {
        out.t[i] = static_cast<double>(i) * h;
        out.y[i] = y;
        out.dy[i] = rm * y + z[2 * i];
        if (i == n) break;
        const double k1 = rm * y + z[2 * i];
        const double k2 = rm * (y + h / 2 * k1) + z[2 * i + 1];
        const double k3 = rm * (y + h / 2 * k2) + z[2 * i + 1];
        const double k4 = rm * (y + h * k3) + z[2 * i + 2];
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return out;
}

/// Forward integration from explicit data; throws once y leaves every
/// bounded neighbourhood the lemma could produce.
inline ScalarSolution scalar_forward_solution(double m, const ScalarScenario& scenario, double horizon, double y0,
                                              double y1, double dt = 1e-3, double escape = 1e8) {
    detail::require_positive_m(m);
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt));
    const double h = horizon / static_cast<double>(n);
    ScalarSolution out;
    out.t.reserve(n + 1);
    out.y.reserve(n + 1);
    out.dy.reserve(n + 1);
    double y = y0, p = y1;
    auto acc = [&](double t, double yy, double pp) { return scenario.psi(t) - pp + m * yy; };
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * h;
        out.t.push_back(t);
        out.y.push_back(y);
        out.dy.push_back(p);
        if (!std::isfinite(y) || std::abs(y) > escape)
            throw Error(ErrorKind::UnboundedSolution,
                        "|y| exceeded " + std::to_string(escape) + " at t = " + std::to_string(t));
        if (i == n) break;
        const double k1y = p, k1p = acc(t, y, p);
        const double k2y = p + h / 2 * k1p, k2p = acc(t + h / 2, y + h / 2 * k1y, p + h / 2 * k1p);
        const double k3y = p + h / 2 * k2p, k3p = acc(t + h / 2, y + h / 2 * k2y, p + h / 2 * k2p);
        const double k4y = p + h * k3p, k4p = acc(t + h, y + h * k3y, p + h * k3p);
        y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
        p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
    }
    return out;
}

inline ScalarLemmaReport scalar_lemma_check(double m, const ScalarScenario& scenario, double horizon,
                                            double y0 = 1.0, double tail_fraction = kDefaultTailFraction) {
    ScalarLemmaReport r;
    r.m = m;
    r.solution = scalar_bounded_solution(m, scenario, horizon, y0);
    const auto& s = r.solution;
    const double t_start = horizon * (1.0 - tail_fraction);
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        if (s.t[i] < t_start) continue;
        r.tail_y = std::max(r.tail_y, std::abs(s.y[i]));
        r.tail_dy = std::max(r.tail_dy, std::abs(s.dy[i]));
        r.tail_psi = std::max(r.tail_psi, std::abs(scenario.psi(s.t[i])));
    }
    r.bound_y = r.tail_psi / m;
    r.bound_dy = 2.0 * r.tail_psi;
    // absolute floor for the psi = 0 case, where both sides decay to zero
    r.y_ok = r.tail_y <= r.bound_y * (1.0 + kScalarSlack) + 1e-12;
    r.dy_ok = r.tail_dy <= r.bound_dy * (1.0 + kScalarSlack) + 1e-12;
    return r;
}

// ---------------------------------------------------------------- ultimate bound

struct UltimateBoundReport {
    double tail_value = 0.0; // max over the tail of |u'|^2 + |Bu|^2
    double tail_forcing = 0.0;
    double bound = 0.0;      // M2 + M3 tail_forcing^2
    bool pass = false;       // tail_value <= 1.05 bound
};

inline constexpr double kUltimateSlack = 0.05;

inline UltimateBoundReport ultimate_bound_check(const Trajectory& traj, const CertifiedConstants& c, const Forcing& f,
                                                const MatrixPair& pair, double tail_fraction = kDefaultTailFraction) {
    const double horizon = traj.times.back() - traj.times.front();
    if (horizon < 10.0 / c.gamma0 * (1.0 - 1e-12))
        throw Error(ErrorKind::HorizonTooShort,
                    "horizon " + std::to_string(horizon) + " shorter than 10/gamma0 = " + std::to_string(10.0 / c.gamma0));
    const std::size_t first = tail_begin(traj, tail_fraction);
    UltimateBoundReport r;
    for (std::size_t i = first; i < traj.size(); ++i) {
        r.tail_value = std::max(r.tail_value, traj.v[i].squaredNorm() + pair.b_norm_sq(traj.u[i]));
        r.tail_forcing = std::max(r.tail_forcing, f.norm(traj.times[i]));
    }
    r.bound = c.M2 + c.M3 * r.tail_forcing * r.tail_forcing;
    r.pass = r.tail_value <= r.bound * (1.0 + kUltimateSlack);
    return r;
}

} // namespace duffing
