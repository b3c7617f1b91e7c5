#pragma once

// Time integration of
//     u'' + u' + B^2 u - lambda A u + (u^T A u) A u = f(t)
// in first-order form. K = B^2 - lambda A is diagonalized once,
// K = Q diag(kappa) Q^T, so the stiff linear part decouples into damped
// scalar oscillators. The cubic term and the forcing G are explicit.
//
// Exponential scheme (default): each oscillator is propagated exactly over
// the step with G interpolated linearly in time (ETD2RK).
// Trapezoidal scheme: linearly implicit trapezoidal rule in the linear part,
// Heun predictor/corrector in G. Not L-stable, so modes with h*omega >> 1
// are carried undamped at large steps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "duffing/forcing.hpp"
#include "duffing/gap_pair.hpp"

namespace duffing {

struct State {
    double t = 0.0;
    Vec u;
    Vec v;
};

struct StepRecord {
    double t;
    double h;
    double error; // normalized; accepted when <= 1
    bool accepted;
};

struct Trajectory {
    std::vector<double> times; // uniform stride
    std::vector<Vec> u;
    std::vector<Vec> v;
    std::vector<StepRecord> steps; // empty unless requested
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    double stride = 0.0;

    std::size_t size() const { return times.size(); }
    State state(std::size_t i) const { return {times[i], u[i], v[i]}; }
    State back() const { return state(size() - 1); }
};

enum class Scheme { Exponential, Trapezoidal };

struct IntegratorOptions {
    double horizon = 10.0;
    double tol = 1e-8;
    double stride = 0.01;
    double h_init = 1e-3;
    double h_max = 0.1;
    bool record_steps = false;
    std::size_t max_steps = 50'000'000;
    Scheme scheme = Scheme::Exponential;
};

/// u'' implied by the equation: f - v - B^2 u + lambda A u - (u^T A u) A u.
inline Vec residual(const MatrixPair& pair, double lambda, const State& s, const Vec& f_value) {
    const Vec Au = pair.A() * s.u;
    return f_value - s.v - pair.B2() * s.u + lambda * Au - s.u.dot(Au) * Au;
}

/// Adaptive integrator with step doubling error control. Construct once per
/// (pair, lambda); run() is const and reentrant.
class Integrator {
public:
    Integrator(const MatrixPair& pair, double lambda) : lambda_(lambda) {
        linalg::SymmetricEigen eig = linalg::symmetric_eigen(pair.B2() - lambda * pair.A());
        Q_ = std::move(eig.vectors);
        kappa_ = std::move(eig.values);
        A_modal_ = linalg::symmetrized(Q_.transpose() * pair.A() * Q_);
        const double most_negative = std::min(0.0, kappa_.minCoeff());
        // keeps the trapezoidal 2x2 determinant (1 + h/2) + h^2 kappa / 4 above 1/2
        trapezoid_cap_ = most_negative < 0.0
                             ? (1.0 + std::sqrt(1.0 + 2.0 * -most_negative)) / -most_negative
                             : std::numeric_limits<double>::infinity();
    }

    double lambda() const { return lambda_; }
    /// Eigenvalues of B^2 - lambda A, ascending.
    const Vec& modal_stiffness() const { return kappa_; }

    Trajectory run(const Forcing& f, const State& s0, const IntegratorOptions& opt) const {
        const Eigen::Index n = Q_.rows();
        if (s0.u.size() != n || s0.v.size() != n)
            throw Error(ErrorKind::InvalidArgument, "initial state dimension does not match the pair");
        if (f.dimension() != n) throw Error(ErrorKind::InvalidArgument, "forcing dimension does not match the pair");
        if (!s0.u.allFinite() || !s0.v.allFinite())
            throw Error(ErrorKind::InvalidArgument, "initial state must be finite");
        if (!(opt.horizon > 0.0) || !std::isfinite(opt.horizon))
            throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
        if (!(opt.tol >= 1e-12 && opt.tol <= 1e-3))
            throw Error(ErrorKind::InvalidArgument, "tol must lie in [1e-12, 1e-3]");
        if (!(opt.stride > 0.0)) throw Error(ErrorKind::InvalidArgument, "stride must be positive");
        if (!(opt.h_max > 0.0) || !(opt.h_init > 0.0))
            throw Error(ErrorKind::InvalidArgument, "step sizes must be positive");

        Run run{*this, f, Q_.transpose() * f.shape(), opt.scheme, {}};
        const double t0 = s0.t;
        const double t_end = t0 + opt.horizon;
        double h_max = std::min(opt.h_max, opt.horizon);
        if (opt.scheme == Scheme::Trapezoidal) h_max = std::min(h_max, trapezoid_cap_);

        Trajectory traj;
        traj.stride = opt.stride;
        const auto n_samples = static_cast<std::size_t>(std::floor(opt.horizon / opt.stride * (1.0 + 1e-12))) + 1;
        traj.times.reserve(n_samples);
        traj.u.reserve(n_samples);
        traj.v.reserve(n_samples);

        Modal y{Q_.transpose() * s0.u, Q_.transpose() * s0.v};
        double t = t0;
        Vec G0 = explicit_term(run, t, y.q);
        Vec a0 = acceleration(y, G0);

        auto emit = [&](double ts, const Vec& q, const Vec& p) {
            traj.times.push_back(ts);
            traj.u.push_back(Q_ * q);
            traj.v.push_back(Q_ * p);
        };
        emit(t0, y.q, y.p);
        std::size_t next_sample = 1;
        auto sample_time = [&](std::size_t i) { return t0 + static_cast<double>(i) * opt.stride; };

        // step sizes live on the ladder h_max 2^(-k/4) so propagators can be cached
        int k = ladder_index(std::min(opt.h_init, h_max), h_max);
        double err_prev = 1.0;
        std::size_t attempts = 0;
        while (next_sample < n_samples) {
            if (++attempts > opt.max_steps) throw Error(ErrorKind::StepSizeUnderflow, "step budget exhausted");
            double h = ladder(h_max, k);
            int level = k;
            bool last = false;
            if (t + h * (1.0 + 1e-9) >= t_end) {
                h = t_end - t;
                level = -1; // off the ladder
                last = true;
            }
            if (h < 1e-14) {
                std::ostringstream msg;
                msg << "step size " << h << " below 1e-14 at t = " << t;
                throw Error(ErrorKind::StepSizeUnderflow, msg.str());
            }
            // one full step against two half steps
            const Modal full = step(run, t, h, level, y, G0);
            const int half_level = level < 0 ? -1 : level + 4;
            const Modal half = step(run, t, 0.5 * h, half_level, y, G0);
            const Vec G_mid = explicit_term(run, t + 0.5 * h, half.q);
            const Modal two = step(run, t + 0.5 * h, 0.5 * h, half_level, half, G_mid);
            const double err = error_norm(y, two, full, opt.tol);

            if (opt.record_steps) traj.steps.push_back({t, h, err, err <= 1.0});
            if (err <= 1.0) {
                ++traj.accepted_steps;
                const double t1 = last ? t_end : t + h;
                const Vec G1 = explicit_term(run, t1, two.q);
                const Vec a1 = acceleration(two, G1);
                const double span = t1 - t;
                while (next_sample < n_samples &&
                       sample_time(next_sample) <= t1 + 1e-12 * std::max(1.0, std::abs(t1))) {
                    const double ts = sample_time(next_sample);
                    const double s = std::clamp((ts - t) / span, 0.0, 1.0);
                    emit(ts, hermite(y.q, y.p, two.q, two.p, s, span), hermite(y.p, a0, two.p, a1, s, span));
                    ++next_sample;
                }
                t = t1;
                y = two;
                G0 = G1;
                a0 = a1;
                const double fac =
                    0.9 * std::pow(std::max(err, 1e-10), -0.7 / 3.0) * std::pow(err_prev, 0.4 / 3.0);
                err_prev = std::max(err, 1e-4);
                if (!last) k = std::max(0, k - ladder_steps(std::clamp(fac, 0.2, 2.0)));
            } else {
                ++traj.rejected_steps;
                const double fac = std::isfinite(err) ? 0.9 * std::pow(err, -1.0 / 3.0) : 0.2;
                k = (last ? ladder_index(h, h_max) : k) + std::max(1, -ladder_steps(std::clamp(fac, 0.2, 0.9)));
            }
        }
        return traj;
    }

private:
    struct Modal {
        Vec q; // Q^T u
        Vec p; // Q^T v
    };

    /// Exact propagator of q'' + q' + kappa q = g over one step, per mode:
    /// E = exp(h M) and the responses to g = 1 (phi0) and g = s/h (phi1).
    struct Propagator {
        Vec e11, e12, e21, e22;
        Vec phi0_q, phi0_p, phi1_q, phi1_p;
    };

    struct Run {
        const Integrator& self;
        const Forcing& f;
        Vec g_modal;
        Scheme scheme;
        std::map<int, Propagator> cache;
    };

    static double ladder(double h_max, int k) { return h_max * std::exp2(-0.25 * k); }
    static int ladder_index(double h, double h_max) {
        return std::max(0, static_cast<int>(std::ceil(-4.0 * std::log2(h / h_max) - 1e-9)));
    }
    /// Ladder rungs for a growth factor; positive means larger steps.
    static int ladder_steps(double fac) { return static_cast<int>(std::floor(4.0 * std::log2(fac) + 1e-9)); }

    Propagator propagator(double h) const {
        const Eigen::Index n = kappa_.size();
        Propagator P;
        for (Vec* v : {&P.e11, &P.e12, &P.e21, &P.e22, &P.phi0_q, &P.phi0_p, &P.phi1_q, &P.phi1_p}) v->resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            // Van Loan block form: exp(h [[M, b, 0], [0, 0, 1/h], [0, 0, 0]])
            Eigen::Matrix4d Z = Eigen::Matrix4d::Zero();
            Z(0, 1) = h;
            Z(1, 0) = -kappa_(j) * h;
            Z(1, 1) = -h;
            Z(1, 2) = h;
            Z(2, 3) = 1.0;
            const Eigen::Matrix4d X = Z.exp();
            P.e11(j) = X(0, 0);
            P.e12(j) = X(0, 1);
            P.e21(j) = X(1, 0);
            P.e22(j) = X(1, 1);
            P.phi0_q(j) = X(0, 2);
            P.phi0_p(j) = X(1, 2);
            P.phi1_q(j) = X(0, 3);
            P.phi1_p(j) = X(1, 3);
        }
        return P;
    }

    const Propagator& cached(Run& run, double h, int level) const {
        if (level < 0) {
            auto [it, inserted] = run.cache.insert_or_assign(-1, propagator(h));
            return it->second;
        }
        auto it = run.cache.find(level);
        if (it == run.cache.end()) it = run.cache.emplace(level, propagator(h)).first;
        return it->second;
    }

    Vec explicit_term(const Run& run, double t, const Vec& q) const {
        const Vec Aq = A_modal_ * q;
        Vec out = -q.dot(Aq) * Aq;
        if (run.f.kind() != ForcingKind::Zero) out += run.f.profile(t) * run.g_modal;
        return out;
    }

    Vec acceleration(const Modal& y, const Vec& G) const { return G - y.p - kappa_.cwiseProduct(y.q); }

    Modal step(Run& run, double t, double h, int level, const Modal& y, const Vec& G0) const {
        if (run.scheme == Scheme::Trapezoidal) return trapezoidal_step(run, t, h, y, G0);
        // level -1 entries are overwritten, so keep a copy across the nested lookup
        const Propagator P = level < 0 ? propagator(h) : cached(run, h, level);
        Modal pred;
        pred.q = P.e11.cwiseProduct(y.q) + P.e12.cwiseProduct(y.p) + P.phi0_q.cwiseProduct(G0);
        pred.p = P.e21.cwiseProduct(y.q) + P.e22.cwiseProduct(y.p) + P.phi0_p.cwiseProduct(G0);
        const Vec dG = explicit_term(run, t + h, pred.q) - G0;
        pred.q += P.phi1_q.cwiseProduct(dG);
        pred.p += P.phi1_p.cwiseProduct(dG);
        return pred;
    }

    // Heun-type IMEX step: trapezoidal in K and damping, explicit in G.
    Modal trapezoidal_step(const Run& run, double t, double h, const Modal& y, const Vec& G0) const {
        const double hh = 0.5 * h;
        const Vec rq = y.q + hh * y.p;
        const Vec rp = y.p + hh * (-kappa_.cwiseProduct(y.q) - y.p);
        const Modal pred = trapezoidal_solve(h, rq, rp + h * G0);
        const Vec G1 = explicit_term(run, t + h, pred.q);
        return trapezoidal_solve(h, rq, rp + hh * (G0 + G1));
    }

    // (I - h/2 L) y = r for every mode: [1, -h/2; h kappa/2, 1 + h/2].
    Modal trapezoidal_solve(double h, const Vec& rq, const Vec& rp) const {
        const double hh = 0.5 * h;
        const Vec det = Vec::Constant(rq.size(), 1.0 + hh) + (hh * hh) * kappa_;
        Modal out;
        out.q = ((1.0 + hh) * rq + hh * rp).cwiseQuotient(det);
        out.p = (rp - hh * kappa_.cwiseProduct(rq)).cwiseQuotient(det);
        return out;
    }

    static double error_norm(const Modal& y0, const Modal& y1, const Modal& coarse, double tol) {
        const Eigen::Index n = y0.q.size();
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sq = tol + tol * std::max(std::abs(y0.q(i)), std::abs(y1.q(i)));
            const double sp = tol + tol * std::max(std::abs(y0.p(i)), std::abs(y1.p(i)));
            const double eq = (y1.q(i) - coarse.q(i)) / 3.0 / sq;
            const double ep = (y1.p(i) - coarse.p(i)) / 3.0 / sp;
            sum += eq * eq + ep * ep;
        }
        const double err = std::sqrt(sum / (2.0 * static_cast<double>(n)));
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }

    static Vec hermite(const Vec& x0, const Vec& d0, const Vec& x1, const Vec& d1, double s, double span) {
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * x0 + (h10 * span) * d0 + h01 * x1 + (h11 * span) * d1;
    }

    double lambda_;
    Mat Q_;
    Vec kappa_;
    Mat A_modal_;
    double trapezoid_cap_;
};

inline Trajectory integrate(const MatrixPair& pair, double lambda, const Forcing& f, const State& s0,
                            const IntegratorOptions& opt) {
    return Integrator(pair, lambda).run(f, s0, opt);
}

/// |u' - v'| + |B(u - v)| sample by sample.
inline std::vector<double> pairwise_difference(const Trajectory& a, const Trajectory& b, const MatrixPair& pair) {
    if (a.size() != b.size()) throw Error(ErrorKind::MisalignedGrids, "trajectories have different sample counts");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-12 * std::max(1.0, std::abs(a.times[i])))
            throw Error(ErrorKind::MisalignedGrids, "sample times differ");
        const Vec du = a.u[i] - b.u[i];
        out[i] = (a.v[i] - b.v[i]).norm() + pair.b_norm(du);
    }
    return out;
}

} // namespace duffing
