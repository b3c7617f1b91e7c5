#include <gtest/gtest.h>

#include "duffing/duffing.hpp"
#include "oracles.hpp"

using namespace duffing;

namespace {

MatrixPair diag_pair() {
    Mat A = Mat::Zero(2, 2), B2 = Mat::Zero(2, 2);
    A.diagonal() << 1, 2;
    B2.diagonal() << 1, 8;
    return validate_pair(A, B2);
}

State make_state(std::initializer_list<double> u, std::initializer_list<double> v) {
    State s;
    s.u = Eigen::Map<const Vec>(u.begin(), static_cast<Eigen::Index>(u.size()));
    s.v = Eigen::Map<const Vec>(v.begin(), static_cast<Eigen::Index>(v.size()));
    return s;
}

double max_distance(const Trajectory& traj, const oracle::Sample& ref) {
    double err = 0;
    EXPECT_EQ(traj.size(), ref.t.size());
    for (std::size_t i = 0; i < std::min(traj.size(), ref.t.size()); ++i) {
        EXPECT_NEAR(traj.times[i], ref.t[i], 1e-9);
        err = std::max(err, (traj.u[i] - ref.u[i]).norm() + (traj.v[i] - ref.v[i]).norm());
    }
    return err;
}

} // namespace

TEST(Residual, MatchesEquation) {
    const MatrixPair p = diag_pair();
    const State s = make_state({1, 1}, {0.5, -1});
    const Vec f = Vec::Constant(2, 0.25);
    // u^T A u = 3, A u = (1, 2): f - v - B2 u + 2 A u - 3 A u
    const Vec r = residual(p, 2.0, s, f);
    EXPECT_NEAR(r(0), 0.25 - 0.5 - 1 + 2 - 3, 1e-15);
    EXPECT_NEAR(r(1), 0.25 + 1 - 8 + 4 - 6, 1e-15);
}

TEST(Integrator, AgreesWithRk4OracleForced) {
    const MatrixPair p = diag_pair();
    const Vec shape = Vec::Ones(2);
    const Forcing f = Forcing::sinusoidal(0.3, shape, 1.3);
    const State s0 = make_state({0.5, 0.3}, {0.0, 0.2});
    IntegratorOptions opt;
    opt.horizon = 20;
    opt.stride = 0.1;
    opt.tol = 1e-10;
    const auto ref = oracle::rk4(p.A(), p.B2(), 2.0, [&](double t) { return f.value(t); }, s0.u, s0.v, 1e-3, 20, 100);
    const Trajectory traj = integrate(p, 2.0, f, s0, opt);
    EXPECT_LT(max_distance(traj, ref), 1e-6);

    opt.scheme = Scheme::Trapezoidal;
    EXPECT_LT(max_distance(integrate(p, 2.0, f, s0, opt), ref), 1e-6);
}

TEST(Integrator, AgreesWithRk4OracleOnBeam) {
    const MatrixPair p = beam::assemble_fd(16);
    const GapSpectrum s = gap_spectrum(p, 2);
    const double lambda = 60;
    State s0;
    s0.u = 0.5 * s.vectors.col(1) + 0.2 * s.e1();
    s0.v = Vec::Zero(16);
    // stiffest mode ~ 1.2e3 rad/s; dt = 5e-5 keeps RK4 phase error below the comparison tolerance
    const auto ref =
        oracle::rk4(p.A(), p.B2(), lambda, [](double) { return Vec::Zero(16); }, s0.u, s0.v, 5e-5, 5, 2000);
    IntegratorOptions opt;
    opt.horizon = 5;
    opt.stride = 0.1;
    opt.tol = 1e-10;
    EXPECT_LT(max_distance(integrate(p, lambda, Forcing::zero(16), s0, opt), ref), 1e-5);
}

TEST(Integrator, SecondOrderAtFixedStep) {
    const MatrixPair p = diag_pair();
    const Forcing f = Forcing::sinusoidal(0.3, Vec::Ones(2), 1.3);
    const State s0 = make_state({0.5, 0.3}, {0.0, 0.2});
    const auto ref = oracle::rk4(p.A(), p.B2(), 2.0, [&](double t) { return f.value(t); }, s0.u, s0.v, 1e-4, 5, 50000);
    for (Scheme scheme : {Scheme::Exponential, Scheme::Trapezoidal}) {
        std::vector<double> errors;
        for (double h : {0.04, 0.02, 0.01}) {
            IntegratorOptions opt;
            opt.horizon = 5;
            opt.stride = 5;
            opt.tol = 1e-3;
            opt.h_init = opt.h_max = h;
            opt.scheme = scheme;
            const Trajectory traj = integrate(p, 2.0, f, s0, opt);
            ASSERT_EQ(traj.rejected_steps, 0u);
            errors.push_back((traj.back().u - ref.u.back()).norm() + (traj.back().v - ref.v.back()).norm());
        }
        // halving h cuts the error by 4x for the default scheme; the trapezoidal
        // option sits at 3.99-4.00 from below
        const double floor = scheme == Scheme::Exponential ? 4.0 : 3.95;
        EXPECT_GE(errors[0] / errors[1], floor);
        EXPECT_GE(errors[1] / errors[2], floor);
        EXPECT_LT(errors[0] / errors[1], 4.5);
    }
}

TEST(Integrator, OddSymmetryIsExact) {
    const MatrixPair p = diag_pair();
    const Forcing f = Forcing::sinusoidal(0.1, Vec::Ones(2), 0.7);
    const State s0 = make_state({0.4, -0.9}, {1.1, 0.2});
    State m0 = s0;
    m0.u = -s0.u;
    m0.v = -s0.v;
    IntegratorOptions opt;
    opt.horizon = 30;
    const Trajectory a = integrate(p, 2.0, f, s0, opt);
    const Trajectory b = integrate(p, 2.0, f.negated(), m0, opt);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.u[i], Vec(-b.u[i]));
        EXPECT_EQ(a.v[i], Vec(-b.v[i]));
    }
}

TEST(Integrator, EquilibriaAreInvariant) {
    const MatrixPair p = diag_pair();
    const GapSpectrum s = gap_spectrum(p, 2);
    IntegratorOptions opt;
    opt.horizon = 100;
    opt.stride = 1;
    for (const Vec& u : stationary_points(p, s, 2.0)) {
        const Trajectory traj = integrate(p, 2.0, Forcing::zero(2), {0.0, u, Vec::Zero(2)}, opt);
        for (std::size_t i = 0; i < traj.size(); ++i) {
            EXPECT_LT((traj.u[i] - u).norm(), 1e-12);
            EXPECT_LT(traj.v[i].norm(), 1e-12);
        }
    }
}

TEST(Integrator, UnforcedEnergyIsNonIncreasing) {
    const MatrixPair p = beam::assemble_fd(16);
    const GapSpectrum s = gap_spectrum(p, 3);
    State s0;
    s0.u = s.vectors.col(2) - 0.3 * s.e1();
    s0.v = 2 * s.vectors.col(1);
    IntegratorOptions opt;
    opt.horizon = 20;
    opt.stride = 0.05;
    opt.tol = 1e-9;
    const Trajectory traj = integrate(p, 60, Forcing::zero(16), s0, opt);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double e0 = energy_E(traj.state(i - 1), p, 60), e1 = energy_E(traj.state(i), p, 60);
        EXPECT_LE(e1, e0 + 1e-8 * (1 + std::abs(e0))) << "t = " << traj.times[i];
    }
}

TEST(Integrator, SamplingGridAndBookkeeping) {
    const MatrixPair p = diag_pair();
    IntegratorOptions opt;
    opt.horizon = 3;
    opt.stride = 0.25;
    opt.record_steps = true;
    const Trajectory traj = integrate(p, 2.0, Forcing::zero(2), make_state({0.1, 0.1}, {0, 0}), opt);
    ASSERT_EQ(traj.size(), 13u);
    for (std::size_t i = 0; i < traj.size(); ++i) EXPECT_NEAR(traj.times[i], 0.25 * i, 1e-12);
    EXPECT_EQ(traj.steps.size(), traj.accepted_steps + traj.rejected_steps);
    for (const StepRecord& r : traj.steps) EXPECT_EQ(r.accepted, r.error <= 1.0);
}

TEST(Integrator, RejectsInvalidOptions) {
    const MatrixPair p = diag_pair();
    const State s0 = make_state({0.1, 0.1}, {0, 0});
    IntegratorOptions opt;
    auto kind = [&](IntegratorOptions o, State s) {
        try {
            integrate(p, 2.0, Forcing::zero(2), s, o);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Config;
    };
    IntegratorOptions bad = opt;
    bad.tol = 1e-2;
    EXPECT_EQ(kind(bad, s0), ErrorKind::InvalidArgument);
    bad = opt;
    bad.horizon = -1;
    EXPECT_EQ(kind(bad, s0), ErrorKind::InvalidArgument);
    State wrong = s0;
    wrong.u = Vec::Zero(3);
    EXPECT_EQ(kind(opt, wrong), ErrorKind::InvalidArgument);
}

TEST(Integrator, StepSizeUnderflowOnBlowUp) {
    const MatrixPair p = diag_pair();
    IntegratorOptions opt;
    opt.horizon = 1;
    try {
        integrate(p, 2.0, Forcing::constant(1e300, Vec::Ones(2)), make_state({0, 0}, {0, 0}), opt);
        FAIL() << "expected StepSizeUnderflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::StepSizeUnderflow);
    }
}

TEST(PairwiseDifference, AlignmentRules) {
    const MatrixPair p = diag_pair();
    IntegratorOptions opt;
    opt.horizon = 2;
    opt.stride = 0.1;
    const Trajectory a = integrate(p, 2.0, Forcing::zero(2), make_state({0.1, 0.1}, {0, 0}), opt);
    for (double d : pairwise_difference(a, a, p)) EXPECT_EQ(d, 0.0);
    opt.stride = 0.2;
    const Trajectory b = integrate(p, 2.0, Forcing::zero(2), make_state({0.1, 0.1}, {0, 0}), opt);
    EXPECT_THROW(pairwise_difference(a, b, p), Error);
    Trajectory c = a;
    c.times[3] += 1e-3;
    try {
        pairwise_difference(a, c, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MisalignedGrids);
    }
}
