#include <gtest/gtest.h>

#include <random>

#include "duffing/duffing.hpp"
#include "oracles.hpp"

using namespace duffing;
using duffing::beam::pi;

TEST(CharRoot, MatchesBisectionOracle) {
    for (int k = 1; k <= 40; ++k) {
        const double a = beam::char_root(k);
        EXPECT_NEAR(a, oracle::tan_root(k), 1e-12 * a) << "k = " << k;
        EXPECT_GT(a, k * pi);
        EXPECT_LT(a, (k + 0.5) * pi);
        EXPECT_NEAR(std::sin(a) - a * std::cos(a), 0.0, 1e-12 * a);
    }
    // frozen from the bisection oracle
    EXPECT_NEAR(beam::char_root(1), 4.493409457909064, 1e-12);
    EXPECT_NEAR(beam::char_root(2), 7.725251836937707, 1e-12);
    EXPECT_THROW(beam::char_roots(0), Error);
}

TEST(BeamEigenvalues, InterleavedAndAscending) {
    const auto ev = beam::beam_eigenvalues(10);
    ASSERT_EQ(ev.size(), 20u);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        // trig and mixed families alternate
        EXPECT_EQ(ev[i].kind, i % 2 == 0 ? beam::ModeKind::Trig : beam::ModeKind::Mixed);
        EXPECT_EQ(ev[i].k, static_cast<int>(i / 2 + 1));
        if (i > 0) EXPECT_LT(ev[i - 1].lambda, ev[i].lambda);
    }
    EXPECT_NEAR(ev[0].lambda, 4 * pi * pi, 1e-12);
    EXPECT_NEAR(ev[1].lambda, 4 * std::pow(oracle::tan_root(1), 2), 1e-10);
}

TEST(BeamMode, ClampedNormalizedEigenfunction) {
    const beam::UniformGrid grid(4000);
    for (auto kind : {beam::ModeKind::Trig, beam::ModeKind::Mixed}) {
        for (int k = 1; k <= 4; ++k) {
            const beam::BeamMode m(kind, k);
            const double lambda = m.lambda();
            for (int d = 0; d <= 1; ++d) {
                EXPECT_NEAR(m.derivative(d, 0.0), 0.0, 1e-12 * std::pow(lambda, 0.5 * d));
                EXPECT_NEAR(m.derivative(d, 1.0), 0.0, 1e-11 * std::pow(lambda, 0.5 * d));
            }
            const auto d1 = grid.sample([&](double x) { return m.derivative(1, x); });
            EXPECT_NEAR(beam::v_inner(grid, d1, d1), 1.0, 1e-10);
            for (double x : {0.1, 0.37, 0.5, 0.81}) {
                // phi'''' + lambda phi'' = 0
                const double scale = std::abs(m.derivative(4, x)) + lambda * std::abs(m.derivative(2, x)) + 1;
                EXPECT_NEAR(m.derivative(4, x) + lambda * m.derivative(2, x), 0.0, 1e-11 * scale);
                // derivatives agree with centered differences of the values
                const double h = 1e-4;
                const double fd1 = (m(x + h) - m(x - h)) / (2 * h);
                const double fd2 = (m(x + h) - 2 * m(x) + m(x - h)) / (h * h);
                EXPECT_NEAR(m.derivative(1, x), fd1, 1e-6 * (1 + std::abs(fd1)) * lambda);
                EXPECT_NEAR(m.derivative(2, x), fd2, 1e-5 * (1 + std::abs(fd2)) * lambda);
            }
        }
    }
}

TEST(BeamMode, IsEigenfunctionOfC) {
    const beam::UniformGrid grid(512);
    const beam::BeamMode m(beam::ModeKind::Mixed, 2);
    beam::GridFunction u;
    u.values = m.profile(grid.x);
    u.d2 = grid.sample([&](double x) { return m.derivative(2, x); });
    const auto Cu = beam::apply_C(grid, u);
    for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(Cu[j], m.lambda() * u.values[j], 1e-9 * m.lambda());
}

TEST(FiniteDifference, PairStructure) {
    EXPECT_THROW(
        {
            try {
                beam::assemble_fd(7);
            } catch (const Error& e) {
                EXPECT_EQ(e.kind(), ErrorKind::GridTooCoarse);
                throw;
            }
        },
        Error);
    const MatrixPair p = beam::assemble_fd(32);
    EXPECT_EQ(p.n(), 32);
    const double h4 = std::pow(33.0, 4);
    EXPECT_NEAR(p.B2()(0, 0), 7 * h4, 1e-6 * h4);
    EXPECT_NEAR(p.B2()(15, 15), 6 * h4, 1e-6 * h4);
    EXPECT_NEAR(p.B2()(31, 31), 7 * h4, 1e-6 * h4);
    EXPECT_GE(p.mu1(), 1.0 - 1e-9);
}

TEST(FiniteDifference, SecondOrderConvergenceOfGap) {
    const double exact1 = 4 * pi * pi;
    const double exact2 = 4 * std::pow(oracle::tan_root(1), 2);
    double prev1 = 0, prev2 = 0;
    for (int n : {31, 63, 127}) {
        const GapSpectrum s = gap_spectrum(beam::assemble_fd(n), 2);
        const double e1 = std::abs(s.lambda1 - exact1), e2 = std::abs(s.lambda2 - exact2);
        if (prev1 > 0) {
            EXPECT_NEAR(prev1 / e1, 4.0, 0.4) << "n = " << n;
            EXPECT_NEAR(prev2 / e2, 4.0, 0.4) << "n = " << n;
        }
        prev1 = e1;
        prev2 = e2;
    }
}

TEST(FiniteDifference, FrozenGapAtN64) {
    // frozen output of the n = 64 assembly, cross-checked against the convergence rate above
    const GapSpectrum s = gap_spectrum(beam::assemble_fd(64), 2);
    EXPECT_NEAR(s.lambda1, 39.44768664, 1e-7);
    EXPECT_NEAR(s.lambda2, 80.60889144, 1e-7);
}

TEST(Quadrature, CumulativeIntegralExactOnCubics) {
    const beam::UniformGrid grid(16);
    const auto f = grid.sample([](double x) { return 1 - 2 * x + 3 * x * x - 4 * x * x * x; });
    const auto F = beam::cumulative_integral(grid, f);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.x[j];
        EXPECT_NEAR(F[j], x - x * x + x * x * x - x * x * x * x, 1e-14);
    }
    EXPECT_THROW(beam::UniformGrid(5), Error);
}

TEST(OperatorT, ClosedFormForSine) {
    // T sin(pi x) = -x/pi + sin(pi x)/pi^2 + x^2/pi, derived by hand
    const beam::UniformGrid grid(1024);
    const auto f = grid.sample([](double x) { return std::sin(pi * x); });
    const beam::GridFunction u = beam::apply_T(grid, f);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.x[j];
        EXPECT_NEAR(u.values[j], -x / pi + std::sin(pi * x) / (pi * pi) + x * x / pi, 1e-12);
        EXPECT_NEAR(u.d1[j], -1 / pi + std::cos(pi * x) / pi + 2 * x / pi, 1e-12);
    }
    const auto Cu = beam::apply_C(grid, u);
    for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(Cu[j], f[j], 1e-10);
}

TEST(OperatorT, RandomCorpusClampedAndInverted) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    const beam::UniformGrid grid(1024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> c(8);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = normal(rng) / static_cast<double>(k + 1);
        const auto f = grid.sample([&](double x) {
            double s = 0;
            for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::sin((k + 1) * pi * x);
            return s;
        });
        const beam::GridFunction u = beam::apply_T(grid, f);
        EXPECT_NEAR(u.values.front(), 0.0, 1e-12);
        EXPECT_NEAR(u.values.back(), 0.0, 1e-10);
        EXPECT_NEAR(u.d1.front(), 0.0, 1e-12);
        EXPECT_NEAR(u.d1.back(), 0.0, 1e-10);
        EXPECT_LT(beam::l2_distance(grid, beam::apply_C(grid, u), f), 1e-8);
    }
    EXPECT_THROW(beam::apply_T(grid, std::vector<double>(10)), Error);
}

TEST(OperatorC, SymmetricOnClampedFunctions) {
    // u = x^2 (1-x)^2 p(x) with polynomial p; derivatives by hand
    struct Poly {
        std::vector<double> c; // ascending
        double eval(double x, int d) const {
            double s = 0;
            for (std::size_t k = d; k < c.size(); ++k) {
                double coef = c[k];
                for (int j = 0; j < d; ++j) coef *= static_cast<double>(k - j);
                s += coef * std::pow(x, static_cast<double>(k - d));
            }
            return s;
        }
    };
    auto clamped = [](std::vector<double> p) {
        // multiply by x^2 - 2x^3 + x^4
        std::vector<double> out(p.size() + 4, 0.0);
        const double w[] = {0, 0, 1, -2, 1};
        for (std::size_t i = 0; i < p.size(); ++i)
            for (int j = 0; j < 5; ++j) out[i + j] += p[i] * w[j];
        return Poly{out};
    };
    const beam::UniformGrid grid(2048);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> pu(4), pv(4);
        for (auto& x : pu) x = normal(rng);
        for (auto& x : pv) x = normal(rng);
        const Poly u = clamped(pu), v = clamped(pv);
        auto gf = [&](const Poly& q) {
            beam::GridFunction g;
            g.values = grid.sample([&](double x) { return q.eval(x, 0); });
            g.d1 = grid.sample([&](double x) { return q.eval(x, 1); });
            g.d2 = grid.sample([&](double x) { return q.eval(x, 2); });
            g.d3 = grid.sample([&](double x) { return q.eval(x, 3); });
            return g;
        };
        const auto gu = gf(u), gv = gf(v);
        const double uv = beam::v_inner(grid, beam::apply_C_derivative(grid, gu), gv.d1);
        const double vu = beam::v_inner(grid, gu.d1, beam::apply_C_derivative(grid, gv));
        std::vector<double> prod(grid.size());
        for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = gu.d2[j] * gv.d2[j];
        const double energy = beam::simpson(grid, prod);
        EXPECT_NEAR(uv, vu, 1e-8 * (1 + std::abs(energy)));
        EXPECT_NEAR(uv, energy, 1e-8 * (1 + std::abs(energy)));
    }
}

TEST(BeamMode, FamiliesAreOrthogonalInV) {
    const beam::UniformGrid grid(4000);
    for (int j = 1; j <= 3; ++j) {
        for (int k = 1; k <= 3; ++k) {
            const beam::BeamMode trig(beam::ModeKind::Trig, j), mixed(beam::ModeKind::Mixed, k);
            const auto dt = grid.sample([&](double x) { return trig.derivative(1, x); });
            const auto dm = grid.sample([&](double x) { return mixed.derivative(1, x); });
            EXPECT_NEAR(beam::v_inner(grid, dt, dm), 0.0, 1e-9) << j << ", " << k;
        }
    }
}

TEST(OperatorC, PositiveOnClampedCorpus) {
    // u = x^2 (1-x)^2 (a + b x): <u, Cu>_V = int (u'')^2 > 0
    const beam::UniformGrid grid(512);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = normal(rng), b = normal(rng);
        const double c[] = {0, 0, a, b - 2 * a, a - 2 * b, b};
        auto eval = [&](double x, int der) {
            double s = 0;
            for (int k = der; k < 6; ++k) {
                double coef = c[k];
                for (int j = 0; j < der; ++j) coef *= k - j;
                s += coef * std::pow(x, k - der);
            }
            return s;
        };
        beam::GridFunction u;
        u.d2 = grid.sample([&](double x) { return eval(x, 2); });
        u.d3 = grid.sample([&](double x) { return eval(x, 3); });
        const auto d1 = grid.sample([&](double x) { return eval(x, 1); });
        EXPECT_GT(beam::v_inner(grid, d1, beam::apply_C_derivative(grid, u)), 0.0);
    }
}
