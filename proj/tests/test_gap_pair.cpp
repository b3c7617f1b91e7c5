#include <gtest/gtest.h>

#include <random>

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

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no duffing::Error thrown";
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST(ValidatePair, RejectsMalformedInput) {
    const Mat I2 = Mat::Identity(2, 2);
    EXPECT_EQ(kind_of([&] { validate_pair(Mat::Identity(2, 3), I2); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { validate_pair(Mat::Identity(3, 3), I2); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { validate_pair(Mat::Identity(1, 1), Mat::Identity(1, 1)); }), ErrorKind::InvalidArgument);

    Mat skew = I2;
    skew(0, 1) = 1e-6;
    EXPECT_EQ(kind_of([&] { validate_pair(skew, I2); }), ErrorKind::NotSymmetric);
    EXPECT_EQ(kind_of([&] { validate_pair(I2, skew); }), ErrorKind::NotSymmetric);

    Mat indefinite = I2;
    indefinite(1, 1) = -1;
    EXPECT_EQ(kind_of([&] { validate_pair(indefinite, I2); }), ErrorKind::NotPositive);
    EXPECT_EQ(kind_of([&] { validate_pair(I2, indefinite); }), ErrorKind::NotPositive);

    Mat nan = I2;
    nan(0, 0) = std::nan("");
    EXPECT_EQ(kind_of([&] { validate_pair(nan, I2); }), ErrorKind::InvalidArgument);
}

TEST(ValidatePair, CoercivityConstantsOfDiagonalPair) {
    const MatrixPair p = diag_pair();
    // B2 >= mu1 A^2: min(1/1, 8/4); A >= mu2 I: min(1, 2)
    EXPECT_NEAR(p.mu1(), 1.0, 1e-14);
    EXPECT_NEAR(p.mu2(), 1.0, 1e-14);
    EXPECT_NEAR(p.norm_A(), 2.0, 1e-14);
    EXPECT_NEAR(p.norm_B2(), 8.0, 1e-14);
}

TEST(GapSpectrum, DiagonalPairIsANormalized) {
    const MatrixPair p = diag_pair();
    const GapSpectrum s = gap_spectrum(p, 2);
    EXPECT_NEAR(s.lambda1, 1.0, 1e-14);
    EXPECT_NEAR(s.lambda2, 4.0, 1e-14);
    EXPECT_TRUE(s.simple_gap);
    EXPECT_NEAR(s.e1()(0), 1.0, 1e-14);
    EXPECT_NEAR(s.e1()(1), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(s.vectors(1, 1)), 1.0 / std::sqrt(2.0), 1e-14);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(p.a_half_norm_sq(s.vectors.col(j)), 1.0, 1e-13);
}

TEST(GapSpectrum, DegenerateGapPolicy) {
    const MatrixPair p = validate_pair(Mat::Identity(3, 3), Mat::Identity(3, 3));
    EXPECT_EQ(kind_of([&] { gap_spectrum(p, 2); }), ErrorKind::DegenerateGap);
    const GapSpectrum s = gap_spectrum(p, 2, GapPolicy::Report);
    EXPECT_FALSE(s.simple_gap);
    EXPECT_EQ(kind_of([&] { gap_spectrum(p, 4); }), ErrorKind::InvalidArgument);
}

TEST(GapSpectrum, RandomPairsSatisfyPencilEquation) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 7;
        const MatrixPair p = validate_pair(oracle::random_spd(rng, n, 0.5, 3), oracle::random_spd(rng, n, 1, 20));
        const GapSpectrum s = gap_spectrum(p, n, GapPolicy::Report);
        for (int j = 0; j < n; ++j) {
            const Vec e = s.vectors.col(j);
            EXPECT_LT((p.B2() * e - s.lambdas(j) * p.A() * e).norm(), 1e-10 * (1 + s.lambdas(j)));
            if (j > 0) EXPECT_LE(s.lambdas(j - 1), s.lambdas(j));
        }
    }
}

TEST(Inertia, AgreesWithLdltOracleAndBracketsSpectrum) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 6;
        const MatrixPair p = validate_pair(oracle::random_spd(rng, n, 0.5, 3), oracle::random_spd(rng, n, 1, 20));
        const GapSpectrum s = gap_spectrum(p, n, GapPolicy::Report);
        const double lambda = s.lambdas(n - 1) * 1.2 * uni(rng);
        const int index = inertia_index(p, lambda);
        EXPECT_EQ(index, oracle::ldlt_negative_count(p.B2() - lambda * p.A()));
        int below = 0;
        for (int j = 0; j < n; ++j) below += s.lambdas(j) < lambda;
        EXPECT_EQ(index, below);
    }
}

TEST(Inertia, NearSingularAtEigenvalue) {
    const MatrixPair p = diag_pair();
    EXPECT_EQ(kind_of([&] { inertia_index(p, 1.0); }), ErrorKind::NearSingular);
    EXPECT_EQ(inertia_index(p, 2.0), 1);
}

TEST(UnstableMode, DiagonalPairValues) {
    const MatrixPair p = diag_pair();
    const GapSpectrum s = gap_spectrum(p, 2);
    const UnstableMode m = unstable_mode(p, s, 2.0);
    // B2 - 2A = diag(-1, 4)
    EXPECT_NEAR(m.lambda0, 1.0, 1e-14);
    EXPECT_NEAR(std::abs(m.e0(0)), 1.0, 1e-14);
    EXPECT_NEAR(m.sigma0, 1.0, 1e-14);
    // complement span{(0,1)}: 4 / 8
    EXPECT_NEAR(m.mu3_exact, 0.5, 1e-14);
    // 0.999 min((4-2)/(4+2), 1/(2*2*1+1))
    EXPECT_NEAR(m.mu3_paper, 0.999 * 0.2, 1e-15);
    EXPECT_EQ(kind_of([&] { unstable_mode(p, s, 1.0); }), ErrorKind::LambdaOutOfGap);
    EXPECT_EQ(kind_of([&] { unstable_mode(p, s, 4.0); }), ErrorKind::LambdaOutOfGap);
}

TEST(UnstableMode, ConstructiveBoundNeverExceedsExactMinimum) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + trial % 6;
        const MatrixPair p = validate_pair(oracle::random_spd(rng, n, 0.5, 3), oracle::random_spd(rng, n, 1, 20));
        const GapSpectrum s = gap_spectrum(p, 2, GapPolicy::Report);
        if (!s.simple_gap) continue;
        const double lambda = s.lambda1 + uni(rng) * (s.lambda2 - s.lambda1);
        const UnstableMode m = unstable_mode(p, s, lambda);
        EXPECT_GT(m.mu3_paper, 0.0);
        EXPECT_LE(m.mu3_paper, m.mu3_exact * (1 + 1e-12));
        // e0 is a Euclidean unit eigenvector of B2 - lambda A for -lambda0
        const Vec r = p.B2() * m.e0 - lambda * p.A() * m.e0 + m.lambda0 * m.e0;
        EXPECT_LT(r.norm(), 1e-10 * p.norm_B2());
        ++checked;
    }
    EXPECT_GT(checked, 250);
}

TEST(Splits, ReconstructAndAreOrthogonal) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    const MatrixPair p = validate_pair(oracle::random_spd(rng, 5, 0.5, 3), oracle::random_spd(rng, 5, 1, 20));
    const GapSpectrum s = gap_spectrum(p, 2, GapPolicy::Report);
    const UnstableMode m = unstable_mode(p, s, 0.5 * (s.lambda1 + s.lambda2));
    for (int trial = 0; trial < 100; ++trial) {
        Vec u(5);
        for (int i = 0; i < 5; ++i) u(i) = normal(rng);
        const WSplit w = split_W(u, p, s);
        EXPECT_LT((w.alpha * s.e1() + w.w - u).norm(), 1e-13 * (1 + u.norm()));
        EXPECT_NEAR(w.w.dot(p.A() * s.e1()), 0.0, 1e-12 * (1 + u.norm()));
        const HSplit h = split_H(u, m);
        EXPECT_LT((h.u_minus * m.e0 + h.u_plus - u).norm(), 1e-13 * (1 + u.norm()));
        EXPECT_NEAR(h.u_plus.dot(m.e0), 0.0, 1e-13 * (1 + u.norm()));
    }
}

TEST(Stationary, ThreeEquilibriaSolveTheStaticEquation) {
    const MatrixPair p = diag_pair();
    const GapSpectrum s = gap_spectrum(p, 2);
    const auto points = stationary_points(p, s, 2.0);
    for (const Vec& u : points) EXPECT_LT(stationarity_residual(p, 2.0, u), 1e-14);
    EXPECT_NEAR(points[1](0), 1.0, 1e-15);
    EXPECT_NEAR(points[2](0), -1.0, 1e-15);
}
