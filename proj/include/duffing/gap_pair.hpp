#pragma once

// Finite-dimensional operator pairs (A, B^2) with a spectral gap: validation,
// generalized spectra, inertia, the unstable eigenpair of B^2 - lambda A and
// the two splittings of the state space used by the energy estimates.

#include <Eigen/Householder>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <sstream>

#include "duffing/linalg.hpp"

namespace duffing {

/// Validated symmetric positive-definite pair (A, B^2) with coercivity
/// constants mu1 (B^2 >= mu1 A^2) and mu2 (A >= mu2 I).
class MatrixPair {
public:
    Eigen::Index n() const { return A_.rows(); }
    const Mat& A() const { return A_; }
    const Mat& B2() const { return B2_; }
    double mu1() const { return mu1_; }
    double mu2() const { return mu2_; }
    /// Spectral norms, used as scales for zero tests.
    double norm_A() const { return norm_A_; }
    double norm_B2() const { return norm_B2_; }

    /// |Bu|^2 = u^T B^2 u. B itself is never formed.
    double b_norm_sq(const Vec& u) const { return linalg::quad(u, B2_); }
    double b_norm(const Vec& u) const { return std::sqrt(std::max(0.0, b_norm_sq(u))); }
    /// |A^{1/2}u|^2 = u^T A u.
    double a_half_norm_sq(const Vec& u) const { return linalg::quad(u, A_); }

private:
    friend MatrixPair validate_pair(const Mat& A, const Mat& B2);
    MatrixPair(Mat A, Mat B2, double mu1, double mu2, double nA, double nB2)
        : A_(std::move(A)), B2_(std::move(B2)), mu1_(mu1), mu2_(mu2), norm_A_(nA), norm_B2_(nB2) {}

    Mat A_;
    Mat B2_;
    double mu1_;
    double mu2_;
    double norm_A_;
    double norm_B2_;
};

inline constexpr double kSymmetryTolerance = 1e-12;

inline MatrixPair validate_pair(const Mat& A, const Mat& B2) {
    if (A.rows() != A.cols() || B2.rows() != B2.cols())
        throw Error(ErrorKind::InvalidArgument, "operators must be square");
    if (A.rows() != B2.rows())
        throw Error(ErrorKind::InvalidArgument, "operators must have equal dimension");
    if (A.rows() < 2) throw Error(ErrorKind::InvalidArgument, "dimension must be at least 2");
    if (!A.allFinite() || !B2.allFinite())
        throw Error(ErrorKind::InvalidArgument, "operators contain non-finite entries");
    if (linalg::asymmetry(A) > kSymmetryTolerance)
        throw Error(ErrorKind::NotSymmetric, "A is not symmetric");
    if (linalg::asymmetry(B2) > kSymmetryTolerance)
        throw Error(ErrorKind::NotSymmetric, "B2 is not symmetric");

    Mat a = linalg::symmetrized(A);
    Mat b2 = linalg::symmetrized(B2);
    const Vec ev_a = linalg::symmetric_eigenvalues(a);
    const Vec ev_b = linalg::symmetric_eigenvalues(b2);
    if (ev_a(0) <= 0.0) throw Error(ErrorKind::NotPositive, "A has a nonpositive eigenvalue");
    if (ev_b(0) <= 0.0) throw Error(ErrorKind::NotPositive, "B2 has a nonpositive eigenvalue");

    const Mat a_sq = a * a;
    const double mu1 = linalg::pencil_eigen(b2, a_sq).values(0);
    const double mu2 = ev_a(0);
    const double norm_a = ev_a(ev_a.size() - 1);
    const double norm_b2 = ev_b(ev_b.size() - 1);
    return MatrixPair(std::move(a), std::move(b2), mu1, mu2, norm_a, norm_b2);
}

/// Leading generalized eigenpairs of B^2 e = lambda A e, with e^T A e = 1.
struct GapSpectrum {
    Vec lambdas; // ascending, first k
    Mat vectors; // columns match lambdas
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    bool simple_gap = false;

    Vec e1() const { return vectors.col(0); }
};

enum class GapPolicy { RequireSimple, Report };

inline GapSpectrum gap_spectrum(const MatrixPair& pair, Eigen::Index k,
                                GapPolicy policy = GapPolicy::RequireSimple) {
    if (k < 1 || k > pair.n()) throw Error(ErrorKind::InvalidArgument, "k must satisfy 1 <= k <= n");
    linalg::SymmetricEigen eig = linalg::pencil_eigen(pair.B2(), pair.A());

    GapSpectrum out;
    out.lambda1 = eig.values(0);
    out.lambda2 = eig.values(1);
    out.simple_gap = (out.lambda2 - out.lambda1) > 1e-8 * std::abs(out.lambda1);
    if (!out.simple_gap && policy == GapPolicy::RequireSimple) {
        std::ostringstream msg;
        msg << "lambda1 = " << out.lambda1 << " is not simple (lambda2 = " << out.lambda2 << ")";
        throw Error(ErrorKind::DegenerateGap, msg.str());
    }
    out.lambdas = eig.values.head(k);
    out.vectors = eig.vectors.leftCols(k);
    for (Eigen::Index j = 0; j < k; ++j) linalg::fix_sign(out.vectors.col(j));
    return out;
}

/// Number of negative eigenvalues of B^2 - lambda A.
inline int inertia_index(const MatrixPair& pair, double lambda) {
    const Vec ev = linalg::symmetric_eigenvalues(pair.B2() - lambda * pair.A());
    const double tau = 1e-10 * pair.norm_B2();
    int negative = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) <= tau) {
            std::ostringstream msg;
            msg << "B2 - lambda A has eigenvalue " << ev(i) << " within " << tau << " of zero at lambda = " << lambda;
            throw Error(ErrorKind::NearSingular, msg.str());
        }
        if (ev(i) < 0.0) ++negative;
    }
    return negative;
}

inline void require_in_gap(const GapSpectrum& spectrum, double lambda) {
    if (!(lambda > spectrum.lambda1 && lambda < spectrum.lambda2)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "lambda = " << lambda << " outside the gap (" << spectrum.lambda1 << ", " << spectrum.lambda2 << ")";
        throw Error(ErrorKind::LambdaOutOfGap, msg.str());
    }
}

/// The single negative direction of B^2 - lambda A for lambda in the gap.
struct UnstableMode {
    double lambda = 0.0;
    double lambda0 = 0.0; // B2 e0 - lambda A e0 = -lambda0 e0
    Vec e0;               // Euclidean unit vector
    double mu3_exact = 0.0;
    double mu3_paper = 0.0;
    double sigma0 = 0.0;
    double a_half_e0_sq = 0.0; // |A^{1/2} e0|^2
    double norm_A_e0 = 0.0;    // |A e0|
};

inline constexpr double kMu3Safety = 0.999;

/// Constructive lower bound for mu3 (strict inequality, hence the safety factor).
inline double mu3_bound(double lambda, double lambda2, double lambda0, double a_half_e0_sq) {
    const double from_gap = (lambda2 - lambda) / (lambda2 + lambda);
    const double from_mode = lambda0 / (2.0 * lambda * a_half_e0_sq + lambda0);
    return kMu3Safety * std::min(from_gap, from_mode);
}

inline UnstableMode unstable_mode(const MatrixPair& pair, const GapSpectrum& spectrum, double lambda) {
    require_in_gap(spectrum, lambda);
    const Eigen::Index n = pair.n();
    const Mat L = pair.B2() - lambda * pair.A();
    linalg::SymmetricEigen eig = linalg::symmetric_eigen(L);

    UnstableMode mode;
    mode.lambda = lambda;
    mode.lambda0 = -eig.values(0);
    if (!(mode.lambda0 > 0.0))
        throw Error(ErrorKind::NearSingular, "B2 - lambda A has no negative eigenvalue");
    mode.e0 = eig.vectors.col(0);
    mode.e0.normalize();
    linalg::fix_sign(mode.e0);
    mode.a_half_e0_sq = pair.a_half_norm_sq(mode.e0);
    mode.norm_A_e0 = (pair.A() * mode.e0).norm();
    mode.sigma0 = std::sqrt(lambda - spectrum.lambda1);

    // Constrained minimum of u^T L u / u^T B2 u over u orthogonal to e0:
    // deflate e0 with a Householder reflector and solve the pencil on the complement.
    Eigen::HouseholderQR<Mat> qr(mode.e0);
    const Mat Q = qr.householderQ() * Mat::Identity(n, n);
    const Mat Z = Q.rightCols(n - 1);
    const Mat Lz = Z.transpose() * L * Z;
    const Mat Bz = Z.transpose() * pair.B2() * Z;
    mode.mu3_exact = linalg::pencil_eigen(Lz, Bz).values(0);

    mode.mu3_paper = mu3_bound(lambda, spectrum.lambda2, mode.lambda0, mode.a_half_e0_sq);
    return mode;
}

/// u = alpha e1 + w with <w, A e1> = 0.
struct WSplit {
    double alpha = 0.0;
    Vec w;
};

inline WSplit split_W(const Vec& u, const MatrixPair& pair, const GapSpectrum& spectrum) {
    const Vec e1 = spectrum.e1();
    const double alpha = u.dot(pair.A() * e1);
    return {alpha, u - alpha * e1};
}

/// u = u_minus e0 + u_plus with u_plus orthogonal to e0.
struct HSplit {
    double u_minus = 0.0;
    Vec u_plus;
};

inline HSplit split_H(const Vec& u, const UnstableMode& mode) {
    const double c = u.dot(mode.e0);
    return {c, u - c * mode.e0};
}

/// |B^2 u - lambda A u + (u^T A u) A u|.
inline double stationarity_residual(const MatrixPair& pair, double lambda, const Vec& u) {
    const Vec Au = pair.A() * u;
    return (pair.B2() * u - lambda * Au + u.dot(Au) * Au).norm();
}

/// The three equilibria {0, +sigma0 e1, -sigma0 e1}.
inline std::array<Vec, 3> stationary_points(const MatrixPair& pair, const GapSpectrum& spectrum, double lambda) {
    require_in_gap(spectrum, lambda);
    const double sigma0 = std::sqrt(lambda - spectrum.lambda1);
    const Vec e1 = spectrum.e1();
    return {Vec::Zero(pair.n()), Vec(sigma0 * e1), Vec(-sigma0 * e1)};
}

} // namespace duffing
