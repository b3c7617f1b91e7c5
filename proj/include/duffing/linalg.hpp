#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>

#include "duffing/error.hpp"

namespace duffing {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace linalg {

inline double quad(const Vec& u, const Mat& m, const Vec& v) { return u.dot(m * v); }
inline double quad(const Vec& u, const Mat& m) { return u.dot(m * u); }

/// Relative asymmetry max|M - M^T| / max|M|.
inline double asymmetry(const Mat& m) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Flips v so that its largest-magnitude entry is positive.
inline void fix_sign(Eigen::Ref<Vec> v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
}

struct SymmetricEigen {
    Vec values;  // ascending
    Mat vectors; // orthonormal columns
};

inline SymmetricEigen symmetric_eigen(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrized(m));
    if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::InvalidArgument, "symmetric eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Vec symmetric_eigenvalues(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrized(m), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::InvalidArgument, "symmetric eigensolver did not converge");
    return solver.eigenvalues();
}

/// Largest |eigenvalue| of a symmetric matrix.
inline double spectral_norm(const Mat& m) {
    const Vec ev = symmetric_eigenvalues(m);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Symmetric-definite pencil K x = mu M x reduced through M = L L^T to the
/// standard problem L^{-1} K L^{-T} y = mu y. Eigenvectors come back
/// M-orthonormal (x^T M x = 1).
inline SymmetricEigen pencil_eigen(const Mat& k, const Mat& m) {
    Eigen::LLT<Mat> llt(symmetrized(m));
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::NotPositive, "pencil metric is not positive definite");
    const Mat lower = llt.matrixL();
    Mat reduced = lower.triangularView<Eigen::Lower>().solve(symmetrized(k));
    reduced = lower.triangularView<Eigen::Lower>().solve(reduced.transpose()).eval();
    SymmetricEigen std_eig = symmetric_eigen(reduced);
    Mat vectors = lower.transpose().triangularView<Eigen::Upper>().solve(std_eig.vectors);
    return {std::move(std_eig.values), std::move(vectors)};
}

} // namespace linalg
} // namespace duffing
