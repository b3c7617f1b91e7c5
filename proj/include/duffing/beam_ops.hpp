#pragma once

// Clamped beam on (0,1): characteristic roots of tan(a) = a, the exact
// spectrum of A^{-1}B^2 with its eigenfunctions, the finite-difference pair,
// and the explicit operator C = A^{-1}B^2 together with its integral inverse T.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "duffing/gap_pair.hpp"

namespace duffing::beam {

using std::numbers::pi;

struct CharRoots {
    std::vector<double> alphas; // alphas[k-1] in (k pi, (k + 1/2) pi)
};

/// Root of sin(a) - a cos(a) (equivalently tan a = a) in (k pi, (k+1/2) pi).
/// Safeguarded Newton: the bracket is kept and bisection takes over whenever
/// a Newton step would leave it.
inline double char_root(int k) {
    auto g = [](double a) { return std::sin(a) - a * std::cos(a); };
    double lo = k * pi;
    double hi = (k + 0.5) * pi;
    double g_lo = g(lo);
    double a = hi - 1.0 / hi; // asymptotic guess
    for (int it = 0; it < 200; ++it) {
        const double ga = g(a);
        if (ga == 0.0) return a;
        if ((ga < 0.0) == (g_lo < 0.0)) {
            lo = a;
            g_lo = ga;
        } else {
            hi = a;
        }
        const double dg = a * std::sin(a);
        double next = a - ga / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 4.0 * std::numeric_limits<double>::epsilon() * a) return next;
        a = next;
    }
    return a;
}

inline CharRoots char_roots(int k_max) {
    if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be >= 1");
    CharRoots roots;
    roots.alphas.reserve(k_max);
    for (int k = 1; k <= k_max; ++k) roots.alphas.push_back(char_root(k));
    return roots;
}

enum class ModeKind { Trig, Mixed };

inline const char* to_string(ModeKind kind) { return kind == ModeKind::Trig ? "trig" : "mixed"; }

struct BeamEigenvalue {
    ModeKind kind;
    int k;
    double lambda;
};

/// 4 pi^2 k^2 and 4 alpha_k^2 for k = 1..k_max, ascending. The two families
/// interleave, so the merged list is the complete bottom of the spectrum.
inline std::vector<BeamEigenvalue> beam_eigenvalues(int k_max) {
    const CharRoots roots = char_roots(k_max);
    std::vector<BeamEigenvalue> out;
    for (int k = 1; k <= k_max; ++k) {
        out.push_back({ModeKind::Trig, k, 4.0 * pi * pi * k * k});
        const double a = roots.alphas[k - 1];
        out.push_back({ModeKind::Mixed, k, 4.0 * a * a});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
    return out;
}

/// Eigenfunction of phi'''' + lambda phi'' = 0 with clamped ends, scaled so
/// that int (phi')^2 = 1.
///   trig:  c (1 - cos 2 k pi x)
///   mixed: c (a (1 - cos 2 a x) + sin 2 a x - 2 a x),  tan a = a
class BeamMode {
public:
    BeamMode(ModeKind kind, int k) : kind_(kind), k_(k) {
        if (k < 1) throw Error(ErrorKind::InvalidArgument, "mode index must be >= 1");
        if (kind == ModeKind::Trig) {
            alpha_ = k * pi;
            scale_ = 1.0 / (k * pi * std::sqrt(2.0));
        } else {
            alpha_ = char_root(k);
            const double a = alpha_;
            // int_0^1 (a sin 2ax + cos 2ax - 1)^2 dx in closed form.
            const double s2 = std::sin(2 * a), s4 = std::sin(4 * a);
            const double c2 = std::cos(2 * a), c4 = std::cos(4 * a);
            const double integral = a * a * (0.5 - s4 / (8 * a)) + 1.5 + s4 / (8 * a) - s2 / a
                                    + 2 * a * ((1 - c4) / (8 * a) - (1 - c2) / (2 * a));
            scale_ = 1.0 / (2 * a * std::sqrt(integral));
        }
    }

    ModeKind kind() const { return kind_; }
    int k() const { return k_; }
    double alpha() const { return alpha_; }
    double lambda() const { return 4.0 * alpha_ * alpha_; }

    /// n-th derivative at x, 0 <= n <= 4.
    double derivative(int n, double x) const {
        const double w = 2.0 * alpha_;
        const double c = std::cos(w * x), s = std::sin(w * x);
        // d^n/dx^n of cos(wx) and sin(wx)
        const double wn = std::pow(w, n);
        double dcos = 0.0, dsin = 0.0;
        switch (n % 4) {
        case 0: dcos = c; dsin = s; break;
        case 1: dcos = -s; dsin = c; break;
        case 2: dcos = -c; dsin = -s; break;
        default: dcos = s; dsin = -c; break;
        }
        dcos *= wn;
        dsin *= wn;
        double value = 0.0;
        if (kind_ == ModeKind::Trig) {
            value = (n == 0 ? 1.0 : 0.0) - dcos;
        } else {
            const double a = alpha_;
            const double linear = n == 0 ? -2 * a * x : (n == 1 ? -2 * a : 0.0);
            value = a * ((n == 0 ? 1.0 : 0.0) - dcos) + dsin + linear;
        }
        return scale_ * value;
    }
    double operator()(double x) const { return derivative(0, x); }

    /// Tabulated values on the given nodes.
    std::vector<double> profile(const std::vector<double>& nodes) const {
        std::vector<double> out(nodes.size());
        std::transform(nodes.begin(), nodes.end(), out.begin(), [this](double x) { return derivative(0, x); });
        return out;
    }

private:
    ModeKind kind_;
    int k_;
    double alpha_ = 0.0;
    double scale_ = 1.0;
};

/// Second-order finite differences on n interior nodes, h = 1/(n+1):
/// A = -D2 (Dirichlet), B2 = D4 with clamped closure through the reflected
/// ghost node u_{-1} = u_1, which puts 7 in the corner diagonal entries.
inline MatrixPair assemble_fd(int n) {
    if (n < 8) throw Error(ErrorKind::GridTooCoarse, "finite-difference pair needs n >= 8");
    const double h = 1.0 / (n + 1);
    const double h2 = 1.0 / (h * h);
    const double h4 = h2 * h2;
    Mat A = Mat::Zero(n, n);
    Mat B2 = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 * h2;
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -h2;
        B2(i, i) = 6.0 * h4;
        if (i + 1 < n) B2(i, i + 1) = B2(i + 1, i) = -4.0 * h4;
        if (i + 2 < n) B2(i, i + 2) = B2(i + 2, i) = h4;
    }
    B2(0, 0) = B2(n - 1, n - 1) = 7.0 * h4;
    return validate_pair(A, B2);
}

/// Interior node coordinates of the finite-difference grid.
inline std::vector<double> fd_nodes(int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = (i + 1.0) / (n + 1.0);
    return x;
}

// ---------------------------------------------------------------------------
// Quadrature on uniform nodes x_j = j/m, j = 0..m.

struct UniformGrid {
    int intervals;
    double h;
    std::vector<double> x;

    explicit UniformGrid(int m) : intervals(m), h(1.0 / m), x(m > 0 ? m + 1 : 0) {
        if (m < 4 || m % 2 != 0) throw Error(ErrorKind::InvalidArgument, "grid needs an even number >= 4 of intervals");
        for (int j = 0; j <= m; ++j) x[j] = j * h;
        x[m] = 1.0;
    }
    std::size_t size() const { return x.size(); }

    template <class Fn>
    std::vector<double> sample(Fn&& fn) const {
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = fn(x[j]);
        return out;
    }
};

/// Composite Simpson over [0,1].
inline double simpson(const UniformGrid& grid, const std::vector<double>& f) {
    const int m = grid.intervals;
    double sum = f[0] + f[m];
    for (int j = 1; j < m; ++j) sum += (j % 2 ? 4.0 : 2.0) * f[j];
    return sum * grid.h / 3.0;
}

/// F(x_j) = int_0^{x_j} f, fourth order: each interval integrates the cubic
/// through four neighbouring nodes (one-sided at both ends). Exact on cubics.
inline std::vector<double> cumulative_integral(const UniformGrid& grid, const std::vector<double>& f) {
    const int m = grid.intervals;
    const double c = grid.h / 24.0;
    std::vector<double> F(m + 1, 0.0);
    for (int j = 0; j < m; ++j) {
        double piece;
        if (j == 0) {
            piece = c * (9 * f[0] + 19 * f[1] - 5 * f[2] + f[3]);
        } else if (j == m - 1) {
            piece = c * (f[m - 3] - 5 * f[m - 2] + 19 * f[m - 1] + 9 * f[m]);
        } else {
            piece = c * (-f[j - 1] + 13 * f[j] + 13 * f[j + 1] - f[j + 2]);
        }
        F[j + 1] = F[j] + piece;
    }
    return F;
}

/// Samples of u and its derivatives on a uniform grid. d3 may be empty when
/// the third derivative is not available.
struct GridFunction {
    std::vector<double> values;
    std::vector<double> d1;
    std::vector<double> d2;
    std::vector<double> d3;
};

/// [Cu](x) = -u''(x) + u''(0) + (u''(1) - u''(0)) x.
inline std::vector<double> apply_C(const UniformGrid& grid, const GridFunction& u) {
    const auto& d2 = u.d2;
    if (d2.size() != grid.size()) throw Error(ErrorKind::InvalidArgument, "u'' samples do not match grid");
    const double left = d2.front(), right = d2.back();
    std::vector<double> out(d2.size());
    for (std::size_t j = 0; j < d2.size(); ++j) out[j] = -d2[j] + left + (right - left) * grid.x[j];
    return out;
}

/// [Cu]'(x) = -u'''(x) + u''(1) - u''(0).
inline std::vector<double> apply_C_derivative(const UniformGrid& grid, const GridFunction& u) {
    if (u.d3.size() != grid.size() || u.d2.size() != grid.size())
        throw Error(ErrorKind::InvalidArgument, "u'' and u''' samples are required");
    const double jump = u.d2.back() - u.d2.front();
    std::vector<double> out(u.d3.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -u.d3[j] + jump;
    return out;
}

/// Tf = -G(x) + (3G(1) - F(1)) x^2 + (F(1) - 2G(1)) x^3, with F = int f and
/// G = int F. Returns values with first and second derivatives.
inline GridFunction apply_T(const UniformGrid& grid, const std::vector<double>& f) {
    if (f.size() != grid.size()) throw Error(ErrorKind::InvalidArgument, "f samples do not match grid");
    const std::vector<double> F = cumulative_integral(grid, f);
    const std::vector<double> G = cumulative_integral(grid, F);
    const double F1 = F.back(), G1 = G.back();
    const double c2 = 3.0 * G1 - F1;
    const double c3 = F1 - 2.0 * G1;
    GridFunction u;
    const std::size_t size = grid.size();
    u.values.resize(size);
    u.d1.resize(size);
    u.d2.resize(size);
    for (std::size_t j = 0; j < size; ++j) {
        const double x = grid.x[j];
        u.values[j] = -G[j] + c2 * x * x + c3 * x * x * x;
        u.d1[j] = -F[j] + 2 * c2 * x + 3 * c3 * x * x;
        u.d2[j] = -f[j] + 2 * c2 + 6 * c3 * x;
    }
    return u;
}

/// <u, v>_V = int u' v'.
inline double v_inner(const UniformGrid& grid, const std::vector<double>& du, const std::vector<double>& dv) {
    std::vector<double> prod(du.size());
    for (std::size_t j = 0; j < du.size(); ++j) prod[j] = du[j] * dv[j];
    return simpson(grid, prod);
}

/// L2 norm of a - b on the grid (Simpson).
inline double l2_distance(const UniformGrid& grid, const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> sq(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) sq[j] = (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(std::max(0.0, simpson(grid, sq)));
}

} // namespace duffing::beam
