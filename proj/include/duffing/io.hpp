#pragma once

// CSV emission. Numbers are written with 17 significant digits so that
// identical runs produce identical bytes.

#include <charconv>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "duffing/lyapunov.hpp"

namespace duffing::io {

inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }
    CsvWriter& cell(double x) { return raw(format_double(x)); }
    CsvWriter& cell(long long x) { return raw(std::to_string(x)); }
    CsvWriter& cell(int x) { return raw(std::to_string(x)); }
    CsvWriter& cell(std::size_t x) { return raw(std::to_string(x)); }
    CsvWriter& cell(const std::string& s) { return raw(s); }
    CsvWriter& cell(const char* s) { return raw(s); }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    std::ostream& out_;
    bool first_ = true;
};

/// t, u_1..u_n, v_1..v_n
inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
    CsvWriter w(out);
    const Eigen::Index n = traj.size() ? traj.u.front().size() : 0;
    std::vector<std::string> cols{"t"};
    for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("u_" + std::to_string(i));
    for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("v_" + std::to_string(i));
    w.header(cols);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        w.cell(traj.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) w.cell(traj.u[k](i));
        for (Eigen::Index i = 0; i < n; ++i) w.cell(traj.v[k](i));
        w.end_row();
    }
}

/// t, alpha, normBw, E, F, S (S is the energy of the well alpha points into)
inline void write_trajectory_summary(std::ostream& out, const EnergyReport& r) {
    CsvWriter w(out);
    w.header({"t", "alpha", "normBw", "E", "F", "S"});
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        const double S = r.alpha[k] >= 0.0 ? r.S_plus[k] : r.S_minus[k];
        w.cell(r.t[k]).cell(r.alpha[k]).cell(r.norm_Bw[k]).cell(r.E[k]).cell(r.F[k]).cell(S);
        w.end_row();
    }
}

/// t, E, F, S_plus, S_minus, alpha, normBw, u_minus
inline void write_energy(std::ostream& out, const EnergyReport& r) {
    CsvWriter w(out);
    w.header({"t", "E", "F", "S_plus", "S_minus", "alpha", "normBw", "u_minus"});
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        w.cell(r.t[k]).cell(r.E[k]).cell(r.F[k]).cell(r.S_plus[k]).cell(r.S_minus[k]);
        w.cell(r.alpha[k]).cell(r.norm_Bw[k]).cell(r.u_minus[k]);
        w.end_row();
    }
}

} // namespace duffing::io
