#pragma once

// JSON scenario configuration and batch drivers shared by the command line
// front-end. A config is parsed and validated completely before anything
// runs; unknown keys are errors.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "duffing/asymptotics.hpp"
#include "duffing/beam_ops.hpp"
#include "duffing/io.hpp"

namespace duffing::scenario {

using json = nlohmann::json;

enum class Source { FiniteDifference, Explicit };
enum class InitialKind { Explicit, Modes, Stationary, Random };
enum class TrajectoryFormat { Full, Summary };

struct Discretization {
    Source source = Source::FiniteDifference;
    int n = 64;
    Mat A;
    Mat B2;
};

struct ForcingSpec {
    ForcingKind kind = ForcingKind::Zero;
    double amplitude = 0.0;
    double rate = 1.0;
    double frequency = 1.0;
    std::string shape = "e1"; // e1 | e0 | ones | explicit
    Vec shape_vector;
};

struct InitialSpec {
    InitialKind kind = InitialKind::Random;
    Vec u, v;                                  // explicit
    std::vector<double> u_modes, v_modes;      // coefficients on generalized eigenvectors
    int sign = 1;                              // stationary
    double radius_u = 1.0, radius_v = 1.0;     // random
    int modes = 0;                             // random; 0 means min(n, 4)
};

struct OutputSpec {
    std::string trajectory = "trajectory.csv";
    std::string energy = "energy.csv";
    std::string summary = "summary.json";
    std::string sweep = "sweep.csv";
    std::string eigs = "eigs.csv";
    std::string constants = "constants.json";
    TrajectoryFormat format = TrajectoryFormat::Full;
};

struct SweepSpec {
    bool present = false;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    bool mirror = false; // also run the negated data of every row
};

struct ScenarioConfig {
    Discretization discretization;
    std::optional<double> lambda;
    int k = 4;
    ForcingSpec forcing;
    InitialSpec initial;
    IntegratorOptions integrator;
    double tail_fraction = kDefaultTailFraction;
    OutputSpec outputs;
    SweepSpec sweep;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------- parsing

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::Config, (path.empty() ? std::string("/") : path) + ": " + what);
}

/// Object view that records the keys it hands out and rejects the rest.
class Object {
public:
    Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }
    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return path_ + "/" + key; }
    const json& at(const std::string& key) {
        if (!has(key)) fail(path(key), "required key missing");
        seen_.insert(key);
        return j_.at(key);
    }
    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(path(key), "required number missing");
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_number()) fail(path(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path(key), "must be finite");
        return x;
    }
    long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(path(key), "required integer missing");
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_number_integer()) fail(path(key), "expected an integer");
        return v.get<long long>();
    }
    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) fail(path(key), "required string missing");
            return *fallback;
        }
        const json& v = at(key);
        if (!v.is_string()) fail(path(key), "expected a string");
        return v.get<std::string>();
    }
    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_boolean()) fail(path(key), "expected true or false");
        return v.get<bool>();
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(path(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::vector<double> number_array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(path + "/" + std::to_string(i), "expected a number");
        out.push_back(j[i].get<double>());
        if (!std::isfinite(out.back())) fail(path + "/" + std::to_string(i), "must be finite");
    }
    return out;
}

inline Vec to_vec(const std::vector<double>& x) { return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())); }

inline Mat matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Mat m(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto row = number_array(j[r], path + "/" + std::to_string(r));
        if (static_cast<Eigen::Index>(row.size()) != rows) fail(path + "/" + std::to_string(r), "matrix must be square");
        for (Eigen::Index c = 0; c < rows; ++c) m(r, c) = row[c];
    }
    return m;
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorKind::Config, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                           ": malformed JSON");
    }
    using detail::fail;
    ScenarioConfig cfg;
    detail::Object top(root, "");

    if (top.has("discretization")) {
        detail::Object d(top.at("discretization"), "/discretization");
        const std::string source = d.string("source", "fd");
        if (source == "fd") {
            cfg.discretization.source = Source::FiniteDifference;
            const long long n = d.integer("n", 64);
            if (n < 8 || n > 4096) fail(d.path("n"), "fd needs 8 <= n <= 4096");
            cfg.discretization.n = static_cast<int>(n);
        } else if (source == "explicit") {
            cfg.discretization.source = Source::Explicit;
            if (!d.has("A") || !d.has("B2")) fail("/discretization", "explicit source needs A and B2");
            cfg.discretization.A = detail::matrix(d.at("A"), d.path("A"));
            cfg.discretization.B2 = detail::matrix(d.at("B2"), d.path("B2"));
            if (cfg.discretization.A.rows() != cfg.discretization.B2.rows())
                fail("/discretization", "A and B2 must have equal dimension");
            cfg.discretization.n = static_cast<int>(cfg.discretization.A.rows());
        } else {
            fail(d.path("source"), "expected \"fd\" or \"explicit\"");
        }
        d.finish();
    }
    const int n = cfg.discretization.n;

    if (top.has("lambda")) cfg.lambda = top.number("lambda");
    cfg.k = static_cast<int>(top.integer("k", std::min(4, n)));
    if (cfg.k < 1 || cfg.k > n) fail("/k", "must satisfy 1 <= k <= n");
    cfg.seed = static_cast<std::uint64_t>(top.integer("seed", 0));

    if (top.has("forcing")) {
        detail::Object f(top.at("forcing"), "/forcing");
        const std::string kind = f.string("kind", "zero");
        if (kind == "zero") cfg.forcing.kind = ForcingKind::Zero;
        else if (kind == "constant") cfg.forcing.kind = ForcingKind::Constant;
        else if (kind == "decaying") cfg.forcing.kind = ForcingKind::Decaying;
        else if (kind == "sinusoidal") cfg.forcing.kind = ForcingKind::Sinusoidal;
        else fail(f.path("kind"), "expected zero, constant, decaying or sinusoidal");
        cfg.forcing.amplitude = f.number("amplitude", 0.0);
        cfg.forcing.rate = f.number("rate", 1.0);
        cfg.forcing.frequency = f.number("frequency", 1.0);
        if (cfg.forcing.kind == ForcingKind::Decaying && !(cfg.forcing.rate > 0.0))
            fail(f.path("rate"), "must be positive");
        if (f.has("shape")) {
            const json& s = f.at("shape");
            if (s.is_string()) {
                cfg.forcing.shape = s.get<std::string>();
                if (cfg.forcing.shape != "e1" && cfg.forcing.shape != "e0" && cfg.forcing.shape != "ones")
                    fail(f.path("shape"), "expected e1, e0, ones or an array");
            } else {
                cfg.forcing.shape = "explicit";
                cfg.forcing.shape_vector = detail::to_vec(detail::number_array(s, f.path("shape")));
                if (cfg.forcing.shape_vector.size() != n) fail(f.path("shape"), "length must equal n");
                if (cfg.forcing.shape_vector.norm() == 0.0) fail(f.path("shape"), "must be nonzero");
            }
        }
        f.finish();
    }

    if (top.has("initial")) {
        detail::Object in(top.at("initial"), "/initial");
        const std::string kind = in.string("kind", "random");
        auto& spec = cfg.initial;
        if (kind == "explicit") {
            spec.kind = InitialKind::Explicit;
            spec.u = detail::to_vec(detail::number_array(in.at("u"), in.path("u")));
            spec.v = in.has("v") ? detail::to_vec(detail::number_array(in.at("v"), in.path("v"))) : Vec::Zero(n);
            if (spec.u.size() != n) fail(in.path("u"), "length must equal n");
            if (spec.v.size() != n) fail(in.path("v"), "length must equal n");
        } else if (kind == "modes") {
            spec.kind = InitialKind::Modes;
            if (in.has("u")) spec.u_modes = detail::number_array(in.at("u"), in.path("u"));
            if (in.has("v")) spec.v_modes = detail::number_array(in.at("v"), in.path("v"));
            if (static_cast<int>(std::max(spec.u_modes.size(), spec.v_modes.size())) > n)
                fail("/initial", "more mode coefficients than n");
        } else if (kind == "stationary") {
            spec.kind = InitialKind::Stationary;
            spec.sign = static_cast<int>(in.integer("sign", 1));
            if (spec.sign < -1 || spec.sign > 1) fail(in.path("sign"), "expected -1, 0 or 1");
        } else if (kind == "random") {
            spec.kind = InitialKind::Random;
            spec.radius_u = in.number("radius_u", 1.0);
            spec.radius_v = in.number("radius_v", 1.0);
            spec.modes = static_cast<int>(in.integer("modes", std::min(n, 4)));
            if (spec.radius_u < 0.0) fail(in.path("radius_u"), "must be nonnegative");
            if (spec.radius_v < 0.0) fail(in.path("radius_v"), "must be nonnegative");
            if (spec.modes < 1 || spec.modes > n) fail(in.path("modes"), "must satisfy 1 <= modes <= n");
        } else {
            fail(in.path("kind"), "expected explicit, modes, stationary or random");
        }
        in.finish();
    } else {
        cfg.initial.modes = std::min(n, 4);
    }

    if (top.has("integrator")) {
        detail::Object it(top.at("integrator"), "/integrator");
        auto& o = cfg.integrator;
        o.horizon = it.number("T", o.horizon);
        o.tol = it.number("tol", o.tol);
        o.stride = it.number("stride", o.stride);
        o.h_max = it.number("h_max", o.h_max);
        o.h_init = it.number("h_init", o.h_init);
        const std::string scheme = it.string("scheme", "exponential");
        if (scheme == "exponential") o.scheme = Scheme::Exponential;
        else if (scheme == "trapezoidal") o.scheme = Scheme::Trapezoidal;
        else fail(it.path("scheme"), "expected exponential or trapezoidal");
        if (!(o.horizon > 0.0)) fail(it.path("T"), "must be positive");
        if (!(o.tol >= 1e-12 && o.tol <= 1e-3)) fail(it.path("tol"), "must lie in [1e-12, 1e-3]");
        if (!(o.stride > 0.0) || o.stride > o.horizon) fail(it.path("stride"), "must lie in (0, T]");
        if (!(o.h_max > 0.0)) fail(it.path("h_max"), "must be positive");
        if (!(o.h_init > 0.0)) fail(it.path("h_init"), "must be positive");
        if (o.horizon / o.stride > 5e7) fail(it.path("stride"), "more than 5e7 samples requested");
        cfg.tail_fraction = it.number("tail_fraction", cfg.tail_fraction);
        if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0))
            fail(it.path("tail_fraction"), "must lie in (0, 1]");
        it.finish();
    }

    if (top.has("outputs")) {
        detail::Object out(top.at("outputs"), "/outputs");
        auto& o = cfg.outputs;
        o.trajectory = out.string("trajectory", o.trajectory);
        o.energy = out.string("energy", o.energy);
        o.summary = out.string("summary", o.summary);
        o.sweep = out.string("sweep", o.sweep);
        o.eigs = out.string("eigs", o.eigs);
        o.constants = out.string("constants", o.constants);
        const std::string format = out.string("format", "full");
        if (format == "full") o.format = TrajectoryFormat::Full;
        else if (format == "summary") o.format = TrajectoryFormat::Summary;
        else fail(out.path("format"), "expected full or summary");
        out.finish();
    }

    if (top.has("sweep")) {
        detail::Object sw(top.at("sweep"), "/sweep");
        cfg.sweep.present = true;
        const long long count = sw.integer("count");
        if (count < 1 || count > 1'000'000) fail(sw.path("count"), "must lie in [1, 1e6]");
        cfg.sweep.count = static_cast<std::size_t>(count);
        const long long seed = sw.integer("seed", 0);
        if (seed < 0) fail(sw.path("seed"), "must be nonnegative");
        cfg.sweep.seed = static_cast<std::uint64_t>(seed);
        cfg.sweep.mirror = sw.boolean("mirror", false);
        sw.finish();
    }
    top.finish();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------- problems

inline MatrixPair build_pair(const ScenarioConfig& cfg) {
    if (cfg.discretization.source == Source::FiniteDifference) return beam::assemble_fd(cfg.discretization.n);
    return validate_pair(cfg.discretization.A, cfg.discretization.B2);
}

/// Everything derived from (pair, lambda) that a run needs.
struct Problem {
    MatrixPair pair;
    GapSpectrum spectrum;
    double lambda;
    UnstableMode mode;
    CertifiedConstants constants;
};

inline Problem build_problem(const ScenarioConfig& cfg) {
    if (!cfg.lambda) throw Error(ErrorKind::Config, "/lambda: required by this command");
    MatrixPair pair = build_pair(cfg);
    GapSpectrum spectrum = gap_spectrum(pair, std::max<Eigen::Index>(2, cfg.k));
    const double lambda = *cfg.lambda;
    UnstableMode mode = unstable_mode(pair, spectrum, lambda);
    CertifiedConstants constants = certified_constants(pair, spectrum, mode, lambda);
    return {std::move(pair), std::move(spectrum), lambda, std::move(mode), std::move(constants)};
}

inline Forcing build_forcing(const ForcingSpec& spec, const Problem& p) {
    const Eigen::Index n = p.pair.n();
    if (spec.kind == ForcingKind::Zero) return Forcing::zero(n);
    Vec shape;
    if (spec.shape == "e1") shape = p.spectrum.e1();
    else if (spec.shape == "e0") shape = p.mode.e0;
    else if (spec.shape == "ones") shape = Vec::Ones(n);
    else shape = spec.shape_vector;
    switch (spec.kind) {
    case ForcingKind::Constant: return Forcing::constant(spec.amplitude, shape);
    case ForcingKind::Decaying: return Forcing::decaying(spec.amplitude, shape, spec.rate);
    case ForcingKind::Sinusoidal: return Forcing::sinusoidal(spec.amplitude, shape, spec.frequency);
    case ForcingKind::Zero: break;
    }
    return Forcing::zero(n);
}

/// Euclidean unit generalized eigenvectors, the basis for mode-based data.
inline Mat unit_modes(const MatrixPair& pair, int count) {
    const linalg::SymmetricEigen eig = linalg::pencil_eigen(pair.B2(), pair.A());
    Mat out = eig.vectors.leftCols(count);
    for (int j = 0; j < count; ++j) {
        out.col(j).normalize();
        linalg::fix_sign(out.col(j));
    }
    return out;
}

/// Point in the ball of the given radius inside span(basis).
inline Vec random_ball(std::mt19937_64& rng, const Mat& basis, double radius) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    Vec z(basis.cols());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
    Vec dir = basis * z;
    const double len = dir.norm();
    if (len == 0.0) return Vec::Zero(basis.rows());
    const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(basis.cols()));
    return (r / len) * dir;
}

inline State initial_state(const InitialSpec& spec, const Problem& p, std::uint64_t seed) {
    const Eigen::Index n = p.pair.n();
    State s{0.0, Vec::Zero(n), Vec::Zero(n)};
    switch (spec.kind) {
    case InitialKind::Explicit:
        s.u = spec.u;
        s.v = spec.v;
        break;
    case InitialKind::Modes: {
        const int m = static_cast<int>(std::max(spec.u_modes.size(), spec.v_modes.size()));
        if (m == 0) break;
        const Mat basis = unit_modes(p.pair, m);
        for (std::size_t j = 0; j < spec.u_modes.size(); ++j) s.u += spec.u_modes[j] * basis.col(j);
        for (std::size_t j = 0; j < spec.v_modes.size(); ++j) s.v += spec.v_modes[j] * basis.col(j);
        break;
    }
    case InitialKind::Stationary:
        s.u = stationary_points(p.pair, p.spectrum, p.lambda)[spec.sign == 0 ? 0 : (spec.sign > 0 ? 1 : 2)];
        break;
    case InitialKind::Random: {
        const int m = spec.modes > 0 ? spec.modes : static_cast<int>(std::min<Eigen::Index>(n, 4));
        const Mat basis = unit_modes(p.pair, m);
        std::mt19937_64 rng(seed);
        s.u = random_ball(rng, basis, spec.radius_u);
        s.v = random_ball(rng, basis, spec.radius_v);
        break;
    }
    }
    return s;
}

// ---------------------------------------------------------------- sweeps

struct SweepRow {
    std::uint64_t seed = 0;
    bool mirrored = false;
    std::string descriptor;
    bool ok = false;
    BasinLabel label{};
    std::string error;
};

/// Row i uses seed sweep.seed + i; mirrored rows negate data and forcing.
/// Rows run concurrently; the result order depends only on the input.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg, const Problem& p, unsigned workers) {
    if (!cfg.sweep.present) throw Error(ErrorKind::Config, "/sweep: required by this command");
    const Integrator integrator(p.pair, p.lambda);
    const Forcing forcing = build_forcing(cfg.forcing, p);
    const Forcing mirrored_forcing = forcing.negated();
    const std::size_t per_seed = cfg.sweep.mirror ? 2 : 1;
    std::vector<SweepRow> rows(cfg.sweep.count * per_seed);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            SweepRow& row = rows[i];
            row.seed = cfg.sweep.seed + i / per_seed;
            row.mirrored = (i % per_seed) == 1;
            try {
                State s0 = initial_state(cfg.initial, p, row.seed);
                if (row.mirrored) {
                    s0.u = -s0.u;
                    s0.v = -s0.v;
                }
                std::ostringstream d;
                d << "u0_norm=" << io::format_double(s0.u.norm()) << ";v0_norm=" << io::format_double(s0.v.norm())
                  << ";mirror=" << (row.mirrored ? 1 : 0);
                row.descriptor = d.str();
                const Trajectory traj =
                    integrator.run(row.mirrored ? mirrored_forcing : forcing, s0, cfg.integrator);
                row.label = classify(traj, p.pair, p.spectrum, p.lambda, cfg.tail_fraction);
                row.ok = true;
            } catch (const Error& e) {
                row.error = std::string(to_string(e.kind()));
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < count; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return rows;
}

} // namespace duffing::scenario
