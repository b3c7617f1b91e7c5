// Batch front-end: eigs, constants, simulate, sweep, verify.
//
// Exit codes: 0 success, 1 a monitored inequality or verification check
// failed, 2 configuration or runtime error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <thread>

#include "duffing/duffing.hpp"
#include "duffing/io.hpp"
#include "duffing/scenario.hpp"

namespace fs = std::filesystem;
using namespace duffing;
using scenario::json;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

/// Collects output files and writes them only once every one is rendered.
class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}
    bool enabled() const { return !dir_.empty(); }
    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    void commit() const {
        if (!enabled()) return;
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            const fs::path path = fs::path(dir_) / name;
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            std::ofstream out(path, std::ios::binary);
            if (!out) throw Error(ErrorKind::Config, path.string() + ": cannot write");
            out << content;
        }
    }

private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

scenario::ScenarioConfig load(const Flags& flags) {
    if (flags.config.empty()) throw Error(ErrorKind::Config, "--config is required for this command");
    scenario::ScenarioConfig cfg = scenario::load_config(flags.config);
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.sweep.seed = *flags.seed;
    }
    return cfg;
}

json constants_json(const scenario::Problem& p) {
    const CertifiedConstants& c = p.constants;
    json table = json::array();
    for (const auto& e : c.table()) table.push_back({{"name", e.name}, {"value", e.value}, {"binding", e.binding}});
    json checks = json::array();
    for (const auto& k : verify_constants(c))
        checks.push_back({{"inequality", k.name}, {"lhs", k.lhs}, {"rhs", k.rhs}, {"holds", k.holds}, {"tight", k.binding}});
    return {{"lambda", c.lambda},   {"lambda1", c.lambda1},   {"lambda2", c.lambda2},
            {"lambda0", c.lambda0}, {"mu1", c.mu1},           {"mu2", c.mu2},
            {"mu3", c.mu3},         {"mu3_exact", p.mode.mu3_exact},
            {"constants", table},   {"eps0_certified", c.eps0_certified},
            {"checks", checks}};
}

int cmd_eigs(const Flags& flags) {
    const auto cfg = load(flags);
    const MatrixPair pair = scenario::build_pair(cfg);
    const GapSpectrum spectrum = gap_spectrum(pair, cfg.k, GapPolicy::Report);
    const bool beam = cfg.discretization.source == scenario::Source::FiniteDifference;
    std::vector<beam::BeamEigenvalue> exact;
    if (beam) exact = beam::beam_eigenvalues((cfg.k + 1) / 2 + 1);

    std::ostringstream csv;
    io::CsvWriter w(csv);
    w.header({"k", "lambda", "exact", "rel_error"});
    std::cout << std::setw(4) << "k" << std::setw(24) << "lambda" << std::setw(24) << "exact" << std::setw(16)
              << "rel_error" << '\n';
    for (int j = 0; j < cfg.k; ++j) {
        const double value = spectrum.lambdas(j);
        w.cell(j + 1).cell(value);
        std::cout << std::setw(4) << j + 1 << std::setw(24) << io::format_double(value);
        if (beam) {
            const double target = exact[j].lambda;
            const double rel = std::abs(value - target) / target;
            w.cell(target).cell(rel);
            std::cout << std::setw(24) << io::format_double(target) << std::setw(16) << std::setprecision(3)
                      << std::scientific << rel << std::defaultfloat;
        } else {
            w.cell("").cell("");
        }
        w.end_row();
        std::cout << '\n';
    }
    if (!spectrum.simple_gap) std::cout << "warning: lambda1 is not simple\n";
    OutputSet out(flags.out);
    out.add(cfg.outputs.eigs, csv.str());
    out.commit();
    return 0;
}

int cmd_constants(const Flags& flags) {
    const auto cfg = load(flags);
    const scenario::Problem p = scenario::build_problem(cfg);
    const json j = constants_json(p);
    std::cout << j.dump(2) << '\n';
    OutputSet out(flags.out);
    out.add(cfg.outputs.constants, j.dump(2) + "\n");
    out.commit();
    bool ok = true;
    for (const auto& k : verify_constants(p.constants)) ok = ok && k.holds;
    return ok ? 0 : 1;
}

int cmd_simulate(const Flags& flags) {
    const auto cfg = load(flags);
    const scenario::Problem p = scenario::build_problem(cfg);
    const Forcing f = scenario::build_forcing(cfg.forcing, p);
    const State s0 = scenario::initial_state(cfg.initial, p, cfg.seed);
    const Trajectory traj = integrate(p.pair, p.lambda, f, s0, cfg.integrator);
    MonitorOptions mo;
    mo.require_identity = false; // reported as a violation instead
    const EnergyReport report = monitor(traj, f, p.pair, p.spectrum, p.mode, p.constants, mo);

    json summary;
    summary["lambda"] = p.lambda;
    summary["sigma0"] = p.constants.sigma0;
    summary["steps"] = {{"accepted", traj.accepted_steps}, {"rejected", traj.rejected_steps}};
    summary["samples"] = traj.size();
    json violations = json::object();
    for (Inequality id : {Inequality::EnergyIdentity, Inequality::FDecay, Inequality::SPlusDecay,
                          Inequality::SMinusDecay, Inequality::FLower, Inequality::FUpper,
                          Inequality::PotentialLower})
        violations[std::string(to_string(id))] = report.count(id);
    summary["violations"] = violations;
    summary["checked"] = {{"F_decay", report.checked_F},
                          {"S_plus_decay", report.checked_S_plus},
                          {"S_minus_decay", report.checked_S_minus}};
    summary["energy_identity"] = {{"rel_error", report.identity_rel_error},
                                  {"abs_error", report.identity_abs_error},
                                  {"stride_estimate", report.identity_expected}};
    try {
        const BasinLabel label = classify(traj, p.pair, p.spectrum, p.lambda, cfg.tail_fraction);
        summary["label"] = {{"sigma", label.sigma},
                            {"sign", label.sign},
                            {"tail_metric", label.tail_metric},
                            {"margin", label.margin},
                            {"unresolved", label.unresolved}};
        const double sup_f = f.sup_norm();
        const double tail_F = tail_max(traj, report.F, cfg.tail_fraction);
        const double bound_F = p.constants.M1 * sup_f * sup_f;
        summary["F_tail"] = {{"tail_max", tail_F},
                             {"bound", bound_F},
                             {"pass", tail_F <= bound_F + 1e-6 * (1.0 + std::abs(bound_F))}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::HorizonTooShort) throw;
        summary["label"] = nullptr;
        summary["label_error"] = e.what();
    }
    try {
        const UltimateBoundReport ub = ultimate_bound_check(traj, p.constants, f, p.pair, cfg.tail_fraction);
        summary["ultimate_bound"] = {
            {"tail_value", ub.tail_value}, {"bound", ub.bound}, {"pass", ub.pass}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::HorizonTooShort) throw;
        summary["ultimate_bound"] = nullptr;
    }
    summary["constants"] = constants_json(p);
    const bool pass = report.violations.empty();
    summary["pass"] = pass;

    std::ostringstream traj_csv, energy_csv;
    if (cfg.outputs.format == scenario::TrajectoryFormat::Full)
        io::write_trajectory(traj_csv, traj);
    else
        io::write_trajectory_summary(traj_csv, report);
    io::write_energy(energy_csv, report);
    OutputSet out(flags.out);
    out.add(cfg.outputs.trajectory, traj_csv.str());
    out.add(cfg.outputs.energy, energy_csv.str());
    out.add(cfg.outputs.summary, summary.dump(2) + "\n");
    out.commit();

    json brief = summary;
    brief.erase("constants");
    std::cout << brief.dump(2) << '\n';
    return pass ? 0 : 1;
}

int cmd_sweep(const Flags& flags) {
    const auto cfg = load(flags);
    const scenario::Problem p = scenario::build_problem(cfg);
    if (!cfg.sweep.present) throw Error(ErrorKind::Config, "/sweep: required by this command");
    const auto rows = scenario::run_sweep(cfg, p, flags.workers);
    const Forcing f = scenario::build_forcing(cfg.forcing, p);

    std::ostringstream csv;
    io::CsvWriter w(csv);
    w.header({"seed", "u0_descriptor", "sigma", "tail_metric", "margin", "status"});
    std::size_t minus = 0, zero = 0, plus = 0, unresolved = 0, failed = 0;
    double m0 = 0.0;
    for (const auto& row : rows) {
        w.cell(static_cast<long long>(row.seed)).cell(row.descriptor);
        if (row.ok) {
            w.cell(row.label.sigma).cell(row.label.tail_metric).cell(row.label.margin);
            w.cell(row.label.unresolved ? "unresolved" : "ok");
            if (row.label.unresolved) ++unresolved;
            (row.label.sign < 0 ? minus : row.label.sign > 0 ? plus : zero)++;
            if (f.sup_norm() > 0.0) m0 = std::max(m0, row.label.tail_metric / f.sup_norm());
        } else {
            w.cell("").cell("").cell("").cell("error:" + row.error);
            ++failed;
        }
        w.end_row();
    }
    json summary = {{"rows", rows.size()},
                    {"counts", {{"minus_sigma0", minus}, {"zero", zero}, {"plus_sigma0", plus}}},
                    {"unresolved", unresolved},
                    {"failed", failed},
                    {"sigma0", p.constants.sigma0},
                    {"empirical_M0", f.sup_norm() > 0.0 ? json(m0) : json(nullptr)}};
    OutputSet out(flags.out);
    out.add(cfg.outputs.sweep, csv.str());
    out.add(cfg.outputs.summary, summary.dump(2) + "\n");
    out.commit();
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- verify

struct Verifier {
    int failures = 0;
    void check(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
        if (!ok) ++failures;
    }
};

MatrixPair diag_pair() {
    Mat A = Mat::Zero(2, 2), B2 = Mat::Zero(2, 2);
    A.diagonal() << 1.0, 2.0;
    B2.diagonal() << 1.0, 8.0;
    return validate_pair(A, B2);
}

int cmd_verify(const Flags& flags) {
    Verifier v;
    const std::uint64_t seed = flags.seed.value_or(7);

    const double a1 = beam::char_root(1);
    v.check("char_root", std::abs(a1 - 4.493409457909064) <= 1e-9, "alpha1 = " + io::format_double(a1));

    const beam::UniformGrid grid(256);
    const auto f = grid.sample([](double x) { return std::sin(std::numbers::pi * x); });
    const auto u = beam::apply_T(grid, f);
    const double ct = beam::l2_distance(grid, beam::apply_C(grid, u), f);
    v.check("appendix_inverse", ct <= 1e-8, "|C(Tf) - f| = " + io::format_double(ct));

    struct Case {
        std::string name;
        MatrixPair pair;
        double lambda;
    };
    std::vector<Case> cases{{"diag", diag_pair(), 2.0}, {"beam32", beam::assemble_fd(32), 60.0}};
    for (const auto& c : cases) {
        const GapSpectrum sp = gap_spectrum(c.pair, 2);
        const UnstableMode mode = unstable_mode(c.pair, sp, c.lambda);
        const CertifiedConstants k = certified_constants(c.pair, sp, mode, c.lambda);
        bool holds = true;
        for (const auto& chk : verify_constants(k)) holds = holds && chk.holds;
        v.check(c.name + ".constants", holds, "gamma0 = " + io::format_double(k.gamma0));
        v.check(c.name + ".inertia", inertia_index(c.pair, c.lambda) == 1, "one negative direction in the gap");

        double res = 0.0;
        for (const Vec& s : stationary_points(c.pair, sp, c.lambda))
            res = std::max(res, stationarity_residual(c.pair, c.lambda, s) / (c.lambda * c.pair.norm_A()));
        v.check(c.name + ".stationary", res <= 1e-9, "relative residual " + io::format_double(res));

        const Integrator integ(c.pair, c.lambda);
        std::mt19937_64 rng(seed);
        const Mat basis = scenario::unit_modes(c.pair, static_cast<int>(std::min<Eigen::Index>(4, c.pair.n())));
        std::size_t violations = 0, labeled = 0;
        const int runs = 3;
        for (int r = 0; r < runs; ++r) {
            const State s0{0.0, scenario::random_ball(rng, basis, 2.0), scenario::random_ball(rng, basis, 2.0)};
            IntegratorOptions o;
            o.horizon = 60.0;
            o.stride = 0.005;
            o.tol = 1e-9;
            const Trajectory t = integ.run(Forcing::zero(c.pair.n()), s0, o);
            MonitorOptions mo;
            mo.require_identity = false;
            const EnergyReport rep = monitor(t, Forcing::zero(c.pair.n()), c.pair, sp, mode, k, mo);
            violations += rep.certified_violations();
            if (classify(t, c.pair, sp, c.lambda).sign != 0) ++labeled;
        }
        v.check(c.name + ".monitors", violations == 0, std::to_string(violations) + " certified violations");
        v.check(c.name + ".basins", labeled == runs, std::to_string(labeled) + "/" + std::to_string(runs) +
                                                         " runs settle at +-sigma0");
    }
    std::cout << (v.failures ? "verify: FAILED (" + std::to_string(v.failures) + ")" : std::string("verify: ok"))
              << '\n';
    return v.failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Damped nonlinear beam equation: spectra, certified constants, simulation and basin sweeps"};
    app.require_subcommand(1);
    Flags flags;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", flags.config, "scenario JSON file");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory (nothing is written without it)");
        sub->add_option("--seed", seed_value, "overrides the config seed and sweep seed");
        sub->add_option("--workers", flags.workers, "concurrent sweep rows")->check(CLI::PositiveNumber);
    };
    auto* eigs = app.add_subcommand("eigs", "leading generalized eigenvalues of (B^2, A)");
    auto* constants = app.add_subcommand("constants", "certified constant chain with binding inequalities");
    auto* simulate = app.add_subcommand("simulate", "integrate, monitor and classify one trajectory");
    auto* sweep = app.add_subcommand("sweep", "classify seeded random initial data in parallel");
    auto* verify = app.add_subcommand("verify", "property checks on built-in pairs");
    for (auto* sub : {eigs, constants, simulate, sweep}) add_common(sub, true);
    add_common(verify, false);

    CLI11_PARSE(app, argc, argv);
    for (auto* sub : {eigs, constants, simulate, sweep, verify})
        if (sub->parsed() && sub->count("--seed")) flags.seed = seed_value;

    try {
        if (eigs->parsed()) return cmd_eigs(flags);
        if (constants->parsed()) return cmd_constants(flags);
        if (simulate->parsed()) return cmd_simulate(flags);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (verify->parsed()) return cmd_verify(flags);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
