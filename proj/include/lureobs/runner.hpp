#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lureobs/bounds.hpp"
#include "lureobs/scenario.hpp"

namespace lureobs {

// exit-code contract shared by all subcommands
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAssumption = 2;
inline constexpr int kExitBound = 3;
inline constexpr int kExitDivergence = 4;

namespace detail {

inline int csv_precision_from_env() {
    const char* env = std::getenv("LUREOBS_CSV_PRECISION");
    if (!env) return -1;
    const int p = std::atoi(env);
    return (p >= 1 && p <= 17) ? p : -1;
}

/// Shortest round-trip decimal by default; LUREOBS_CSV_PRECISION overrides.
inline void append_number(std::string& out, double v, int precision) {
    char buf[40];
    std::to_chars_result r =
        precision > 0 ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision)
                      : std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

inline std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string fmte(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", decimals, v);
    return buf;
}

inline const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

/// Cached splitter against the observation subspace Im(P^{-1}F^T).
struct SubspaceSplitter {
    Matrix basis;
    Matrix gram_inv;

    SubspaceSplitter(const Matrix& P, const Matrix& F) : basis(injection_basis(P, F)) {
        const Matrix gram = transpose(basis) * basis;
        gram_inv = solve(gram, Matrix::identity(gram.rows()));
    }

    void split(const Vector& xi, Vector& xi1, Vector& xi2) const {
        xi1 = gram_inv * (transpose(basis) * xi);
        xi2 = sub(xi, basis * xi1);
    }
};

} // namespace detail

struct RunOutcome {
    int exit_code = kExitOk;
    std::string report;
    std::filesystem::path trajectory_csv;
    std::filesystem::path envelope_csv;
    std::filesystem::path report_txt;
    std::filesystem::path plot_script;
};

// ---- CSV emission ----

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                                 const ErrorSeries& series, const std::vector<double>& env_total,
                                 const std::vector<double>& env_a, double omega_hi) {
    const int prec = detail::csv_precision_from_env();
    const std::size_t n = traj.x.empty() ? 0 : traj.x.front().size();
    const std::size_t p = traj.ey.empty() ? 0 : traj.ey.front().size();

    std::string out;
    out.reserve(traj.size() * 32 * (3 * n + 6));
    out += "t";
    for (std::size_t i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) out += ",xh" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) out += ",e" + std::to_string(i);
    out += ",norm_e";
    if (p == 1)
        out += ",ey";
    else
        for (std::size_t i = 1; i <= p; ++i) out += ",ey" + std::to_string(i);
    out += ",sqrtV,env_total,env_a,in_omega\n";

    for (std::size_t k = 0; k < traj.size(); ++k) {
        detail::append_number(out, traj.times[k], prec);
        for (std::size_t i = 0; i < n; ++i) {
            out += ',';
            detail::append_number(out, traj.x[k][i], prec);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out += ',';
            detail::append_number(out, traj.xhat[k][i], prec);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out += ',';
            detail::append_number(out, traj.e[k][i], prec);
        }
        out += ',';
        detail::append_number(out, traj.norm_e[k], prec);
        for (std::size_t i = 0; i < p; ++i) {
            out += ',';
            detail::append_number(out, traj.ey[k][i], prec);
        }
        out += ',';
        detail::append_number(out, series.sqrtV[k], prec);
        out += ',';
        detail::append_number(out, env_total[k], prec);
        out += ',';
        detail::append_number(out, env_a[k], prec);
        out += traj.norm_e[k] <= omega_hi ? ",1\n" : ",0\n";
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << out;
}

inline void write_envelope_csv(const std::filesystem::path& path, const std::vector<double>& times,
                               const ErrorSeries& series, const EnvelopeSet& env) {
    const int prec = detail::csv_precision_from_env();
    std::string out = "t,sqrtV,norm_e,env_total,env_case_a";
    if (env.case_c) out += ",env_case_c";
    if (env.case_d) out += ",env_case_d";
    out += '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
        detail::append_number(out, times[k], prec);
        for (double v : {series.sqrtV[k], series.norm_e[k], env.total[k], env.case_a[k]}) {
            out += ',';
            detail::append_number(out, v, prec);
        }
        if (env.case_c) {
            out += ',';
            detail::append_number(out, (*env.case_c)[k], prec);
        }
        if (env.case_d) {
            out += ',';
            detail::append_number(out, (*env.case_d)[k], prec);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << out;
}

struct CsvTrajectory {
    std::vector<double> times;
    std::vector<Vector> x, xhat;
};

/// Minimal reader for trajectory CSVs produced above: needs t, x*, xh* columns.
inline CsvTrajectory read_trajectory_csv(const std::filesystem::path& path, std::size_t n) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const auto col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error(path.string() + ": missing column " + name);
    };
    const std::size_t t_col = col("t");
    std::vector<std::size_t> x_cols(n), xh_cols(n);
    for (std::size_t i = 0; i < n; ++i) {
        x_cols[i] = col("x" + std::to_string(i + 1));
        xh_cols[i] = col("xh" + std::to_string(i + 1));
    }

    CsvTrajectory out;
    std::vector<double> row(header.size());
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::size_t idx = 0, start = 0;
        for (std::size_t pos = 0; pos <= line.size(); ++pos) {
            if (pos == line.size() || line[pos] == ',') {
                if (idx < row.size()) {
                    double v = 0.0;
                    std::from_chars(line.data() + start, line.data() + pos, v);
                    row[idx] = v;
                }
                ++idx;
                start = pos + 1;
            }
        }
        out.times.push_back(row[t_col]);
        Vector xs(n), xh(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = row[x_cols[i]];
            xh[i] = row[xh_cols[i]];
        }
        out.x.push_back(std::move(xs));
        out.xhat.push_back(std::move(xh));
    }
    return out;
}

inline void write_plot_script(const std::filesystem::path& path, const std::string& scenario) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "#!/usr/bin/env python3\n"
         "\"\"\"Plot the trajectory and envelope CSVs next to this script.\"\"\"\n"
         "import csv, os, sys\n"
         "\n"
         "import matplotlib\n"
         "matplotlib.use(\"Agg\")\n"
         "import matplotlib.pyplot as plt\n"
         "\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "\n"
         "def load(name):\n"
         "    with open(os.path.join(here, name)) as fh:\n"
         "        rows = list(csv.DictReader(fh))\n"
         "    return {k: [float(r[k]) for r in rows] for k in rows[0]}\n"
         "\n"
         "traj = load(\"trajectory.csv\")\n"
         "env = load(\"envelopes.csv\")\n"
         "\n"
         "fig, axes = plt.subplots(2, 1, figsize=(9, 8), sharex=True)\n"
         "ncomp = sum(1 for k in traj if k.startswith(\"e\") and k[1:].isdigit())\n"
         "for i in range(1, ncomp + 1):\n"
         "    axes[0].plot(traj[\"t\"], traj[\"e%d\" % i], label=\"e%d\" % i)\n"
         "axes[0].legend(); axes[0].set_ylabel(\"error components\")\n"
         "axes[0].set_title(" << json(scenario).dump() << ")\n"
         "axes[1].plot(env[\"t\"], env[\"norm_e\"], label=\"||e||\")\n"
         "axes[1].plot(env[\"t\"], env[\"sqrtV\"], label=\"sqrt V\")\n"
         "axes[1].plot(env[\"t\"], env[\"env_total\"], \"--\", label=\"envelope\")\n"
         "axes[1].plot(env[\"t\"], env[\"env_case_a\"], \":\", label=\"case-a bound\")\n"
         "axes[1].legend(); axes[1].set_xlabel(\"t\"); axes[1].set_ylabel(\"norms\")\n"
         "out = os.path.join(here, \"errors.png\")\n"
         "fig.savefig(out, dpi=130)\n"
         "print(\"wrote\", out)\n";
}

// ---- scenario execution ----

namespace detail {

struct AssumptionSection {
    GainCertificate cert;
    bool feasible = false; // eps* > 0
    bool pass = false;
    std::optional<double> mu;
    std::vector<MonotonicityProbe> probes;
    bool probes_pass = false;
};

inline AssumptionSection assess_assumptions(const CompiledScenario& cs) {
    AssumptionSection s;
    const double eps_for_check = cs.eps_used > 0.0 ? cs.eps_used : cs.eps_given;
    s.cert = certify_gains(cs.sys.A, cs.sys.F, cs.sys.B, cs.sys.C, cs.obs.P, cs.obs.L, cs.obs.K,
                           cs.sys.lipschitz_f, eps_for_check, cs.checks.gain_tolerance);
    s.feasible = cs.eps_star > 0.0;
    s.probes_pass = true;
    for (const auto& comp : cs.sys.op.components) {
        s.probes.push_back(monotonicity_probe(comp, -10.0, 10.0, 2000, 1));
        s.probes_pass = s.probes_pass && s.probes.back().pass;
    }
    s.pass = s.feasible && s.cert.p_positive_definite && s.cert.ineq_ok && s.cert.range_ok &&
             s.probes_pass;
    if (cs.eps_used > 0.0) {
        const Matrix omega = stability_inequality_matrix(cs.sys.A, cs.sys.F, cs.obs.P, cs.obs.L,
                                                         cs.sys.lipschitz_f, cs.eps_used);
        s.mu = suggest_mu(cs.obs.P, cs.eps_used, omega);
    }
    return s;
}

inline void report_assumptions(std::ostringstream& rep, const CompiledScenario& cs,
                               const AssumptionSection& s) {
    rep << "gain certificate:\n";
    rep << "  P positive definite: " << verdict(s.cert.p_positive_definite) << " (min eigenvalue "
        << fmte(s.cert.p_min_eigenvalue) << ")\n";
    rep << "  stability matrix inequality: " << verdict(s.cert.ineq_ok) << " (witness eigenvalue "
        << fmte(s.cert.witness_eig) << ", tol " << fmte(cs.checks.gain_tolerance) << ")\n";
    rep << "  output matching B^T P = C - KF: " << verdict(s.cert.range_ok) << " (residual "
        << fmte(s.cert.range_residual) << ")\n";
    if (s.cert.symmetrized) rep << "  note: asymmetric input was symmetrized for the eigenvalue tests\n";
    rep << "  margin eps: given " << fmt(cs.eps_given, 6) << ", max admissible " << fmt(cs.eps_star, 6)
        << ", used " << fmt(cs.eps_used, 6) << "\n";
    if (cs.eps_given > cs.eps_star)
        rep << "  note: the given margin exceeds the admissible maximum; envelopes and rules use "
               "the admissible value\n";
    if (s.mu)
        rep << "  suggested mu for the L2 gain block: " << fmt(*s.mu, 6) << "\n";
    else
        rep << "  mu rule: not applicable (stability matrix not <= -2 eps I)\n";
    for (std::size_t i = 0; i < s.probes.size(); ++i)
        rep << "  operator monotonicity probe [" << i << "]: " << verdict(s.probes[i].pass)
            << " (min pair product " << fmte(s.probes[i].min_product) << ")\n";
}

struct BoundSection {
    EnvelopeSet env;
    DominanceReport dominance;
    GronwallReport gronwall;
    CaptureReport capture;
    TimeInstantReport t_obs;
    std::optional<L2GainReport> l2_gain;
    std::optional<BlockCertificate> l2_block;
    bool kappa_domination = true;
    double kappa1_worst = 0.0, kappa2_worst = 0.0; // worst margins kappa - |xi part|
    bool pass = false;
};

inline BoundSection assess_bounds(const CompiledScenario& cs, const Trajectory& traj,
                                  const ErrorSeries& series, std::optional<double> mu) {
    BoundSection b;
    const Matrix& P = cs.obs.P;
    const double eps = cs.eps_used;
    const double V0 = traj.V.front();
    const double dt = traj.times.size() > 1 ? traj.times[1] - traj.times[0] : cs.scheme.dt;

    b.env.total = envelope_total(V0, eps, P, cs.obs.kappa2, traj.times);
    const CaseAEnvelope ca = envelope_case_a(V0, eps, cs.kappa2_sup, P, traj.times);
    b.env.case_a = ca.values;
    b.env.omega_hi = ca.omega_hi;
    if (cs.kappa2_exp)
        b.env.case_c = envelope_case_c(V0, eps, cs.kappa2_exp->first, cs.kappa2_exp->second, P, traj.times);
    {
        std::vector<double> running(traj.size(), 0.0);
        for (std::size_t k = 1; k < traj.size(); ++k) {
            const double a = cs.obs.kappa2(traj.times[k - 1]);
            const double c = cs.obs.kappa2(traj.times[k]);
            running[k] = running[k - 1] + 0.5 * (traj.times[k] - traj.times[k - 1]) * (a * a + c * c);
        }
        b.env.case_d = envelope_case_d(V0, eps, P, running, traj.times);
    }

    const double slack = 10.0 * (cs.scheme.sigma_obs + dt);
    b.dominance = check_envelope_dominance(series.sqrtV, b.env.total, cs.checks.eta, slack);

    // the comparison-lemma route to the same envelope
    {
        const auto ev = sym_eigenvalues(P, 1e-6);
        const double lmin = ev.front(), lmax = ev.back();
        const double np = spectral_norm(P);
        std::vector<double> a(traj.size(), -eps / lmax), bb(traj.size());
        for (std::size_t k = 0; k < traj.size(); ++k)
            bb[k] = np * cs.obs.kappa2(traj.times[k]) / std::sqrt(lmin);
        b.gronwall = gronwall_check(traj.V, a, bb, 0.5, dt, cs.checks.eta, slack);
    }

    b.capture = attractive_set_capture(traj.times, traj.norm_e, b.env.omega_hi + cs.checks.neighborhood);

    // per-sample uncertainty split: empirical improved set + bound domination
    {
        const SubspaceSplitter splitter(P, cs.sys.F);
        double kprime = 0.0;
        double worst1 = std::numeric_limits<double>::infinity();
        double worst2 = worst1;
        Vector xi1, xi2;
        std::vector<double> xi_norm_sq(traj.size());
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const Vector xi = cs.sys.xi(traj.times[k], traj.x[k]);
            xi_norm_sq[k] = dot(xi, xi);
            splitter.split(xi, xi1, xi2);
            kprime = std::max(kprime, norm(P * xi2));
            worst1 = std::min(worst1, cs.obs.kappa1(traj.times[k]) - norm(xi1));
            worst2 = std::min(worst2, cs.obs.kappa2(traj.times[k]) - norm(xi2));
        }
        b.env.omega_prime_hi = kprime / eps;
        b.kappa1_worst = worst1;
        b.kappa2_worst = worst2;
        b.kappa_domination = worst1 >= -1e-9 && worst2 >= -1e-9;

        b.t_obs = check_T_observer(traj, xi_norm_sq, P, eps, cs.checks.eta);
        if (mu) {
            b.l2_block = certify_l2_gain(cs.sys.A, cs.sys.F, P, cs.obs.L, cs.sys.lipschitz_f, eps,
                                         *mu, cs.checks.gain_tolerance);
            b.l2_gain = check_strong_hinf(traj, xi_norm_sq, P, eps, *mu, traj.times.back());
        }
    }

    b.pass = b.dominance.ok && b.gronwall.ok && b.capture.captured && b.t_obs.ok &&
             (!b.l2_gain || (b.l2_gain->ok && b.l2_block && b.l2_block->ok));
    return b;
}

inline void report_bounds(std::ostringstream& rep, const CompiledScenario& cs, const Trajectory& traj,
                          const BoundSection& b) {
    rep << "envelopes (eps " << fmt(cs.eps_used, 6) << "):\n";
    rep << "  sqrt(V) <= total envelope: " << verdict(b.dominance.ok) << " (worst excess "
        << fmte(b.dominance.worst_excess) << ", raw excess " << fmte(b.dominance.worst_raw_excess)
        << ", eta " << fmt(cs.checks.eta, 3) << ")\n";
    rep << "  comparison-lemma recurrence: " << verdict(b.gronwall.ok) << " (worst excess "
        << fmte(b.gronwall.worst_excess) << ")\n";
    rep << "  attractive set: Omega_hi = " << fmt(b.env.omega_hi, 4) << ", threshold "
        << fmt(b.capture.threshold, 4) << ": " << (b.capture.captured ? "entered" : "NOT captured")
        << " at t = " << fmt(b.capture.t_star, 4) << ", max afterwards " << fmt(b.capture.max_after, 4)
        << "\n";
    if (b.env.omega_prime_hi)
        rep << "  improved set (trajectory-sampled residual): Omega_prime_hi = "
            << fmt(*b.env.omega_prime_hi, 4) << "\n";
    rep << "  uncertainty bound domination: " << verdict(b.kappa_domination)
        << " (kappa1 margin " << fmte(b.kappa1_worst) << ", kappa2 margin " << fmte(b.kappa2_worst)
        << ")\n";
    rep << "time-instant bound: " << verdict(b.t_obs.ok) << " (min margin " << fmte(b.t_obs.min_margin)
        << ", mu " << fmt(b.t_obs.mu, 4) << "; sharper sqrt(lambda_min) variant mu "
        << fmt(b.t_obs.mu_tight, 4) << ")\n";
    if (b.l2_gain) {
        rep << "L2 gain block certificate: " << verdict(b.l2_block->ok) << " (witness "
            << fmte(b.l2_block->witness_eig) << ")\n";
        rep << "L2 gain bound (squared form): " << verdict(b.l2_gain->ok) << " (lhs "
            << fmt(b.l2_gain->lhs_sq, 6) << " <= rhs " << fmt(b.l2_gain->rhs_sq, 6) << ", mu "
            << fmt(b.l2_gain->mu, 6) << ")\n";
        rep << "  unsquared reference form: lhs " << fmt(b.l2_gain->lhs_unsquared, 6) << ", rhs "
            << fmt(b.l2_gain->rhs_unsquared, 6) << "\n";
    } else {
        rep << "L2 gain bound: not evaluated (mu rule not applicable at this margin)\n";
    }
    rep << "final state error ||e(" << fmt(traj.times.back(), 4) << ")|| = "
        << fmte(traj.norm_e.back()) << "\n";
}

} // namespace detail

/// Assumption report without simulation.
inline RunOutcome verify_scenario(const ScenarioConfig& cfg) {
    RunOutcome out;
    std::ostringstream rep;
    rep << "scenario: " << cfg.name << "\n";

    CompiledScenario cs;
    try {
        cs = compile_scenario(cfg);
    } catch (const ParameterError& e) {
        // infeasible margin rule and similar: still report what can be computed
        rep << "gain certificate:\n  stability matrix inequality: FAIL (" << e.what() << ")\n";
        const double eps_star =
            max_admissible_eps(cfg.system.A, cfg.system.F, cfg.observer.P, cfg.observer.L,
                               cfg.system.lipschitz_f);
        rep << "  margin eps: given " << detail::fmt(cfg.observer.epsilon, 6) << ", max admissible "
            << detail::fmt(eps_star, 6) << "\n";
        rep << "result: FAIL\n";
        out.exit_code = kExitAssumption;
        out.report = rep.str();
        return out;
    }

    const detail::AssumptionSection s = detail::assess_assumptions(cs);
    detail::report_assumptions(rep, cs, s);
    rep << "result: " << detail::verdict(s.pass) << "\n";
    out.exit_code = s.pass ? kExitOk : kExitAssumption;
    out.report = rep.str();
    return out;
}

/// Full pipeline: certify, simulate, evaluate envelopes, emit artifacts.
inline RunOutcome run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    RunOutcome out;
    std::ostringstream rep;
    rep << "scenario: " << cfg.name << "\n";

    CompiledScenario cs;
    try {
        cs = compile_scenario(cfg);
    } catch (const ParameterError& e) {
        rep << "setup failed: " << e.what() << "\n";
        rep << "stability matrix inequality: FAIL (no admissible margin)\n";
        rep << "result: FAIL\n";
        out.exit_code = kExitAssumption;
        out.report = rep.str();
        return out;
    }

    const detail::AssumptionSection assume = detail::assess_assumptions(cs);
    detail::report_assumptions(rep, cs, assume);
    if (!assume.pass && cs.checks.assumptions)
        rep << "note: continuing the simulation despite the failed certificate\n";

    rep << "simulation: method " << method_name(cs.scheme.method) << ", dt " << detail::fmte(cs.scheme.dt)
        << ", t_end " << detail::fmt(cs.scheme.t_end, 4) << ", sigma_plant "
        << detail::fmte(cs.scheme.sigma_plant) << ", sigma_sign " << detail::fmte(cs.scheme.sigma_obs)
        << "\n";

    Trajectory traj;
    try {
        traj = integrate_coupled(cs.sys, cs.obs, cs.x0, cs.xhat0, cs.scheme);
    } catch (const DivergenceError& e) {
        rep << "simulation diverged at step " << e.step << " (t = " << detail::fmt(e.time, 6) << ")\n";
        rep << "result: FAIL\n";
        out.exit_code = kExitDivergence;
        out.report = rep.str();
        return out;
    }
    rep << "  samples: " << traj.size() << "\n";

    const ErrorSeries series = error_series(traj, cs.obs.P);

    detail::BoundSection bounds;
    const bool envelopes_evaluable = cs.eps_used > 0.0;
    if (envelopes_evaluable) {
        bounds = detail::assess_bounds(cs, traj, series, assume.mu);
        detail::report_bounds(rep, cs, traj, bounds);
    } else {
        rep << "envelopes: not evaluable (stability matrix inequality infeasible, no admissible "
               "margin)\n";
    }

    std::filesystem::create_directories(out_dir);
    out.trajectory_csv = out_dir / "trajectory.csv";
    out.envelope_csv = out_dir / "envelopes.csv";
    out.report_txt = out_dir / "report.txt";
    out.plot_script = out_dir / "plot.py";
    if (envelopes_evaluable) {
        write_trajectory_csv(out.trajectory_csv, traj, series, bounds.env.total, bounds.env.case_a,
                             bounds.env.omega_hi);
        write_envelope_csv(out.envelope_csv, traj.times, series, bounds.env);
        write_plot_script(out.plot_script, cfg.name);
    }

    if (!assume.pass && cs.checks.assumptions)
        out.exit_code = kExitAssumption;
    else if (!envelopes_evaluable || !bounds.kappa_domination)
        out.exit_code = kExitAssumption;
    else if (!bounds.pass)
        out.exit_code = kExitBound;
    else
        out.exit_code = kExitOk;

    rep << "result: " << (out.exit_code == kExitOk ? "PASS" : "FAIL") << " (exit "
        << out.exit_code << ")\n";
    out.report = rep.str();

    std::ofstream rf(out.report_txt, std::ios::binary);
    rf << out.report;
    return out;
}

/// Re-evaluate the bound checks against a previously written trajectory CSV.
inline RunOutcome bounds_scenario(const ScenarioConfig& cfg, const std::filesystem::path& traj_csv) {
    RunOutcome out;
    std::ostringstream rep;
    rep << "scenario: " << cfg.name << " (bounds re-check of " << traj_csv.string() << ")\n";

    CompiledScenario cs;
    try {
        cs = compile_scenario(cfg);
    } catch (const ParameterError& e) {
        rep << "setup failed: " << e.what() << "\nresult: FAIL\n";
        out.exit_code = kExitAssumption;
        out.report = rep.str();
        return out;
    }
    if (!(cs.eps_used > 0.0)) {
        rep << "stability matrix inequality infeasible; envelopes not evaluable\nresult: FAIL\n";
        out.exit_code = kExitAssumption;
        out.report = rep.str();
        return out;
    }

    const CsvTrajectory csv = read_trajectory_csv(traj_csv, cs.sys.n());
    if (csv.times.size() < 2) {
        rep << "trajectory file has fewer than two samples\nresult: FAIL\n";
        out.exit_code = kExitUsage;
        out.report = rep.str();
        return out;
    }

    Trajectory traj;
    traj.times = csv.times;
    traj.x = csv.x;
    traj.xhat = csv.xhat;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const Vector e = sub(traj.xhat[k], traj.x[k]);
        traj.e.push_back(e);
        traj.ey.push_back(cs.sys.F * e);
        traj.V.push_back(dot(cs.obs.P * e, e));
        traj.norm_e.push_back(norm(e));
        traj.omega.push_back(Vector(cs.sys.m(), 0.0));
        traj.omega_hat.push_back(Vector(cs.sys.m(), 0.0));
    }
    // slack uses the file's own grid spacing
    cs.scheme.dt = traj.times[1] - traj.times[0];

    const detail::AssumptionSection assume = detail::assess_assumptions(cs);
    const detail::BoundSection bounds = detail::assess_bounds(cs, traj, error_series(traj, cs.obs.P),
                                                              assume.mu);
    detail::report_bounds(rep, cs, traj, bounds);

    out.exit_code = bounds.pass && bounds.kappa_domination ? kExitOk
                    : !bounds.kappa_domination            ? kExitAssumption
                                                          : kExitBound;
    rep << "result: " << (out.exit_code == kExitOk ? "PASS" : "FAIL") << " (exit " << out.exit_code
        << ")\n";
    out.report = rep.str();
    return out;
}

/// Run every builtin scenario concurrently; aggregation stays single-threaded.
inline int run_all(const std::filesystem::path& out_dir, std::string& summary) {
    const auto names = builtin_scenario_names();
    std::vector<std::future<RunOutcome>> futures;
    futures.reserve(names.size());
    for (const auto& name : names)
        futures.push_back(std::async(std::launch::async, [name, out_dir] {
            return run_scenario(load_scenario(name), out_dir / name);
        }));

    int worst = kExitOk;
    std::ostringstream agg;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const RunOutcome r = futures[i].get();
        agg << "==== " << names[i] << " (exit " << r.exit_code << ") ====\n" << r.report << "\n";
        worst = std::max(worst, r.exit_code);
    }
    agg << "overall: " << (worst == kExitOk ? "PASS" : "FAIL") << "\n";
    summary = agg.str();
    return worst;
}

} // namespace lureobs
