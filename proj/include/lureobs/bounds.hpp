#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "lureobs/linalg.hpp"
#include "lureobs/sim.hpp"

namespace lureobs {

struct GronwallReport {
    bool ok = false;
    double worst_excess = 0.0; // max over samples of w^{1-alpha} - allowed rhs
    std::size_t worst_index = 0;
};

/// Comparison-lemma check: for w satisfying
///   (1-alpha) w' <= a(t) w + b(t) w^alpha,   0 <= alpha < 1,
/// the sampled w must obey
///   w^{1-alpha}(t) <= w^{1-alpha}(0) exp(int_0^t a) + int_0^t exp(int_s^t a) b(s) ds.
/// The right-hand side is accumulated by the trapezoid-consistent recurrence
///   I_{k+1} = I_k e^{dA} + dt/2 (b_{k+1} + e^{dA} b_k),
/// which avoids forming exp(-int_0^s a) explicitly (no overflow for decaying a).
inline GronwallReport gronwall_check(const std::vector<double>& w, const std::vector<double>& a,
                                     const std::vector<double>& b, double alpha, double dt,
                                     double tol = 1e-9, double abs_slack = 0.0) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("gronwall_check: alpha must be in [0,1)");
    if (w.size() != a.size() || w.size() != b.size() || w.empty())
        throw DimensionError("gronwall_check: series length mismatch");
    const double q = 1.0 - alpha;

    GronwallReport rep;
    double lead = std::pow(std::max(0.0, w[0]), q);
    double integral = 0.0;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (k > 0) {
            const double ea = std::exp(0.5 * (a[k - 1] + a[k]) * dt);
            integral = integral * ea + 0.5 * dt * (b[k] + ea * b[k - 1]);
            lead *= ea;
        }
        const double rhs = lead + integral;
        const double excess = std::pow(std::max(0.0, w[k]), q) - rhs * (1.0 + tol) - abs_slack;
        if (excess > rep.worst_excess) {
            rep.worst_excess = excess;
            rep.worst_index = k;
        }
    }
    rep.ok = rep.worst_excess <= 0.0;
    return rep;
}

/// Envelope on sqrt(V):
///   sqrt(V0) e^{-eps t / lmax} + (||P||/sqrt(lmin)) int_0^t e^{eps(s-t)/lmax} kappa2(s) ds,
/// quadrature by composite trapezoid on the grid, exponential prefactor exact.
inline std::vector<double> envelope_total(double V0, double eps, const Matrix& P,
                                          const std::function<double(double)>& kappa2,
                                          const std::vector<double>& times) {
    const auto ev = sym_eigenvalues(P, 1e-6);
    const double lmin = ev.front(), lmax = ev.back();
    if (!(lmin > 0.0)) throw ParameterError("envelope_total: P must be positive definite");
    const double np = spectral_norm(P);

    std::vector<double> env(times.size());
    if (times.empty()) return env;
    const double head = std::sqrt(std::max(0.0, V0));
    env[0] = head;
    double integral = 0.0;
    double g_prev = np / std::sqrt(lmin) * kappa2(times[0]);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double h = times[k] - times[k - 1];
        const double rho = std::exp(-eps * h / lmax);
        const double g = np / std::sqrt(lmin) * kappa2(times[k]);
        integral = integral * rho + 0.5 * h * (g + rho * g_prev);
        env[k] = head * std::exp(-eps * times[k] / lmax) + integral;
        g_prev = g;
    }
    return env;
}

struct CaseAEnvelope {
    std::vector<double> values; // closed-form bound on ||e(t)||
    double omega_hi = 0.0;      // attractive interval [0, k ||P|| / eps]
};

/// Constant-bound case kappa2 <= k: closed-form bound on ||e(t)|| plus the
/// attractive set upper end.
inline CaseAEnvelope envelope_case_a(double V0, double eps, double k, const Matrix& P,
                                     const std::vector<double>& times) {
    if (k < 0.0) throw ParameterError("envelope_case_a: k must be nonnegative");
    const auto ev = sym_eigenvalues(P, 1e-6);
    const double lmin = ev.front(), lmax = ev.back();
    if (!(lmin > 0.0)) throw ParameterError("envelope_case_a: P must be positive definite");
    const double np = spectral_norm(P);

    CaseAEnvelope out;
    const double steady = lmax * np * k / (lmin * eps);
    const double head = std::sqrt(std::max(0.0, V0) / lmin);
    out.values.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        out.values[i] = steady + std::exp(-eps * times[i] / lmax) * (head - steady);
    out.omega_hi = k * np / eps;
    return out;
}

/// Exponentially decaying bound kappa2 <= k e^{-a t}: closed-form envelope on
/// sqrt(V).  Near the resonant rate eps = a lmax the limiting t e^{-a t} form
/// is used.
inline std::vector<double> envelope_case_c(double V0, double eps, double k, double a,
                                           const Matrix& P, const std::vector<double>& times) {
    if (k < 0.0 || !(a > 0.0))
        throw ParameterError("envelope_case_c: k must be nonnegative and a positive");
    const auto ev = sym_eigenvalues(P, 1e-6);
    const double lmin = ev.front(), lmax = ev.back();
    if (!(lmin > 0.0)) throw ParameterError("envelope_case_c: P must be positive definite");
    const double np = spectral_norm(P);
    const double head = std::sqrt(std::max(0.0, V0));

    std::vector<double> env(times.size());
    if (std::abs(eps - a * lmax) < 1e-9) {
        const double coef = np * k / std::sqrt(lmin);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            env[i] = head * std::exp(-eps * t / lmax) + coef * t * std::exp(-a * t);
        }
    } else {
        const double coef = lmax * np * k / (std::sqrt(lmin) * (eps - a * lmax));
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            env[i] = head * std::exp(-eps * t / lmax) +
                     coef * (std::exp(-a * t) - std::exp(-eps * t / lmax));
        }
    }
    return env;
}

/// Square-integrable case: per-sample bound on sqrt(V) built from the running
/// integral of kappa2^2 (supplied on the same grid).
inline std::vector<double> envelope_case_d(double V0, double eps, const Matrix& P,
                                           const std::vector<double>& kappa2_sq_running,
                                           const std::vector<double>& times) {
    if (kappa2_sq_running.size() != times.size())
        throw DimensionError("envelope_case_d: running integral grid mismatch");
    const auto ev = sym_eigenvalues(P, 1e-6);
    const double lmin = ev.front(), lmax = ev.back();
    if (!(lmin > 0.0)) throw ParameterError("envelope_case_d: P must be positive definite");
    const double np = spectral_norm(P);
    const double head = std::sqrt(std::max(0.0, V0));

    std::vector<double> env(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double window = lmax / (2.0 * eps) * (1.0 - std::exp(-2.0 * eps * t / lmax));
        env[i] = head * std::exp(-eps * t / lmax) +
                 np / std::sqrt(lmin) * std::sqrt(std::max(0.0, kappa2_sq_running[i])) *
                     std::sqrt(std::max(0.0, window));
    }
    return env;
}

struct EnvelopeSet {
    std::vector<double> total;
    std::vector<double> case_a;
    std::optional<std::vector<double>> case_c;
    std::optional<std::vector<double>> case_d;
    double omega_hi = 0.0;
    std::optional<double> omega_prime_hi;
};

struct DominanceReport {
    bool ok = false;
    double worst_excess = 0.0;     // max of sqrtV - (1+eta) env - slack
    double worst_raw_excess = 0.0; // max of max(0, sqrtV - env); shrinks with dt, sigma
};

/// Discrete envelope-dominance verdict with the documented regularization
/// slack: sqrt(V_k) <= (1+eta) env_k + slack at every sample.
inline DominanceReport check_envelope_dominance(const std::vector<double>& sqrtV,
                                                const std::vector<double>& envelope, double eta,
                                                double slack_abs) {
    if (sqrtV.size() != envelope.size() || sqrtV.empty())
        throw DimensionError("check_envelope_dominance: series length mismatch");
    DominanceReport rep;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    rep.worst_raw_excess = 0.0;
    for (std::size_t k = 0; k < sqrtV.size(); ++k) {
        rep.worst_excess = std::max(rep.worst_excess, sqrtV[k] - (1.0 + eta) * envelope[k] - slack_abs);
        rep.worst_raw_excess = std::max(rep.worst_raw_excess, sqrtV[k] - envelope[k]);
    }
    rep.worst_raw_excess = std::max(0.0, rep.worst_raw_excess);
    rep.ok = rep.worst_excess <= 0.0;
    return rep;
}

struct CaptureReport {
    bool captured = false;
    double t_star = 0.0;    // first time after which the norm never leaves
    double max_after = 0.0; // sup of the norm on [t_star, t_end]
    double threshold = 0.0;
};

/// Finite-time capture: the first sample index after the last excursion above
/// the threshold, i.e. "enters and remains".
inline CaptureReport attractive_set_capture(const std::vector<double>& times,
                                            const std::vector<double>& norm_e, double threshold) {
    if (times.size() != norm_e.size() || times.empty())
        throw DimensionError("attractive_set_capture: series length mismatch");
    CaptureReport rep;
    rep.threshold = threshold;
    std::size_t idx = 0;
    for (std::size_t k = norm_e.size(); k-- > 0;) {
        if (norm_e[k] > threshold) {
            idx = k + 1;
            break;
        }
    }
    if (idx >= times.size()) {
        rep.captured = false;
        rep.t_star = times.back();
        rep.max_after = norm_e.back();
        return rep;
    }
    rep.captured = true;
    rep.t_star = times[idx];
    rep.max_after = 0.0;
    for (std::size_t k = idx; k < norm_e.size(); ++k) rep.max_after = std::max(rep.max_after, norm_e[k]);
    return rep;
}

struct TimeInstantReport {
    bool ok = false;
    double min_margin = 0.0; // min over samples of rhs - ||e||
    double mu = 0.0;
    double mu_tight = 0.0; // the sharper lambda_min placement, reported alongside
};

/// Per-time-instant error bound ||e(t)|| <= gamma(t) + mu sqrt(int_0^t ||xi||^2)
/// with gamma(t) = sqrt(V0/lmin) e^{-eps t/lmax} and
/// mu = ||P|| / lmin^{3/2} * sqrt(lmax / (2 eps)).
/// xi_norm_sq carries ||xi(t_k)||^2 on the trajectory grid.
inline TimeInstantReport check_T_observer(const Trajectory& traj,
                                          const std::vector<double>& xi_norm_sq, const Matrix& P,
                                          double eps, double slack = 0.0) {
    if (xi_norm_sq.size() != traj.size() || traj.size() == 0)
        throw DimensionError("check_T_observer: uncertainty grid mismatch");
    const auto ev = sym_eigenvalues(P, 1e-6);
    const double lmin = ev.front(), lmax = ev.back();
    if (!(lmin > 0.0)) throw ParameterError("check_T_observer: P must be positive definite");
    const double np = spectral_norm(P);

    TimeInstantReport rep;
    rep.mu = np / (lmin * std::sqrt(lmin)) * std::sqrt(lmax / (2.0 * eps));
    rep.mu_tight = np / lmin * std::sqrt(lmax / (2.0 * eps));
    const double head = std::sqrt(std::max(0.0, traj.V.front()) / lmin);

    double running = 0.0;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (k > 0) {
            const double h = traj.times[k] - traj.times[k - 1];
            running += 0.5 * h * (xi_norm_sq[k] + xi_norm_sq[k - 1]);
        }
        const double gamma = head * std::exp(-eps * traj.times[k] / lmax);
        const double rhs = (gamma + rep.mu * std::sqrt(running)) * (1.0 + slack);
        rep.min_margin = std::min(rep.min_margin, rhs - traj.norm_e[k]);
    }
    rep.ok = rep.min_margin >= 0.0;
    return rep;
}

struct L2GainReport {
    bool ok = false;
    double lhs_sq = 0.0; // int_0^T ||e||^2
    double rhs_sq = 0.0; // V(0)/(2 eps) + mu int_0^T ||xi||^2
    double lhs_unsquared = 0.0;
    double rhs_unsquared = 0.0;
    double mu = 0.0;
};

/// Integrated L2 gain inequality in the squared form the dissipation argument
/// actually yields:
///   int_0^T ||e||^2 <= V(0)/(2 eps) + mu int_0^T ||xi||^2.
/// The unsquared form ||e||_{L2} <= V(0)/(2 eps) + mu ||xi||_{L2} is evaluated
/// for reference only; the squared form is the verdict.
inline L2GainReport check_strong_hinf(const Trajectory& traj, const std::vector<double>& xi_norm_sq,
                                      const Matrix& P, double eps, double mu, double t_end) {
    if (xi_norm_sq.size() != traj.size() || traj.size() == 0)
        throw DimensionError("check_strong_hinf: uncertainty grid mismatch");
    (void)P;
    L2GainReport rep;
    rep.mu = mu;
    double e2 = 0.0, x2 = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        if (traj.times[k] > t_end + 1e-12) break;
        const double h = traj.times[k] - traj.times[k - 1];
        e2 += 0.5 * h * (traj.norm_e[k] * traj.norm_e[k] + traj.norm_e[k - 1] * traj.norm_e[k - 1]);
        x2 += 0.5 * h * (xi_norm_sq[k] + xi_norm_sq[k - 1]);
    }
    const double v0 = traj.V.front();
    rep.lhs_sq = e2;
    rep.rhs_sq = v0 / (2.0 * eps) + mu * x2;
    rep.lhs_unsquared = std::sqrt(e2);
    rep.rhs_unsquared = v0 / (2.0 * eps) + mu * std::sqrt(x2);
    rep.ok = rep.lhs_sq <= rep.rhs_sq;
    return rep;
}

} // namespace lureobs
