#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lureobs/model.hpp"

namespace lureobs {

enum class Method {
    ExplicitRk4Regularized,    // RK4 with boundary-layer selections everywhere
    SemiImplicitEulerResolvent // B*omega advanced through the operator resolvent
};

inline const char* method_name(Method m) {
    return m == Method::ExplicitRk4Regularized ? "explicit-rk4-regularized"
                                               : "semi-implicit-euler-resolvent";
}

struct SchemeConfig {
    Method method = Method::ExplicitRk4Regularized;
    double dt = 1e-4;
    double t_end = 20.0;
    double sigma_plant = 1e-3; // feedback-operator layer
    double sigma_obs = 1e-3;   // Sign layer in the injection
};

inline void validate(const SchemeConfig& s) {
    if (!(s.dt > 0.0)) throw ParameterError("scheme: dt must be positive");
    if (!(s.t_end >= s.dt)) throw ParameterError("scheme: t_end must be at least dt");
    if (!(s.sigma_plant > 0.0) || !(s.sigma_obs > 0.0))
        throw ParameterError("scheme: boundary layers must be positive");
}

/// Co-simulated plant/observer sample paths.  e = xhat - x, ey = F e,
/// V = <P e, e>.  omega / omega_hat record the selections applied when
/// leaving each sample, so the monotonicity of the feedback pair can be
/// audited afterwards.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> x, xhat;
    std::vector<Vector> omega, omega_hat;
    std::vector<Vector> e, ey;
    std::vector<double> V, norm_e;

    std::size_t size() const { return times.size(); }
};

namespace detail {

struct CoupledModel {
    const LureSystem& sys;
    const ObserverConfig& obs;
    Matrix basis; // P^{-1} F^T, computed once
    double sigma_plant, sigma_obs;

    CoupledModel(const LureSystem& s, const ObserverConfig& o, double sp, double so)
        : sys(s), obs(o), basis(injection_basis(o.P, s.F)), sigma_plant(sp), sigma_obs(so) {}

    // regularized plant field
    Vector fx(double t, const Vector& x, Vector& omega_out) const {
        omega_out = scaled(sys.op.regularized(sys.C * x, sigma_plant), -1.0);
        Vector dx = sys.A * x;
        dx = add(dx, sys.B * omega_out);
        dx = add(dx, sys.f(x, sys.u(t), t));
        dx = add(dx, sys.xi(t, x));
        return dx;
    }

    // regularized observer field, measurement taken from the plant state
    Vector fxh(double t, const Vector& xhat, const Vector& x, Vector& omega_out) const {
        const Vector ey = sys.F * sub(xhat, x);
        const Vector arg = sub(sys.C * xhat, obs.K * ey);
        omega_out = scaled(sys.op.regularized(arg, sigma_plant), -1.0);
        Vector inj = scaled(sign_regularized(ey, sigma_obs), obs.kappa1(t));
        add_scaled_inplace(inj, obs.kappa3(t) / (dot(ey, ey) + obs.delta), ey);
        Vector dx = sys.A * xhat;
        dx = add(dx, sys.B * omega_out);
        dx = sub(dx, obs.L * ey);
        dx = add(dx, sys.f(xhat, sys.u(t), t));
        dx = sub(dx, basis * inj);
        return dx;
    }
};

} // namespace detail

/// Fixed-step co-simulation of plant and observer on t_k = k dt,
/// k = 0..floor(t_end/dt).  Divergence (non-finite state) raises with the
/// first bad step.
inline Trajectory integrate_coupled(const LureSystem& sys, const ObserverConfig& obs,
                                    const Vector& x0, const Vector& xhat0,
                                    const SchemeConfig& scheme) {
    validate(sys);
    validate(scheme);
    if (x0.size() != sys.n() || xhat0.size() != sys.n())
        throw DimensionError("integrate_coupled: initial state dimension mismatch");

    const std::size_t steps = static_cast<std::size_t>(std::floor(scheme.t_end / scheme.dt));
    const double dt = scheme.dt;
    const detail::CoupledModel model(sys, obs, scheme.sigma_plant, scheme.sigma_obs);

    // resolvent reduction constants for the semi-implicit scheme (m = 1 only)
    double cb = 0.0, ckfb = 0.0;
    if (scheme.method == Method::SemiImplicitEulerResolvent) {
        if (sys.m() != 1)
            throw ParameterError("semi-implicit scheme: only a scalar feedback channel is supported");
        cb = (sys.C * sys.B)(0, 0);
        ckfb = ((sys.C - obs.K * sys.F) * sys.B)(0, 0);
        if (!(cb > 0.0) || !(ckfb > 0.0))
            throw ParameterError("semi-implicit scheme: C*B and (C-KF)*B must be positive");
    }

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.x.reserve(steps + 1);
    traj.xhat.reserve(steps + 1);

    Vector x = x0, xhat = xhat0;
    Vector om, omh;

    const auto record = [&](double t, const Vector& xs, const Vector& xh, const Vector& o,
                            const Vector& oh) {
        traj.times.push_back(t);
        traj.x.push_back(xs);
        traj.xhat.push_back(xh);
        traj.omega.push_back(o);
        traj.omega_hat.push_back(oh);
        const Vector e = sub(xh, xs);
        traj.e.push_back(e);
        traj.ey.push_back(sys.F * e);
        traj.V.push_back(dot(obs.P * e, e));
        traj.norm_e.push_back(norm(e));
    };

    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (!all_finite(x) || !all_finite(xhat))
            throw DivergenceError("integrate_coupled: state diverged", k, t);

        if (scheme.method == Method::ExplicitRk4Regularized) {
            Vector o1, oh1, od, ohd;
            const Vector k1x = model.fx(t, x, o1);
            const Vector k1h = model.fxh(t, xhat, x, oh1);
            record(t, x, xhat, o1, oh1);
            if (k == steps) break;

            const Vector k2x = model.fx(t + dt / 2, axpy(x, dt / 2, k1x), od);
            const Vector k2h = model.fxh(t + dt / 2, axpy(xhat, dt / 2, k1h), axpy(x, dt / 2, k1x), ohd);
            const Vector k3x = model.fx(t + dt / 2, axpy(x, dt / 2, k2x), od);
            const Vector k3h = model.fxh(t + dt / 2, axpy(xhat, dt / 2, k2h), axpy(x, dt / 2, k2x), ohd);
            const Vector k4x = model.fx(t + dt, axpy(x, dt, k3x), od);
            const Vector k4h = model.fxh(t + dt, axpy(xhat, dt, k3h), axpy(x, dt, k3x), ohd);

            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += dt / 6.0 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
                xhat[i] += dt / 6.0 * (k1h[i] + 2 * k2h[i] + 2 * k3h[i] + k4h[i]);
            }
        } else {
            // record the implicit selections of the step we are about to take
            const ScalarMonotoneOp& op = sys.op.scalar();

            // plant: x+ = x_expl + dt B omega, omega in -F(C x+)
            Vector x_expl = axpy(x, dt, sys.A * x);
            x_expl = add(x_expl, scaled(sys.f(x, sys.u(t), t), dt));
            x_expl = add(x_expl, scaled(sys.xi(t, x), dt));
            const double cx_expl = dot(sys.C.entries(), x_expl);
            const double s = resolvent(op, dt * cb, cx_expl);
            const double omega = -(cx_expl - s) / (dt * cb);
            Vector bcol(sys.n());
            for (std::size_t i = 0; i < sys.n(); ++i) bcol[i] = sys.B(i, 0);
            const Vector x1 = axpy(x_expl, dt * omega, bcol);

            // observer: explicit part with the current output error,
            // implicit feedback through the matched resolvent
            const Vector ey = sys.F * sub(xhat, x);
            Vector inj = scaled(sign_regularized(ey, scheme.sigma_obs), obs.kappa1(t));
            add_scaled_inplace(inj, obs.kappa3(t) / (dot(ey, ey) + obs.delta), ey);
            Vector xh_expl = axpy(xhat, dt, sys.A * xhat);
            xh_expl = sub(xh_expl, scaled(obs.L * ey, dt));
            xh_expl = add(xh_expl, scaled(sys.f(xhat, sys.u(t), t), dt));
            xh_expl = sub(xh_expl, scaled(model.basis * inj, dt));

            const Vector y1 = sys.F * x1;
            const Matrix ckf = sys.C - obs.K * sys.F;
            const double g = dot(ckf.entries(), xh_expl) + (obs.K * y1)[0];
            const double s2 = resolvent(op, dt * ckfb, g);
            const double omega_hat = -(g - s2) / (dt * ckfb);
            const Vector xh1 = axpy(xh_expl, dt * omega_hat, bcol);

            record(t, x, xhat, {omega}, {omega_hat});
            if (k == steps) break;
            x = x1;
            xhat = xh1;
        }
    }
    return traj;
}

struct ErrorSeries {
    std::vector<double> sqrtV, norm_e, norm_ey;
};

inline ErrorSeries error_series(const Trajectory& traj, const Matrix& P) {
    if (traj.size() == 0) throw ParameterError("error_series: empty trajectory");
    ErrorSeries out;
    out.sqrtV.reserve(traj.size());
    out.norm_e.reserve(traj.size());
    out.norm_ey.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Vector& e = traj.e[k];
        out.sqrtV.push_back(std::sqrt(std::max(0.0, dot(P * e, e))));
        out.norm_e.push_back(norm(e));
        out.norm_ey.push_back(norm(traj.ey[k]));
    }
    return out;
}

/// Trapezoidal approximation of the L2 norm sqrt(int_0^t_end v(t)^2 dt) of a
/// uniformly sampled scalar series.
inline double l2_norm(const std::vector<double>& values, double dt, double t_end) {
    if (values.empty()) return 0.0;
    std::size_t last = values.size() - 1;
    const auto wanted = static_cast<std::size_t>(std::floor(t_end / dt));
    last = std::min(last, wanted);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 <= last; ++k)
        acc += 0.5 * dt * (values[k] * values[k] + values[k + 1] * values[k + 1]);
    return std::sqrt(acc);
}

} // namespace lureobs
