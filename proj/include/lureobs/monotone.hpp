#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lureobs/linalg.hpp"

namespace lureobs {

/// A maximal monotone map on R given by a single-valued branch away from 0
/// plus the jump interval [jump_lo, jump_hi] at 0.  Covers relay and
/// dry-friction laws; the graph is the branch with the jump filled in.
struct ScalarMonotoneOp {
    std::function<double(double)> branch; // defined on R \ {0}
    double jump_lo = 0.0;
    double jump_hi = 0.0;
    std::string label;
};

/// Element of the graph at x with smallest magnitude (the slow-solution
/// convention for differential inclusions).
inline double min_norm_selection(const ScalarMonotoneOp& op, double x) {
    if (x != 0.0) return op.branch(x);
    if (op.jump_lo <= 0.0 && 0.0 <= op.jump_hi) return 0.0;
    return std::abs(op.jump_lo) <= std::abs(op.jump_hi) ? op.jump_lo : op.jump_hi;
}

/// Boundary-layer smoothing: the branch outside [-sigma, sigma], linear
/// interpolation across the layer.  Globally continuous and still monotone.
inline double regularized_selection(const ScalarMonotoneOp& op, double x, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("regularized_selection: sigma must be positive");
    if (std::abs(x) >= sigma) return op.branch(x);
    const double lo = op.branch(-sigma), hi = op.branch(sigma);
    return lo + (x + sigma) / (2.0 * sigma) * (hi - lo);
}

/// Resolvent x = (I + lambda*op)^{-1}(y): the unique x with
/// y in x + lambda*op(x).  The residual x + lambda*sel(x) - y is strictly
/// increasing, so bracketed bisection is unconditionally safe.
inline double resolvent(const ScalarMonotoneOp& op, double lambda, double y) {
    if (!(lambda > 0.0)) throw ParameterError("resolvent: lambda must be positive");
    if (lambda * op.jump_lo <= y && y <= lambda * op.jump_hi) return 0.0;

    const auto residual = [&](double x) { return x + lambda * op.branch(x) - y; };
    const double reach = std::max({std::abs(op.jump_lo), std::abs(op.jump_hi),
                                   std::abs(op.branch(std::abs(y) + 1.0)),
                                   std::abs(op.branch(-std::abs(y) - 1.0))});
    double lo = y - lambda * reach - 1.0;
    double hi = y + lambda * reach + 1.0;
    int doublings = 0;
    while (residual(lo) > 0.0) {
        lo -= (hi - lo);
        if (++doublings > 200)
            throw ConvergenceError("resolvent: bracket expansion failed (operator not monotone?)");
    }
    doublings = 0;
    while (residual(hi) < 0.0) {
        hi += (hi - lo);
        if (++doublings > 200)
            throw ConvergenceError("resolvent: bracket expansion failed (operator not monotone?)");
    }

    const double tol = 1e-12 * std::max(1.0, std::abs(y));
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double r = (mid == 0.0) ? (lambda * op.jump_hi - y) : residual(mid);
        if (std::abs(r) <= tol) return mid;
        if (r >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return mid;
}

/// branch(x) = sign(x) * (a|x| + b), jump interval [-b, b].
inline ScalarMonotoneOp relay_affine(double a, double b) {
    if (a < 0.0 || b < 0.0)
        throw ParameterError("relay_affine: negative slope or offset breaks monotonicity");
    ScalarMonotoneOp op;
    op.branch = [a, b](double x) { return std::copysign(1.0, x) * (a * std::abs(x) + b); };
    op.jump_lo = -b;
    op.jump_hi = b;
    op.label = "relay_affine";
    return op;
}

/// Stribeck-type friction torque: breakaway level plus two sigmoid terms with
/// rates w1, w2 and a viscous term.  Not monotone for every parameter set --
/// run monotonicity_probe before trusting it in a feedback loop.
inline ScalarMonotoneOp rotor_friction(double t_slip, double t1, double t2,
                                       double w1, double w2, double viscous) {
    ScalarMonotoneOp op;
    op.branch = [=](double x) {
        const double ax = std::abs(x);
        const double s1 = 1.0 - 2.0 / (1.0 + std::exp(std::min(w1 * ax, 700.0)));
        const double s2 = 1.0 - 2.0 / (1.0 + std::exp(std::min(w2 * ax, 700.0)));
        return (t_slip + t1 * s1 + t2 * s2) * std::copysign(1.0, x) + viscous * x;
    };
    op.jump_lo = -t_slip;
    op.jump_hi = t_slip;
    op.label = "rotor_friction";
    return op;
}

/// Loop transformation op'(x) = op(x) - m*x (jump unchanged).  Used to make a
/// non-monotone friction law monotone before closing the feedback loop.
inline ScalarMonotoneOp loop_transform(const ScalarMonotoneOp& op, double m) {
    ScalarMonotoneOp out;
    auto inner = op.branch;
    out.branch = [inner, m](double x) { return inner(x) - m * x; };
    out.jump_lo = op.jump_lo;
    out.jump_hi = op.jump_hi;
    out.label = op.label + (m == 0.0 ? "" : "+loop_transform");
    return out;
}

struct MonotonicityProbe {
    bool pass = false;
    double min_product = 0.0; // min over pairs of (sel(y)-sel(x))*(y-x)
    double worst_x = 0.0;
    double worst_y = 0.0;
};

/// Deterministic random pair test of the monotonicity inequality on
/// [lo, hi]; fails when some pair has (sel(y)-sel(x))(y-x) < -1e-9.
inline MonotonicityProbe monotonicity_probe(const ScalarMonotoneOp& op, double lo, double hi,
                                            std::size_t samples, std::uint64_t seed) {
    if (samples < 2) throw ParameterError("monotonicity_probe: need at least 2 samples");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> pick(lo, hi);
    MonotonicityProbe out;
    out.min_product = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = pick(gen), y = pick(gen);
        if (x == y) continue;
        const double p = (min_norm_selection(op, y) - min_norm_selection(op, x)) * (y - x);
        if (p < out.min_product) {
            out.min_product = p;
            out.worst_x = x;
            out.worst_y = y;
        }
    }
    out.pass = out.min_product >= -1e-9;
    return out;
}

/// Componentwise (diagonal) product of scalar operators for vector-valued
/// feedback channels.  Both worked examples have m = 1; the wrapper keeps the
/// interfaces uniform.
struct DiagonalMonotoneOp {
    std::vector<ScalarMonotoneOp> components;

    DiagonalMonotoneOp() = default;
    explicit DiagonalMonotoneOp(ScalarMonotoneOp single) { components.push_back(std::move(single)); }
    explicit DiagonalMonotoneOp(std::vector<ScalarMonotoneOp> comps) : components(std::move(comps)) {}

    std::size_t dimension() const { return components.size(); }

    Vector min_norm(const Vector& x) const {
        require(x);
        Vector r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = min_norm_selection(components[i], x[i]);
        return r;
    }

    Vector regularized(const Vector& x, double sigma) const {
        require(x);
        Vector r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = regularized_selection(components[i], x[i], sigma);
        return r;
    }

    const ScalarMonotoneOp& scalar() const {
        if (components.size() != 1)
            throw DimensionError("DiagonalMonotoneOp: scalar access on non-scalar operator");
        return components.front();
    }

private:
    void require(const Vector& x) const {
        if (x.size() != components.size())
            throw DimensionError("DiagonalMonotoneOp: argument dimension mismatch");
    }
};

// ---- set-valued Sign field on R^p ----

inline Vector sign_min_norm(const Vector& x) {
    const double n = norm(x);
    if (n == 0.0) return Vector(x.size(), 0.0);
    return scaled(x, 1.0 / n);
}

/// Sign with a boundary layer: x/||x|| outside, x/sigma inside.  Continuous,
/// and for p = 1 it matches the regularized unit relay.
inline Vector sign_regularized(const Vector& x, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("sign_regularized: sigma must be positive");
    const double n = norm(x);
    return scaled(x, 1.0 / std::max(n, sigma));
}

} // namespace lureobs
