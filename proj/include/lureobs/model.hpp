#pragma once

#include <functional>
#include <string>

#include "lureobs/linalg.hpp"
#include "lureobs/monotone.hpp"

namespace lureobs {

/// Plant: xdot = A x + B w + f(x, u, t) + xi(t, x),  w in -op(C x),  y = F x.
struct LureSystem {
    Matrix A; // n x n
    Matrix B; // n x m
    Matrix C; // m x n
    Matrix F; // p x n
    std::function<Vector(const Vector& x, const Vector& u, double t)> f;
    DiagonalMonotoneOp op;                               // m components
    std::function<Vector(double t, const Vector& x)> xi; // uncertainty
    std::function<Vector(double t)> u;                   // input signal
    double lipschitz_f = 0.0;

    std::size_t n() const { return A.rows(); }
    std::size_t m() const { return B.cols(); }
    std::size_t p() const { return F.rows(); }
};

inline void validate(const LureSystem& sys) {
    const std::size_t n = sys.A.rows(), m = sys.B.cols();
    if (!sys.A.square()) throw DimensionError("A: must be square");
    if (sys.B.rows() != n) throw DimensionError("B: row count must match A");
    if (sys.C.rows() != m || sys.C.cols() != n)
        throw DimensionError("C: shape must be m x n (transposed feedback of B)");
    if (sys.F.cols() != n) throw DimensionError("F: column count must match A");
    if (sys.op.dimension() != m) throw DimensionError("operator: component count must match B columns");
    if (sys.lipschitz_f < 0.0) throw ParameterError("lipschitz_f: must be nonnegative");
    // F needs full row rank p for the uncertainty projection
    const auto gram_eigs = sym_eigenvalues(sys.F * transpose(sys.F), 1e-9);
    if (gram_eigs.front() <= 1e-12 * std::max(1.0, gram_eigs.back()))
        throw SingularMatrixError("F: rows are rank deficient; output map cannot span the observation subspace");
}

/// Observer gains and bound functions.  kappa1/kappa2 must dominate the
/// projected/residual uncertainty magnitudes on the horizon; kappa3 is the
/// output-error squashing gain.
struct ObserverConfig {
    Matrix P; // n x n symmetric positive definite
    Matrix L; // n x p
    Matrix K; // m x p
    double eps = 0.0;
    std::function<double(double)> kappa1;
    std::function<double(double)> kappa2;
    std::function<double(double)> kappa3;
    double delta = 1e-3;
    double sigma_obs = 1e-3;
};

/// Observation-subspace basis P^{-1} F^T (n x p).
inline Matrix injection_basis(const Matrix& P, const Matrix& F) {
    return solve(P, transpose(F));
}

enum class SelectionMode { MinNorm, Regularized };

inline Vector select(const DiagonalMonotoneOp& op, const Vector& arg, SelectionMode mode, double sigma) {
    return mode == SelectionMode::MinNorm ? op.min_norm(arg) : op.regularized(arg, sigma);
}

struct RhsResult {
    Vector dx;
    Vector omega; // the selection actually used (already negated into B omega)
};

inline RhsResult plant_rhs(const LureSystem& sys, const Vector& x, double t,
                           SelectionMode mode = SelectionMode::MinNorm, double sigma = 1e-3) {
    if (x.size() != sys.n()) throw DimensionError("plant_rhs: state dimension mismatch");
    const Vector omega = scaled(select(sys.op, sys.C * x, mode, sigma), -1.0);
    Vector dx = sys.A * x;
    dx = add(dx, sys.B * omega);
    dx = add(dx, sys.f(x, sys.u(t), t));
    dx = add(dx, sys.xi(t, x));
    return {dx, omega};
}

/// Right-hand side of the sliding-mode observer:
///   xhat_dot = A xhat + B omega_hat - L e_y + f(xhat, u, t)
///              - P^{-1}F^T ( kappa1 Sign(e_y) + kappa3 e_y / (||e_y||^2 + delta) )
/// with e_y = F xhat - y and omega_hat in -op(C xhat - K e_y).
/// Sign is regularized over the layer obs.sigma_obs.
inline RhsResult observer_rhs(const LureSystem& sys, const ObserverConfig& obs,
                              const Vector& xhat, const Vector& y, double t,
                              SelectionMode mode = SelectionMode::MinNorm,
                              double sigma_plant = 1e-3,
                              const Matrix* basis_cache = nullptr) {
    if (xhat.size() != sys.n()) throw DimensionError("observer_rhs: state dimension mismatch");
    if (y.size() != sys.p()) throw DimensionError("observer_rhs: output dimension mismatch");

    const Vector ey = sub(sys.F * xhat, y);
    const Vector arg = sub(sys.C * xhat, obs.K * ey);
    const Vector omega_hat = scaled(select(sys.op, arg, mode, sigma_plant), -1.0);

    const Matrix basis = basis_cache ? *basis_cache : injection_basis(obs.P, sys.F);
    const double ey2 = dot(ey, ey);
    Vector inj = scaled(sign_regularized(ey, obs.sigma_obs), obs.kappa1(t));
    add_scaled_inplace(inj, obs.kappa3(t) / (ey2 + obs.delta), ey);

    Vector dx = sys.A * xhat;
    dx = add(dx, sys.B * omega_hat);
    dx = sub(dx, obs.L * ey);
    dx = add(dx, sys.f(xhat, sys.u(t), t));
    dx = sub(dx, basis * inj);
    return {dx, omega_hat};
}

/// Split of an uncertainty sample against the observation subspace:
/// xi = basis * xi1 + xi2 with basis = P^{-1} F^T and F P^{-1} xi2 = 0.
struct UncertaintySplit {
    Matrix basis;
    Vector xi1; // coefficients, length p
    Vector xi2; // residual, length n
};

inline UncertaintySplit decompose_uncertainty(const Matrix& P, const Matrix& F, const Vector& xi_sample) {
    UncertaintySplit out;
    out.basis = injection_basis(P, F);
    out.xi1 = least_squares_coeffs(out.basis, xi_sample);
    out.xi2 = sub(xi_sample, out.basis * out.xi1);
    return out;
}

/// Tuning rule kappa3(t) > (||P|| kappa2(t) + rho)^2 / (2 eps); the tiny
/// inflation keeps the inequality strict.
inline std::function<double(double)> kappa3_rule(double rho, double eps, const Matrix& P,
                                                 std::function<double(double)> kappa2) {
    if (!(rho > 0.0)) throw ParameterError("kappa3_rule: rho must be positive");
    if (!(eps > 0.0)) throw ParameterError("kappa3_rule: eps must be positive");
    const double np = spectral_norm(P);
    return [np, rho, eps, kappa2 = std::move(kappa2)](double t) {
        const double s = np * kappa2(t) + rho;
        return s * s / (2.0 * eps) * (1.0 + 1e-6);
    };
}

} // namespace lureobs
