#pragma once

#include <optional>

#include "lureobs/linalg.hpp"

namespace lureobs {

/// The stability matrix P(A-LF) + (A-LF)^T P + 2 L_f ||P|| I + 2 eps I whose
/// negative semidefiniteness certifies the observer error decay rate eps.
inline Matrix stability_inequality_matrix(const Matrix& A, const Matrix& F, const Matrix& P,
                                          const Matrix& L, double lipschitz_f, double eps) {
    const Matrix alf = A - L * F;
    Matrix m = P * alf + transpose(alf) * P;
    const double shift = 2.0 * lipschitz_f * spectral_norm(P) + 2.0 * eps;
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += shift;
    return m;
}

struct GainCertificate {
    bool p_positive_definite = false;
    double p_min_eigenvalue = 0.0;
    bool ineq_ok = false;        // stability matrix inequality at the given eps
    double witness_eig = 0.0;    // largest eigenvalue of the stability matrix
    bool range_ok = false;       // output matching B^T P = C - K F
    double range_residual = 0.0; // max-abs entry of B^T P - (C - K F)
    bool symmetrized = false;    // P or the stability matrix needed symmetrizing
};

/// Certify a candidate (P, L, K, eps): P positive definite, the stability
/// matrix inequality, and the output-matching equality, each at tolerance tol.
inline GainCertificate certify_gains(const Matrix& A, const Matrix& F, const Matrix& B,
                                     const Matrix& C, const Matrix& P, const Matrix& L,
                                     const Matrix& K, double lipschitz_f, double eps,
                                     double tol) {
    GainCertificate rep;
    const SymEigen peig = sym_eigen(P, 1e-6);
    rep.symmetrized = peig.symmetrized;
    rep.p_min_eigenvalue = peig.values.front();
    rep.p_positive_definite = peig.values.front() > 0.0;
    if (!rep.p_positive_definite) return rep; // fail fast; nothing below is meaningful

    const Matrix m = stability_inequality_matrix(A, F, P, L, lipschitz_f, eps);
    const DefinitenessVerdict v = is_negative_semidefinite(m, tol);
    rep.ineq_ok = v.ok;
    rep.witness_eig = v.witness;
    rep.symmetrized = rep.symmetrized || v.symmetrized;

    const Matrix residual = transpose(B) * P - (C - K * F);
    rep.range_residual = max_abs(residual);
    rep.range_ok = rep.range_residual <= tol;
    return rep;
}

/// Largest eps for which the stability inequality can hold with the given
/// gains: eps* = -lambda_max(P(A-LF)+(A-LF)^T P + 2 L_f ||P|| I) / 2.
/// Nonpositive return means no admissible margin exists.
inline double max_admissible_eps(const Matrix& A, const Matrix& F, const Matrix& P,
                                 const Matrix& L, double lipschitz_f) {
    const Matrix m = stability_inequality_matrix(A, F, P, L, lipschitz_f, 0.0);
    return -sym_eigenvalues(m, 1e-6).back() / 2.0;
}

struct BlockCertificate {
    bool ok = false;
    double witness_eig = 0.0;
};

/// Dissipativity block condition behind the L2 error-to-uncertainty gain mu:
///   [ Omega   -P          ]
///   [ -P      -2 mu eps I ]  <= 0
/// with Omega the stability matrix at eps.
inline BlockCertificate certify_l2_gain(const Matrix& A, const Matrix& F, const Matrix& P,
                                        const Matrix& L, double lipschitz_f, double eps,
                                        double mu, double tol) {
    if (!(eps > 0.0)) throw ParameterError("certify_l2_gain: eps must be positive");
    if (!(mu > 0.0)) throw ParameterError("certify_l2_gain: mu must be positive");
    const Matrix omega = stability_inequality_matrix(A, F, P, L, lipschitz_f, eps);
    const std::size_t n = omega.rows();
    if (P.rows() != n || P.cols() != n) throw DimensionError("certify_l2_gain: P shape mismatch");
    Matrix blk(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            blk(i, j) = omega(i, j);
            blk(i, n + j) = -P(i, j);
            blk(n + i, j) = -P(i, j);
            blk(n + i, n + j) = (i == j) ? -2.0 * mu * eps : 0.0;
        }
    const DefinitenessVerdict v = is_negative_semidefinite(blk, tol);
    return {v.ok, v.witness};
}

/// mu rule: when Omega <= -2 eps I one may take mu > ||P||^2 / (4 eps^2).
/// Returns nothing when the premise fails.
inline std::optional<double> suggest_mu(const Matrix& P, double eps, const Matrix& omega) {
    if (!(eps > 0.0)) throw ParameterError("suggest_mu: eps must be positive");
    const double lam_max = sym_eigenvalues(omega, 1e-6).back();
    if (lam_max > -2.0 * eps) return std::nullopt;
    const double np = spectral_norm(P);
    return np * np / (4.0 * eps * eps) * (1.0 + 1e-3);
}

} // namespace lureobs
