#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "lureobs/errors.hpp"

namespace lureobs {

using Vector = std::vector<double>;

/// Dense row-major matrix. Sized for small state dimensions (n <~ 10),
/// so everything below is O(n^3) direct arithmetic without blocking.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        a_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw DimensionError("Matrix: ragged initializer rows");
            for (double v : row) a_.push_back(v);
        }
        check_finite();
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), a_(std::move(entries)) {
        if (a_.size() != rows_ * cols_)
            throw DimensionError("Matrix: entry count does not match rows*cols");
        check_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix column(const Vector& v) {
        Matrix m(v.size(), 1);
        for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
        return m;
    }

    static Matrix row(const Vector& v) {
        Matrix m(1, v.size());
        for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }
    bool empty() const { return a_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<double>& entries() const { return a_; }

    friend bool operator==(const Matrix& x, const Matrix& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
    }

private:
    void check_finite() const {
        for (double v : a_)
            if (!std::isfinite(v))
                throw ParameterError("Matrix: non-finite entry");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline Matrix operator+(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("matrix add: shape mismatch");
    Matrix r(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r(i, j) = x(i, j) + y(i, j);
    return r;
}

inline Matrix operator-(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("matrix sub: shape mismatch");
    Matrix r(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r(i, j) = x(i, j) - y(i, j);
    return r;
}

inline Matrix operator*(double s, const Matrix& m) {
    Matrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = s * m(i, j);
    return r;
}

inline Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.rows())
        throw DimensionError("matrix multiply: inner dimensions differ");
    Matrix r(x.rows(), y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double xik = x(i, k);
            for (std::size_t j = 0; j < y.cols(); ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

inline Vector operator*(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size())
        throw DimensionError("matrix-vector multiply: dimension mismatch");
    Vector r(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r[i] += m(i, j) * v[j];
    return r;
}

// ---- vector helpers ----

inline double dot(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm(const Vector& x) { return std::sqrt(dot(x, x)); }

inline Vector add(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DimensionError("add: length mismatch");
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

inline Vector sub(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DimensionError("sub: length mismatch");
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

inline Vector scaled(const Vector& x, double s) {
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = s * x[i];
    return r;
}

/// y + s*x without allocating twice in hot loops.
inline Vector axpy(const Vector& y, double s, const Vector& x) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    Vector r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] + s * x[i];
    return r;
}

inline void add_scaled_inplace(Vector& y, double s, const Vector& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

inline bool all_finite(const Vector& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---- norms ----

inline double max_abs(const Matrix& m) {
    double r = 0.0;
    for (double v : m.entries()) r = std::max(r, std::abs(v));
    return r;
}

inline double frobenius(const Matrix& m) {
    double s = 0.0;
    for (double v : m.entries()) s += v * v;
    return std::sqrt(s);
}

inline double trace(const Matrix& m) {
    if (!m.square()) throw DimensionError("trace: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
    return s;
}

// ---- symmetric eigenproblem (cyclic Jacobi) ----

struct SymEigen {
    std::vector<double> values; // ascending
    Matrix vectors;             // column k pairs with values[k]
    bool symmetrized = false;   // input exceeded the symmetry tolerance
};

/// Eigen-decomposition of a (nearly) symmetric matrix by cyclic Jacobi
/// rotations.  Asymmetric inputs are replaced by (M + M^T)/2 and flagged;
/// published gain matrices are often rounded and fail exact symmetry.
inline SymEigen sym_eigen(const Matrix& m, double tol = 1e-9) {
    if (!m.square()) throw DimensionError("sym_eigen: matrix not square");
    const std::size_t n = m.rows();

    SymEigen out;
    out.vectors = Matrix::identity(n);
    if (n == 0) return out;

    const double scale = std::max(1.0, max_abs(m));
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > tol * scale) out.symmetrized = true;
            a(i, j) = 0.5 * (m(i, j) + m(j, i));
        }

    const double target = 1e-14 * frobenius(a);
    Matrix& q = out.vectors;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t r = p + 1; r < n; ++r) off += 2.0 * a(p, r) * a(p, r);
        if (std::sqrt(off) <= target) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(k, r) = s * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - s * ark;
                    a(r, k) = s * apk + c * ark;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    out.values.resize(n);
    Matrix sorted(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) sorted(i, k) = q(i, order[k]);
    }
    out.vectors = sorted;
    return out;
}

inline std::vector<double> sym_eigenvalues(const Matrix& m, double tol = 1e-9) {
    return sym_eigen(m, tol).values;
}

/// Largest singular value, via the spectral radius of M^T M (or M M^T,
/// whichever Gram matrix is smaller).
inline double spectral_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    const Matrix g = (m.rows() >= m.cols()) ? transpose(m) * m : m * transpose(m);
    const auto ev = sym_eigenvalues(g, 1e-6);
    return std::sqrt(std::max(0.0, ev.back()));
}

struct DefinitenessVerdict {
    bool ok = false;
    double witness = 0.0; // largest eigenvalue
    bool symmetrized = false;
};

inline double default_definiteness_tol(const Matrix& m) {
    return 1e-9 * std::max(1.0, max_abs(m));
}

inline DefinitenessVerdict is_negative_semidefinite(const Matrix& m, double tol) {
    const SymEigen eig = sym_eigen(m, 1e-6);
    return {eig.values.back() <= tol, eig.values.back(), eig.symmetrized};
}

// ---- linear solves ----

/// Gaussian elimination with partial pivoting, multiple right-hand sides.
inline Matrix solve(const Matrix& a, const Matrix& b) {
    if (!a.square()) throw DimensionError("solve: coefficient matrix not square");
    if (a.rows() != b.rows()) throw DimensionError("solve: right-hand side rows mismatch");
    const std::size_t n = a.rows();
    Matrix lu = a;
    Matrix x = b;
    const double tiny = 1e-14 * std::max(1.0, max_abs(a));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
        if (std::abs(lu(piv, k)) <= tiny)
            throw SingularMatrixError("solve: matrix is singular to working precision");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            lu(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
        }
    }
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double s = x(kk, j);
            for (std::size_t i = kk + 1; i < n; ++i) s -= lu(kk, i) * x(i, j);
            x(kk, j) = s / lu(kk, kk);
        }
    }
    return x;
}

inline Vector solve(const Matrix& a, const Vector& b) {
    const Matrix x = solve(a, Matrix::column(b));
    Vector r(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) r[i] = x(i, 0);
    return r;
}

/// Coefficients c = (M^T M)^{-1} M^T v, so M c is the Euclidean orthogonal
/// projection of v onto the column space of M.  Fails when the Gram matrix
/// has reciprocal condition below 1e-12.
inline Vector least_squares_coeffs(const Matrix& m, const Vector& v) {
    if (m.rows() != v.size())
        throw DimensionError("least_squares_coeffs: vector length does not match matrix rows");
    const Matrix gram = transpose(m) * m;
    const SymEigen eig = sym_eigen(gram, 1e-9);
    const double lo = eig.values.front(), hi = eig.values.back();
    if (hi <= 0.0 || lo / hi < 1e-12)
        throw SingularMatrixError(
            "least_squares_coeffs: Gram matrix M^T M is singular (rank-deficient columns)");
    // solve via the spectral factorization already in hand
    const std::size_t k = gram.rows();
    Vector mtv(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) mtv[j] += m(i, j) * v[i];
    Vector c(k, 0.0);
    for (std::size_t e = 0; e < k; ++e) {
        double qe = 0.0;
        for (std::size_t j = 0; j < k; ++j) qe += eig.vectors(j, e) * mtv[j];
        qe /= eig.values[e];
        for (std::size_t j = 0; j < k; ++j) c[j] += eig.vectors(j, e) * qe;
    }
    return c;
}

} // namespace lureobs
