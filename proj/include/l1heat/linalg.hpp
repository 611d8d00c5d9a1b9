#pragma once

#include "l1heat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace l1heat {

using Vector = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw ValidationError("dot: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x)
{
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row and duplicates are summed at construction.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
    {
        for (const auto& t : triplets) {
            if (t.row >= rows || t.col >= cols) {
                throw ValidationError("SparseMatrix: triplet index out of range");
            }
        }
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(rows + 1, 0);
        for (std::size_t i = 0; i < triplets.size();) {
            std::size_t j = i;
            double v = 0.0;
            while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col) {
                v += triplets[j].value;
                ++j;
            }
            m.col_idx_.push_back(triplets[i].col);
            m.values_.push_back(v);
            ++m.row_ptr_[triplets[i].row + 1];
            i = j;
        }
        std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
        return m;
    }

    static SparseMatrix identity(std::size_t n)
    {
        std::vector<Triplet> t;
        t.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back({i, i, 1.0});
        }
        return from_triplets(n, n, std::move(t));
    }

    static SparseMatrix diagonal(std::span<const double> d)
    {
        std::vector<Triplet> t;
        t.reserve(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            t.push_back({i, i, d[i]});
        }
        return from_triplets(d.size(), d.size(), std::move(t));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Entry (i, j), zero when not stored.
    double at(std::size_t i, std::size_t j) const
    {
        auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) {
            return 0.0;
        }
        return values_[static_cast<std::size_t>(it - col_idx_.begin())];
    }

    Vector diagonal_values() const
    {
        Vector d(std::min(rows_, cols_), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] = at(i, i);
        }
        return d;
    }

    /// alpha * this + diag(beta * d). Diagonal entries missing from the pattern are inserted.
    SparseMatrix scaled_plus_diagonal(double alpha, std::span<const double> d, double beta) const
    {
        if (rows_ != cols_ || d.size() != rows_) {
            throw ValidationError("scaled_plus_diagonal: dimension mismatch");
        }
        std::vector<Triplet> t;
        t.reserve(values_.size() + rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                t.push_back({i, col_idx_[k], alpha * values_[k]});
            }
            t.push_back({i, i, beta * d[i]});
        }
        return from_triplets(rows_, cols_, std::move(t));
    }

    bool is_symmetric(double rel_tol = 1e-12) const
    {
        if (rows_ != cols_) {
            return false;
        }
        double scale = norm_inf(values_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                if (std::abs(values_[k] - at(col_idx_[k], i)) > rel_tol * scale) {
                    return false;
                }
            }
        }
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

inline void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
    if (x.size() != a.cols() || y.size() != a.rows()) {
        throw ValidationError("spmv: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " times " + std::to_string(x.size()) + ")");
    }
    auto rp = a.row_ptr();
    auto ci = a.col_idx();
    auto va = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
            s += va[k] * x[ci[k]];
        }
        y[i] = s;
    }
}

inline Vector spmv(const SparseMatrix& a, std::span<const double> x)
{
    Vector y(a.rows(), 0.0);
    spmv(a, x, y);
    return y;
}

struct CgOptions {
    double rel_tol = 1e-10;
    /// 0 selects 10 * dimension.
    std::size_t max_iter = 0;
};

struct CgResult {
    Vector x;
    std::size_t iterations = 0;
    /// Achieved ||b - Ax||_2 / ||b||_2 (0 for b = 0).
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems.
///
/// Non-convergence is reported through CgResult::converged with the achieved
/// residual; a NaN anywhere in the iteration throws NumericalError.
inline CgResult cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& opts = {},
                         std::span<const double> x0 = {})
{
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n || (!x0.empty() && x0.size() != n)) {
        throw ValidationError("cg_solve: dimension mismatch");
    }
    const std::size_t max_iter = opts.max_iter == 0 ? 10 * std::max<std::size_t>(n, 1) : opts.max_iter;

    CgResult res;
    res.x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(res.x.begin(), res.x.end(), 0.0);
        res.converged = true;
        return res;
    }

    Vector inv_diag = a.diagonal_values();
    for (double& d : inv_diag) {
        d = d > 0.0 ? 1.0 / d : 1.0;
    }

    Vector r(n), z(n), p(n), ap(n);
    spmv(a, res.x, ap);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - ap[i];
        z[i] = inv_diag[i] * r[i];
    }
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);

    std::size_t it = 0;
    while (rnorm > opts.rel_tol * bnorm && it < max_iter) {
        spmv(a, p, ap);
        const double pap = dot(p, ap);
        if (!std::isfinite(pap) || !std::isfinite(rz)) {
            throw NumericalError("cg_solve: NaN/Inf encountered at iteration " + std::to_string(it));
        }
        if (pap <= 0.0) {
            throw NumericalError("cg_solve: matrix not positive definite (p^T A p <= 0)");
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = inv_diag[i] * r[i];
        }
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = norm2(r);
        ++it;
    }
    if (!std::isfinite(rnorm)) {
        throw NumericalError("cg_solve: NaN/Inf residual");
    }
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    res.converged = rnorm <= opts.rel_tol * bnorm;
    return res;
}

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static DenseMatrix from_sparse(const SparseMatrix& s)
    {
        DenseMatrix m(s.rows(), s.cols());
        for (std::size_t i = 0; i < s.rows(); ++i) {
            for (std::size_t k = s.row_ptr()[i]; k < s.row_ptr()[i + 1]; ++k) {
                m(i, s.col_idx()[k]) += s.values()[k];
            }
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    DenseMatrix transposed() const
    {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t(j, i) = (*this)(i, j);
            }
        }
        return t;
    }

    Vector multiply(std::span<const double> x) const
    {
        if (x.size() != cols_) {
            throw ValidationError("DenseMatrix::multiply: dimension mismatch");
        }
        Vector y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            y[i] = dot(row(i), x);
        }
        return y;
    }

    DenseMatrix operator*(const DenseMatrix& o) const
    {
        if (cols_ != o.rows_) {
            throw ValidationError("DenseMatrix product: dimension mismatch");
        }
        DenseMatrix c(rows_, o.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < o.cols_; ++j) {
                    c(i, j) += aik * o(k, j);
                }
            }
        }
        return c;
    }

    /// x^T A x
    double quadratic_form(std::span<const double> x) const { return dot(x, multiply(x)); }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// LU with partial pivoting. Throws NumericalError when a pivot falls below
/// 1e-14 times the largest entry of A.
inline Vector dense_solve(DenseMatrix a, Vector b)
{
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw ValidationError("dense_solve: dimension mismatch");
    }
    const double scale = norm_inf(a.data());
    const double tiny = 1e-14 * (scale > 0.0 ? scale : 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) {
                piv = i;
            }
        }
        if (!(std::abs(a(piv, k)) >= tiny)) {
            throw NumericalError("dense_solve: matrix is singular to working precision (column " +
                                 std::to_string(k) + ")");
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(k, j), a(piv, j));
            }
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = a(i, k) / a(k, k);
            if (l == 0.0) {
                continue;
            }
            for (std::size_t j = k; j < n; ++j) {
                a(i, j) -= l * a(k, j);
            }
            b[i] -= l * b[k];
        }
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) {
            s -= a(ii, j) * x[j];
        }
        x[ii] = s / a(ii, ii);
    }
    return x;
}

/// Lower Cholesky factor L with A = L L^T.
inline DenseMatrix cholesky(const DenseMatrix& a)
{
    const std::size_t n = a.rows();
    if (a.cols() != n) {
        throw ValidationError("cholesky: matrix is not square");
    }
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            d -= l(j, k) * l(j, k);
        }
        if (!(d > 0.0)) {
            throw NumericalError("cholesky: matrix is not symmetric positive definite (pivot " +
                                 std::to_string(j) + ")");
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= l(i, k) * l(j, k);
            }
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solves L X = B in place for lower-triangular L (B overwritten column-wise).
inline void lower_solve_in_place(const DenseMatrix& l, DenseMatrix& b)
{
    const std::size_t n = l.rows();
    if (b.rows() != n) {
        throw ValidationError("lower_solve: dimension mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto bi = b.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            if (lik == 0.0) {
                continue;
            }
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                bi[j] -= lik * bk[j];
            }
        }
        const double inv = 1.0 / l(i, i);
        for (double& v : bi) {
            v *= inv;
        }
    }
}

/// Singular values of A (descending) by one-sided Jacobi rotations.
inline Vector singular_values(const DenseMatrix& a, double tol = 1e-15, int max_sweeps = 60)
{
    // Work on columns of A^T A implicitly: store columns contiguously.
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    std::vector<Vector> col(n, Vector(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            col[j][i] = a(i, j);
        }
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                const double* cp = col[p].data();
                const double* cq = col[q].data();
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += cp[i] * cp[i];
                    beta += cq[i] * cq[i];
                    gamma += cp[i] * cq[i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double* xp = col[p].data();
                double* xq = col[q].data();
                for (std::size_t i = 0; i < m; ++i) {
                    const double u = xp[i];
                    const double v = xq[i];
                    xp[i] = c * u - s * v;
                    xq[i] = s * u + c * v;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }
    Vector sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        sv[j] = norm2(col[j]);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Singular values of L_Y^{-1} B L_X^{-T} where NX = L_X L_X^T, NY = L_Y L_Y^T.
///
/// B has rows indexed by the test space (NY) and columns by the trial space (NX),
/// so the smallest value is inf_v sup_w w^T B v / (|v|_NX |w|_NY).
inline Vector generalized_singular_values(const DenseMatrix& b, const DenseMatrix& nx, const DenseMatrix& ny)
{
    if (b.rows() != ny.rows() || b.cols() != nx.rows() || nx.rows() != nx.cols() || ny.rows() != ny.cols()) {
        throw ValidationError("generalized_singular_values: incompatible dimensions");
    }
    const DenseMatrix lx = cholesky(nx);
    const DenseMatrix ly = cholesky(ny);
    DenseMatrix z = b;
    lower_solve_in_place(ly, z);   // L_Y^{-1} B
    DenseMatrix ct = z.transposed();
    lower_solve_in_place(lx, ct);  // (L_Y^{-1} B L_X^{-T})^T
    // One value per trial direction: rotate the nX columns of C.
    return singular_values(ct.transposed());
}

inline double min_generalized_singular_value(const DenseMatrix& b, const DenseMatrix& nx, const DenseMatrix& ny)
{
    const Vector sv = generalized_singular_values(b, nx, ny);
    return sv.empty() ? 0.0 : sv.back();
}

inline double max_generalized_singular_value(const DenseMatrix& b, const DenseMatrix& nx, const DenseMatrix& ny)
{
    const Vector sv = generalized_singular_values(b, nx, ny);
    return sv.empty() ? 0.0 : sv.front();
}

} // namespace l1heat
