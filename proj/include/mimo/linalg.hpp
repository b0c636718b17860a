#pragma once

#include <armadillo>
#include <vector>

#include "mimo/errors.hpp"

// Dense complex-matrix primitives shared by every precoder and metric:
// Gram products, Hermitian-positive-definite solves, SVD null spaces,
// pseudo-inverse and log-determinants. All operations are pure functions.

namespace mimo {

// Relative singular-value cutoff for rank decisions (null space, pinv).
inline constexpr double kRankTol = 1e-12;

// A <- (A + A^H)/2, absorbing round-off so Cholesky sees an exactly
// Hermitian matrix.
inline arma::cx_mat symmetrize(const arma::cx_mat &a) {
    return 0.5 * (a + a.t());
}

// H * H^H, symmetrized.
inline arma::cx_mat gram(const arma::cx_mat &h) {
    return symmetrize(h * h.t());
}

// Lower-triangular Cholesky factor of a Hermitian-PD matrix.
inline arma::cx_mat chol_lower(const arma::cx_mat &a) {
    arma::cx_mat l;
    if (!arma::chol(l, symmetrize(a), "lower"))
        throw not_positive_definite("cholesky factorization failed (matrix not positive definite)");
    return l;
}

// Selected columns of A^{-1} for Hermitian-PD A: one Cholesky factorization,
// then two triangular solves per requested unit column.
inline arma::cx_mat chol_solve_columns(const arma::cx_mat &a, const std::vector<arma::uword> &cols) {
    const arma::uword m = a.n_rows;
    const arma::cx_mat l = chol_lower(a);
    arma::cx_mat rhs(m, cols.size(), arma::fill::zeros);
    for (arma::uword j = 0; j < cols.size(); ++j)
        rhs(cols[j], j) = 1.0;
    arma::cx_mat y = arma::solve(arma::trimatl(l), rhs);
    return arma::solve(arma::trimatu(l.t()), y);
}

// Contiguous-range convenience used by the precoders (columns first..first+count-1).
inline arma::cx_mat chol_solve_columns(const arma::cx_mat &a, arma::uword first, arma::uword count) {
    std::vector<arma::uword> cols(count);
    for (arma::uword j = 0; j < count; ++j)
        cols[j] = first + j;
    return chol_solve_columns(a, cols);
}

// Orthonormal basis of the numerical null space of A (r x n): right singular
// vectors whose singular value is <= tol * sigma_max. May have zero columns.
inline arma::cx_mat nullspace_basis(const arma::cx_mat &a, double tol = kRankTol) {
    if (a.n_rows == 0)
        return arma::cx_mat(arma::eye<arma::mat>(a.n_cols, a.n_cols),
                            arma::mat(a.n_cols, a.n_cols, arma::fill::zeros));
    arma::cx_mat u, v;
    arma::vec s;
    if (!arma::svd(u, s, v, a))
        throw std::runtime_error("svd failed in nullspace_basis");
    const double smax = s.empty() ? 0.0 : s.max();
    arma::uword rank = 0;
    for (arma::uword i = 0; i < s.n_elem; ++i)
        if (s(i) > tol * smax)
            ++rank;
    if (rank >= a.n_cols)
        return arma::cx_mat(a.n_cols, 0);
    return v.cols(rank, a.n_cols - 1);
}

// Moore-Penrose pseudo-inverse via SVD with relative cutoff tol * sigma_max.
inline arma::cx_mat pinv(const arma::cx_mat &a, double tol = kRankTol) {
    arma::cx_mat u, v;
    arma::vec s;
    if (!arma::svd(u, s, v, a))
        throw std::runtime_error("svd failed in pinv");
    const double smax = s.empty() ? 0.0 : s.max();
    arma::vec sinv(s.n_elem, arma::fill::zeros);
    for (arma::uword i = 0; i < s.n_elem; ++i)
        if (s(i) > tol * smax)
            sinv(i) = 1.0 / s(i);
    return v.cols(0, s.n_elem - 1) * arma::diagmat(sinv) * u.cols(0, s.n_elem - 1).t();
}

// Natural-log determinant of a Hermitian-PD matrix via Cholesky.
inline double logdet_hpd(const arma::cx_mat &a) {
    const arma::cx_mat l = chol_lower(a);
    double acc = 0.0;
    for (arma::uword i = 0; i < l.n_rows; ++i)
        acc += std::log(l(i, i).real());
    return 2.0 * acc;
}

} // namespace mimo
