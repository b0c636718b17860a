#pragma once

#include <armadillo>
#include <vector>

#include "mimo/errors.hpp"

// Fixed power allocation and power accounting.

namespace mimo {

struct power_allocation {
    std::vector<arma::vec> d;   // D_k diagonal per user, length M_k
};

// [D_k]_{l,l} = P_T / (M ||v_{k,l}||^2) where v_{k,l} is the l-th direction
// column of user k. Every normalized precoding column then carries exactly
// P_T / M, and the total over all M columns is exactly P_T.
inline power_allocation fpa(const std::vector<arma::cx_mat> &direction_cols, double pt_mw) {
    arma::uword m_total = 0;
    for (const auto &v : direction_cols)
        m_total += v.n_cols;
    power_allocation out;
    out.d.reserve(direction_cols.size());
    for (const auto &v : direction_cols) {
        arma::vec dk(v.n_cols);
        for (arma::uword l = 0; l < v.n_cols; ++l) {
            const double nn = arma::norm(v.col(l));
            if (!(nn > 1e-300))
                throw zero_direction("fpa: direction column has (numerically) zero norm");
            dk(l) = pt_mw / (static_cast<double>(m_total) * nn * nn);
        }
        out.d.push_back(std::move(dk));
    }
    return out;
}

// P = V diag(sqrt(d)) for a real nonnegative scaling vector.
inline arma::cx_mat scale_columns(const arma::cx_mat &v, const arma::vec &d) {
    arma::cx_mat out = v;
    for (arma::uword l = 0; l < out.n_cols; ++l)
        out.col(l) *= std::sqrt(d(l));
    return out;
}

// Applies D^{1/2} column scaling per user: P_k = V_k diag(sqrt(D_k)).
inline std::vector<arma::cx_mat> scale_columns(const std::vector<arma::cx_mat> &direction_cols,
                                               const power_allocation &pa) {
    std::vector<arma::cx_mat> out;
    out.reserve(direction_cols.size());
    for (std::size_t k = 0; k < direction_cols.size(); ++k)
        out.push_back(scale_columns(direction_cols[k], pa.d[k]));
    return out;
}

// Sum_k tr(P_k P_k^H) = sum of squared Frobenius norms, in mW.
inline double total_power(const std::vector<arma::cx_mat> &precoders) {
    double acc = 0.0;
    for (const auto &p : precoders) {
        const double f = arma::norm(p, "fro");
        acc += f * f;
    }
    return acc;
}

} // namespace mimo
