#pragma once

#include <armadillo>
#include <numeric>
#include <string>
#include <vector>

#include "mimo/channel.hpp"
#include "mimo/errors.hpp"
#include "mimo/linalg.hpp"
#include "mimo/power.hpp"

// The SRZF precoder and the five baselines (ZF, RZF, WF, BD, SNS with a
// fixed combiner), all built from estimated channels. Direction-based
// schemes share the fixed power allocation; WF carries its own global scale.

namespace mimo {

// Row-stack of the estimated channels in a chosen user order.
struct stacked_csi {
    arma::cx_mat hbar;                  // M x N
    std::vector<arma::uword> offsets;   // size K+1, first row of each user block
    std::vector<arma::uword> perm;      // stack position -> original user index

    arma::uword users() const { return perm.size(); }
    arma::uword streams() const { return hbar.n_rows; }
    arma::uword block_rows(arma::uword pos) const { return offsets[pos + 1] - offsets[pos]; }
    arma::cx_mat block(arma::uword pos) const {
        return hbar.rows(offsets[pos], offsets[pos + 1] - 1);
    }
};

inline std::vector<arma::uword> identity_permutation(arma::uword k) {
    std::vector<arma::uword> p(k);
    std::iota(p.begin(), p.end(), arma::uword(0));
    return p;
}

inline stacked_csi stack_csi(const csi_set &csi, const std::vector<arma::uword> &perm) {
    stacked_csi out;
    out.perm = perm;
    out.offsets.push_back(0);
    arma::uword m = 0, n = csi.hbar.front().n_cols;
    for (arma::uword u : perm)
        m += csi.hbar[u].n_rows;
    out.hbar.set_size(m, n);
    arma::uword row = 0;
    for (arma::uword u : perm) {
        out.hbar.rows(row, row + csi.hbar[u].n_rows - 1) = csi.hbar[u];
        row += csi.hbar[u].n_rows;
        out.offsets.push_back(row);
    }
    return out;
}

inline stacked_csi stack_csi(const csi_set &csi) {
    return stack_csi(csi, identity_permutation(csi.hbar.size()));
}

// Per-user regularization: alpha_k times a diagonal weight vector of
// length M. The successive policy uses the step pattern (ones from the
// user's first row to the end, all-zero for the last user); the identity
// policy regularizes everything, reproducing RZF.
struct regularization_plan {
    arma::vec alpha;                 // per stack position
    std::vector<arma::vec> diag;     // per stack position, length M
};

inline regularization_plan successive_plan(const stacked_csi &st, const arma::vec &alphas) {
    regularization_plan plan;
    plan.alpha = alphas;
    const arma::uword k_users = st.users();
    const arma::uword m = st.streams();
    for (arma::uword k = 0; k < k_users; ++k) {
        arma::vec d(m, arma::fill::zeros);
        if (k + 1 < k_users)
            d.subvec(st.offsets[k], m - 1).ones();
        plan.diag.push_back(std::move(d));
    }
    return plan;
}

inline regularization_plan identity_plan(const stacked_csi &st, const arma::vec &alphas) {
    regularization_plan plan;
    plan.alpha = alphas;
    plan.diag.assign(st.users(), arma::vec(st.streams(), arma::fill::ones));
    return plan;
}

inline regularization_plan explicit_plan(const stacked_csi &st, const arma::vec &alphas,
                                         const arma::vec &shared_diag) {
    regularization_plan plan;
    plan.alpha = alphas;
    plan.diag.assign(st.users(), shared_diag);
    return plan;
}

// Precoders indexed by ORIGINAL user. phi/power_diag are kept where the
// scheme defines them (diagnostics and the interference analyses).
struct precoder_set {
    std::string scheme;
    std::vector<arma::cx_mat> precoder;    // N x M_k per original user
    std::vector<arma::cx_mat> phi;         // M x M_k per original user (empty if n/a)
    std::vector<arma::vec> power_diag;     // D_k per original user (empty if n/a)
    std::vector<arma::uword> perm;         // stack position -> original user
};

namespace detail {

// Scatter per-stack-position objects back into original-user indexing.
template <typename T>
std::vector<T> unpermute(const std::vector<T> &by_pos, const std::vector<arma::uword> &perm) {
    std::vector<T> out(by_pos.size());
    for (arma::uword pos = 0; pos < by_pos.size(); ++pos)
        out[perm[pos]] = by_pos[pos];
    return out;
}

inline precoder_set assemble_fpa(const std::string &scheme, const stacked_csi &st,
                                 std::vector<arma::cx_mat> directions,
                                 std::vector<arma::cx_mat> phi, double pt_mw) {
    power_allocation pa = fpa(directions, pt_mw);
    std::vector<arma::cx_mat> p = scale_columns(directions, pa);
    precoder_set out;
    out.scheme = scheme;
    out.perm = st.perm;
    out.precoder = unpermute(p, st.perm);
    if (!phi.empty())
        out.phi = unpermute(phi, st.perm);
    std::vector<arma::vec> d = pa.d;
    out.power_diag = unpermute(d, st.perm);
    return out;
}

} // namespace detail

// alpha_k = M sigma^2 / P_T, the RZF-style regularization constant.
inline double default_alpha(arma::uword m_total, double sigma2_mw, double pt_mw) {
    return static_cast<double>(m_total) * sigma2_mw / pt_mw;
}

// Users sorted by descending single-user rate
// r_k = log2 det(I + P_T/(M_k L_k sigma^2) Hbar_k Hbar_k^H),
// ties broken by ascending original index.
inline std::vector<arma::uword> order_users(const csi_set &csi, double pt_mw, double sigma2_mw) {
    const arma::uword k_users = csi.hbar.size();
    std::vector<double> rate(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        const arma::uword mk = csi.hbar[k].n_rows;
        const double c = pt_mw / (static_cast<double>(mk) * csi.loss[k] * sigma2_mw);
        arma::cx_mat a = arma::cx_mat(arma::eye<arma::mat>(mk, mk), arma::mat(mk, mk, arma::fill::zeros)) +
                         c * gram(csi.hbar[k]);
        rate[k] = logdet_hpd(a) / std::log(2.0);
    }
    std::vector<arma::uword> perm = identity_permutation(k_users);
    std::stable_sort(perm.begin(), perm.end(), [&](arma::uword a, arma::uword b) {
        if (rate[a] != rate[b])
            return rate[a] > rate[b];
        return a < b;
    });
    return perm;
}

// Successively-regularized zero forcing. One Gram factorization target per
// user: Phi_k holds columns m_k..m_k+M_k-1 of (Hbar Hbar^H + alpha_k J_k)^{-1},
// directions are Hbar^H Phi_k, and FPA sets D_k.
inline precoder_set srzf(const stacked_csi &st, const regularization_plan &plan, double pt_mw) {
    const arma::uword k_users = st.users();
    const arma::cx_mat g = gram(st.hbar);
    std::vector<arma::cx_mat> phi(k_users), dirs(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        arma::cx_mat a = g;
        if (plan.alpha(k) != 0.0)
            a.diag() += arma::cx_vec(plan.alpha(k) * plan.diag[k],
                                     arma::vec(st.streams(), arma::fill::zeros));
        phi[k] = chol_solve_columns(a, st.offsets[k], st.block_rows(k));
        dirs[k] = st.hbar.t() * phi[k];
    }
    return detail::assemble_fpa("srzf", st, std::move(dirs), std::move(phi), pt_mw);
}

// ZF: directions are the columns of the pseudo-inverse Hbar^H (Hbar Hbar^H)^{-1}.
inline precoder_set zf(const stacked_csi &st, double pt_mw) {
    const arma::uword k_users = st.users();
    const arma::cx_mat ginv = chol_solve_columns(gram(st.hbar), 0, st.streams());
    std::vector<arma::cx_mat> phi(k_users), dirs(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        phi[k] = ginv.cols(st.offsets[k], st.offsets[k + 1] - 1);
        dirs[k] = st.hbar.t() * phi[k];
    }
    precoder_set out = detail::assemble_fpa("zf", st, std::move(dirs), std::move(phi), pt_mw);
    return out;
}

// RZF: uniform diagonal loading alpha I_M.
inline precoder_set rzf(const stacked_csi &st, double alpha, double pt_mw) {
    const arma::uword k_users = st.users();
    arma::cx_mat a = gram(st.hbar);
    a.diag() += std::complex<double>(alpha, 0.0);
    const arma::cx_mat ainv = chol_solve_columns(a, 0, st.streams());
    std::vector<arma::cx_mat> phi(k_users), dirs(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        phi[k] = ainv.cols(st.offsets[k], st.offsets[k + 1] - 1);
        dirs[k] = st.hbar.t() * phi[k];
    }
    precoder_set out = detail::assemble_fpa("rzf", st, std::move(dirs), std::move(phi), pt_mw);
    return out;
}

// Transmit Wiener filter: RZF-style directions with the Mσ²/P_T regularizer
// and one global scale chosen so the full budget is spent.
inline precoder_set wf(const stacked_csi &st, double pt_mw, double sigma2_mw) {
    arma::cx_mat a = gram(st.hbar);
    a.diag() += std::complex<double>(default_alpha(st.streams(), sigma2_mw, pt_mw), 0.0);
    const arma::cx_mat praw = st.hbar.t() * chol_solve_columns(a, 0, st.streams());
    const double beta = std::sqrt(pt_mw) / arma::norm(praw, "fro");
    precoder_set out;
    out.scheme = "wf";
    out.perm = st.perm;
    std::vector<arma::cx_mat> by_pos(st.users());
    for (arma::uword k = 0; k < st.users(); ++k)
        by_pos[k] = beta * praw.cols(st.offsets[k], st.offsets[k + 1] - 1);
    out.precoder = detail::unpermute(by_pos, st.perm);
    return out;
}

// Block diagonalization: user k's directions live in the null space of every
// other user's estimated channel, aligned with the top right singular vectors
// of the projected channel.
inline precoder_set bd(const stacked_csi &st, double pt_mw) {
    const arma::uword k_users = st.users();
    std::vector<arma::cx_mat> dirs(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        const arma::uword mk = st.block_rows(k);
        arma::cx_mat others(st.streams() - mk, st.hbar.n_cols);
        arma::uword row = 0;
        for (arma::uword j = 0; j < k_users; ++j) {
            if (j == k)
                continue;
            others.rows(row, row + st.block_rows(j) - 1) = st.block(j);
            row += st.block_rows(j);
        }
        const arma::cx_mat basis = nullspace_basis(others);
        if (basis.n_cols < mk)
            throw insufficient_null_space("bd: user block leaves fewer than M_k null dimensions");
        const arma::cx_mat projected = st.block(k) * basis;
        arma::cx_mat u, v;
        arma::vec s;
        if (!arma::svd(u, s, v, projected))
            throw std::runtime_error("svd failed in bd");
        dirs[k] = basis * v.cols(0, mk - 1);
    }
    return detail::assemble_fpa("bd", st, std::move(dirs), {}, pt_mw);
}

// Successive null space precoding with a fixed combiner: user k's directions
// zero-force its channel inside the null space of users 1..k-1, so users
// cause no interference to anyone placed earlier in the stack.
inline precoder_set sns_fixed(const stacked_csi &st, double pt_mw) {
    const arma::uword k_users = st.users();
    const arma::uword n = st.hbar.n_cols;
    std::vector<arma::cx_mat> dirs(k_users);
    for (arma::uword k = 0; k < k_users; ++k) {
        const arma::uword mk = st.block_rows(k);
        arma::cx_mat psi;
        if (k == 0) {
            psi = arma::cx_mat(arma::eye<arma::mat>(n, n), arma::mat(n, n, arma::fill::zeros));
        } else {
            psi = nullspace_basis(st.hbar.rows(0, st.offsets[k] - 1));
        }
        if (psi.n_cols < mk)
            throw insufficient_null_space("sns_fixed: null space smaller than M_k at user " + std::to_string(k));
        dirs[k] = psi * pinv(st.block(k) * psi);
    }
    return detail::assemble_fpa("sns_fixed", st, std::move(dirs), {}, pt_mw);
}

} // namespace mimo
