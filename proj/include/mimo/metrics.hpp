#pragma once

#include <armadillo>
#include <cmath>
#include <vector>

#include "mimo/channel.hpp"
#include "mimo/linalg.hpp"
#include "mimo/precoding.hpp"
#include "mimo/scenario.hpp"

// Analytical rate / interference evaluation against the true channels, and
// the numerical verification quantities for the one-directional-IUI identity
// and the imperfect-CSI interference bound.

namespace mimo {

struct rate_report {
    arma::vec user_rate_bits;   // R_k per original user
    double sum_rate_bits = 0.0;
    arma::mat iui_norms;        // ||H_k P_k' / sqrt(L_k)||_F for all (k, k')
    double power_used_mw = 0.0;
};

// Physical effective channel of user k for user k''s streams.
inline arma::cx_mat effective_channel(const arma::cx_mat &h_k, double loss_k, const arma::cx_mat &p_other) {
    return (1.0 / std::sqrt(loss_k)) * h_k * p_other;
}

// Shannon rate with interference treated as noise, computed as a difference
// of log-determinants (algebraically equal to the explicit-inverse form,
// numerically safer).
inline double user_rate(const arma::cx_mat &g_own, const std::vector<arma::cx_mat> &g_interf,
                        double sigma2_mw) {
    const arma::uword mk = g_own.n_rows;
    arma::cx_mat noise = arma::cx_mat(sigma2_mw * arma::eye<arma::mat>(mk, mk),
                                      arma::mat(mk, mk, arma::fill::zeros));
    for (const auto &g : g_interf)
        noise += g * g.t();
    noise = symmetrize(noise);
    const double bits = (logdet_hpd(symmetrize(noise + g_own * g_own.t())) - logdet_hpd(noise)) / std::log(2.0);
    return bits > 0.0 ? bits : 0.0;
}

inline rate_report sum_rate(const channel_set &ch, const precoder_set &ps, double sigma2_mw) {
    const arma::uword k_users = ch.h.size();
    rate_report rep;
    rep.user_rate_bits.set_size(k_users);
    rep.iui_norms.set_size(k_users, k_users);
    rep.power_used_mw = total_power(ps.precoder);
    for (arma::uword k = 0; k < k_users; ++k) {
        std::vector<arma::cx_mat> interf;
        arma::cx_mat own;
        for (arma::uword j = 0; j < k_users; ++j) {
            arma::cx_mat g = effective_channel(ch.h[k], ch.loss[k], ps.precoder[j]);
            rep.iui_norms(k, j) = arma::norm(g, "fro");
            if (j == k)
                own = std::move(g);
            else
                interf.push_back(std::move(g));
        }
        rep.user_rate_bits(k) = user_rate(own, interf, sigma2_mw);
        rep.sum_rate_bits += rep.user_rate_bits(k);
    }
    return rep;
}

// Residual table for the perfect-CSI interference identity. Builds the SRZF
// precoder from the true channels (identity ordering) and compares H_k P_k'
// against the closed form implied by the regularization structure:
// rows m_k..m_k+M_k-1 of (E_k' - alpha_k' J_k' Phi_k') D_k'^{1/2}.
inline arma::mat prop1_residuals(const channel_set &ch, const stacked_csi &st,
                                 const regularization_plan &plan, double pt_mw) {
    const precoder_set ps = srzf(st, plan, pt_mw);
    const arma::uword k_users = st.users();
    arma::mat residual(k_users, k_users);   // indexed by stack position
    for (arma::uword k = 0; k < k_users; ++k) {
        const arma::uword r0 = st.offsets[k];
        const arma::uword r1 = st.offsets[k + 1] - 1;
        for (arma::uword kp = 0; kp < k_users; ++kp) {
            const arma::cx_mat &phi = ps.phi[st.perm[kp]];
            const arma::cx_mat &pre = ps.precoder[st.perm[kp]];
            const arma::cx_mat omega = phi.rows(r0, r1);
            arma::cx_mat expected(st.block_rows(k), st.block_rows(kp), arma::fill::zeros);
            if (k == kp)
                expected.eye();
            const arma::vec jrows = plan.diag[kp].subvec(r0, r1);
            for (arma::uword r = 0; r < omega.n_rows; ++r)
                expected.row(r) -= plan.alpha(kp) * jrows(r) * omega.row(r);
            expected = scale_columns(expected, ps.power_diag[st.perm[kp]]);
            residual(k, kp) = arma::norm(ch.h[st.perm[k]] * pre - expected, "fro") /
                              arma::norm(pre, "fro");
        }
    }
    return residual;
}

// Convenience: perfect CSI, identity ordering, plan built from the policy.
inline arma::mat prop1_residuals(const channel_set &ch, reg_policy_kind policy,
                                 const arma::vec &alphas, double pt_mw) {
    const stacked_csi st = stack_csi(perfect_csi(ch));
    const regularization_plan plan =
        policy == reg_policy_kind::identity ? identity_plan(st, alphas) : successive_plan(st, alphas);
    return prop1_residuals(ch, st, plan, pt_mw);
}

// One Monte-Carlo record of the imperfect-CSI interference bound for user k:
// the measured extra interference caused at user k by every later user when
// its own CSI error is switched on, against ||Delta H_k|| ||P_k'||.
struct prop2_record {
    double mu2 = 0.0;
    arma::uword trial = 0;
    double measured_gap = 0.0;   // sum over k' > k of ||H_k (P_k' - P_k'^perf)||_F
    double upper_bound = 0.0;    // ||Delta H_k||_F * sum ||P_k'||_F
    arma::vec pair_measured;     // per later user
    arma::vec pair_bound;
};

// Common random numbers: the same channels and the same error draws back
// both precoder builds; only user k's error toggles between them.
inline std::vector<prop2_record> prop2_experiment(const scenario &sc, const channel_model_cache &cache,
                                                  arma::uword user_k, const std::vector<double> &mu2_sweep,
                                                  arma::uword trials) {
    const arma::uword k_users = sc.num_users;
    const double pt = dbm_to_linear(sc.pt_dbm);
    const double sigma2 = dbm_to_linear(sc.sigma2_dbm);
    std::vector<bool> mask(k_users, false);
    mask[user_k] = true;

    std::vector<prop2_record> records;
    records.reserve(mu2_sweep.size() * trials);
    for (arma::uword t = 0; t < trials; ++t) {
        const trial_rng rng(sc.seed, t);
        const channel_set ch = generate_channels(sc, cache, rng);
        for (double mu2 : mu2_sweep) {
            std::vector<double> mu2_vec = sc.mu2;
            mu2_vec[user_k] = mu2;
            const csi_set csi = apply_csi_error(ch, mu2_vec, {}, rng);
            const csi_set csi_k_perfect = apply_csi_error(ch, mu2_vec, mask, rng);

            const stacked_csi st = stack_csi(csi);
            const stacked_csi st_p = stack_csi(csi_k_perfect);
            arma::vec alphas(k_users);
            if (sc.alpha_policy == alpha_policy_kind::explicit_list)
                alphas = arma::vec(sc.alpha_explicit);
            else
                alphas.fill(default_alpha(st.streams(), sigma2, pt));
            const precoder_set ps = srzf(st, successive_plan(st, alphas), pt);
            const precoder_set ps_p = srzf(st_p, successive_plan(st_p, alphas), pt);

            prop2_record rec;
            rec.mu2 = mu2;
            rec.trial = t;
            const arma::uword later = k_users - user_k - 1;
            rec.pair_measured.set_size(later);
            rec.pair_bound.set_size(later);
            const double delta_norm = arma::norm(csi.delta[user_k], "fro");
            for (arma::uword kp = user_k + 1; kp < k_users; ++kp) {
                const arma::uword i = kp - user_k - 1;
                rec.pair_measured(i) =
                    arma::norm(ch.h[user_k] * (ps.precoder[kp] - ps_p.precoder[kp]), "fro");
                rec.pair_bound(i) = delta_norm * arma::norm(ps.precoder[kp], "fro");
                rec.measured_gap += rec.pair_measured(i);
                rec.upper_bound += rec.pair_bound(i);
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace mimo
