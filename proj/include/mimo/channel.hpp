#pragma once

#include <armadillo>
#include <cmath>
#include <random>
#include <vector>

#include "mimo/errors.hpp"
#include "mimo/linalg.hpp"
#include "mimo/rng.hpp"
#include "mimo/scenario.hpp"

// Correlated MIMO channel generation with path loss, and the additive
// imperfect-CSI model. Two small-scale models share the same angular
// geometry (half-wavelength ULA at the BS, per-user azimuth windows):
//
//  * ray      — finite sum of n_paths plane waves with circular Gaussian
//               gains, departure angles uniform in the user's window and
//               isotropic arrival angles.
//  * geo_corr — the n_paths -> infinity limit of the same geometry: a
//               correlated Rayleigh (Kronecker) channel whose transmit
//               covariance is the window-averaged steering outer product,
//               blended with a small isotropic diffuse floor. This is the
//               model the shipped experiment configs use; it keeps the
//               stacked channel ill-conditioned without collapsing it to
//               numerical rank deficiency.
//
// Either way E||H_k||_F^2 = N * M_k and every H_k has full row rank.

namespace mimo {

inline constexpr double kPi = 3.14159265358979323846;

inline double dbm_to_linear(double dbm) {
    return std::pow(10.0, dbm / 10.0);
}

// §: path loss is the squared distance.
inline double path_loss(double d_m) {
    return d_m * d_m;
}

struct channel_set {
    std::vector<arma::cx_mat> h;   // true small-scale channel per user, M_k x N
    std::vector<double> loss;      // L_k per user
};

struct csi_set {
    std::vector<arma::cx_mat> hbar;   // estimated channel per user
    std::vector<arma::cx_mat> delta;  // error realization (diagnostics)
    std::vector<bool> perfect;        // mask: true => delta forced to zero
    std::vector<double> loss;         // L_k (known at the BS)
};

// Unit-norm ULA steering vector, half-wavelength spacing.
inline arma::cx_vec steering(arma::uword n, double angle_deg) {
    arma::cx_vec a(n);
    const double u = std::sin(angle_deg * kPi / 180.0);
    for (arma::uword i = 0; i < n; ++i)
        a(i) = std::exp(std::complex<double>(0.0, kPi * static_cast<double>(i) * u));
    return a / std::sqrt(static_cast<double>(n));
}

// Finite-ray channel for one user given explicit path parameters.
// H = sqrt(N*M/P) * sum_p g_p a_r(phi_p) a_t(theta_p)^H.
inline arma::cx_mat ray_channel(arma::uword n_tx, arma::uword m_rx,
                                const std::vector<double> &departure_deg,
                                const std::vector<double> &arrival_deg,
                                const std::vector<std::complex<double>> &gains) {
    const arma::uword P = gains.size();
    arma::cx_mat h(m_rx, n_tx, arma::fill::zeros);
    for (arma::uword p = 0; p < P; ++p)
        h += gains[p] * steering(m_rx, arrival_deg[p]) * steering(n_tx, departure_deg[p]).t();
    return std::sqrt(static_cast<double>(n_tx * m_rx) / static_cast<double>(P)) * h;
}

namespace detail {

// Transmit covariance of a user at `theta`: steering outer products averaged
// over the angular window, Gauss-Legendre quadrature, unit diagonal.
inline arma::cx_mat window_covariance(arma::uword n, double theta_deg, double spread_deg) {
    // 48-point Gauss-Legendre rule on [-1, 1], computed once by Newton
    // iteration on the Legendre polynomial.
    static constexpr arma::uword Q = 48;
    struct rule {
        std::vector<double> node, weight;
    };
    static const rule gl = [] {
        rule r;
        r.node.resize(Q);
        r.weight.resize(Q);
        auto legendre = [](double x, double &p, double &dp) {
            double p0 = 1.0, p1 = x;
            for (arma::uword j = 2; j <= Q; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
                p0 = p1;
                p1 = p2;
            }
            p = p1;
            dp = static_cast<double>(Q) * (x * p1 - p0) / (x * x - 1.0);
        };
        for (arma::uword i = 0; i < Q; ++i) {
            double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(Q) + 0.5));
            double p = 0.0, dp = 1.0;
            for (int it = 0; it < 100; ++it) {
                legendre(x, p, dp);
                const double dx = p / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15)
                    break;
            }
            legendre(x, p, dp);
            r.node[i] = x;
            r.weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    const std::vector<double> &node = gl.node;
    const std::vector<double> &weight = gl.weight;
    arma::cx_mat r(n, n, arma::fill::zeros);
    for (arma::uword q = 0; q < Q; ++q) {
        const double ang = theta_deg + 0.5 * spread_deg * node[q];
        const arma::cx_vec a = std::sqrt(static_cast<double>(n)) * steering(n, ang);
        r += (0.5 * weight[q]) * (a * a.t());
    }
    return symmetrize(r);
}

// Hermitian PSD square root via eigendecomposition (negative round-off clipped).
inline arma::cx_mat psd_sqrt(const arma::cx_mat &r) {
    arma::vec ev;
    arma::cx_mat v;
    if (!arma::eig_sym(ev, v, symmetrize(r)))
        throw std::runtime_error("eig_sym failed in psd_sqrt");
    ev.transform([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
    return v * arma::diagmat(ev) * v.t();
}

// Receive-side correlation for an isotropically scattered user array:
// Clarke/Jakes model, [R]_{ab} = J0(pi |a-b|).
inline arma::cx_mat isotropic_rx_correlation(arma::uword m) {
    arma::cx_mat r(m, m);
    for (arma::uword a = 0; a < m; ++a)
        for (arma::uword b = 0; b < m; ++b)
            r(a, b) = std::cyl_bessel_j(0.0, kPi * std::abs(static_cast<double>(a) - static_cast<double>(b)));
    return r;
}

} // namespace detail

// Per-scenario factors of the geo_corr model; computing them once makes
// large Monte-Carlo sweeps cheap (they are deterministic in the scenario).
struct channel_model_cache {
    std::vector<arma::cx_mat> tx_sqrt;   // R_t^{1/2} per user, N x N
    std::vector<arma::cx_mat> rx_sqrt;   // R_r^{1/2} per user, M_k x M_k

    explicit channel_model_cache(const scenario &s) {
        if (s.channel_model != channel_model_kind::geo_corr)
            return;
        tx_sqrt.reserve(s.num_users);
        rx_sqrt.reserve(s.num_users);
        const arma::cx_mat eye_n = arma::cx_mat(arma::eye(s.num_tx, s.num_tx), arma::mat(s.num_tx, s.num_tx, arma::fill::zeros));
        for (arma::uword k = 0; k < s.num_users; ++k) {
            arma::cx_mat r = detail::window_covariance(s.num_tx, s.azimuth_deg[k], s.angular_spread_deg);
            r = (1.0 - s.diffuse_eps) * r + s.diffuse_eps * eye_n;
            tx_sqrt.push_back(detail::psd_sqrt(r));
            rx_sqrt.push_back(detail::psd_sqrt(detail::isotropic_rx_correlation(s.rx_antennas[k])));
        }
    }
};

namespace detail {

inline bool full_row_rank(const arma::cx_mat &h, double tol = kRankTol) {
    arma::vec s = arma::svd(h);
    return s.n_elem == h.n_rows && s.min() > tol * s.max();
}

inline arma::cx_mat draw_user_channel(const scenario &sc, const channel_model_cache &cache,
                                      arma::uword user, std::mt19937_64 &eng) {
    const arma::uword mk = sc.rx_antennas[user];
    if (sc.channel_model == channel_model_kind::geo_corr) {
        arma::cx_mat w = randn_circular(eng, mk, sc.num_tx);
        return cache.rx_sqrt[user] * w * cache.tx_sqrt[user];
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
    std::vector<double> dep(sc.n_paths), arr(sc.n_paths);
    std::vector<std::complex<double>> g(sc.n_paths);
    for (arma::uword p = 0; p < sc.n_paths; ++p) {
        dep[p] = sc.azimuth_deg[user] + (unit(eng) - 0.5) * sc.angular_spread_deg;
        arr[p] = unit(eng) * 360.0;
        g[p] = std::complex<double>(gauss(eng), gauss(eng));
    }
    return ray_channel(sc.num_tx, mk, dep, arr, g);
}

} // namespace detail

// True channels for one trial. Row-rank deficiency triggers a redraw from
// the same substream; after 100 attempts the scenario is declared degenerate.
inline channel_set generate_channels(const scenario &sc, const channel_model_cache &cache,
                                     const trial_rng &rng) {
    channel_set out;
    out.h.reserve(sc.num_users);
    out.loss.reserve(sc.num_users);
    for (arma::uword k = 0; k < sc.num_users; ++k) {
        std::mt19937_64 eng = rng.stream(k, rng_purpose::channel);
        arma::cx_mat h;
        bool ok = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            h = detail::draw_user_channel(sc, cache, k, eng);
            if (detail::full_row_rank(h)) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw rank_deficiency_persistent("user " + std::to_string(k) +
                                             ": no full-row-rank channel in 100 attempts (degenerate scenario)");
        out.h.push_back(std::move(h));
        out.loss.push_back(path_loss(sc.distance_m[k]));
    }
    return out;
}

inline channel_set generate_channels(const scenario &sc, const trial_rng &rng) {
    return generate_channels(sc, channel_model_cache(sc), rng);
}

// Hbar_k = H_k + Delta_k with Delta entries iid CN(0, mu2_k), drawn from the
// per-(trial, user) csi_error substream and scaled by mu. Re-invoking with a
// different mu2 rescales the same underlying draws, so sweeping an error
// variance never changes the error "direction" (common random numbers).
inline csi_set apply_csi_error(const channel_set &ch, const std::vector<double> &mu2,
                               const std::vector<bool> &perfect_mask, const trial_rng &rng) {
    const arma::uword k_users = ch.h.size();
    csi_set out;
    out.loss = ch.loss;
    out.perfect.assign(k_users, false);
    for (arma::uword k = 0; k < k_users; ++k) {
        const bool masked = k < perfect_mask.size() && perfect_mask[k];
        out.perfect[k] = masked;
        std::mt19937_64 eng = rng.stream(k, rng_purpose::csi_error);
        arma::cx_mat unit = randn_circular(eng, ch.h[k].n_rows, ch.h[k].n_cols);
        arma::cx_mat delta = masked ? arma::cx_mat(ch.h[k].n_rows, ch.h[k].n_cols, arma::fill::zeros)
                                    : arma::cx_mat(std::sqrt(mu2[k]) * unit);
        out.hbar.push_back(ch.h[k] + delta);
        out.delta.push_back(std::move(delta));
    }
    return out;
}

// Perfect-CSI view of a channel set (Hbar = H exactly).
inline csi_set perfect_csi(const channel_set &ch) {
    csi_set out;
    out.loss = ch.loss;
    for (const auto &h : ch.h) {
        out.hbar.push_back(h);
        out.delta.push_back(arma::cx_mat(h.n_rows, h.n_cols, arma::fill::zeros));
        out.perfect.push_back(true);
    }
    return out;
}

} // namespace mimo
