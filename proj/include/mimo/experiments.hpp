#pragma once

#include <armadillo>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mimo/channel.hpp"
#include "mimo/metrics.hpp"
#include "mimo/precoding.hpp"
#include "mimo/scenario.hpp"

// Experiment drivers behind the CLI: the sum-rate sweep over transmit power,
// the CSI-error interference sweep, and the cross-module property suite.
// Output rows are deterministic functions of (config, seed); CSV formatting
// uses %.17g so reruns are byte-identical.

namespace mimo {

inline const std::vector<std::string> kAllSchemes = {"srzf", "zf", "rzf", "wf", "bd", "sns_fixed"};

struct sumrate_row {
    std::string scheme;
    double pt_dbm = 0.0;
    std::string csi_mode;
    double mean_sr_bits = 0.0;
    double stderr_sr_bits = 0.0;
    arma::uword trials = 0;    // successful trials behind the mean
    arma::uword failures = 0;  // per-trial construction failures
};

struct prop2_row {
    double mu2 = 0.0;
    double gap_min = 0.0;
    double gap_mean = 0.0;
    double gap_max = 0.0;
    double ub_mean = 0.0;
    arma::uword trials = 0;
};

struct experiment_result {
    std::string tag;
    std::uint64_t seed = 0;
    arma::uword trials = 0;
    double wall_seconds = 0.0;
    std::vector<sumrate_row> sumrate;
    std::vector<prop2_row> prop2;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Stack-position alpha vector per the scenario policy (explicit lists are
// indexed by original user).
inline arma::vec stack_alphas(const scenario &sc, const stacked_csi &st, double pt_mw, double sigma2_mw) {
    arma::vec a(st.users());
    if (sc.alpha_policy == alpha_policy_kind::explicit_list) {
        for (arma::uword i = 0; i < st.users(); ++i)
            a(i) = sc.alpha_explicit[st.perm[i]];
    } else {
        a.fill(default_alpha(st.streams(), sigma2_mw, pt_mw));
    }
    return a;
}

inline regularization_plan make_plan(const scenario &sc, const stacked_csi &st, const arma::vec &alphas) {
    switch (sc.reg_policy) {
    case reg_policy_kind::identity:
        return identity_plan(st, alphas);
    case reg_policy_kind::explicit_diag:
        return explicit_plan(st, alphas, arma::vec(sc.reg_explicit_diag));
    default:
        return successive_plan(st, alphas);
    }
}

inline precoder_set build_scheme(const std::string &name, const scenario &sc, const stacked_csi &st,
                                 double pt_mw, double sigma2_mw) {
    if (name == "srzf")
        return srzf(st, make_plan(sc, st, stack_alphas(sc, st, pt_mw, sigma2_mw)), pt_mw);
    if (name == "zf")
        return zf(st, pt_mw);
    if (name == "rzf")
        return rzf(st, default_alpha(st.streams(), sigma2_mw, pt_mw), pt_mw);
    if (name == "wf")
        return wf(st, pt_mw, sigma2_mw);
    if (name == "bd")
        return bd(st, pt_mw);
    if (name == "sns_fixed")
        return sns_fixed(st, pt_mw);
    throw config_error("unknown scheme: " + name);
}

} // namespace detail

// Average sum rate per (scheme, transmit power, CSI mode). Channel and error
// realizations are shared across the whole P_T grid and across schemes
// (common random numbers); the regularization constant is recomputed per
// P_T point. Per-trial construction failures are counted, not fatal.
inline experiment_result run_sumrate_sweep(const scenario &sc, const std::vector<std::string> &schemes,
                                           const std::vector<double> &pt_grid_dbm, arma::uword trials) {
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma2 = dbm_to_linear(sc.sigma2_dbm);
    const channel_model_cache cache(sc);
    const std::vector<std::string> modes = {"perfect", "imperfect"};

    std::map<std::tuple<std::string, double, std::string>, std::vector<double>> samples;
    std::map<std::tuple<std::string, double, std::string>, arma::uword> failures;
    for (const auto &s : schemes)
        for (double pt : pt_grid_dbm)
            for (const auto &m : modes) {
                samples[{s, pt, m}] = {};
                failures[{s, pt, m}] = 0;
            }

    for (arma::uword t = 0; t < trials; ++t) {
        const trial_rng rng(sc.seed, t);
        const channel_set ch = generate_channels(sc, cache, rng);
        const csi_set csi_imp = apply_csi_error(ch, sc.mu2, {}, rng);
        const csi_set csi_perf = perfect_csi(ch);
        for (const auto &mode : modes) {
            const csi_set &csi = mode == "perfect" ? csi_perf : csi_imp;
            for (double pt_dbm : pt_grid_dbm) {
                const double pt = dbm_to_linear(pt_dbm);
                const auto perm = order_users(csi, pt, sigma2);
                const stacked_csi st = stack_csi(csi, perm);
                for (const auto &scheme : schemes) {
                    try {
                        const precoder_set ps = detail::build_scheme(scheme, sc, st, pt, sigma2);
                        samples[{scheme, pt_dbm, mode}].push_back(sum_rate(ch, ps, sigma2).sum_rate_bits);
                    } catch (const not_positive_definite &) {
                        ++failures[{scheme, pt_dbm, mode}];
                    } catch (const insufficient_null_space &) {
                        ++failures[{scheme, pt_dbm, mode}];
                    } catch (const zero_direction &) {
                        ++failures[{scheme, pt_dbm, mode}];
                    }
                }
            }
        }
    }

    experiment_result res;
    res.tag = "sumrate";
    res.seed = sc.seed;
    res.trials = trials;
    for (const auto &scheme : schemes) {
        for (double pt : pt_grid_dbm) {
            for (const auto &mode : modes) {
                const auto &v = samples[{scheme, pt, mode}];
                sumrate_row row;
                row.scheme = scheme;
                row.pt_dbm = pt;
                row.csi_mode = mode;
                row.trials = v.size();
                row.failures = failures[{scheme, pt, mode}];
                if (!v.empty()) {
                    const arma::vec x(v);
                    row.mean_sr_bits = arma::mean(x);
                    row.stderr_sr_bits = v.size() > 1 ? arma::stddev(x) / std::sqrt(static_cast<double>(v.size())) : 0.0;
                }
                res.sumrate.push_back(std::move(row));
            }
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Min/mean/max measured interference gap and mean analytical bound per CSI
// error variance, for the swept user.
inline experiment_result run_prop2_sweep(const scenario &sc, arma::uword user_k,
                                         const std::vector<double> &mu2_grid, arma::uword trials) {
    const auto t0 = std::chrono::steady_clock::now();
    const channel_model_cache cache(sc);
    const auto records = prop2_experiment(sc, cache, user_k, mu2_grid, trials);

    experiment_result res;
    res.tag = "prop2";
    res.seed = sc.seed;
    res.trials = trials;
    for (double mu2 : mu2_grid) {
        prop2_row row;
        row.mu2 = mu2;
        row.gap_min = arma::datum::inf;
        arma::uword n = 0;
        double gap_acc = 0.0, ub_acc = 0.0;
        for (const auto &rec : records) {
            if (rec.mu2 != mu2)
                continue;
            ++n;
            gap_acc += rec.measured_gap;
            ub_acc += rec.upper_bound;
            row.gap_min = std::min(row.gap_min, rec.measured_gap);
            row.gap_max = std::max(row.gap_max, rec.measured_gap);
        }
        row.trials = n;
        row.gap_mean = n ? gap_acc / n : 0.0;
        row.ub_mean = n ? ub_acc / n : 0.0;
        if (!n)
            row.gap_min = 0.0;
        res.prop2.push_back(std::move(row));
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline void write_csv(const experiment_result &res, std::ostream &out) {
    if (res.tag == "sumrate") {
        out << "scheme,pt_dbm,csi_mode,mean_sr_bits,stderr_sr_bits,trials,failures\n";
        for (const auto &r : res.sumrate)
            out << r.scheme << ',' << detail::fmt_double(r.pt_dbm) << ',' << r.csi_mode << ','
                << detail::fmt_double(r.mean_sr_bits) << ',' << detail::fmt_double(r.stderr_sr_bits) << ','
                << r.trials << ',' << r.failures << '\n';
    } else if (res.tag == "prop2") {
        out << "mu2,gap_min,gap_mean,gap_max,ub_mean,trials\n";
        for (const auto &r : res.prop2)
            out << detail::fmt_double(r.mu2) << ',' << detail::fmt_double(r.gap_min) << ','
                << detail::fmt_double(r.gap_mean) << ',' << detail::fmt_double(r.gap_max) << ','
                << detail::fmt_double(r.ub_mean) << ',' << r.trials << '\n';
    }
}

inline void write_csv(const experiment_result &res, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open output file: " + path);
    write_csv(res, f);
}

// Cross-module invariant suite on the configured scenario. Prints one
// PASS/FAIL line per check; returns false if anything failed. Checks that
// probe exact identities run on well-conditioned iid instances at the
// scenario's dimensions so tolerances are meaningful; Monte-Carlo checks use
// the scenario's own channel model.
inline bool run_property_suite(const scenario &sc, std::ostream &out) {
    bool all_ok = true;
    const double sigma2 = dbm_to_linear(sc.sigma2_dbm);
    const double pt = dbm_to_linear(sc.pt_dbm);
    const arma::uword k_users = sc.num_users;
    auto report = [&](const std::string &name, bool ok, const std::string &detail) {
        out << (ok ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
        all_ok = all_ok && ok;
    };
    auto iid_channels = [&](std::uint64_t seed_offset) {
        channel_set ch;
        trial_rng rng(sc.seed + seed_offset, 0);
        for (arma::uword k = 0; k < k_users; ++k) {
            std::mt19937_64 eng = rng.stream(k, rng_purpose::channel);
            ch.h.push_back(randn_circular(eng, sc.rx_antennas[k], sc.num_tx));
            ch.loss.push_back(path_loss(sc.distance_m[k]));
        }
        return ch;
    };

    // Perfect-CSI interference identity, successive regularization.
    {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 10; ++i) {
            const channel_set ch = iid_channels(1000 + i);
            arma::vec alphas(k_users);
            alphas.fill(default_alpha(sc.total_rx(), sigma2, pt));
            worst = std::max(worst, prop1_residuals(ch, reg_policy_kind::successive_j, alphas, pt).max());
        }
        report("prop1-residuals", worst <= 1e-8, "max residual " + detail::fmt_double(worst) + " over 10 iid instances");
    }

    // Imperfect-CSI bound: no per-pair violation over Monte-Carlo trials.
    {
        const channel_model_cache cache(sc);
        const arma::uword trials = std::min<arma::uword>(sc.n_trials, 50);
        const auto records = prop2_experiment(sc, cache, 0, {sc.mu2[0]}, trials);
        arma::uword violations = 0, pairs = 0;
        for (const auto &rec : records)
            for (arma::uword i = 0; i < rec.pair_measured.n_elem; ++i) {
                ++pairs;
                if (rec.pair_measured(i) > rec.pair_bound(i) + 1e-8 * rec.pair_bound(i))
                    ++violations;
            }
        report("prop2-zero-violation", violations == 0,
               std::to_string(violations) + " violations over " + std::to_string(pairs) + " (trial, pair) cases");
    }

    // Power budget and FPA equal column norms across all schemes.
    {
        double worst_total = 0.0, worst_col = 0.0;
        const channel_set ch = iid_channels(2000);
        const csi_set csi = perfect_csi(ch);
        const stacked_csi st = stack_csi(csi, order_users(csi, pt, sigma2));
        for (const auto &scheme : kAllSchemes) {
            const precoder_set ps = detail::build_scheme(scheme, sc, st, pt, sigma2);
            worst_total = std::max(worst_total, std::abs(total_power(ps.precoder) - pt) / pt);
            if (scheme == "wf")
                continue;
            const double per_col = pt / static_cast<double>(st.streams());
            for (const auto &p : ps.precoder)
                for (arma::uword l = 0; l < p.n_cols; ++l) {
                    const double cp = std::norm(arma::norm(p.col(l)));
                    worst_col = std::max(worst_col, std::abs(cp - per_col) / per_col);
                }
        }
        report("power-budget", worst_total <= 1e-10, "worst relative total error " + detail::fmt_double(worst_total));
        report("fpa-equal-norm", worst_col <= 1e-12, "worst relative column error " + detail::fmt_double(worst_col));
    }

    // Degeneracy chain: srzf(alpha=0) = zf directions, srzf(identity) = rzf.
    {
        const channel_set ch = iid_channels(3000);
        const csi_set csi = perfect_csi(ch);
        const stacked_csi st = stack_csi(csi);
        const double alpha = default_alpha(st.streams(), sigma2, pt);
        const precoder_set a = srzf(st, successive_plan(st, arma::vec(k_users, arma::fill::zeros)), pt);
        const precoder_set b = zf(st, pt);
        const precoder_set c = srzf(st, identity_plan(st, arma::vec(k_users, arma::fill::value(alpha))), pt);
        const precoder_set d = rzf(st, alpha, pt);
        double dev_zf = 0.0, dev_rzf = 0.0;
        for (arma::uword k = 0; k < k_users; ++k) {
            dev_zf = std::max(dev_zf, arma::norm(a.precoder[k] - b.precoder[k], "fro") /
                                          arma::norm(b.precoder[k], "fro"));
            dev_rzf = std::max(dev_rzf, arma::norm(c.precoder[k] - d.precoder[k], "fro") /
                                            arma::norm(d.precoder[k], "fro"));
        }
        report("degeneracy-srzf-zf", dev_zf <= 1e-9, "max relative deviation " + detail::fmt_double(dev_zf));
        report("degeneracy-srzf-rzf", dev_rzf <= 1e-9, "max relative deviation " + detail::fmt_double(dev_rzf));
    }

    // Null-space orthonormality and annihilation on the scenario's own model.
    {
        const channel_model_cache cache(sc);
        const channel_set ch = generate_channels(sc, cache, trial_rng(sc.seed + 4000, 0));
        const csi_set csi = perfect_csi(ch);
        const stacked_csi st = stack_csi(csi);
        double worst_orth = 0.0, worst_ann = 0.0;
        for (arma::uword k = 1; k < std::min<arma::uword>(k_users, 4); ++k) {
            const arma::cx_mat a = st.hbar.rows(0, st.offsets[k] - 1);
            const arma::cx_mat b = nullspace_basis(a);
            if (b.n_cols == 0)
                continue;
            worst_orth = std::max(worst_orth,
                                  arma::norm(arma::cx_mat(b.t() * b -
                                                          arma::cx_mat(arma::eye<arma::mat>(b.n_cols, b.n_cols),
                                                                       arma::mat(b.n_cols, b.n_cols, arma::fill::zeros))),
                                             "fro"));
            const double smax = arma::svd(a).max();
            for (arma::uword i = 0; i < b.n_cols; ++i)
                worst_ann = std::max(worst_ann, arma::norm(a * b.col(i)) / (10.0 * kRankTol * smax));
        }
        report("nullspace-orthonormal", worst_orth <= 1e-10, "worst ||B^H B - I|| " + detail::fmt_double(worst_orth));
        report("nullspace-annihilation", worst_ann <= 1.0,
               "worst ||A b|| / (10 tol sigma_max) " + detail::fmt_double(worst_ann));
    }

    // Forced degeneracy: duplicated user rows with zero regularization must
    // surface as not_positive_definite on the zf path.
    {
        channel_set ch = iid_channels(5000);
        ch.h[k_users - 1] = ch.h[0];
        const csi_set csi = perfect_csi(ch);
        const stacked_csi st = stack_csi(csi);
        bool threw = false;
        try {
            zf(st, pt);
        } catch (const not_positive_definite &) {
            threw = true;
        }
        report("rank-deficiency-detected", threw, "duplicated user rows, alpha = 0");
    }

    return all_ok;
}

} // namespace mimo
