#pragma once

#include <algorithm>
#include <armadillo>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mimo/errors.hpp"

namespace mimo {

enum class alpha_policy_kind { paper_default, explicit_list };
enum class reg_policy_kind { successive_j, identity, explicit_diag };
enum class channel_model_kind { geo_corr, ray };

// Full experiment description: dimensions, geometry, powers, error
// variances, regularization policies, seed and trial count.
//
// Loaded from a plain-text key-value file (one `key = value` per line,
// `#` comments). Angles are degrees, powers dBm, distances meters.
// List fields take comma-separated values; a single value broadcasts to
// all K users; `d_k = auto` / `theta_k = auto` synthesize the paired
// near/far geometry (first K/2 users across the sector at 50 m, user
// K/2+j at theta_j + paired_offset at 250 m).
struct scenario {
    arma::uword num_users = 0;               // K
    arma::uword num_tx = 0;                  // N (BS antennas)
    std::vector<arma::uword> rx_antennas;    // M_k per user
    double pt_dbm = 0.0;                     // default transmit power
    double sigma2_dbm = 0.0;                 // noise power
    std::vector<double> distance_m;          // d_k
    std::vector<double> azimuth_deg;         // theta_k
    double angular_spread_deg = 0.5;
    double paired_offset_deg = 0.5;
    arma::uword n_paths = 10;                // finite-ray model only
    std::vector<double> mu2;                 // CSI error variance per user
    alpha_policy_kind alpha_policy = alpha_policy_kind::paper_default;
    std::vector<double> alpha_explicit;      // used when alpha_policy == explicit_list
    reg_policy_kind reg_policy = reg_policy_kind::successive_j;
    std::vector<double> reg_explicit_diag;   // length M, shared by all users
    std::uint64_t seed = 1;
    arma::uword n_trials = 1;
    channel_model_kind channel_model = channel_model_kind::geo_corr;
    double sector_deg = 120.0;               // azimuth synthesis span
    double diffuse_eps = 1e-10;              // geo_corr diffuse floor

    arma::uword total_rx() const {
        arma::uword m = 0;
        for (auto mk : rx_antennas)
            m += mk;
        return m;
    }

    void validate() const {
        if (num_users < 1)
            throw config_error("K: must be >= 1");
        if (rx_antennas.size() != num_users || distance_m.size() != num_users ||
            azimuth_deg.size() != num_users || mu2.size() != num_users)
            throw config_error("per-user list length does not match K");
        if (num_tx < total_rx())
            throw config_error("N: system must be underloaded or critically loaded (N >= sum M_k)");
        for (double d : distance_m)
            if (!(d > 0.0))
                throw config_error("d_k: distances must be positive");
        for (double m : mu2)
            if (m < 0.0)
                throw config_error("mu2_k: variances must be nonnegative");
        if (n_paths < 1)
            throw config_error("n_paths: must be >= 1");
        if (n_trials < 1)
            throw config_error("n_trials: must be >= 1");
        if (alpha_policy == alpha_policy_kind::explicit_list && alpha_explicit.size() != num_users)
            throw config_error("alpha_policy: explicit list length must be K");
        if (reg_policy == reg_policy_kind::explicit_diag && reg_explicit_diag.size() != total_rx())
            throw config_error("reg_matrix_policy: explicit diagonal length must be M");
        if (diffuse_eps < 0.0 || diffuse_eps >= 1.0)
            throw config_error("diffuse_eps: must be in [0, 1)");
    }
};

namespace detail {

inline std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception &) {
        throw config_error(key + ": cannot parse '" + v + "' as a number");
    }
}

inline std::uint64_t parse_uint(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return u;
    } catch (const std::exception &) {
        throw config_error(key + ": cannot parse '" + v + "' as an unsigned integer");
    }
}

// Single value broadcasts to K entries, otherwise the list must have K.
inline std::vector<double> parse_per_user(const std::string &key, const std::string &v, arma::uword k) {
    auto items = split_csv(v);
    std::vector<double> out;
    for (auto &it : items)
        out.push_back(parse_double(key, it));
    if (out.size() == 1)
        out.assign(k, out[0]);
    if (out.size() != k)
        throw config_error(key + ": expected 1 or K=" + std::to_string(k) + " values, got " +
                           std::to_string(out.size()));
    return out;
}

} // namespace detail

// Synthesized paired geometry: near users uniformly across the sector,
// far partner offset by paired_offset at five times the distance.
inline void synthesize_geometry(scenario &s, bool auto_d, bool auto_theta) {
    if (s.num_users % 2 != 0)
        throw config_error("theta_k/d_k: 'auto' geometry requires an even K");
    const arma::uword half = s.num_users / 2;
    for (arma::uword j = 0; j < half; ++j) {
        double th = -s.sector_deg / 2.0 + s.sector_deg * (static_cast<double>(j) + 0.5) / static_cast<double>(half);
        if (auto_theta) {
            s.azimuth_deg[j] = th;
            s.azimuth_deg[half + j] = th + s.paired_offset_deg;
        }
        if (auto_d) {
            s.distance_m[j] = 50.0;
            s.distance_m[half + j] = 250.0;
        }
    }
}

inline scenario parse_scenario(std::istream &in) {
    static const std::set<std::string> known = {
        "K", "N", "M_k", "P_T_dbm", "sigma2_dbm", "d_k", "theta_k",
        "angular_spread", "paired_offset", "n_paths", "mu2_k", "alpha_policy",
        "reg_matrix_policy", "seed", "n_trials", "channel_model", "sector", "diffuse_eps"};
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("malformed line (expected 'key = value'): " + line);
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (!known.count(key))
            throw config_error("unknown key: " + key);
        if (kv.count(key))
            throw config_error("duplicate key: " + key);
        kv[key] = val;
    }
    for (const char *req : {"K", "N", "M_k", "P_T_dbm", "sigma2_dbm", "d_k", "theta_k", "mu2_k", "seed", "n_trials"})
        if (!kv.count(req))
            throw config_error(std::string("missing required key: ") + req);

    scenario s;
    s.num_users = detail::parse_uint("K", kv["K"]);
    s.num_tx = detail::parse_uint("N", kv["N"]);
    {
        auto mk = detail::parse_per_user("M_k", kv["M_k"], s.num_users);
        for (double m : mk) {
            if (m < 1.0 || m != std::floor(m))
                throw config_error("M_k: entries must be positive integers");
            s.rx_antennas.push_back(static_cast<arma::uword>(m));
        }
    }
    s.pt_dbm = detail::parse_double("P_T_dbm", kv["P_T_dbm"]);
    s.sigma2_dbm = detail::parse_double("sigma2_dbm", kv["sigma2_dbm"]);
    if (kv.count("angular_spread"))
        s.angular_spread_deg = detail::parse_double("angular_spread", kv["angular_spread"]);
    if (kv.count("paired_offset"))
        s.paired_offset_deg = detail::parse_double("paired_offset", kv["paired_offset"]);
    if (kv.count("n_paths"))
        s.n_paths = detail::parse_uint("n_paths", kv["n_paths"]);
    if (kv.count("sector"))
        s.sector_deg = detail::parse_double("sector", kv["sector"]);
    if (kv.count("diffuse_eps"))
        s.diffuse_eps = detail::parse_double("diffuse_eps", kv["diffuse_eps"]);
    if (kv.count("channel_model")) {
        if (kv["channel_model"] == "geo_corr")
            s.channel_model = channel_model_kind::geo_corr;
        else if (kv["channel_model"] == "ray")
            s.channel_model = channel_model_kind::ray;
        else
            throw config_error("channel_model: expected geo_corr or ray");
    }

    const bool auto_d = kv["d_k"] == "auto";
    const bool auto_theta = kv["theta_k"] == "auto";
    s.distance_m.assign(s.num_users, 0.0);
    s.azimuth_deg.assign(s.num_users, 0.0);
    if (!auto_d)
        s.distance_m = detail::parse_per_user("d_k", kv["d_k"], s.num_users);
    if (!auto_theta)
        s.azimuth_deg = detail::parse_per_user("theta_k", kv["theta_k"], s.num_users);
    if (auto_d || auto_theta)
        synthesize_geometry(s, auto_d, auto_theta);

    s.mu2 = detail::parse_per_user("mu2_k", kv["mu2_k"], s.num_users);

    if (kv.count("alpha_policy")) {
        if (kv["alpha_policy"] == "paper_default") {
            s.alpha_policy = alpha_policy_kind::paper_default;
        } else {
            s.alpha_policy = alpha_policy_kind::explicit_list;
            s.alpha_explicit = detail::parse_per_user("alpha_policy", kv["alpha_policy"], s.num_users);
        }
    }
    if (kv.count("reg_matrix_policy")) {
        const std::string &v = kv["reg_matrix_policy"];
        if (v == "successive_J") {
            s.reg_policy = reg_policy_kind::successive_j;
        } else if (v == "identity") {
            s.reg_policy = reg_policy_kind::identity;
        } else if (v.rfind("explicit:", 0) == 0) {
            s.reg_policy = reg_policy_kind::explicit_diag;
            for (auto &it : detail::split_csv(v.substr(9)))
                s.reg_explicit_diag.push_back(detail::parse_double("reg_matrix_policy", it));
        } else {
            throw config_error("reg_matrix_policy: expected successive_J, identity or explicit:<M values>");
        }
    }
    s.seed = detail::parse_uint("seed", kv["seed"]);
    s.n_trials = detail::parse_uint("n_trials", kv["n_trials"]);

    s.validate();
    return s;
}

inline scenario load_scenario(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw config_error("cannot open config file: " + path);
    return parse_scenario(f);
}

} // namespace mimo
