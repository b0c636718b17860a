#include <catch2/catch_amalgamated.hpp>

#include <armadillo>
#include <sstream>

#include "mimo/channel.hpp"
#include "mimo/scenario.hpp"

using namespace mimo;

namespace {

scenario desk_like(arma::uword k = 4, arma::uword n = 16, channel_model_kind model = channel_model_kind::geo_corr) {
    scenario s;
    s.num_users = k;
    s.num_tx = n;
    s.rx_antennas.assign(k, 2);
    s.pt_dbm = 30.0;
    s.sigma2_dbm = -35.0;
    s.distance_m.assign(k, 50.0);
    s.azimuth_deg.assign(k, 0.0);
    for (arma::uword i = 0; i < k; ++i)
        s.azimuth_deg[i] = -30.0 + 20.0 * static_cast<double>(i);
    s.mu2.assign(k, 1e-2);
    s.seed = 7;
    s.n_trials = 1;
    s.channel_model = model;
    s.validate();
    return s;
}

} // namespace

TEST_CASE("dbm_to_linear") {
    CHECK(dbm_to_linear(30.0) == Catch::Approx(1000.0));
    CHECK(dbm_to_linear(0.0) == Catch::Approx(1.0));
    CHECK(dbm_to_linear(-35.0) == Catch::Approx(3.1622776601683794e-4).epsilon(1e-12));
}

TEST_CASE("path_loss is the squared distance") {
    CHECK(path_loss(50.0) == Catch::Approx(2500.0));
    CHECK(path_loss(250.0) == Catch::Approx(62500.0));
    CHECK(path_loss(1.0) == Catch::Approx(1.0));
    CHECK(path_loss(10.0) < path_loss(20.0));
}

TEST_CASE("single-path ray channel closed form") {
    // one path, unit gain, broadside: the row is sqrt(N) a_t^H, every entry
    // has unit magnitude and the total energy is N.
    const arma::uword n = 8;
    const arma::cx_mat h = ray_channel(n, 1, {0.0}, {0.0}, {std::complex<double>(1.0, 0.0)});
    REQUIRE(h.n_rows == 1);
    for (arma::uword i = 0; i < n; ++i)
        CHECK(std::abs(h(0, i)) == Catch::Approx(1.0).epsilon(1e-12));
    const double f = arma::norm(h, "fro");
    CHECK(f * f == Catch::Approx(static_cast<double>(n)).epsilon(1e-12));

    const arma::cx_vec a = std::sqrt(static_cast<double>(n)) * steering(n, 0.0);
    CHECK(arma::norm(arma::cx_mat(h - a.t()), "fro") < 1e-12);
}

TEST_CASE("channel energy matches N*M_k on average", "[montecarlo]") {
    for (auto model : {channel_model_kind::ray, channel_model_kind::geo_corr}) {
        scenario s = desk_like(2, 16, model);
        const channel_model_cache cache(s);
        double acc = 0.0;
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            const channel_set ch = generate_channels(s, cache, trial_rng(s.seed, t));
            const double f = arma::norm(ch.h[0], "fro");
            acc += f * f;
        }
        const double want = static_cast<double>(s.num_tx * s.rx_antennas[0]);
        CHECK(std::abs(acc / trials / want - 1.0) < 0.05);
    }
}

TEST_CASE("paired users have strongly overlapping row spaces", "[montecarlo]") {
    scenario s;
    s.num_users = 2;
    s.num_tx = 128;
    s.rx_antennas.assign(2, 2);
    s.pt_dbm = 30.0;
    s.sigma2_dbm = -35.0;
    s.distance_m.assign(2, 50.0);
    s.azimuth_deg = {10.0, 10.5};
    s.mu2.assign(2, 0.0);
    s.seed = 3;
    s.n_trials = 1;
    const channel_model_cache cache(s);
    double acc = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const channel_set ch = generate_channels(s, cache, trial_rng(s.seed, t));
        arma::cx_mat u1, v1, u2, v2;
        arma::vec s1, s2;
        REQUIRE(arma::svd(u1, s1, v1, ch.h[0]));
        REQUIRE(arma::svd(u2, s2, v2, ch.h[1]));
        const arma::cx_mat rs1 = v1.cols(0, 1), rs2 = v2.cols(0, 1);
        acc += arma::svd(arma::cx_mat(rs1.t() * rs2)).max();
    }
    CHECK(acc / trials >= 0.9);
}

TEST_CASE("generated channels always have full row rank") {
    for (auto model : {channel_model_kind::ray, channel_model_kind::geo_corr}) {
        scenario s = desk_like(4, 16, model);
        const channel_model_cache cache(s);
        for (int t = 0; t < 20; ++t) {
            const channel_set ch = generate_channels(s, cache, trial_rng(s.seed, t));
            for (const auto &h : ch.h) {
                const arma::vec sv = arma::svd(h);
                CHECK(sv.min() > kRankTol * sv.max());
            }
        }
    }
}

TEST_CASE("rank deficiency is reported for degenerate ray scenarios") {
    scenario s = desk_like(1, 8, channel_model_kind::ray);
    s.n_paths = 1;   // one path cannot support two receive dimensions
    s.rx_antennas = {2};
    s.azimuth_deg = {0.0};
    s.distance_m = {50.0};
    s.mu2 = {0.0};
    const channel_model_cache cache(s);
    CHECK_THROWS_AS(generate_channels(s, cache, trial_rng(1, 0)), rank_deficiency_persistent);
}

TEST_CASE("csi error statistics and masking") {
    scenario s = desk_like();
    const channel_model_cache cache(s);
    const channel_set ch = generate_channels(s, cache, trial_rng(s.seed, 0));

    SECTION("zero variance reproduces the channel exactly") {
        const csi_set csi = apply_csi_error(ch, std::vector<double>(4, 0.0), {}, trial_rng(s.seed, 0));
        for (arma::uword k = 0; k < 4; ++k)
            CHECK(arma::norm(arma::cx_mat(csi.hbar[k] - ch.h[k]), "fro") == 0.0);
    }

    SECTION("perfect mask zeroes exactly the masked user") {
        std::vector<bool> mask = {true, false, false, false};
        const csi_set csi = apply_csi_error(ch, s.mu2, mask, trial_rng(s.seed, 0));
        CHECK(arma::norm(csi.delta[0], "fro") == 0.0);
        for (arma::uword k = 1; k < 4; ++k)
            CHECK(arma::norm(csi.delta[k], "fro") > 0.0);
        CHECK(csi.perfect[0]);
    }

    SECTION("hbar = h + delta exactly") {
        const csi_set csi = apply_csi_error(ch, s.mu2, {}, trial_rng(s.seed, 0));
        for (arma::uword k = 0; k < 4; ++k)
            CHECK(arma::norm(arma::cx_mat(csi.hbar[k] - (ch.h[k] + csi.delta[k])), "fro") == 0.0);
    }

    SECTION("empirical per-entry variance within 5%", "[montecarlo]") {
        double acc = 0.0;
        arma::uword n_entries = 0;
        for (int t = 0; t < 200; ++t) {
            const csi_set csi = apply_csi_error(ch, std::vector<double>(4, 1e-2), {}, trial_rng(s.seed + 11, t));
            const double f = arma::norm(csi.delta[0], "fro");
            acc += f * f;
            n_entries += csi.delta[0].n_elem;
        }
        CHECK(std::abs(acc / static_cast<double>(n_entries) / 1e-2 - 1.0) < 0.05);
    }

    SECTION("rescaling the variance rescales the same draws") {
        const csi_set a = apply_csi_error(ch, std::vector<double>(4, 1e-2), {}, trial_rng(s.seed, 0));
        const csi_set b = apply_csi_error(ch, std::vector<double>(4, 1e-4), {}, trial_rng(s.seed, 0));
        CHECK(arma::norm(arma::cx_mat(a.delta[1] - 10.0 * b.delta[1]), "fro") /
                  arma::norm(a.delta[1], "fro") < 1e-12);
    }
}

TEST_CASE("reproducibility: identical scenario gives identical realizations") {
    scenario s = desk_like();
    const channel_model_cache c1(s), c2(s);
    const channel_set a = generate_channels(s, c1, trial_rng(s.seed, 5));
    const channel_set b = generate_channels(s, c2, trial_rng(s.seed, 5));
    for (arma::uword k = 0; k < s.num_users; ++k)
        CHECK(arma::norm(arma::cx_mat(a.h[k] - b.h[k]), "fro") == 0.0);

    // changing one user's error variance leaves H and other users' errors alone
    const csi_set ca = apply_csi_error(a, {1e-2, 1e-2, 1e-2, 1e-2}, {}, trial_rng(s.seed, 5));
    const csi_set cb = apply_csi_error(a, {1e-6, 1e-2, 1e-2, 1e-2}, {}, trial_rng(s.seed, 5));
    for (arma::uword k = 1; k < 4; ++k)
        CHECK(arma::norm(arma::cx_mat(ca.delta[k] - cb.delta[k]), "fro") == 0.0);
}

TEST_CASE("scenario parsing") {
    SECTION("auto geometry, broadcast scalars") {
        std::istringstream in(
            "# comment\n"
            "K = 4\nN = 16\nM_k = 2\nP_T_dbm = 30\nsigma2_dbm = -35\n"
            "d_k = auto\ntheta_k = auto\nmu2_k = 1e-2\nseed = 9\nn_trials = 10\n"
            "sector = 60\npaired_offset = 0.5\n");
        const scenario s = parse_scenario(in);
        CHECK(s.num_users == 4);
        CHECK(s.distance_m[0] == Catch::Approx(50.0));
        CHECK(s.distance_m[2] == Catch::Approx(250.0));
        CHECK(s.azimuth_deg[2] == Catch::Approx(s.azimuth_deg[0] + 0.5));
        CHECK(s.mu2[3] == Catch::Approx(1e-2));
    }

    SECTION("unknown key is an error naming the key") {
        std::istringstream in("K = 2\nN = 4\nM_k = 1\nP_T_dbm = 30\nsigma2_dbm = -35\n"
                              "d_k = 50\ntheta_k = 0\nmu2_k = 0\nseed = 1\nn_trials = 1\nbogus = 3\n");
        CHECK_THROWS_WITH(parse_scenario(in), Catch::Matchers::ContainsSubstring("bogus"));
    }

    SECTION("missing key is an error naming the key") {
        std::istringstream in("K = 2\nN = 4\nM_k = 1\nP_T_dbm = 30\nsigma2_dbm = -35\n"
                              "d_k = 50\ntheta_k = 0\nmu2_k = 0\nseed = 1\n");
        CHECK_THROWS_WITH(parse_scenario(in), Catch::Matchers::ContainsSubstring("n_trials"));
    }

    SECTION("overloaded system rejected") {
        std::istringstream in("K = 4\nN = 4\nM_k = 2\nP_T_dbm = 30\nsigma2_dbm = -35\n"
                              "d_k = 50\ntheta_k = 0\nmu2_k = 0\nseed = 1\nn_trials = 1\n");
        CHECK_THROWS_AS(parse_scenario(in), config_error);
    }

    SECTION("explicit regularization diagonal") {
        std::istringstream in("K = 2\nN = 4\nM_k = 1\nP_T_dbm = 30\nsigma2_dbm = -35\n"
                              "d_k = 50\ntheta_k = 0,1\nmu2_k = 0\nseed = 1\nn_trials = 1\n"
                              "reg_matrix_policy = explicit:1,0.5\n");
        const scenario s = parse_scenario(in);
        CHECK(s.reg_policy == reg_policy_kind::explicit_diag);
        REQUIRE(s.reg_explicit_diag.size() == 2);
        CHECK(s.reg_explicit_diag[1] == Catch::Approx(0.5));
    }
}
