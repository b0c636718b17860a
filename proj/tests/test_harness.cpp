#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mimo/experiments.hpp"

using namespace mimo;

namespace {

scenario single_user() {
    scenario s;
    s.num_users = 1;
    s.num_tx = 4;
    s.rx_antennas = {1};
    s.pt_dbm = 30.0;
    s.sigma2_dbm = -35.0;
    s.distance_m = {50.0};
    s.azimuth_deg = {0.0};
    s.mu2 = {1e-2};
    s.seed = 5;
    s.n_trials = 8;
    s.validate();
    return s;
}

scenario small_paired() {
    scenario s;
    s.num_users = 4;
    s.num_tx = 12;
    s.rx_antennas.assign(4, 2);
    s.pt_dbm = 30.0;
    s.sigma2_dbm = -35.0;
    s.distance_m.assign(4, 0.0);
    s.azimuth_deg.assign(4, 0.0);
    s.mu2.assign(4, 1e-2);
    s.seed = 21;
    s.n_trials = 16;
    s.sector_deg = 90.0;
    synthesize_geometry(s, true, true);
    s.validate();
    return s;
}

} // namespace

TEST_CASE("single-user config: all schemes coincide") {
    const scenario s = single_user();
    const auto res = run_sumrate_sweep(s, kAllSchemes, {30.0}, s.n_trials);
    double lo = arma::datum::inf, hi = -arma::datum::inf;
    for (const auto &row : res.sumrate) {
        if (row.csi_mode != "perfect")
            continue;
        lo = std::min(lo, row.mean_sr_bits);
        hi = std::max(hi, row.mean_sr_bits);
        CHECK(row.failures == 0);
    }
    CHECK(hi - lo < 1e-6);
}

TEST_CASE("sumrate csv schema and determinism") {
    const scenario s = small_paired();
    const auto r1 = run_sumrate_sweep(s, {"srzf", "zf"}, {20.0, 30.0}, 6);
    const auto r2 = run_sumrate_sweep(s, {"srzf", "zf"}, {20.0, 30.0}, 6);
    std::ostringstream a, b;
    write_csv(r1, a);
    write_csv(r2, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("scheme,pt_dbm,csi_mode,mean_sr_bits,stderr_sr_bits,trials,failures\n", 0) == 0);
    // 2 schemes x 2 powers x 2 modes data rows + header
    arma::uword lines = 0;
    for (char c : a.str())
        if (c == '\n')
            ++lines;
    CHECK(lines == 9);
}

TEST_CASE("changing the seed changes the realizations") {
    scenario s = small_paired();
    const auto r1 = run_sumrate_sweep(s, {"rzf"}, {30.0}, 4);
    s.seed += 1;
    const auto r2 = run_sumrate_sweep(s, {"rzf"}, {30.0}, 4);
    CHECK(r1.sumrate[0].mean_sr_bits != r2.sumrate[0].mean_sr_bits);
}

TEST_CASE("prop2 sweep rows") {
    const scenario s = small_paired();

    SECTION("mu2 = 0 gives an all-zero row") {
        const auto res = run_prop2_sweep(s, 0, {0.0}, 5);
        REQUIRE(res.prop2.size() == 1);
        CHECK(res.prop2[0].gap_max < 1e-12);
        CHECK(res.prop2[0].ub_mean == 0.0);
        CHECK(res.prop2[0].trials == 5);
    }

    SECTION("bound dominates the gap and both grow with the variance") {
        const auto res = run_prop2_sweep(s, 0, {1e-4, 1e-3, 1e-2}, 64);
        REQUIRE(res.prop2.size() == 3);
        for (const auto &row : res.prop2) {
            CHECK(row.gap_mean <= row.ub_mean);
            CHECK(row.gap_min <= row.gap_mean);
            CHECK(row.gap_mean <= row.gap_max);
        }
        CHECK(res.prop2[0].gap_mean <= res.prop2[1].gap_mean);
        CHECK(res.prop2[1].gap_mean <= res.prop2[2].gap_mean);
        CHECK(res.prop2[0].ub_mean <= res.prop2[1].ub_mean);
        CHECK(res.prop2[1].ub_mean <= res.prop2[2].ub_mean);
    }

    SECTION("csv schema") {
        const auto res = run_prop2_sweep(s, 0, {1e-3}, 3);
        std::ostringstream out;
        write_csv(res, out);
        CHECK(out.str().rfind("mu2,gap_min,gap_mean,gap_max,ub_mean,trials\n", 0) == 0);
    }
}

TEST_CASE("property suite passes on a benign scenario") {
    const scenario s = small_paired();
    std::ostringstream log;
    CHECK(run_property_suite(s, log));
    CHECK(log.str().find("FAIL") == std::string::npos);
    CHECK(log.str().find("prop1-residuals") != std::string::npos);
    CHECK(log.str().find("rank-deficiency-detected") != std::string::npos);
}

TEST_CASE("failure accounting instead of aborts") {
    // two single-antenna users on the exact same single-path steering vector:
    // the stack is rank one, zf fails per-trial, the sweep keeps going and
    // reports the counts
    scenario s;
    s.num_users = 2;
    s.num_tx = 6;
    s.rx_antennas.assign(2, 1);
    s.pt_dbm = 30.0;
    s.sigma2_dbm = -35.0;
    s.distance_m.assign(2, 50.0);
    s.azimuth_deg.assign(2, 10.0);
    s.angular_spread_deg = 0.0;
    s.channel_model = channel_model_kind::ray;
    s.n_paths = 1;
    s.mu2.assign(2, 0.0);
    s.seed = 33;
    s.n_trials = 4;
    s.validate();
    const auto res = run_sumrate_sweep(s, {"zf", "rzf"}, {30.0}, 4);
    arma::uword zf_failures = 0, rzf_failures = 0;
    for (const auto &row : res.sumrate) {
        if (row.scheme == "zf")
            zf_failures += row.failures;
        if (row.scheme == "rzf")
            rzf_failures += row.failures;
    }
    CHECK(zf_failures > 0);
    CHECK(rzf_failures == 0);
}
