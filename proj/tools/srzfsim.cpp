// Command-line driver: sum-rate sweeps, CSI-error interference sweeps and
// the property suite, all reading a plain-text scenario file and writing CSV.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mimo/experiments.hpp"
#include "mimo/scenario.hpp"

namespace {

std::vector<double> parse_double_list(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> parse_name_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(item);
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Downlink MU-MIMO linear precoding simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::string schemes_arg = "srzf,zf,rzf,wf,bd,sns_fixed";
    std::string pt_arg, mu2_arg = "1e-4,1e-3,1e-2";
    std::uint64_t seed_arg = 0;
    bool seed_given = false;
    arma::uword trials_arg = 0;

    auto add_common = [&](CLI::App *cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "scenario file")->required();
        cmd->add_option("--trials", trials_arg, "override the config trial count");
        cmd->add_option("--seed", seed_arg, "override the config seed")->each([&](const std::string &) {
            seed_given = true;
        });
        auto *o = cmd->add_option("--out", out_path, "output CSV path");
        if (needs_out)
            o->required();
    };

    auto *sum = app.add_subcommand("sumrate", "average sum rate vs transmit power");
    add_common(sum, true);
    sum->add_option("--schemes", schemes_arg, "comma list of schemes");
    sum->add_option("--pt-dbm", pt_arg, "comma list of transmit powers in dBm");

    auto *p2 = app.add_subcommand("prop2", "additional interference vs user 1 CSI error variance");
    add_common(p2, true);
    p2->add_option("--mu2", mu2_arg, "comma list of error variances");

    auto *chk = app.add_subcommand("check", "run the property suite");
    add_common(chk, false);

    CLI11_PARSE(app, argc, argv);

    try {
        mimo::scenario sc = mimo::load_scenario(config_path);
        if (seed_given)
            sc.seed = seed_arg;
        const arma::uword trials = trials_arg ? trials_arg : sc.n_trials;

        if (sum->parsed()) {
            const std::vector<double> grid = pt_arg.empty() ? std::vector<double>{sc.pt_dbm}
                                                            : parse_double_list(pt_arg);
            const auto res = mimo::run_sumrate_sweep(sc, parse_name_list(schemes_arg), grid, trials);
            mimo::write_csv(res, out_path);
            std::cout << "sumrate: " << res.sumrate.size() << " rows, " << trials << " trials, "
                      << res.wall_seconds << " s -> " << out_path << "\n";
        } else if (p2->parsed()) {
            const auto res = mimo::run_prop2_sweep(sc, 0, parse_double_list(mu2_arg), trials);
            mimo::write_csv(res, out_path);
            std::cout << "prop2: " << res.prop2.size() << " rows, " << trials << " trials, "
                      << res.wall_seconds << " s -> " << out_path << "\n";
        } else {
            const bool ok = mimo::run_property_suite(sc, std::cout);
            return ok ? 0 : 1;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
