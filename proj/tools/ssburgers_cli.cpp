#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ssburgers/ssburgers.hpp"

namespace {

ssb::RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        const nlohmann::json empty = nlohmann::json::object();
        return ssb::RunConfig::from_json(empty);
    }
    if (path == "-") return ssb::RunConfig::parse_stream(std::cin);
    std::ifstream in(path);
    if (!in) throw ssb::config_error({"cannot open config file: " + path});
    return ssb::RunConfig::parse_stream(in);
}

std::string default_outdir() {
    if (const char* env = std::getenv("SSBURGERS_OUT")) return env;
    return "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ssburgers: pseudo-spectral stochastic Burgers dynamics in self-similar variables"};
    app.require_subcommand(1);

    std::string config_path;
    std::string outdir = default_outdir();
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    std::string verify_suite;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path,
                        "config JSON (file path, or - for stdin; omit for defaults)");
        sub->add_option("-o,--out", outdir, "output directory (default $SSBURGERS_OUT or ./out)");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { seed_override = s; seed_given = true; },
            "override ensemble.root_seed");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run one trajectory and write trajectory.csv");
    add_common(sim);
    CLI::App* ver = app.add_subcommand("verify", "run one verification suite");
    ver->add_option("suite", verify_suite,
                    "one of: basis, ou, stationarity, contraction, uw, corrector, diffusion")
        ->required();
    add_common(ver);
    CLI::App* cmp = app.add_subcommand("compare-limit", "epsilon-grid comparison against the diffusion limit");
    add_common(cmp);
    CLI::App* bas = app.add_subcommand("basis-check", "spectral-core invariant suite");
    add_common(bas);

    CLI11_PARSE(app, argc, argv);

    try {
        ssb::RunConfig cfg = load_config(config_path);
        if (seed_given) cfg.root_seed = seed_override;
        if (sim->parsed()) return ssb::cmd_simulate(cfg, outdir, std::cout);
        if (ver->parsed()) return ssb::cmd_verify(cfg, verify_suite, outdir, std::cout);
        if (cmp->parsed()) return ssb::cmd_compare_limit(cfg, outdir, std::cout);
        if (bas->parsed()) return ssb::cmd_basis_check(cfg, outdir, std::cout);
    } catch (const ssb::config_error& e) {
        std::cerr << e.what() << "\n";
        return ssb::exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration rejected: " << e.what() << "\n";
        return ssb::exit_config_error;
    } catch (const ssb::numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return ssb::exit_numerical;
    }
    return ssb::exit_ok;
}
