#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ssburgers/ssburgers.hpp"

using namespace ssb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::path("cli_test_out") / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig tiny_config() {
    RunConfig c = RunConfig::from_json(nlohmann::json::object());
    c.n_modes = 8;
    c.n_quad = 16;
    c.k_noise = 4;
    c.dt = 1e-3;
    c.t_end = 0.05;
    c.record_every = 10;
    c.n_paths = 8;
    c.functionals = {0, 1, 2};
    c.observe_times = {0.05};
    c.scheme = "spde_ito";
    return c;
}

}  // namespace

TEST_CASE("minimal document parses to the defaults") {
    std::istringstream in("{}");
    const RunConfig c = RunConfig::parse_stream(in);
    CHECK(c.nu == 1.0);
    CHECK(c.n_modes == 64);
    CHECK(c.n_quad == 128);
    CHECK(c.sigma == 0.05);
    CHECK(c.scheme == "deterministic");
    // Echo carries the filled defaults.
    const auto j = c.to_json();
    CHECK(j["basis"]["n_modes"] == 64);
    CHECK(j["noise"]["rho"] == 0.6);
}

TEST_CASE("unknown keys are fatal and carry a nearest-key hint") {
    std::istringstream in(R"({"basis": {"viscocity": 0.5}})");
    try {
        (void)RunConfig::parse_stream(in);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        REQUIRE(e.violations.size() == 1);
        CHECK(e.violations[0].find("viscocity") != std::string::npos);
        CHECK(e.violations[0].find("viscosity") != std::string::npos);  // suggestion
    }
}

TEST_CASE("cross-field violations are collected, not first-error-only") {
    std::istringstream in(R"({
        "stepper": {"scheme": "rde_plain", "dt": 0.01, "epsilon": 0.05},
        "basis": {"n_modes": 64, "n_quad": 64},
        "noise": {"k_noise": 70}
    })");
    try {
        (void)RunConfig::parse_stream(in);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.violations.size() >= 3);
        bool saw_dt = false, saw_quad = false, saw_kn = false;
        for (const auto& m : e.violations) {
            if (m.find("dt <= epsilon/10") != std::string::npos) saw_dt = true;
            if (m.find("2*n_modes") != std::string::npos) saw_quad = true;
            if (m.find("k_noise") != std::string::npos) saw_kn = true;
        }
        CHECK(saw_dt);
        CHECK(saw_quad);
        CHECK(saw_kn);
    }
}

TEST_CASE("simulate: deterministic bump keeps a constant mass column") {
    auto cfg = tiny_config();
    cfg.scheme = "deterministic";
    const auto dir = fresh_dir("sim_det");
    std::ostringstream log;
    CHECK(cmd_simulate(cfg, dir, log) == exit_ok);

    const std::string csv = slurp(dir / "trajectory.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // hash comment
    CHECK(line.rfind("# config_hash", 0) == 0);
    std::getline(lines, line);  // header
    CHECK(line.rfind("tau,u_0,", 0) == 0);
    std::string first_mass;
    while (std::getline(lines, line)) {
        std::size_t pos = 0;
        for (int c = 0; c < 1 + cfg.n_modes; ++c) pos = line.find(',', pos) + 1;
        const std::string mass_field = line.substr(pos, line.find(',', pos) - pos);
        if (first_mass.empty()) first_mass = mass_field;
        CHECK(mass_field == first_mass);
    }
    CHECK(std::stod(first_mass) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simulate: zero initial data writes all-zero state columns") {
    auto cfg = tiny_config();
    cfg.scheme = "deterministic";
    cfg.ic_mass = 0.0;
    const auto dir = fresh_dir("sim_zero");
    std::ostringstream log;
    CHECK(cmd_simulate(cfg, dir, log) == exit_ok);
    const std::string csv = slurp(dir / "trajectory.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::size_t pos = line.find(',') + 1;
        for (int k = 0; k < cfg.n_modes; ++k) {
            const std::size_t next = line.find(',', pos);
            CHECK(line.substr(pos, next - pos) == "0");
            pos = next + 1;
        }
    }
}

TEST_CASE("simulate re-runs are byte-identical") {
    auto cfg = tiny_config();
    const auto d1 = fresh_dir("sim_a");
    const auto d2 = fresh_dir("sim_b");
    std::ostringstream log;
    CHECK(cmd_simulate(cfg, d1, log) == exit_ok);
    CHECK(cmd_simulate(cfg, d2, log) == exit_ok);
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));

    // Different seed changes the stochastic trajectory.
    auto cfg2 = cfg;
    cfg2.root_seed += 1;
    const auto d3 = fresh_dir("sim_c");
    CHECK(cmd_simulate(cfg2, d3, log) == exit_ok);
    CHECK(slurp(d1 / "trajectory.csv") != slurp(d3 / "trajectory.csv"));
}

TEST_CASE("simulate preserves partial artifacts on a guard trip") {
    auto cfg = tiny_config();
    cfg.scheme = "deterministic";
    cfg.ic_preset = "random";
    cfg.ic_amp = 0.5;
    cfg.r_max = 1e-3;  // trips immediately
    const auto dir = fresh_dir("sim_trip");
    std::ostringstream log;
    CHECK(cmd_simulate(cfg, dir, log) == exit_numerical);
    CHECK(fs::exists(dir / "trajectory.csv"));
    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("numerical_failure") != std::string::npos);
}

TEST_CASE("verify basis writes a passing report") {
    auto cfg = tiny_config();
    cfg.n_modes = 12;
    cfg.n_quad = 24;
    const auto dir = fresh_dir("verify_basis");
    std::ostringstream log;
    CHECK(cmd_verify(cfg, "basis", dir, log) == exit_ok);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(rep["pass"] == true);
    CHECK(rep["suite"] == "basis");
    CHECK(log.str().find("PASS") != std::string::npos);
}

TEST_CASE("verify contraction rejects unequal masses at the config stage") {
    auto cfg = tiny_config();
    cfg.scheme = "rde_plain";
    cfg.dt = 5e-3;
    cfg.epsilon = 0.05;
    cfg.t_end = 0.1;
    cfg.observe_times = {0.1};
    cfg.ic_b_mass = 2.0;
    const auto dir = fresh_dir("verify_contr");
    std::ostringstream log;
    CHECK_THROWS_AS((void)cmd_verify(cfg, "contraction", dir, log), config_error);
}

TEST_CASE("compare-limit smoke run: silent noise gives all-zero distances") {
    auto cfg = tiny_config();
    cfg.sigma = 0.0;
    cfg.scheme = "rde_corrected";
    cfg.dt = 1e-3;
    cfg.epsilon = 0.1;
    cfg.epsilons = {0.1, 0.05};
    cfg.t_end = 0.05;
    cfg.observe_times = {0.05};
    const auto dir = fresh_dir("cmp_silent");
    std::ostringstream log;
    CHECK(cmd_compare_limit(cfg, dir, log) == exit_ok);
    const std::string csv = slurp(dir / "compare_limit.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    CHECK(line == "epsilon,functional,tau,ks,w1,n_a,n_b");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        // epsilon,functional,tau,ks,w1,...
        std::size_t pos = 0;
        for (int c = 0; c < 3; ++c) pos = line.find(',', pos) + 1;
        const std::string ks = line.substr(pos, line.find(',', pos) - pos);
        CHECK(ks == "0");
    }
    CHECK(rows == 2 * 3);  // two epsilons, three functionals, one time
}

TEST_CASE("missing epsilon list is a config-stage error for compare-limit") {
    auto cfg = tiny_config();
    cfg.epsilons = {};
    const auto dir = fresh_dir("cmp_noeps");
    std::ostringstream log;
    CHECK_THROWS_AS((void)cmd_compare_limit(cfg, dir, log), config_error);
}

TEST_CASE("compare-limit smoke run at N = 32 with live noise") {
    RunConfig cfg = RunConfig::from_json(nlohmann::json::object());
    cfg.n_modes = 32;
    cfg.n_quad = 64;
    cfg.scheme = "rde_corrected";
    cfg.dt = 0.01;
    cfg.epsilon = 0.1;
    cfg.epsilons = {0.1, 0.05};
    cfg.t_end = 1.0;
    cfg.observe_times = {1.0};
    cfg.n_paths = 200;
    const auto dir = fresh_dir("cmp_n32");
    std::ostringstream log;
    const int code = cmd_compare_limit(cfg, dir, log);
    CHECK((code == exit_ok || code == exit_check_failed));  // statistics, not plumbing
    const std::string csv = slurp(dir / "compare_limit.csv");
    int rows = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 2 + 2 * 5);  // hash + header + (2 epsilons x 5 functionals)
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "manifest.json"));
}
