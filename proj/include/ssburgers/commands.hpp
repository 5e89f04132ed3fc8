#pragma once

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ssburgers/artifacts.hpp"
#include "ssburgers/config.hpp"
#include "ssburgers/selfsim.hpp"
#include "ssburgers/stats.hpp"

namespace ssb {

/// Exit-code contract shared by all commands.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2, exit_numerical = 3 };

namespace detail {

class WallClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline nlohmann::json trajectory_summary(const Trajectory& traj) {
    double mass_drift = 0.0, sup_ratio = 0.0, max_tail = 0.0, max_h1 = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        mass_drift = std::max(mass_drift, std::abs(traj.mass_series[i] - traj.initial_mass));
        if (traj.initial_sup > 0.0) sup_ratio = std::max(sup_ratio, traj.sup_series[i] / traj.initial_sup);
        max_tail = std::max(max_tail, traj.tail_series[i]);
        max_h1 = std::max(max_h1, traj.h1k_series[i]);
    }
    return {{"initial_mass", traj.initial_mass}, {"initial_sup", traj.initial_sup},
            {"max_mass_drift", mass_drift},      {"max_sup_ratio", sup_ratio},
            {"max_tail_energy", max_tail},       {"max_h1k", max_h1},
            {"guard_tripped", traj.guard_tripped}};
}

}  // namespace detail

/// Runs one trajectory and writes trajectory.csv plus manifest.json.  A
/// guard trip or non-finite state preserves the partial artifacts and
/// returns the numerical-failure code.
inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& outdir, std::ostream& log) {
    detail::WallClock clock;
    const WeightedBasis basis(cfg.nu, cfg.n_modes, cfg.n_quad);
    const NoiseModel model = NoiseModel::geometric(basis, cfg.sigma, cfg.rho, cfg.k_noise, cfg.q_max);
    const SpectralField u0 = make_initial_condition(basis, cfg.initial_condition());
    Rng rng = Rng::for_path(cfg.root_seed, 0);

    const std::string hash = config_hash(cfg);
    Trajectory traj;
    std::string status = "ok";
    int code = exit_ok;
    try {
        traj = integrate(u0, cfg.stepper_config(), model, rng);
    } catch (const integration_failure& f) {
        traj = f.partial;
        status = std::string("numerical_failure: ") + f.what();
        code = exit_numerical;
    }

    write_file_atomic(outdir / "trajectory.csv", trajectory_csv(traj, cfg.n_modes, hash));
    const auto manifest = manifest_json(cfg, "simulate", clock.seconds(),
                                        detail::trajectory_summary(traj), {"trajectory.csv"}, status);
    write_file_atomic(outdir / "manifest.json", manifest.dump(2) + "\n");
    log << "simulate: " << traj.times.size() << " checkpoints, status " << status << "\n";
    return code;
}

inline LimitPairing pairing_from_name(const std::string& p) {
    return (p == "rde_plain_vs_spde_limit") ? LimitPairing::rde_plain_vs_spde_limit
                                            : LimitPairing::rde_corrected_vs_spde_ito;
}

/// Dispatches one verification suite, writes report.json and manifest.json,
/// prints the human-readable summary.
inline int cmd_verify(const RunConfig& cfg, const std::string& suite,
                      const std::filesystem::path& outdir, std::ostream& log) {
    detail::WallClock clock;
    Report rep;
    std::vector<std::string> artifacts = {"report.json"};

    if (suite == "basis") {
        rep = verify_basis_suite(cfg.nu, cfg.n_modes, cfg.n_quad, cfg.root_seed);
    } else {
        const WeightedBasis basis(cfg.nu, cfg.n_modes, cfg.n_quad);
        const NoiseModel model = NoiseModel::geometric(basis, cfg.sigma, cfg.rho, cfg.k_noise, cfg.q_max);
        if (suite == "ou") {
            rep = verify_ou_law(model, cfg.epsilon, cfg.n_paths, cfg.root_seed);
        } else if (suite == "stationarity") {
            if (cfg.repetitions <= 1) {
                rep = verify_stationarity(cfg.ensemble_spec(), basis, model, cfg.tau1, cfg.tau2, cfg.burn_in);
            } else {
                // Majority voting over seed repetitions keeps the single-shot
                // KS flap out of the verdict.
                rep.suite = "stationarity";
                int votes = 0;
                for (int r = 0; r < cfg.repetitions; ++r) {
                    auto spec = cfg.ensemble_spec();
                    spec.root_seed = derive_seed(cfg.root_seed, static_cast<std::uint64_t>(r));
                    const Report sub =
                        verify_stationarity(spec, basis, model, cfg.tau1, cfg.tau2, cfg.burn_in);
                    if (sub.passed()) ++votes;
                    double worst = 0.0;
                    for (const auto& c : sub.checks) worst = std::max(worst, c.statistic);
                    rep.add({"rep_" + std::to_string(r), sub.passed(), worst,
                             sub.checks.empty() ? 0.0 : sub.checks[0].threshold, sub.n_used, false,
                             "worst functional KS"});
                    rep.n_paths += sub.n_paths;
                    rep.n_used += sub.n_used;
                    rep.n_tripped += sub.n_tripped;
                }
                const int need = (3 * cfg.repetitions + 3) / 4;
                rep.add({"majority_vote", votes >= need, static_cast<double>(votes),
                         static_cast<double>(need), cfg.repetitions, true,
                         "repetitions passing all functional checks"});
            }
        } else if (suite == "contraction") {
            const auto a = make_initial_condition(basis, cfg.initial_condition());
            const auto b = make_initial_condition(basis, cfg.initial_condition_b());
            if (std::abs(mass(a) - mass(b)) > 1e-10)
                throw config_error({"contraction: initial masses differ beyond 1e-10 (" +
                                    format_g17(mass(a)) + " vs " + format_g17(mass(b)) + ")"});
            rep = verify_contraction(cfg.ensemble_spec(), basis, model, cfg.initial_condition(),
                                     cfg.initial_condition_b());
        } else if (suite == "uw") {
            rep.suite = "uw_covariance";
            InitialCondition rand_ic;
            rand_ic.preset = InitialCondition::Preset::random;
            rand_ic.seed = cfg.ic_seed;
            const std::vector<SpectralField> fields = {
                make_initial_condition(basis, cfg.initial_condition()),
                make_initial_condition(basis, cfg.initial_condition_b()),
                make_initial_condition(basis, rand_ic)};
            const std::vector<int> probes = {cfg.probe_mode,
                                             std::min(cfg.probe_mode + 2, cfg.n_modes - 1)};
            int idx = 0;
            for (const auto& u : fields) {
                for (int pk : probes) {
                    auto sub = verify_uw_covariance(u, model, basis.mode_field(pk), cfg.mc_samples,
                                                    derive_seed(cfg.root_seed, idx));
                    auto c = sub.checks[0];
                    c.name = "field_" + std::to_string(idx / 2) + "_probe_e" + std::to_string(pk);
                    rep.add(c);
                    ++idx;
                }
            }
            rep.n_paths = rep.n_used = static_cast<int>(cfg.mc_samples);
        } else if (suite == "corrector") {
            auto spec = cfg.ensemble_spec();
            const auto probe = (cfg.probe == "linear") ? ProbeFunction::linear : ProbeFunction::tanh_probe;
            rep = verify_corrector_scaling(spec, basis, model, cfg.epsilons, probe,
                                           basis.mode_field(cfg.probe_mode));
        } else if (suite == "diffusion") {
            if (cfg.epsilons.size() < 2)
                throw config_error({"experiment.epsilons: diffusion comparison needs >= 2 values"});
            if (cfg.repetitions <= 1) {
                auto res = verify_diffusion_limit(cfg.ensemble_spec(), basis, model, cfg.epsilons,
                                                  pairing_from_name(cfg.pairing));
                rep = res.report;
                write_file_atomic(outdir / "compare_limit.csv", limit_rows_csv(res.rows, config_hash(cfg)));
                artifacts.push_back("compare_limit.csv");
            } else {
                rep.suite = "diffusion_limit";
                std::vector<LimitRow> all_rows;
                int votes = 0;
                for (int r = 0; r < cfg.repetitions; ++r) {
                    auto spec = cfg.ensemble_spec();
                    spec.root_seed = derive_seed(cfg.root_seed, static_cast<std::uint64_t>(r));
                    auto res = verify_diffusion_limit(spec, basis, model, cfg.epsilons,
                                                      pairing_from_name(cfg.pairing));
                    if (res.report.passed()) ++votes;
                    rep.add({"rep_" + std::to_string(r), res.report.passed(),
                             res.report.checks.back().statistic, res.report.checks.back().threshold,
                             spec.n_paths, false, "smallest-eps worst functional KS"});
                    for (const auto& row : res.rows) all_rows.push_back(row);
                    rep.n_paths += res.report.n_paths;
                    rep.n_used += res.report.n_used;
                    rep.n_tripped += res.report.n_tripped;
                }
                const int need = (3 * cfg.repetitions + 3) / 4;
                rep.add({"majority_vote", votes >= need, static_cast<double>(votes),
                         static_cast<double>(need), cfg.repetitions, true,
                         "repetitions passing monotonicity and the critical-value gate"});
                write_file_atomic(outdir / "compare_limit.csv", limit_rows_csv(all_rows, config_hash(cfg)));
                artifacts.push_back("compare_limit.csv");
            }
        } else {
            throw config_error({"unknown verify suite \"" + suite +
                                "\" (one of basis, ou, stationarity, contraction, uw, corrector, diffusion)"});
        }
    }

    write_file_atomic(outdir / "report.json", report_json(rep).dump(2) + "\n");
    nlohmann::json summary = {{"suite", rep.suite}, {"pass", rep.passed()}};
    write_file_atomic(outdir / "manifest.json",
                      manifest_json(cfg, "verify " + suite, clock.seconds(), summary, artifacts).dump(2) + "\n");
    log << report_text(rep);
    return rep.passed() ? exit_ok : exit_check_failed;
}

/// The epsilon-grid comparison against the diffusion limit, one CSV row per
/// (epsilon, functional, time).
inline int cmd_compare_limit(const RunConfig& cfg, const std::filesystem::path& outdir,
                             std::ostream& log) {
    detail::WallClock clock;
    if (cfg.epsilons.size() < 2)
        throw config_error({"experiment.epsilons: compare-limit needs >= 2 values"});
    const WeightedBasis basis(cfg.nu, cfg.n_modes, cfg.n_quad);
    const NoiseModel model = NoiseModel::geometric(basis, cfg.sigma, cfg.rho, cfg.k_noise, cfg.q_max);
    auto res = verify_diffusion_limit(cfg.ensemble_spec(), basis, model, cfg.epsilons,
                                      pairing_from_name(cfg.pairing));
    const std::string hash = config_hash(cfg);
    write_file_atomic(outdir / "compare_limit.csv", limit_rows_csv(res.rows, hash));
    write_file_atomic(outdir / "report.json", report_json(res.report).dump(2) + "\n");
    nlohmann::json summary = {{"suite", res.report.suite}, {"pass", res.report.passed()},
                              {"rows", res.rows.size()}};
    write_file_atomic(outdir / "manifest.json",
                      manifest_json(cfg, "compare-limit", clock.seconds(), summary,
                                    {"compare_limit.csv", "report.json"})
                              .dump(2) +
                          "\n");
    log << report_text(res.report);
    return res.report.passed() ? exit_ok : exit_check_failed;
}

inline int cmd_basis_check(const RunConfig& cfg, const std::filesystem::path& outdir,
                           std::ostream& log) {
    return cmd_verify(cfg, "basis", outdir, log);
}

}  // namespace ssb
