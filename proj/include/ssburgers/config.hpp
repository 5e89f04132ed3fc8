#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssburgers/stats.hpp"

namespace ssb {

/// Carries every violation found in a config document, not just the first.
class config_error : public std::runtime_error {
public:
    explicit config_error(std::vector<std::string> v)
        : std::runtime_error(join(v)), violations(std::move(v)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& m : v) s += "\n  - " + m;
        return s;
    }
};

/// Every knob of a run, with the reference desk-scale defaults.
struct RunConfig {
    // basis
    double nu = 1.0;
    int n_modes = 64;
    int n_quad = 128;
    // noise
    double sigma = 0.05;
    double rho = 0.6;
    int k_noise = 8;
    double q_max = 1.0;
    // stepper
    std::string scheme = "deterministic";
    double dt = 1e-3;
    double t_end = 5.0;
    double epsilon = 0.05;
    double r_max = 1e3;
    int record_every = 100;
    // initial condition (and the partner used by contraction experiments)
    std::string ic_preset = "bump";
    double ic_mass = 1.0;
    double ic_amp = 0.3;
    int ic_k_max = 6;
    std::uint64_t ic_seed = 1;
    std::string ic_b_preset = "nwave";
    double ic_b_mass = 1.0;
    double ic_b_amp = 0.3;
    int ic_b_k_max = 6;
    std::uint64_t ic_b_seed = 2;
    // ensemble
    int n_paths = 2000;
    std::uint64_t root_seed = 12345;
    std::vector<int> functionals = {0, 1, 2, 3, 4};
    std::vector<double> observe_times = {5.0};
    int threads = 0;
    // experiment selector and knobs
    std::string experiment = "stationarity";
    double tau1 = 15.0;
    double tau2 = 20.0;
    double burn_in = 0.0;
    std::vector<double> epsilons = {0.1, 0.04, 0.01};
    std::string pairing = "rde_corrected_vs_spde_ito";
    std::string probe = "tanh";
    int probe_mode = 1;
    long mc_samples = 100000;
    int repetitions = 1;

    Scheme scheme_enum() const { return *scheme_from_name(scheme); }

    StepperConfig stepper_config() const {
        StepperConfig c;
        c.scheme = scheme_enum();
        c.dt = dt;
        c.t_end = t_end;
        c.epsilon = epsilon;
        c.r_max = r_max;
        c.record_every = record_every;
        return c;
    }

    static InitialCondition::Preset preset_enum(const std::string& p) {
        if (p == "bump") return InitialCondition::Preset::bump;
        if (p == "nwave") return InitialCondition::Preset::nwave;
        return InitialCondition::Preset::random;
    }

    InitialCondition initial_condition() const {
        return {preset_enum(ic_preset), ic_mass, ic_amp, ic_k_max, ic_seed};
    }
    InitialCondition initial_condition_b() const {
        return {preset_enum(ic_b_preset), ic_b_mass, ic_b_amp, ic_b_k_max, ic_b_seed};
    }

    EnsembleSpec ensemble_spec() const {
        EnsembleSpec s;
        s.n_paths = n_paths;
        s.root_seed = root_seed;
        s.functionals = functionals;
        s.observe_times = observe_times;
        s.cfg = stepper_config();
        s.ic = initial_condition();
        s.n_threads = threads;
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["basis"] = {{"nu", nu}, {"n_modes", n_modes}, {"n_quad", n_quad}};
        j["noise"] = {{"sigma", sigma}, {"rho", rho}, {"k_noise", k_noise}, {"q_max", q_max}};
        j["stepper"] = {{"scheme", scheme},   {"dt", dt},
                        {"t_end", t_end},     {"epsilon", epsilon},
                        {"r_max", r_max},     {"record_every", record_every}};
        j["ic"] = {{"preset", ic_preset}, {"mass", ic_mass}, {"amp", ic_amp},
                   {"k_max", ic_k_max},   {"seed", ic_seed}};
        j["ic_b"] = {{"preset", ic_b_preset}, {"mass", ic_b_mass}, {"amp", ic_b_amp},
                     {"k_max", ic_b_k_max},   {"seed", ic_b_seed}};
        j["ensemble"] = {{"n_paths", n_paths},
                         {"root_seed", root_seed},
                         {"functionals", functionals},
                         {"observe_times", observe_times},
                         {"threads", threads}};
        j["experiment"] = {{"name", experiment},   {"tau1", tau1},
                           {"tau2", tau2},         {"burn_in", burn_in},
                           {"epsilons", epsilons}, {"pairing", pairing},
                           {"probe", probe},       {"probe_mode", probe_mode},
                           {"mc_samples", mc_samples}, {"repetitions", repetitions}};
        return j;
    }

    static RunConfig from_json(const nlohmann::json& doc);
    static RunConfig parse_stream(std::istream& in);
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t prev = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t cur = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               prev + (a[i - 1] == b[j - 1] ? 0 : 1)});
            prev = cur;
        }
    }
    return row[b.size()];
}

inline std::string nearest_key(const std::string& key, const std::vector<std::string>& known) {
    std::string best;
    std::size_t best_d = key.size() + 3;
    for (const auto& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return (best_d <= std::max<std::size_t>(2, key.size() / 2)) ? best : std::string();
}

/// Pulls known keys out of one JSON object level, recording unknown-key
/// violations with a nearest-key hint.
class SectionReader {
public:
    SectionReader(nlohmann::json obj, std::string section, std::vector<std::string>& violations)
        : obj_(std::move(obj)), section_(std::move(section)), violations_(violations) {}

    template <typename T>
    void get(const char* key, T& target) {
        known_.push_back(key);
        if (!obj_.contains(key)) return;
        try {
            target = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            violations_.push_back(section_ + "." + key + ": wrong type");
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (std::find(known_.begin(), known_.end(), it.key()) != known_.end()) continue;
            std::string msg = section_ + "." + it.key() + ": unknown key";
            const std::string hint = nearest_key(it.key(), known_);
            if (!hint.empty()) msg += " (did you mean \"" + hint + "\"?)";
            violations_.push_back(msg);
        }
    }

private:
    nlohmann::json obj_;
    std::string section_;
    std::vector<std::string>& violations_;
    std::vector<std::string> known_;
};

}  // namespace detail

inline RunConfig RunConfig::from_json(const nlohmann::json& doc) {
    std::vector<std::string> v;
    RunConfig c;
    if (!doc.is_object()) throw config_error({"document root must be a JSON object"});

    const std::vector<std::string> sections = {"basis", "noise", "stepper", "ic",
                                               "ic_b",  "ensemble", "experiment"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find(sections.begin(), sections.end(), it.key()) == sections.end()) {
            std::string msg = it.key() + ": unknown section";
            const std::string hint = detail::nearest_key(it.key(), sections);
            if (!hint.empty()) msg += " (did you mean \"" + hint + "\"?)";
            v.push_back(msg);
        } else if (!it.value().is_object()) {
            v.push_back(it.key() + ": must be an object");
        }
    }

    auto section = [&](const char* name) -> nlohmann::json {
        return (doc.contains(name) && doc.at(name).is_object()) ? doc.at(name) : nlohmann::json::object();
    };

    {
        detail::SectionReader r(section("basis"), "basis", v);
        r.get("nu", c.nu);
        r.get("viscosity", c.nu);  // accepted alias for nu
        r.get("n_modes", c.n_modes);
        r.get("n_quad", c.n_quad);
        r.finish();
    }
    {
        detail::SectionReader r(section("noise"), "noise", v);
        r.get("sigma", c.sigma);
        r.get("rho", c.rho);
        r.get("k_noise", c.k_noise);
        r.get("q_max", c.q_max);
        r.finish();
    }
    {
        detail::SectionReader r(section("stepper"), "stepper", v);
        r.get("scheme", c.scheme);
        r.get("dt", c.dt);
        r.get("t_end", c.t_end);
        r.get("epsilon", c.epsilon);
        r.get("r_max", c.r_max);
        r.get("record_every", c.record_every);
        r.finish();
    }
    {
        detail::SectionReader r(section("ic"), "ic", v);
        r.get("preset", c.ic_preset);
        r.get("mass", c.ic_mass);
        r.get("amp", c.ic_amp);
        r.get("k_max", c.ic_k_max);
        r.get("seed", c.ic_seed);
        r.finish();
    }
    {
        detail::SectionReader r(section("ic_b"), "ic_b", v);
        r.get("preset", c.ic_b_preset);
        r.get("mass", c.ic_b_mass);
        r.get("amp", c.ic_b_amp);
        r.get("k_max", c.ic_b_k_max);
        r.get("seed", c.ic_b_seed);
        r.finish();
    }
    {
        detail::SectionReader r(section("ensemble"), "ensemble", v);
        r.get("n_paths", c.n_paths);
        r.get("root_seed", c.root_seed);
        r.get("functionals", c.functionals);
        r.get("observe_times", c.observe_times);
        r.get("threads", c.threads);
        r.finish();
    }
    {
        detail::SectionReader r(section("experiment"), "experiment", v);
        r.get("name", c.experiment);
        r.get("tau1", c.tau1);
        r.get("tau2", c.tau2);
        r.get("burn_in", c.burn_in);
        r.get("epsilons", c.epsilons);
        r.get("pairing", c.pairing);
        r.get("probe", c.probe);
        r.get("probe_mode", c.probe_mode);
        r.get("mc_samples", c.mc_samples);
        r.get("repetitions", c.repetitions);
        r.finish();
    }

    // Field and cross-field rules, all collected before reporting.
    if (!(c.nu > 0.0)) v.push_back("basis.nu: must be positive");
    if (c.n_modes < 1) v.push_back("basis.n_modes: must be >= 1");
    if (c.n_quad < 2 * c.n_modes)
        v.push_back("basis.n_quad: must be at least 2*n_modes = " + std::to_string(2 * c.n_modes) +
                     " (quadrature would alias)");
    if (!(c.sigma >= 0.0)) v.push_back("noise.sigma: must be >= 0");
    if (!(c.rho > 0.0 && c.rho < 1.0)) v.push_back("noise.rho: must lie in (0,1)");
    if (c.k_noise < 0 || c.k_noise > c.n_modes - 1)
        v.push_back("noise.k_noise: must satisfy 0 <= k_noise <= n_modes-1 = " +
                     std::to_string(c.n_modes - 1));
    if (!scheme_from_name(c.scheme))
        v.push_back("stepper.scheme: unknown scheme \"" + c.scheme +
                     "\" (one of deterministic, spde_ito, rde_plain, rde_corrected, spde_limit)");
    if (!(c.dt > 0.0)) v.push_back("stepper.dt: must be positive");
    if (!(c.t_end > 0.0)) v.push_back("stepper.t_end: must be positive");
    if (!(c.r_max > 0.0)) v.push_back("stepper.r_max: must be positive");
    if (c.record_every < 1) v.push_back("stepper.record_every: must be >= 1");
    if (scheme_from_name(c.scheme) && is_rde(*scheme_from_name(c.scheme))) {
        if (!(c.epsilon > 0.0)) v.push_back("stepper.epsilon: must be positive for rde schemes");
        else if (c.dt > c.epsilon / 10.0 * (1.0 + 1e-12))
            v.push_back("stepper.dt: rde schemes need dt <= epsilon/10 = " +
                         std::to_string(c.epsilon / 10.0) + " (got " + std::to_string(c.dt) + ")");
    }
    for (const std::string& p : {c.ic_preset, c.ic_b_preset})
        if (p != "bump" && p != "nwave" && p != "random")
            v.push_back("ic.preset: unknown preset \"" + p + "\" (one of bump, nwave, random)");
    if (c.n_paths < 2) v.push_back("ensemble.n_paths: must be >= 2");
    for (int f : c.functionals)
        if (f < 0 || f >= c.n_modes)
            v.push_back("ensemble.functionals: mode index " + std::to_string(f) +
                         " out of range [0, n_modes)");
    for (double t : c.observe_times)
        if (t < 0.0 || t > c.t_end * (1.0 + 1e-12))
            v.push_back("ensemble.observe_times: " + std::to_string(t) +
                         " outside [0, t_end = " + std::to_string(c.t_end) + "]");
    {
        const std::vector<std::string> known = {"stationarity", "contraction", "uw",
                                                "corrector",    "diffusion",   "ou", "basis"};
        if (std::find(known.begin(), known.end(), c.experiment) == known.end())
            v.push_back("experiment.name: unknown experiment \"" + c.experiment + "\"");
    }
    for (std::size_t i = 0; i + 1 < c.epsilons.size(); ++i)
        if (!(c.epsilons[i] > c.epsilons[i + 1]))
            v.push_back("experiment.epsilons: must be strictly decreasing");
    for (double e : c.epsilons)
        if (!(e > 0.0)) v.push_back("experiment.epsilons: entries must be positive");
    if (c.pairing != "rde_corrected_vs_spde_ito" && c.pairing != "rde_plain_vs_spde_limit")
        v.push_back("experiment.pairing: unknown pairing \"" + c.pairing + "\"");
    if (c.probe != "tanh" && c.probe != "linear")
        v.push_back("experiment.probe: must be \"tanh\" or \"linear\"");
    if (c.probe_mode < 0 || c.probe_mode >= c.n_modes)
        v.push_back("experiment.probe_mode: out of range [0, n_modes)");
    if (c.mc_samples < 2) v.push_back("experiment.mc_samples: must be >= 2");
    if (c.repetitions < 1) v.push_back("experiment.repetitions: must be >= 1");
    if (!(c.burn_in >= 0.0)) v.push_back("experiment.burn_in: must be >= 0");

    if (!v.empty()) throw config_error(std::move(v));
    return c;
}

inline RunConfig RunConfig::parse_stream(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error({std::string("not a valid JSON document: ") + e.what()});
    }
    return from_json(doc);
}

}  // namespace ssb
