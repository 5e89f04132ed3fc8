#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ssburgers/dynamics.hpp"

namespace ssb {

// ---------------------------------------------------------------------------
// Empirical laws and distances
// ---------------------------------------------------------------------------

/// Samples of one scalar functional across an ensemble, with a sorted cache
/// for CDF queries.
struct EmpiricalLaw {
    std::vector<double> samples;  // path order, deterministic
    std::vector<double> sorted;

    void finalize() {
        sorted = samples;
        std::sort(sorted.begin(), sorted.end());
    }
    std::size_t size() const { return samples.size(); }
    double cdf(double x) const {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }
};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(const EmpiricalLaw& a, const EmpiricalLaw& b) {
    const auto& xa = a.sorted;
    const auto& xb = b.sorted;
    if (xa.empty() || xb.empty()) throw std::invalid_argument("ks_distance: empty sample");
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double x = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] <= x) ++i;
        while (j < xb.size() && xb[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic two-sample critical value c(alpha) sqrt((n+m)/nm).
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

/// 1-Wasserstein distance int |F_a - F_b| dx via the merged-support walk.
inline double wasserstein1(const EmpiricalLaw& a, const EmpiricalLaw& b) {
    const auto& xa = a.sorted;
    const auto& xb = b.sorted;
    if (xa.empty() || xb.empty()) throw std::invalid_argument("wasserstein1: empty sample");
    std::vector<double> merged;
    merged.reserve(xa.size() + xb.size());
    std::merge(xa.begin(), xa.end(), xb.begin(), xb.end(), std::back_inserter(merged));
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
        const double x = merged[k];
        while (i < xa.size() && xa[i] <= x) ++i;
        while (j < xb.size() && xb[j] <= x) ++j;
        acc += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (merged[k + 1] - x);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Check {
    std::string name;
    bool pass = false;
    double statistic = 0.0;
    double threshold = 0.0;
    long n_samples = 0;
    bool mandatory = true;
    std::string note;
};

struct Report {
    std::string suite;
    std::vector<Check> checks;
    int n_paths = 0, n_used = 0, n_tripped = 0;

    bool passed() const {
        for (const auto& c : checks)
            if (c.mandatory && !c.pass) return false;
        return true;
    }
    void add(Check c) { checks.push_back(std::move(c)); }
};

// ---------------------------------------------------------------------------
// Ensemble engine
// ---------------------------------------------------------------------------

struct EnsembleSpec {
    int n_paths = 2000;
    std::uint64_t root_seed = 1;
    std::vector<int> functionals = {0, 1, 2, 3, 4};  // mode indices of <u, e_k>
    std::vector<double> observe_times;
    StepperConfig cfg;
    InitialCondition ic;
    int n_threads = 0;  // 0 = hardware concurrency

    void validate(const WeightedBasis& basis) const {
        cfg.validate();
        if (n_paths < 2) throw std::invalid_argument("ensemble: n_paths must be >= 2");
        if (functionals.empty()) throw std::invalid_argument("ensemble: needs at least one functional");
        for (int f : functionals)
            if (f < 0 || f >= basis.n_modes())
                throw std::invalid_argument("ensemble: functional mode index out of range");
        if (observe_times.empty()) throw std::invalid_argument("ensemble: needs at least one observe time");
        for (double t : observe_times)
            if (t < 0.0 || t > cfg.t_end * (1.0 + 1e-12))
                throw std::invalid_argument("ensemble: observe times must lie in [0, t_end]");
    }
};

struct EnsembleResult {
    std::vector<int> functionals;
    std::vector<double> times;                    // achieved checkpoint times
    std::vector<std::vector<EmpiricalLaw>> laws;  // [functional][time]
    int n_paths = 0, n_used = 0, n_tripped = 0;
    double max_mass_drift = 0.0;
    double max_sup_ratio = 0.0;
    double max_tail = 0.0;
};

/// Runs n_paths independent trajectories; path i owns the stream derived
/// from (root_seed, i), so the result does not depend on the thread layout.
/// Guard-tripped paths are excluded from the laws and counted.
inline EnsembleResult run_ensemble(const EnsembleSpec& spec, const WeightedBasis& basis,
                                   const NoiseModel& model) {
    spec.validate(basis);

    std::vector<long> observe_steps;
    observe_steps.reserve(spec.observe_times.size());
    for (double t : spec.observe_times) {
        const long s = std::lround(t / spec.cfg.dt);
        if (std::abs(static_cast<double>(s) * spec.cfg.dt - t) > 0.5 * spec.cfg.dt)
            throw std::invalid_argument("ensemble: observe time does not sit on the step grid");
        observe_steps.push_back(s);
    }
    const long n_steps = *std::max_element(observe_steps.begin(), observe_steps.end());

    const SpectralField u0 = make_initial_condition(basis, spec.ic);
    const double sup0 = sup_norm(u0);

    const std::size_t nf = spec.functionals.size();
    const std::size_t nt = observe_steps.size();
    const std::size_t np = static_cast<std::size_t>(spec.n_paths);
    std::vector<double> slab(nf * nt * np, 0.0);
    std::vector<char> tripped(np, 0);
    std::vector<double> path_sup_ratio(np, 0.0), path_mass_drift(np, 0.0), path_tail(np, 0.0);

    const bool use_ou = is_rde(spec.cfg.scheme) && !model.is_null();
    const bool use_dw = is_spde(spec.cfg.scheme) && !model.is_null();

    auto worker = [&](std::size_t lo, std::size_t hi) {
        Stepper st(basis, model, spec.cfg);
        SpectralField dw = basis.zero_field();
        const auto& q = model.spectrum();
        for (std::size_t p = lo; p < hi; ++p) {
            Rng rng = Rng::for_path(spec.root_seed, p);
            SpectralField u = u0;
            OUState ou;
            if (use_ou) ou = ou_init(model, spec.cfg.epsilon, rng);
            double sup_ratio = (sup0 > 0.0) ? 1.0 : 0.0;
            double mass_drift = 0.0, tail = tail_energy(u);
            std::size_t next_obs = 0;
            auto observe = [&](long step_idx) {
                while (next_obs < nt && observe_steps[next_obs] == step_idx) {
                    for (std::size_t f = 0; f < nf; ++f)
                        slab[(f * nt + next_obs) * np + p] =
                            u.coeffs[static_cast<std::size_t>(spec.functionals[f])];
                    if (sup0 > 0.0) sup_ratio = std::max(sup_ratio, sup_norm(u) / sup0);
                    // drift of the mode-0 coefficient, scaled to mass units
                    mass_drift = std::max(mass_drift, std::abs(u.coeffs[0] - u0.coeffs[0]) *
                                                          basis.mass_normalizer());
                    tail = std::max(tail, tail_energy(u));
                    ++next_obs;
                }
            };
            try {
                observe(0);
                for (long s = 0; s < n_steps; ++s) {
                    if (use_dw) {
                        for (std::size_t k = 0; k < q.size(); ++k)
                            dw.coeffs[k] = (q[k] == 0.0) ? 0.0 : std::sqrt(q[k] * spec.cfg.dt) * rng.normal();
                        st.apply_step(u, nullptr, &dw, static_cast<double>(s) * spec.cfg.dt);
                    } else if (use_ou) {
                        st.apply_step(u, &ou, nullptr, static_cast<double>(s) * spec.cfg.dt);
                        ou = ou_step(ou, model, spec.cfg.dt, rng);
                    } else {
                        st.apply_step(u, nullptr, nullptr, static_cast<double>(s) * spec.cfg.dt);
                    }
                    observe(s + 1);
                }
            } catch (const numerical_failure&) {
                tripped[p] = 1;
            }
            path_sup_ratio[p] = sup_ratio;
            path_mass_drift[p] = mass_drift;
            path_tail[p] = tail;
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned n_threads =
        std::min<unsigned>(spec.n_threads > 0 ? static_cast<unsigned>(spec.n_threads) : hw,
                           static_cast<unsigned>(np));
    if (n_threads <= 1) {
        worker(0, np);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        const std::size_t chunk = (np + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(np, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    EnsembleResult out;
    out.functionals = spec.functionals;
    out.times.reserve(nt);
    for (long s : observe_steps) out.times.push_back(static_cast<double>(s) * spec.cfg.dt);
    out.n_paths = spec.n_paths;
    out.laws.assign(nf, std::vector<EmpiricalLaw>(nt));
    for (std::size_t p = 0; p < np; ++p) {
        if (tripped[p]) {
            ++out.n_tripped;
            continue;
        }
        ++out.n_used;
        for (std::size_t f = 0; f < nf; ++f)
            for (std::size_t t = 0; t < nt; ++t) out.laws[f][t].samples.push_back(slab[(f * nt + t) * np + p]);
        out.max_sup_ratio = std::max(out.max_sup_ratio, path_sup_ratio[p]);
        out.max_mass_drift = std::max(out.max_mass_drift, path_mass_drift[p]);
        out.max_tail = std::max(out.max_tail, path_tail[p]);
    }
    for (auto& row : out.laws)
        for (auto& law : row) law.finalize();
    return out;
}

// ---------------------------------------------------------------------------
// Claim verifiers
// ---------------------------------------------------------------------------

/// Compares the law of every functional at tau1 against tau2; passes when
/// each KS distance sits below the two-sample critical value at the given
/// level.  Equilibrated dynamics should not move between the two times.
inline Report verify_stationarity(const EnsembleSpec& base, const WeightedBasis& basis,
                                  const NoiseModel& model, double tau1, double tau2,
                                  double burn_in = 0.0, double alpha = 0.01) {
    if (!(tau2 > tau1) || !(tau1 >= burn_in))
        throw std::invalid_argument("stationarity: needs tau2 > tau1 >= burn-in");
    EnsembleSpec spec = base;
    spec.observe_times = {tau1, tau2};
    spec.cfg.t_end = tau2;
    const auto res = run_ensemble(spec, basis, model);

    Report rep;
    rep.suite = "stationarity";
    rep.n_paths = res.n_paths;
    rep.n_used = res.n_used;
    rep.n_tripped = res.n_tripped;
    for (std::size_t f = 0; f < res.functionals.size(); ++f) {
        const auto& a = res.laws[f][0];
        const auto& b = res.laws[f][1];
        const double d = ks_distance(a, b);
        const double crit = ks_critical(alpha, a.size(), b.size());
        rep.add({"ks_mode_" + std::to_string(res.functionals[f]), d <= crit, d, crit,
                 static_cast<long>(a.size()), true,
                 "law(tau=" + std::to_string(tau1) + ") vs law(tau=" + std::to_string(tau2) + ")"});
    }
    return rep;
}

/// Evolves two equal-mass initial conditions through the same OU driver
/// path by path and asserts the pathwise L1 distance never increases at
/// the recorded checkpoints (relative tolerance rel_tol).
inline Report verify_contraction_fields(const EnsembleSpec& base, const WeightedBasis& basis,
                                        const NoiseModel& model, const SpectralField& a0,
                                        const SpectralField& b0, double rel_tol = 1e-6,
                                        const std::string& label = "") {
    EnsembleSpec spec = base;
    if (!is_rde(spec.cfg.scheme))
        throw std::invalid_argument("contraction: needs an rde scheme (shared driver path)");
    spec.cfg.validate();

    if (std::abs(mass(a0) - mass(b0)) > 1e-10)
        throw std::invalid_argument("contraction: initial masses differ beyond 1e-10");

    Report rep;
    rep.suite = "contraction";
    rep.n_paths = spec.n_paths;

    const long n_steps = std::max<long>(1, std::lround(spec.cfg.t_end / spec.cfg.dt));
    const long stride = spec.cfg.record_every;
    std::vector<double> mean_profile;

    for (int p = 0; p < spec.n_paths; ++p) {
        Rng rng = Rng::for_path(base.root_seed, static_cast<std::uint64_t>(p));
        Stepper st(basis, model, spec.cfg);
        SpectralField ua = a0, ub = b0;
        OUState ou = ou_init(model, spec.cfg.epsilon, rng);
        double prev = l1_distance(ua, ub);
        const double tol = rel_tol * prev;
        double worst_rise = 0.0;
        bool ok = true;
        std::vector<double> profile{prev};
        try {
            for (long s = 0; s < n_steps; ++s) {
                const double tau = static_cast<double>(s) * spec.cfg.dt;
                st.apply_step(ua, &ou, nullptr, tau);
                st.apply_step(ub, &ou, nullptr, tau);
                ou = ou_step(ou, model, spec.cfg.dt, rng);
                if ((s + 1) % stride == 0 || s + 1 == n_steps) {
                    const double d = l1_distance(ua, ub);
                    worst_rise = std::max(worst_rise, d - prev);
                    if (d > prev + tol) ok = false;
                    prev = d;
                    profile.push_back(d);
                }
            }
            ++rep.n_used;
        } catch (const numerical_failure&) {
            ++rep.n_tripped;
            continue;
        }
        if (mean_profile.size() < profile.size()) mean_profile.resize(profile.size(), 0.0);
        for (std::size_t i = 0; i < profile.size(); ++i) mean_profile[i] += profile[i];
        rep.add({label + "path_" + std::to_string(p) + "_monotone", ok, worst_rise, tol,
                 static_cast<long>(profile.size()), true,
                 "largest checkpoint-to-checkpoint rise of the L1 distance"});
    }
    if (rep.n_used > 0) {
        std::string prof = "mean L1 profile:";
        for (double v : mean_profile) prof += " " + std::to_string(v / rep.n_used);
        rep.add({label + "decay_profile", true,
                 mean_profile.back() / rep.n_used / std::max(1e-300, mean_profile.front() / rep.n_used),
                 1.0, rep.n_used, false, prof});
    }
    return rep;
}

inline Report verify_contraction(const EnsembleSpec& base, const WeightedBasis& basis,
                                 const NoiseModel& model, const InitialCondition& ic_a,
                                 const InitialCondition& ic_b, double rel_tol = 1e-6) {
    return verify_contraction_fields(base, basis, model, make_initial_condition(basis, ic_a),
                                     make_initial_condition(basis, ic_b), rel_tol);
}

/// Monte Carlo variance of <(u W(1))_xi, phi> along the full field pipeline
/// against the closed-form quadratic form, within k_sigma standard errors
/// of the variance estimator (the sample is exactly Gaussian).
inline Report verify_uw_covariance(const SpectralField& u, const NoiseModel& model,
                                   const SpectralField& phi, long n_samples,
                                   std::uint64_t seed = 2024, double k_sigma = 4.0) {
    Rng rng(derive_seed(seed, 0x57, 1));
    double s1 = 0.0, s2 = 0.0;
    for (long s = 0; s < n_samples; ++s) {
        const auto dw = sample_wiener_increment(model, 1.0, rng);
        const double x = inner_product(derivative_xi(pointwise_product(u, dw)), phi);
        s1 += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = s1 / n;
    const double var = (s2 - n * mean * mean) / (n - 1.0);
    const double expected = sigma_form(u, model, phi);
    const double band = k_sigma * expected * std::sqrt(2.0 / (n - 1.0));

    Report rep;
    rep.suite = "uw_covariance";
    rep.n_paths = static_cast<int>(n_samples);
    rep.n_used = static_cast<int>(n_samples);
    rep.add({"variance_matches_sigma_form", std::abs(var - expected) <= band, var - expected, band,
             n_samples, true,
             "MC var = " + std::to_string(var) + ", sigma form = " + std::to_string(expected)});
    return rep;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline SlopeFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    SlopeFit f;
    const double d = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / d;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

enum class ProbeFunction { linear, tanh_probe };

/// Scaling of the perturbed-test-function correctors along rde_plain paths:
/// the first-order corrector
///   F1 = sqrt(eps) f'(<u,phi>) <(u eta)_xi, phi>
/// must scale like sqrt(eps); the second-order probes
///   F3 = (eps/2) f''(<u,phi>) [ <u eta, psi>^2 - (1/2)<Sigma(u)phi,phi> ]
///   F4 = (eps/2) f'(<u,phi>)  [ <(u eta)_xi, psi eta> - (1/2)<A(u),phi> ]
/// like eps, with psi = phi' + (xi/2nu) phi the weighted-derivative probe.
inline Report verify_corrector_scaling(const EnsembleSpec& base, const WeightedBasis& basis,
                                       const NoiseModel& model, std::vector<double> epsilons,
                                       ProbeFunction f_spec, const SpectralField& phi,
                                       bool second_order_probes = true) {
    if (epsilons.size() < 3) throw std::invalid_argument("corrector scaling: needs >= 3 epsilon values");
    for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
        if (!(epsilons[i] > epsilons[i + 1]))
            throw std::invalid_argument("corrector scaling: epsilons must decrease");

    const auto fprime = [f_spec](double y) {
        if (f_spec == ProbeFunction::linear) return 1.0;
        const double c = std::cosh(y);
        return 1.0 / (c * c);
    };
    const auto fsecond = [f_spec](double y) {
        if (f_spec == ProbeFunction::linear) return 0.0;
        const double t = std::tanh(y), c = std::cosh(y);
        return -2.0 * t / (c * c);
    };

    const int m = basis.n_quad();
    const double inv2nu = 0.5 / basis.nu();
    const auto phi_vals = values_at_nodes(phi);
    const auto dphi_vals = values_at_nodes(derivative_xi(phi));
    std::vector<double> psi_vals(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        psi_vals[static_cast<std::size_t>(i)] =
            dphi_vals[static_cast<std::size_t>(i)] + basis.node(i) * inv2nu * phi_vals[static_cast<std::size_t>(i)];
    const auto& sw = basis.sqrt_weights();

    std::vector<double> f1_sup, f3_sup, f4_sup;
    for (double eps : epsilons) {
        EnsembleSpec spec = base;
        spec.cfg.scheme = Scheme::rde_plain;
        spec.cfg.epsilon = eps;
        spec.cfg.dt = eps / 10.0;
        spec.cfg.validate();
        std::vector<long> obs_steps;
        for (double t : base.observe_times) obs_steps.push_back(std::lround(t / spec.cfg.dt));
        const long n_steps = *std::max_element(obs_steps.begin(), obs_steps.end());

        std::vector<double> acc1(obs_steps.size(), 0.0), acc3(obs_steps.size(), 0.0),
            acc4(obs_steps.size(), 0.0);
        const SpectralField u0 = make_initial_condition(basis, spec.ic);
        for (int p = 0; p < spec.n_paths; ++p) {
            Rng rng = Rng::for_path(base.root_seed, static_cast<std::uint64_t>(p));
            Stepper st(basis, model, spec.cfg);
            SpectralField u = u0;
            OUState ou = ou_init(model, eps, rng);
            std::size_t next = 0;
            for (long s = 0; s <= n_steps; ++s) {
                if (next < obs_steps.size() && obs_steps[next] == s) {
                    const auto eta = ou_field(ou, model);
                    const double y = inner_product(u, phi);
                    const double g = inner_product(derivative_xi(pointwise_product(u, eta)), phi);
                    acc1[next] += std::abs(std::sqrt(eps) * fprime(y) * g);
                    if (second_order_probes) {
                        const auto uv = values_at_nodes(u);
                        const auto ev = values_at_nodes(eta);
                        double ue_psi = 0.0;
                        for (int i = 0; i < m; ++i) {
                            const std::size_t ii = static_cast<std::size_t>(i);
                            ue_psi += (uv[ii] * ev[ii] * sw[ii]) * (psi_vals[ii] * sw[ii]);
                        }
                        acc3[next] += std::abs(0.5 * eps * fsecond(y) *
                                               (ue_psi * ue_psi - 0.5 * sigma_form(u, model, phi)));
                        const auto due = values_at_nodes(derivative_xi(pointwise_product(u, eta)));
                        double due_psie = 0.0;
                        for (int i = 0; i < m; ++i) {
                            const std::size_t ii = static_cast<std::size_t>(i);
                            due_psie += (due[ii] * sw[ii]) * (psi_vals[ii] * ev[ii] * sw[ii]);
                        }
                        acc4[next] += std::abs(0.5 * eps * fprime(y) *
                                               (due_psie - 0.5 * a_form(u, model, phi)));
                    }
                    ++next;
                }
                if (s < n_steps) {
                    st.apply_step(u, &ou, nullptr, static_cast<double>(s) * spec.cfg.dt);
                    ou = ou_step(ou, model, spec.cfg.dt, rng);
                }
            }
        }
        const double np = static_cast<double>(spec.n_paths);
        f1_sup.push_back(*std::max_element(acc1.begin(), acc1.end()) / np);
        if (second_order_probes) {
            f3_sup.push_back(*std::max_element(acc3.begin(), acc3.end()) / np);
            f4_sup.push_back(*std::max_element(acc4.begin(), acc4.end()) / np);
        }
    }

    Report rep;
    rep.suite = "corrector_scaling";
    rep.n_paths = base.n_paths;
    rep.n_used = base.n_paths;
    const auto fit1 = fit_loglog(epsilons, f1_sup);
    {
        std::string note = "sup_t E|F1| per eps:";
        for (std::size_t i = 0; i < epsilons.size(); ++i)
            note += " (" + std::to_string(epsilons[i]) + ", " + std::to_string(f1_sup[i]) + ")";
        rep.add({"f1_slope_half", fit1.slope >= 0.4 && fit1.slope <= 0.6, fit1.slope, 0.5,
                 base.n_paths, true, note});
    }
    if (second_order_probes) {
        const auto fit3 = fit_loglog(epsilons, f3_sup);
        const auto fit4 = fit_loglog(epsilons, f4_sup);
        rep.add({"f3_slope_one", fit3.slope >= 0.8 && fit3.slope <= 1.2, fit3.slope, 1.0, base.n_paths,
                 false, "optional second-order probe"});
        rep.add({"f4_slope_one", fit4.slope >= 0.8 && fit4.slope <= 1.2, fit4.slope, 1.0, base.n_paths,
                 false, "optional second-order probe"});
    }
    return rep;
}

/// Structural checks of the spectral core: Gram identity, diagonality of L
/// measured by physical-space finite differences, the derivative shift law,
/// and the weighted Poincare inequality on random fields.
inline Report verify_basis_suite(double nu, int n_modes, int n_quad, std::uint64_t seed = 1) {
    const WeightedBasis b(nu, n_modes, n_quad);
    const int n = b.n_modes();
    Report rep;
    rep.suite = "basis";
    rep.n_paths = rep.n_used = 1;

    {
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = j; k < n; ++k) {
                double g = 0.0;
                for (int i = 0; i < b.n_quad(); ++i)
                    g += b.scaled_table()[static_cast<std::size_t>(i) * n + j] *
                         b.scaled_table()[static_cast<std::size_t>(i) * n + k];
                worst = std::max(worst, std::abs(g - (j == k ? 1.0 : 0.0)));
            }
        }
        rep.add({"gram_identity", worst <= 1e-10, worst, 1e-10, static_cast<long>(n) * n, true, ""});
    }

    {
        // L applied by fourth-order finite differences in physical space.
        const double h = 1e-3;
        double worst = 0.0;
        std::vector<double> lvals(static_cast<std::size_t>(b.n_quad()));
        std::vector<double> coeffs(static_cast<std::size_t>(n));
        std::vector<double> x0(b.nodes()), xp(x0), xm(x0), xpp(x0), xmm(x0);
        for (auto& x : xp) x += h;
        for (auto& x : xm) x -= h;
        for (auto& x : xpp) x += 2.0 * h;
        for (auto& x : xmm) x -= 2.0 * h;
        for (int j = 0; j <= n - 4; ++j) {
            const SpectralField ej = b.mode_field(j);
            const auto v0 = eval_field(ej, x0);
            const auto vp = eval_field(ej, xp);
            const auto vm = eval_field(ej, xm);
            const auto vpp = eval_field(ej, xpp);
            const auto vmm = eval_field(ej, xmm);
            for (int i = 0; i < b.n_quad(); ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                const double d2 =
                    (-vpp[ii] + 16.0 * vp[ii] - 30.0 * v0[ii] + 16.0 * vm[ii] - vmm[ii]) / (12.0 * h * h);
                const double d1 = (-vpp[ii] + 8.0 * vp[ii] - 8.0 * vm[ii] + vmm[ii]) / (12.0 * h);
                lvals[ii] = nu * d2 + 0.5 * b.node(i) * d1 + 0.5 * v0[ii];
            }
            b.analyze(lvals, coeffs);
            for (int k = 0; k <= n - 4; ++k)
                worst = std::max(worst,
                                 std::abs(coeffs[static_cast<std::size_t>(k)] - (k == j ? -0.5 * j : 0.0)));
        }
        rep.add({"L_diagonal_fd_oracle", worst <= 1e-6, worst, 1e-6, n - 3, true,
                 "checked for modes k <= n_modes - 4"});
    }

    {
        double worst = 0.0;
        for (int k = 0; k + 1 < n; ++k) {
            for (int mm = 0; mm < n; ++mm) {
                double ip = 0.0;
                for (int i = 0; i < b.n_quad(); ++i) {
                    const double sw = b.sqrt_weights()[static_cast<std::size_t>(i)];
                    ip += b.deriv_table()[static_cast<std::size_t>(i) * n + k] * sw *
                          b.scaled_table()[static_cast<std::size_t>(i) * n + mm];
                }
                const double expected = (mm == k + 1) ? b.shift_coefficient(k) : 0.0;
                worst = std::max(worst, std::abs(ip - expected));
            }
        }
        rep.add({"derivative_shift", worst <= 1e-9, worst, 1e-9, n - 1, true, ""});
    }

    {
        // c ||u||^2 <= ||u'||^2 with the classical constant 1/2 where it is
        // valid (nu <= 1) and the sharp spectral constant 1/(2 nu) otherwise.
        const double c = (nu <= 1.0) ? 0.5 : 0.5 / nu;
        Rng rng(derive_seed(seed, 0xba));
        bool ok = true;
        double worst = 0.0;
        int zero_mass_derivs = 0;
        for (int rep_i = 0; rep_i < 1000; ++rep_i) {
            SpectralField u = b.zero_field();
            double scale = 1.0;
            for (int k = 0; k + 1 < n; ++k) {
                u.coeffs[static_cast<std::size_t>(k)] = scale * (2.0 * rng.uniform01() - 1.0);
                scale *= 0.85;
            }
            const double lhs = c * l2k_norm(u) * l2k_norm(u);
            const double rhs = h1k_norm(u) * h1k_norm(u);
            if (rhs < lhs * (1.0 - 1e-12)) ok = false;
            worst = std::max(worst, lhs - rhs);
            if (mass(derivative_xi(u)) == 0.0) ++zero_mass_derivs;
        }
        rep.add({"poincare_1000_random_fields", ok, worst, 0.0, 1000, true,
                 "largest violation of c||u||^2 <= ||du||^2"});
        rep.add({"derivative_kills_mass", zero_mass_derivs == 1000,
                 static_cast<double>(zero_mass_derivs), 1000.0, 1000, true, ""});
    }
    return rep;
}

/// Stationary law of the fast driver: per-mode mean and variance bands and
/// the exponential lag autocorrelation at lags {eps/2, eps, 2 eps}.
inline Report verify_ou_law(const NoiseModel& model, double epsilon, int n_paths,
                            std::uint64_t seed = 9) {
    Report rep;
    rep.suite = "ou_law";
    rep.n_paths = rep.n_used = n_paths;
    const auto& q = model.spectrum();
    const std::vector<double> lags = {0.5 * epsilon, epsilon, 2.0 * epsilon};

    std::vector<std::vector<double>> first(q.size()), last(q.size());
    std::vector<std::vector<double>> lagprod(q.size() * lags.size());
    for (auto& v : first) v.reserve(static_cast<std::size_t>(n_paths));
    for (auto& v : last) v.reserve(static_cast<std::size_t>(n_paths));
    for (auto& v : lagprod) v.reserve(static_cast<std::size_t>(n_paths));

    for (int p = 0; p < n_paths; ++p) {
        Rng rng = Rng::for_path(seed, static_cast<std::uint64_t>(p));
        OUState st = ou_init(model, epsilon, rng);
        const OUState st0 = st;
        double reached = 0.0;
        for (std::size_t li = 0; li < lags.size(); ++li) {
            st = ou_step(st, model, lags[li] - reached, rng);
            reached = lags[li];
            for (std::size_t k = 0; k < q.size(); ++k)
                lagprod[k * lags.size() + li].push_back(st0.coeffs[k] * st.coeffs[k]);
        }
        for (std::size_t k = 0; k < q.size(); ++k) {
            first[k].push_back(st0.coeffs[k]);
            last[k].push_back(st.coeffs[k]);
        }
    }

    const double n = static_cast<double>(n_paths);
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        const double v_target = 0.5 * q[k];
        double mean = 0.0;
        for (double x : last[k]) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : last[k]) var += (x - mean) * (x - mean);
        var /= (n - 1.0);
        const double mean_band = 3.0 * std::sqrt(v_target / n);
        const double var_band = 3.0 * v_target * std::sqrt(2.0 / (n - 1.0));
        rep.add({"mean_mode_" + std::to_string(k), std::abs(mean) <= mean_band, mean, mean_band,
                 n_paths, true, ""});
        rep.add({"variance_mode_" + std::to_string(k), std::abs(var - v_target) <= var_band,
                 var - v_target, var_band, n_paths, true,
                 "target q_k/2 = " + std::to_string(v_target)});
        for (std::size_t li = 0; li < lags.size(); ++li) {
            const double rho = std::exp(-lags[li] / epsilon);
            double est = 0.0;
            for (double x : lagprod[k * lags.size() + li]) est += x;
            est = est / n / v_target;
            const double band = 3.0 * std::sqrt((1.0 + rho * rho) / n);
            rep.add({"lag_" + std::to_string(li) + "_mode_" + std::to_string(k),
                     std::abs(est - rho) <= band, est - rho, band, n_paths, true,
                     "lag " + std::to_string(lags[li]) + ", target exp(-lag/eps) = " + std::to_string(rho)});
        }
    }
    return rep;
}

enum class LimitPairing { rde_corrected_vs_spde_ito, rde_plain_vs_spde_limit };

struct LimitRow {
    double epsilon = 0.0;
    int functional = 0;
    double time = 0.0;
    double ks = 0.0;
    double w1 = 0.0;
    long n_a = 0, n_b = 0;
};

struct DiffusionLimitResult {
    Report report;
    std::vector<LimitRow> rows;
};

/// For each epsilon, compares the law of every functional under the
/// regularized equation against its diffusion limit at the final observe
/// time; both arms run at dt = eps/10 so the leading discretization bias
/// cancels inside the comparison.
inline DiffusionLimitResult verify_diffusion_limit(const EnsembleSpec& base, const WeightedBasis& basis,
                                                   const NoiseModel& model, std::vector<double> epsilons,
                                                   LimitPairing pairing = LimitPairing::rde_corrected_vs_spde_ito,
                                                   double alpha = 0.01) {
    if (epsilons.size() < 2) throw std::invalid_argument("diffusion limit: needs >= 2 epsilon values");
    for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
        if (!(epsilons[i] > epsilons[i + 1]))
            throw std::invalid_argument("diffusion limit: epsilons must decrease");

    DiffusionLimitResult out;
    out.report.suite = "diffusion_limit";
    out.report.n_paths = base.n_paths;

    const Scheme rde_scheme =
        (pairing == LimitPairing::rde_corrected_vs_spde_ito) ? Scheme::rde_corrected : Scheme::rde_plain;
    const Scheme spde_scheme =
        (pairing == LimitPairing::rde_corrected_vs_spde_ito) ? Scheme::spde_ito : Scheme::spde_limit;

    const std::size_t nf = base.functionals.size();
    std::vector<std::vector<double>> ks_last(nf);  // per functional, per epsilon
    long n_small_a = 0, n_small_b = 0;
    double ks_small_worst = 0.0;

    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        const double eps = epsilons[e];
        EnsembleSpec sa = base;
        sa.cfg.scheme = rde_scheme;
        sa.cfg.epsilon = eps;
        sa.cfg.dt = eps / 10.0;
        sa.root_seed = derive_seed(base.root_seed, 0xa, e);
        EnsembleSpec sb = base;
        sb.cfg.scheme = spde_scheme;
        sb.cfg.dt = eps / 10.0;
        sb.root_seed = derive_seed(base.root_seed, 0xb, e);

        const auto ra = run_ensemble(sa, basis, model);
        const auto rb = run_ensemble(sb, basis, model);
        out.report.n_used += ra.n_used + rb.n_used;
        out.report.n_tripped += ra.n_tripped + rb.n_tripped;

        for (std::size_t f = 0; f < nf; ++f) {
            for (std::size_t t = 0; t < ra.times.size(); ++t) {
                LimitRow row;
                row.epsilon = eps;
                row.functional = base.functionals[f];
                row.time = ra.times[t];
                row.ks = ks_distance(ra.laws[f][t], rb.laws[f][t]);
                row.w1 = wasserstein1(ra.laws[f][t], rb.laws[f][t]);
                row.n_a = static_cast<long>(ra.laws[f][t].size());
                row.n_b = static_cast<long>(rb.laws[f][t].size());
                out.rows.push_back(row);
                if (t + 1 == ra.times.size()) {
                    ks_last[f].push_back(row.ks);
                    if (e + 1 == epsilons.size()) {
                        ks_small_worst = std::max(ks_small_worst, row.ks);
                        n_small_a = row.n_a;
                        n_small_b = row.n_b;
                    }
                }
            }
        }
    }

    for (std::size_t f = 0; f < nf; ++f) {
        bool monotone = true;
        double worst_rise = 0.0;
        for (std::size_t e = 0; e + 1 < ks_last[f].size(); ++e) {
            worst_rise = std::max(worst_rise, ks_last[f][e + 1] - ks_last[f][e]);
            if (ks_last[f][e + 1] > ks_last[f][e]) monotone = false;
        }
        std::string note = "ks per eps:";
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            note += " (" + std::to_string(epsilons[e]) + ", " + std::to_string(ks_last[f][e]) + ")";
        out.report.add({"monotone_mode_" + std::to_string(base.functionals[f]), monotone, worst_rise, 0.0,
                        base.n_paths, true, note});
    }
    const double crit = ks_critical(alpha, static_cast<std::size_t>(n_small_a), static_cast<std::size_t>(n_small_b));
    out.report.add({"smallest_eps_below_critical", ks_small_worst <= crit, ks_small_worst, crit,
                    n_small_a, true, "worst functional KS at the smallest epsilon"});
    return out;
}

}  // namespace ssb
