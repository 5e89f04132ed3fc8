#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssburgers/basis.hpp"
#include "ssburgers/noise.hpp"
#include "ssburgers/rng.hpp"

namespace ssb {

enum class Scheme { deterministic, spde_ito, rde_plain, rde_corrected, spde_limit };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::deterministic: return "deterministic";
        case Scheme::spde_ito: return "spde_ito";
        case Scheme::rde_plain: return "rde_plain";
        case Scheme::rde_corrected: return "rde_corrected";
        case Scheme::spde_limit: return "spde_limit";
    }
    return "?";
}

inline std::optional<Scheme> scheme_from_name(const std::string& s) {
    if (s == "deterministic") return Scheme::deterministic;
    if (s == "spde_ito") return Scheme::spde_ito;
    if (s == "rde_plain") return Scheme::rde_plain;
    if (s == "rde_corrected") return Scheme::rde_corrected;
    if (s == "spde_limit") return Scheme::spde_limit;
    return std::nullopt;
}

inline bool is_rde(Scheme s) { return s == Scheme::rde_plain || s == Scheme::rde_corrected; }
inline bool is_spde(Scheme s) { return s == Scheme::spde_ito || s == Scheme::spde_limit; }

struct StepperConfig {
    Scheme scheme = Scheme::deterministic;
    double dt = 1e-3;
    double t_end = 1.0;
    double epsilon = 0.05;  // OU timescale, rde_* only
    double r_max = 1e3;     // H^1(K) guard radius
    int record_every = 1;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("stepper: dt must be positive");
        if (!(t_end > 0.0)) throw std::invalid_argument("stepper: t_end must be positive");
        if (!(r_max > 0.0)) throw std::invalid_argument("stepper: r_max must be positive");
        if (record_every < 1) throw std::invalid_argument("stepper: record_every must be >= 1");
        if (is_rde(scheme)) {
            if (!(epsilon > 0.0)) throw std::invalid_argument("stepper: epsilon must be positive for rde schemes");
            if (dt > epsilon / 10.0 * (1.0 + 1e-12))
                throw std::invalid_argument("stepper: rde schemes need dt <= epsilon/10");
        }
    }
};

class numerical_failure : public std::runtime_error {
public:
    enum class Kind { guard_tripped, non_finite, step_too_large };
    numerical_failure(Kind kind, double tau, const std::string& what)
        : std::runtime_error(what + " at tau = " + std::to_string(tau)), kind(kind), tau(tau) {}
    Kind kind;
    double tau;
};

/// Recorded run: snapshots plus per-snapshot diagnostics, all recomputable
/// from the states.
struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> states;
    std::vector<double> mass_series, sup_series, l2k_series, h1k_series, tail_series;
    std::vector<char> guard_flags;
    double initial_mass = 0.0;  // M of the initial-data contract
    double initial_sup = 0.0;   // m of the initial-data contract
    bool guard_tripped = false;
    double trip_time = 0.0;

    void record(double tau, const SpectralField& u, bool tripped = false) {
        times.push_back(tau);
        states.push_back(u);
        mass_series.push_back(mass(u));
        sup_series.push_back(sup_norm(u));
        l2k_series.push_back(l2k_norm(u));
        h1k_series.push_back(h1k_norm(u));
        tail_series.push_back(tail_energy(u));
        guard_flags.push_back(tripped ? 1 : 0);
    }
};

/// Thrown by integrate(); carries whatever was recorded before the failure.
class integration_failure : public numerical_failure {
public:
    integration_failure(const numerical_failure& cause, Trajectory partial)
        : numerical_failure(cause), partial(std::move(partial)) {}
    Trajectory partial;
};

// ---------------------------------------------------------------------------
// Initial-condition presets
// ---------------------------------------------------------------------------

struct InitialCondition {
    enum class Preset { bump, nwave, random };
    Preset preset = Preset::bump;
    double mass = 1.0;        // total integral for bump / nwave
    double amp = 0.3;         // e_1 coefficient (nwave), amplitude scale (random)
    int k_max = 6;            // highest mode populated by random
    std::uint64_t seed = 1;   // random preset stream
};

inline SpectralField make_initial_condition(const WeightedBasis& basis, const InitialCondition& ic) {
    SpectralField u = basis.zero_field();
    switch (ic.preset) {
        case InitialCondition::Preset::bump:
            u.coeffs[0] = ic.mass / basis.mass_normalizer();
            break;
        case InitialCondition::Preset::nwave:
            u.coeffs[0] = ic.mass / basis.mass_normalizer();
            if (basis.n_modes() > 1) u.coeffs[1] = ic.amp;
            break;
        case InitialCondition::Preset::random: {
            Rng rng(derive_seed(ic.seed, 0x1c, 0));
            double scale = ic.amp;
            const int top = std::min(ic.k_max, basis.n_modes() - 2);
            for (int k = 0; k <= top; ++k) {
                u.coeffs[static_cast<std::size_t>(k)] = scale * (2.0 * rng.uniform01() - 1.0);
                scale *= 0.7;
            }
            // Keep the data peak-dominant: the long-time profile of mass M
            // peaks near |u_0| e_0(0), and data whose initial peak sits below
            // that level must grow toward it.  Capping the mass coefficient
            // keeps the similarity-frame maximum principle meaningful.
            SpectralField wiggles = u;
            wiggles.coeffs[0] = 0.0;
            const double peak_scale = sup_norm(wiggles);
            std::vector<double> e_at_0(static_cast<std::size_t>(basis.n_modes()));
            basis.eval_modes(0.0, e_at_0);
            const double limit = 0.8 * peak_scale / e_at_0[0];
            if (peak_scale > 0.0 && std::abs(u.coeffs[0]) > limit)
                u.coeffs[0] = std::copysign(limit, u.coeffs[0]);
            break;
        }
    }
    return u;
}

// ---------------------------------------------------------------------------
// Right-hand sides assembled from the public field operations
// ---------------------------------------------------------------------------

/// L u - u u_xi with the nonlinearity in conservative form (1/2) d(u^2)/dxi,
/// which kills the mass mode exactly.
inline SpectralField rhs_deterministic(const SpectralField& u) {
    return sub(apply_L(u), scaled(derivative_xi(pointwise_product(u, u)), 0.5));
}

enum class AdvectiveForm { conservative, leibniz };

/// d/dxi (u w), either as derivative-of-product or by the Leibniz rule.
/// The two agree within quadrature tolerance whenever the tails are clean.
inline SpectralField advective_derivative(const SpectralField& u, const SpectralField& w,
                                          AdvectiveForm form) {
    if (form == AdvectiveForm::conservative) return derivative_xi(pointwise_product(u, w));
    return add(pointwise_product(derivative_xi(u), w), pointwise_product(u, derivative_xi(w)));
}

// ---------------------------------------------------------------------------
// Semi-implicit stepper
// ---------------------------------------------------------------------------

/// One time step of any scheme.  L is treated implicitly (its spectrum is
/// diagonal, so the solve is a division), everything else explicitly with
/// noise evaluated at the step start:
///   u_k <- [ u_k + dt N_k(u) + S_k + dt C_k ] / (1 + dt k/2).
/// Every explicit term is an exact xi-derivative, so the mode-0 coefficient
/// never changes.
///
/// Holds scratch buffers; use one instance per thread.
class Stepper {
public:
    Stepper(const WeightedBasis& basis, const NoiseModel& model, const StepperConfig& cfg)
        : basis_(&basis), model_(&model), cfg_(cfg) {
        cfg_.validate();
        if (&model.basis() != &basis) throw std::invalid_argument("stepper: model built on a different basis");
        const int n = basis.n_modes(), m = basis.n_quad();
        inv_implicit_.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) inv_implicit_[static_cast<std::size_t>(k)] = 1.0 / (1.0 + 0.5 * cfg_.dt * k);
        u_vals_.resize(static_cast<std::size_t>(m));
        noise_vals_.resize(static_cast<std::size_t>(m));
        explicit_vals_.resize(static_cast<std::size_t>(m));
        coef_.resize(static_cast<std::size_t>(n));
        corr_coef_.resize(static_cast<std::size_t>(n));
        shifted_.resize(static_cast<std::size_t>(n));
    }

    const StepperConfig& config() const { return cfg_; }

    /// Advances u by one step.  `ou` supplies the fast driver for rde
    /// schemes; `dw` the Wiener increment for spde schemes.  Null noise
    /// takes the deterministic arithmetic path bit for bit.
    void apply_step(SpectralField& u, const OUState* ou, const SpectralField* dw, double tau_now) {
        const WeightedBasis& b = *basis_;
        const int n = b.n_modes(), m = b.n_quad();
        const double dt = cfg_.dt;
        const bool noisy = !model_->is_null();
        const Scheme sch = noisy ? cfg_.scheme : Scheme::deterministic;
        const bool with_corrector = (sch == Scheme::rde_corrected || sch == Scheme::spde_limit);

        // One pass over the value table builds u and, when present, the
        // driver field (its coefficients only occupy the leading modes).
        const double* noise_coeffs = nullptr;
        int noise_count = 0;
        if (sch == Scheme::spde_ito || sch == Scheme::spde_limit) {
            if (dw == nullptr) throw std::invalid_argument("stepper: spde scheme needs a Wiener increment");
            noise_coeffs = dw->coeffs.data();
            noise_count = model_->n_noise_modes();
        } else if (sch == Scheme::rde_plain || sch == Scheme::rde_corrected) {
            if (ou == nullptr) throw std::invalid_argument("stepper: rde scheme needs an OU state");
            if (ou->epsilon != cfg_.epsilon)
                throw std::invalid_argument("stepper: OU state timescale differs from the configured epsilon");
            noise_coeffs = ou->coeffs.data();
            noise_count = static_cast<int>(ou->coeffs.size());
        }
        b.synthesize(u.coeffs, u_vals_);
        if (noise_coeffs != nullptr) {
            std::fill(noise_vals_.begin(), noise_vals_.end(), 0.0);
            const auto& raw_t = b.basis_table_t();
            for (int k = 0; k < noise_count; ++k) {
                const double ck = noise_coeffs[k];
                if (ck == 0.0) continue;
                const double* col = raw_t.data() + static_cast<std::size_t>(k) * m;
                for (int i = 0; i < m; ++i) noise_vals_[static_cast<std::size_t>(i)] += ck * col[i];
            }
        }

        switch (sch) {
            case Scheme::deterministic:
                for (int i = 0; i < m; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    explicit_vals_[ii] = dt * (-0.5 * u_vals_[ii] * u_vals_[ii]);
                }
                break;
            case Scheme::spde_ito:
                for (int i = 0; i < m; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    explicit_vals_[ii] = dt * (-0.5 * u_vals_[ii] * u_vals_[ii]) + u_vals_[ii] * noise_vals_[ii];
                }
                break;
            case Scheme::spde_limit: {
                const auto& qpd = model_->qp_diag_nodes();
                for (int i = 0; i < m; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    explicit_vals_[ii] = dt * (-0.5 * u_vals_[ii] * u_vals_[ii] - 0.5 * u_vals_[ii] * qpd[ii]) +
                                         u_vals_[ii] * noise_vals_[ii];
                }
                break;
            }
            case Scheme::rde_plain: {
                const double amp = 1.0 / std::sqrt(cfg_.epsilon);
                for (int i = 0; i < m; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    explicit_vals_[ii] =
                        dt * (-0.5 * u_vals_[ii] * u_vals_[ii] + amp * u_vals_[ii] * noise_vals_[ii]);
                }
                break;
            }
            case Scheme::rde_corrected: {
                const double amp = 1.0 / std::sqrt(cfg_.epsilon);
                const auto& qpd = model_->qp_diag_nodes();
                for (int i = 0; i < m; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    explicit_vals_[ii] = dt * (-0.5 * u_vals_[ii] * u_vals_[ii] +
                                               amp * u_vals_[ii] * noise_vals_[ii] +
                                               0.5 * u_vals_[ii] * qpd[ii]);
                }
                break;
            }
        }

        const auto& r = b.shift_coefficients();
        if (!with_corrector) {
            b.analyze(explicit_vals_, coef_);
        } else {
            // Fused analysis of the explicit vector and the corrector
            // integrand (u q) in one table pass.
            const auto& qd = model_->q_diag_nodes();
            for (int i = 0; i < m; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                noise_vals_[ii] = u_vals_[ii] * qd[ii];
            }
            const auto& scaled = b.scaled_table();
            const auto& sw = b.sqrt_weights();
            std::fill(coef_.begin(), coef_.end(), 0.0);
            std::fill(corr_coef_.begin(), corr_coef_.end(), 0.0);
            double* c1 = coef_.data();
            double* c2 = corr_coef_.data();
            for (int i = 0; i < m; ++i) {
                const double s1 = explicit_vals_[static_cast<std::size_t>(i)] * sw[static_cast<std::size_t>(i)];
                const double s2 = noise_vals_[static_cast<std::size_t>(i)] * sw[static_cast<std::size_t>(i)];
                const double* row = scaled.data() + static_cast<std::size_t>(i) * n;
                for (int k = 0; k < n; ++k) {
                    c1[k] += s1 * row[k];
                    c2[k] += s2 * row[k];
                }
            }
        }

        shifted_[0] = 0.0;
        for (int k = 0; k + 1 < n; ++k) shifted_[static_cast<std::size_t>(k) + 1] = r[static_cast<std::size_t>(k)] * coef_[static_cast<std::size_t>(k)];

        // Second-derivative corrector (u q)_xixi: minus for the rde
        // regularization, plus in the limit equation.
        if (with_corrector) {
            const double sgn = (sch == Scheme::rde_corrected) ? -0.5 : 0.5;
            for (int k = 0; k + 2 < n; ++k) {
                const std::size_t kk = static_cast<std::size_t>(k);
                shifted_[kk + 2] += dt * sgn * r[kk + 1] * r[kk] * corr_coef_[kk];
            }
        }

        double h1_sq = 0.0, top = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::size_t kk = static_cast<std::size_t>(k);
            u.coeffs[kk] = (u.coeffs[kk] + shifted_[kk]) * inv_implicit_[kk];
            if (k + 1 < n) {
                const double d = r[kk] * u.coeffs[kk];
                h1_sq += d * d;
            } else {
                top = u.coeffs[kk];
            }
        }
        const double tau_next = tau_now + dt;
        if (!std::isfinite(h1_sq + top * top))
            throw numerical_failure(numerical_failure::Kind::non_finite, tau_next, "state became non-finite");
        if (h1_sq > cfg_.r_max * cfg_.r_max)
            throw numerical_failure(numerical_failure::Kind::guard_tripped, tau_next,
                                    "H1(K) guard radius exceeded");
    }

private:
    const WeightedBasis* basis_;
    const NoiseModel* model_;
    StepperConfig cfg_;
    std::vector<double> inv_implicit_;
    std::vector<double> u_vals_, noise_vals_, explicit_vals_;
    std::vector<double> coef_, corr_coef_, shifted_;
};

// One-shot wrappers matching the per-operation contracts.

inline SpectralField step_spde_ito(const SpectralField& u, const NoiseModel& model,
                                   const StepperConfig& cfg, Rng& rng) {
    Stepper st(*u.basis, model, cfg);
    SpectralField out = u;
    if (model.is_null()) {
        st.apply_step(out, nullptr, nullptr, 0.0);
    } else {
        const SpectralField dw = sample_wiener_increment(model, cfg.dt, rng);
        st.apply_step(out, nullptr, &dw, 0.0);
    }
    return out;
}

inline SpectralField step_spde_limit(const SpectralField& u, const NoiseModel& model,
                                     const StepperConfig& cfg, Rng& rng) {
    Stepper st(*u.basis, model, cfg);
    SpectralField out = u;
    if (model.is_null()) {
        st.apply_step(out, nullptr, nullptr, 0.0);
    } else {
        const SpectralField dw = sample_wiener_increment(model, cfg.dt, rng);
        st.apply_step(out, nullptr, &dw, 0.0);
    }
    return out;
}

/// Advances the field with the driver read at the step start, then the OU
/// state exactly over dt.
inline std::pair<SpectralField, OUState> step_rde(const SpectralField& u, const OUState& ou,
                                                  const NoiseModel& model, const StepperConfig& cfg,
                                                  Rng& rng) {
    if (is_rde(cfg.scheme) && cfg.dt > cfg.epsilon / 10.0 * (1.0 + 1e-12))
        throw numerical_failure(numerical_failure::Kind::step_too_large, 0.0,
                                "rde step size exceeds epsilon/10");
    Stepper st(*u.basis, model, cfg);
    SpectralField out = u;
    st.apply_step(out, &ou, nullptr, 0.0);
    OUState next = model.is_null() ? ou : ou_step(ou, model, cfg.dt, rng);
    if (model.is_null()) next.tau += cfg.dt;
    return {out, next};
}

inline SpectralField step_deterministic(const SpectralField& u, const StepperConfig& cfg) {
    const NoiseModel silent = NoiseModel::silent(*u.basis);
    Stepper st(*u.basis, silent, cfg);
    SpectralField out = u;
    st.apply_step(out, nullptr, nullptr, 0.0);
    return out;
}

/// Runs the configured scheme to t_end (or a guard trip), recording every
/// record_every steps plus the endpoints.
inline Trajectory integrate(const SpectralField& u0, const StepperConfig& cfg, const NoiseModel& model,
                            Rng& rng) {
    cfg.validate();
    Trajectory traj;
    traj.initial_mass = mass(u0);
    traj.initial_sup = sup_norm(u0);
    traj.record(0.0, u0);

    Stepper st(*u0.basis, model, cfg);
    SpectralField u = u0;
    OUState ou;
    const bool use_ou = is_rde(cfg.scheme) && !model.is_null();
    if (use_ou) ou = ou_init(model, cfg.epsilon, rng);
    const bool use_dw = is_spde(cfg.scheme) && !model.is_null();
    SpectralField dw = u0.basis->zero_field();

    const long n_steps = std::max<long>(1, std::lround(cfg.t_end / cfg.dt));
    for (long step = 0; step < n_steps; ++step) {
        const double tau_now = static_cast<double>(step) * cfg.dt;
        try {
            if (use_dw) {
                const auto& q = model.spectrum();
                for (std::size_t k = 0; k < q.size(); ++k)
                    dw.coeffs[k] = (q[k] == 0.0) ? 0.0 : std::sqrt(q[k] * cfg.dt) * rng.normal();
                st.apply_step(u, nullptr, &dw, tau_now);
            } else if (use_ou) {
                st.apply_step(u, &ou, nullptr, tau_now);
                ou = ou_step(ou, model, cfg.dt, rng);
            } else {
                st.apply_step(u, nullptr, nullptr, tau_now);
            }
        } catch (const numerical_failure& f) {
            traj.guard_tripped = true;
            traj.trip_time = f.tau;
            if (f.kind == numerical_failure::Kind::guard_tripped) traj.record(f.tau, u, true);
            throw integration_failure(f, traj);
        }
        const long done = step + 1;
        if (done % cfg.record_every == 0 || done == n_steps)
            traj.record(static_cast<double>(done) * cfg.dt, u);
    }
    return traj;
}

/// int |u - v| dxi on a uniform grid spanning the quadrature support
/// (trapezoid; L = max node + 4 sqrt(nu), spacing L/2048).
inline double l1_distance(const SpectralField& u, const SpectralField& v) {
    detail::require_same_basis(u, v);
    const WeightedBasis& b = *u.basis;
    const SpectralField d = sub(u, v);
    const double L = b.nodes().back() + 4.0 * std::sqrt(b.nu());
    const int half = 2048;
    const double h = L / half;
    std::vector<double> xs(2 * static_cast<std::size_t>(half) + 1);
    for (int i = 0; i <= 2 * half; ++i) xs[static_cast<std::size_t>(i)] = -L + h * i;
    const auto vals = eval_field(d, xs);
    double acc = 0.5 * (std::abs(vals.front()) + std::abs(vals.back()));
    for (std::size_t i = 1; i + 1 < vals.size(); ++i) acc += std::abs(vals[i]);
    return acc * h;
}

}  // namespace ssb
