#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssburgers/basis.hpp"
#include "ssburgers/rng.hpp"

namespace ssb {

/// Trace-class noise diagonal in the basis {e_k}: the Wiener process is
/// W(tau, xi) = sum_k sqrt(q_k) e_k(xi) beta_k(tau).  Holds the spectrum
/// {q_k}, the kernels q(xi, zeta) = sum q_k e_k(xi) e_k(zeta) and
/// q'(xi, zeta) = d_xi d_zeta q, and the diagonal kernel values on the
/// quadrature grid used by the drift correctors.
///
/// Immutable and shareable across threads.
class NoiseModel {
public:
    NoiseModel(const WeightedBasis& basis, std::vector<double> spectrum, double q_max_gate = 1.0)
        : basis_(&basis), spectrum_(std::move(spectrum)) {
        const int n = basis.n_modes();
        if (static_cast<int>(spectrum_.size()) > n - 1)
            throw std::invalid_argument(
                "noise: spectrum length must stay below n_modes-1 so every "
                "derivative-shifted mode is retained");
        for (double q : spectrum_)
            if (!(q >= 0.0)) throw std::invalid_argument("noise: spectrum entries must be >= 0");

        trace_q_ = 0.0;
        trace_qp_ = 0.0;
        for (std::size_t k = 0; k < spectrum_.size(); ++k) {
            trace_q_ += spectrum_[k];
            const double r = basis.shift_coefficient(static_cast<int>(k));
            trace_qp_ += spectrum_[k] * r * r;
        }

        const int m = basis.n_quad();
        q_diag_nodes_.assign(static_cast<std::size_t>(m), 0.0);
        qp_diag_nodes_.assign(static_cast<std::size_t>(m), 0.0);
        for (int i = 0; i < m; ++i) {
            double qd = 0.0, qpd = 0.0;
            for (std::size_t k = 0; k < spectrum_.size(); ++k) {
                const double ek = basis.basis_value(i, static_cast<int>(k));
                const double dk = basis.deriv_table()[static_cast<std::size_t>(i) * n + k];
                qd += spectrum_[k] * ek * ek;
                qpd += spectrum_[k] * dk * dk;
            }
            q_diag_nodes_[static_cast<std::size_t>(i)] = qd;
            qp_diag_nodes_[static_cast<std::size_t>(i)] = qpd;
        }

        // |q(xi, zeta)| <= sqrt(q(xi,xi) q(zeta,zeta)), so the sup lives on
        // the diagonal; scan the dense grid.
        sup_kernel_ = 0.0;
        for (double xi : basis.dense_nodes()) sup_kernel_ = std::max(sup_kernel_, kernel_q(xi, xi));
        if (sup_kernel_ > q_max_gate)
            throw std::invalid_argument("noise: sup |q| = " + std::to_string(sup_kernel_) +
                                        " exceeds the smallness gate q_max = " + std::to_string(q_max_gate));
    }

    /// Geometric spectrum q_k = sigma^2 rho^k for k < k_noise.
    static NoiseModel geometric(const WeightedBasis& basis, double sigma, double rho, int k_noise,
                                double q_max_gate = 1.0) {
        if (!(sigma >= 0.0)) throw std::invalid_argument("noise: sigma must be >= 0");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("noise: rho must lie in (0,1)");
        std::vector<double> q(static_cast<std::size_t>(k_noise));
        double v = sigma * sigma;
        for (int k = 0; k < k_noise; ++k) {
            q[static_cast<std::size_t>(k)] = v;
            v *= rho;
        }
        return NoiseModel(basis, std::move(q), q_max_gate);
    }

    /// q == 0: every stochastic scheme must collapse to the deterministic one.
    static NoiseModel silent(const WeightedBasis& basis) { return NoiseModel(basis, {}, 1.0); }

    const WeightedBasis& basis() const { return *basis_; }
    int n_noise_modes() const { return static_cast<int>(spectrum_.size()); }
    const std::vector<double>& spectrum() const { return spectrum_; }
    double trace_q() const { return trace_q_; }
    double trace_qp() const { return trace_qp_; }
    double sup_kernel() const { return sup_kernel_; }
    bool is_null() const { return trace_q_ == 0.0; }

    const std::vector<double>& q_diag_nodes() const { return q_diag_nodes_; }
    const std::vector<double>& qp_diag_nodes() const { return qp_diag_nodes_; }

    double kernel_q(double xi, double zeta) const {
        const int kn = n_noise_modes();
        if (kn == 0) return 0.0;
        std::vector<double> a(static_cast<std::size_t>(kn)), b(static_cast<std::size_t>(kn));
        eval_first_modes(xi, kn, a.data());
        eval_first_modes(zeta, kn, b.data());
        double acc = 0.0;
        for (int k = 0; k < kn; ++k)
            acc += spectrum_[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
        return acc;
    }

    /// q'(xi, zeta) = sum_k q_k r_k^2 e_{k+1}(xi) e_{k+1}(zeta) by the shift law.
    double kernel_qp(double xi, double zeta) const {
        const int kn = n_noise_modes();
        if (kn == 0) return 0.0;
        std::vector<double> a(static_cast<std::size_t>(kn) + 1), b(static_cast<std::size_t>(kn) + 1);
        eval_first_modes(xi, kn + 1, a.data());
        eval_first_modes(zeta, kn + 1, b.data());
        double acc = 0.0;
        for (int k = 0; k < kn; ++k) {
            const double r = basis_->shift_coefficient(k);
            acc += spectrum_[static_cast<std::size_t>(k)] * r * r * a[static_cast<std::size_t>(k) + 1] *
                   b[static_cast<std::size_t>(k) + 1];
        }
        return acc;
    }

private:
    void eval_first_modes(double xi, int count, double* out) const {
        std::vector<double> all(static_cast<std::size_t>(basis_->n_modes()));
        basis_->eval_modes(xi, all);
        for (int k = 0; k < count; ++k) out[k] = all[static_cast<std::size_t>(k)];
    }

    const WeightedBasis* basis_;
    std::vector<double> spectrum_;
    double trace_q_ = 0.0, trace_qp_ = 0.0, sup_kernel_ = 0.0;
    std::vector<double> q_diag_nodes_, qp_diag_nodes_;
};

/// Gaussian increment Delta W over dt: modal coefficients sqrt(q_k dt) g_k.
/// Modes with q_k = 0 never consult the stream.
inline SpectralField sample_wiener_increment(const NoiseModel& model, double dt, Rng& rng) {
    if (!(dt >= 0.0)) throw std::invalid_argument("noise: dt must be >= 0");
    SpectralField out = model.basis().zero_field();
    const auto& q = model.spectrum();
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0 || dt == 0.0) continue;
        out.coeffs[k] = std::sqrt(q[k] * dt) * rng.normal();
    }
    return out;
}

/// Fast Ornstein-Uhlenbeck driver eta^eps as modal coefficients.  The
/// stationary law is eta_k ~ N(0, q_k/2) with covariance
/// E eta_k(tau) eta_k(s) = (q_k/2) exp(-|tau-s|/eps).
struct OUState {
    std::vector<double> coeffs;
    double epsilon = 0.0;
    double tau = 0.0;
};

/// Draws the stationary law, so the process starts in equilibrium.
inline OUState ou_init(const NoiseModel& model, double epsilon, Rng& rng) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("noise: OU timescale must be positive");
    OUState st;
    st.epsilon = epsilon;
    st.tau = 0.0;
    const auto& q = model.spectrum();
    st.coeffs.assign(q.size(), 0.0);
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k] > 0.0) st.coeffs[k] = std::sqrt(0.5 * q[k]) * rng.normal();
    return st;
}

/// Exact update over dt: eta <- e^{-dt/eps} eta + sqrt((q_k/2)(1-e^{-2dt/eps})) g.
/// No time-discretization error enters the OU law.
inline OUState ou_step(const OUState& state, const NoiseModel& model, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise: OU step needs dt > 0");
    OUState out = state;
    const double decay = std::exp(-dt / state.epsilon);
    const double mix = std::sqrt(std::max(0.0, 1.0 - decay * decay));
    const auto& q = model.spectrum();
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        out.coeffs[k] = decay * state.coeffs[k] + std::sqrt(0.5 * q[k]) * mix * rng.normal();
    }
    out.tau = state.tau + dt;
    return out;
}

inline SpectralField ou_field(const OUState& state, const NoiseModel& model) {
    SpectralField out = model.basis().zero_field();
    for (std::size_t k = 0; k < state.coeffs.size(); ++k) out.coeffs[k] = state.coeffs[k];
    return out;
}

/// <Sigma(u) phi, phi> = sum_k q_k [ int u (phi K)' e_k dxi ]^2, the
/// covariance quadratic form of (u W(1))_xi against the probe phi.
/// (phi K)' = (phi' + (xi/2nu) phi) K, so each inner integral is a weighted
/// projection of u (phi' + (xi/2nu) phi) onto e_k.
inline double sigma_form(const SpectralField& u, const NoiseModel& model, const SpectralField& phi) {
    detail::require_same_basis(u, phi);
    const WeightedBasis& b = model.basis();
    if (u.basis != &b) throw std::invalid_argument("sigma_form: field/model basis mismatch");
    const int m = b.n_quad();
    const double inv2nu = 0.5 / b.nu();

    const auto uv = values_at_nodes(u);
    const auto pv = values_at_nodes(phi);
    const auto dv = values_at_nodes(derivative_xi(phi));
    std::vector<double> prod(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        prod[ii] = uv[ii] * (dv[ii] + b.node(i) * inv2nu * pv[ii]);
    }
    std::vector<double> c(static_cast<std::size_t>(b.n_modes()));
    b.analyze(prod, c);
    double acc = 0.0;
    const auto& q = model.spectrum();
    for (std::size_t k = 0; k < q.size(); ++k) acc += q[k] * c[k] * c[k];
    return acc;
}

/// <A(u), phi> = 1/2 int u q(xi,xi) (phi K)'' dxi + 1/2 int u q'(xi,xi) (phi K)' dxi
/// with the (phi K) derivatives expanded through K' = (xi/2nu) K.
inline double a_form(const SpectralField& u, const NoiseModel& model, const SpectralField& phi) {
    detail::require_same_basis(u, phi);
    const WeightedBasis& b = model.basis();
    if (u.basis != &b) throw std::invalid_argument("a_form: field/model basis mismatch");
    const int m = b.n_quad();
    const double nu = b.nu();

    const auto uv = values_at_nodes(u);
    const auto pv = values_at_nodes(phi);
    const auto d1 = derivative_xi(phi);
    const auto dv = values_at_nodes(d1);
    const auto ddv = values_at_nodes(derivative_xi(d1));
    const auto& qd = model.q_diag_nodes();
    const auto& qpd = model.qp_diag_nodes();
    const auto& sw = b.sqrt_weights();

    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double xi = b.node(i);
        const double pk2 = ddv[ii] + (xi / nu) * dv[ii] + (0.5 / nu + xi * xi / (4.0 * nu * nu)) * pv[ii];
        const double pk1 = dv[ii] + (0.5 * xi / nu) * pv[ii];
        // group as (sqrt(w) a)(sqrt(w) b); the raw weight can overflow
        const double lhs = uv[ii] * sw[ii];
        acc += 0.5 * lhs * (qd[ii] * pk2 + qpd[ii] * pk1) * sw[ii];
    }
    return acc;
}

}  // namespace ssb
