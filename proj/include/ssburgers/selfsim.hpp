#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssburgers/basis.hpp"

namespace ssb {

/// A field sample in the physical frame: w(t, x) at abscissae xs, t >= 1.
struct PhysicalSnapshot {
    double t = 1.0;
    std::vector<double> xs;
    std::vector<double> ws;
};

struct SimilarityFrame {
    double tau = 0.0;
    SpectralField u;
};

class projection_loss : public std::runtime_error {
public:
    projection_loss(double residual, double limit)
        : std::runtime_error("similarity projection residual " + std::to_string(residual) +
                             " exceeds " + std::to_string(limit)),
          residual(residual) {}
    double residual;
};

/// Abscissae where the similarity-frame quadrature nodes land at time t.
inline std::vector<double> mapped_nodes(const WeightedBasis& basis, double t) {
    std::vector<double> xs(basis.nodes());
    const double s = std::sqrt(t);
    for (double& x : xs) x *= s;
    return xs;
}

/// Physical frame -> similarity frame: tau = log t, u(xi) = sqrt(t) w(t, xi sqrt(t)).
///
/// The snapshot must be sampled at mapped_nodes(basis, t); projection is by
/// quadrature, and a relative L^2(K) residual above 1e-4 raises
/// projection_loss.
inline SimilarityFrame to_selfsimilar(const PhysicalSnapshot& snap, const WeightedBasis& basis) {
    if (!(snap.t >= 1.0)) throw std::invalid_argument("to_selfsimilar: requires t >= 1");
    const int m = basis.n_quad();
    if (static_cast<int>(snap.xs.size()) != m || snap.ws.size() != snap.xs.size())
        throw std::invalid_argument("to_selfsimilar: snapshot must carry one sample per quadrature node");
    const double root_t = std::sqrt(snap.t);
    for (int i = 0; i < m; ++i) {
        const double expect = basis.node(i) * root_t;
        if (std::abs(snap.xs[static_cast<std::size_t>(i)] - expect) >
            1e-9 * (1.0 + std::abs(expect)))
            throw std::invalid_argument("to_selfsimilar: snapshot abscissae must be the mapped quadrature nodes");
    }

    std::vector<double> uvals(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) uvals[static_cast<std::size_t>(i)] = root_t * snap.ws[static_cast<std::size_t>(i)];

    SimilarityFrame frame;
    frame.tau = std::log(snap.t);
    frame.u = project_node_values(basis, uvals);

    // Residual of the projection back on the sample grid, weighted.
    std::vector<double> back(static_cast<std::size_t>(m));
    basis.synthesize(frame.u.coeffs, back);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double sw = basis.sqrt_weights()[ii];
        const double d = (back[ii] - uvals[ii]) * sw;
        const double v = uvals[ii] * sw;
        num += d * d;
        den += v * v;
    }
    if (den > 0.0) {
        const double rel = std::sqrt(num / den);
        if (rel > 1e-4) throw projection_loss(rel, 1e-4);
    }
    return frame;
}

/// Similarity frame -> physical frame: t = e^tau, w(t, x) = e^{-tau/2} u(x e^{-tau/2}).
inline PhysicalSnapshot from_selfsimilar(double tau, const SpectralField& u, std::span<const double> xs) {
    PhysicalSnapshot snap;
    snap.t = std::exp(tau);
    snap.xs.assign(xs.begin(), xs.end());
    const double amp = std::exp(-0.5 * tau);
    std::vector<double> xi(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xi[i] = xs[i] * amp;
    snap.ws = eval_field(u, xi);
    for (double& w : snap.ws) w *= amp;
    return snap;
}

/// Defaults to the mapped quadrature nodes, which makes the round trip with
/// to_selfsimilar exact up to rounding.
inline PhysicalSnapshot from_selfsimilar(double tau, const SpectralField& u) {
    return from_selfsimilar(tau, u, mapped_nodes(*u.basis, std::exp(tau)));
}

/// Mass-M stationary profile of the deterministic equation in similarity
/// variables, via Cole-Hopf:
///   u(xi) = sqrt(nu/pi) (1 - A) exp(-xi^2/4nu) / theta(xi),
///   theta(xi) = A + (1 - A) erfc(xi / (2 sqrt(nu))) / 2,  A = exp(-M / 2nu).
/// Satisfies nu u'' + (xi/2) u' + u/2 - u u' = 0 with int u dxi = M.
inline std::vector<double> colehopf_profile(double M, double nu, std::span<const double> xs) {
    if (!(nu > 0.0)) throw std::invalid_argument("colehopf_profile: nu must be positive");
    const double a = std::exp(-M / (2.0 * nu));
    const double pref = std::sqrt(nu / std::numbers::pi) * (1.0 - a);
    std::vector<double> out(xs.size());
    const double inv2s = 1.0 / (2.0 * std::sqrt(nu));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double s = xs[i] * inv2s;
        const double theta = a + (1.0 - a) * 0.5 * std::erfc(s);
        out[i] = pref * std::exp(-s * s) / theta;
    }
    return out;
}

struct ColeHopfValidation {
    double ode_residual = 0.0;  // max | nu u'' + xi u'/2 + u/2 - u u' | on |xi| <= 8 sqrt(nu)
    double mass_error = 0.0;    // | int u dxi - M |
};

/// Brute-force certification of the profile before it may serve as an
/// oracle: a fourth-order finite-difference residual of the stationary ODE
/// and a trapezoid mass check on a wide fine grid.
inline ColeHopfValidation validate_colehopf_profile(double M, double nu) {
    const double s = std::sqrt(nu);
    ColeHopfValidation v;

    {
        const double h = 0.01 * s;
        const double lim = 8.0 * s;
        const int n = static_cast<int>(std::floor(2.0 * lim / h)) + 1;
        std::vector<double> xs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = -lim + h * i;
        const auto u = colehopf_profile(M, nu, xs);
        for (int i = 2; i + 2 < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double d1 = (-u[ii + 2] + 8.0 * u[ii + 1] - 8.0 * u[ii - 1] + u[ii - 2]) / (12.0 * h);
            const double d2 =
                (-u[ii + 2] + 16.0 * u[ii + 1] - 30.0 * u[ii] + 16.0 * u[ii - 1] - u[ii - 2]) /
                (12.0 * h * h);
            const double res = nu * d2 + 0.5 * xs[ii] * d1 + 0.5 * u[ii] - u[ii] * d1;
            v.ode_residual = std::max(v.ode_residual, std::abs(res));
        }
    }

    {
        const double h = 0.02 * s;
        const double lim = 16.0 * s;
        const int n = static_cast<int>(std::floor(2.0 * lim / h)) + 1;
        std::vector<double> xs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = -lim + h * i;
        const auto u = colehopf_profile(M, nu, xs);
        double acc = 0.5 * (u.front() + u.back());
        for (std::size_t i = 1; i + 1 < u.size(); ++i) acc += u[i];
        v.mass_error = std::abs(acc * h - M);
    }
    return v;
}

/// The profile projected into the basis (for norm comparisons).
inline SpectralField colehopf_field(double M, const WeightedBasis& basis) {
    const auto vals = colehopf_profile(M, basis.nu(), basis.nodes());
    return project_node_values(basis, vals);
}

}  // namespace ssb
