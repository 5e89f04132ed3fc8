#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssb {

class WeightedBasis;

/// A function on the line stored as coefficients in the eigenbasis {e_k}
/// of the similarity operator L = nu d^2/dxi^2 + (xi/2) d/dxi + 1/2.
struct SpectralField {
    std::vector<double> coeffs;
    const WeightedBasis* basis = nullptr;
    /// Set when an operation pushed content past the top retained mode.
    bool truncation_loss = false;
};

namespace detail {

/// Dot product over four independent accumulator chains; the split breaks
/// the FMA dependence chain so the loop runs at throughput rather than
/// latency.  Fixed summation order keeps results reproducible.
inline double dot4(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

/// Orthonormal Hermite functions psi_k(x) = h_k(x) exp(-x^2/2), where h_k
/// are the Hermite polynomials orthonormal against exp(-x^2) dx.  The
/// three-term recurrence keeps every intermediate bounded for real x.
inline void hermite_psi_all(double x, int count, double* out) {
    if (count <= 0) return;
    const double psi0 = 0.75112554446494248286 * std::exp(-0.5 * x * x);  // pi^{-1/4} e^{-x^2/2}
    out[0] = psi0;
    if (count == 1) return;
    out[1] = std::sqrt(2.0) * x * psi0;
    for (int k = 1; k + 1 < count; ++k) {
        out[k + 1] = x * std::sqrt(2.0 / (k + 1)) * out[k] -
                     std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
    }
}

/// psi_m(x) and psi_{m-1}(x) without storing the whole ladder.
inline void hermite_psi_pair(double x, int m, double& psi_m, double& psi_m1) {
    double pk = 0.75112554446494248286 * std::exp(-0.5 * x * x);
    if (m == 0) {
        psi_m = pk;
        psi_m1 = 0.0;
        return;
    }
    double pk1 = std::sqrt(2.0) * x * pk;  // psi_1
    for (int k = 1; k < m; ++k) {
        const double next = x * std::sqrt(2.0 / (k + 1)) * pk1 -
                            std::sqrt(static_cast<double>(k) / (k + 1)) * pk;
        pk = pk1;
        pk1 = next;
    }
    psi_m = pk1;
    psi_m1 = pk;
}

/// Positive roots of psi_m, ascending.  Scan for sign changes (the root
/// spacing is bounded below by ~pi/sqrt(2m+1)), bisect, then polish with
/// Newton using psi_m'(x) = sqrt(2m) psi_{m-1}(x) - x psi_m(x).
inline std::vector<double> hermite_positive_roots(int m) {
    const double band = std::sqrt(2.0 * m + 1.0);
    const double x_max = band + 2.0;
    const double step = 1.0 / band;
    const int n_expected = m / 2;

    std::vector<double> roots;
    roots.reserve(n_expected);
    // Odd m has a root exactly at 0; start the scan past it.
    double x_prev = (m % 2 == 0) ? 0.0 : 0.25 * step;
    double pm, pm1;
    hermite_psi_pair(x_prev, m, pm, pm1);
    double f_prev = pm;
    for (double x = x_prev + step; x < x_max + step; x += step) {
        hermite_psi_pair(x, m, pm, pm1);
        const double f = pm;
        if (f_prev == 0.0) {
            roots.push_back(x_prev);
        } else if (f * f_prev < 0.0) {
            double lo = x_prev, hi = x, flo = f_prev;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                hermite_psi_pair(mid, m, pm, pm1);
                if (pm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (pm * flo < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = pm;
                }
            }
            double r = 0.5 * (lo + hi);
            for (int it = 0; it < 3; ++it) {
                hermite_psi_pair(r, m, pm, pm1);
                const double deriv = std::sqrt(2.0 * m) * pm1 - r * pm;
                if (deriv == 0.0) break;
                r -= pm / deriv;
            }
            roots.push_back(r);
        }
        x_prev = x;
        f_prev = f;
    }
    if (static_cast<int>(roots.size()) != n_expected)
        throw std::logic_error("Hermite root scan found " + std::to_string(roots.size()) +
                               " roots, expected " + std::to_string(n_expected));
    return roots;
}

}  // namespace detail

/// Precomputed eigenbasis of L on L^2(K), K(xi) = exp(xi^2 / 4 nu).
///
/// Modes are e_k = c_k d^k/dxi^k e_0 with c_k > 0 fixed by unit L^2(K) norm,
/// measured by the quadrature itself.  The quadrature is Gauss-Hermite in
/// the scaled variable x = xi / (2 sqrt(nu)) with the weight K absorbed, so
/// sum_i w_i f(xi_i) g(xi_i) reproduces the weighted inner product exactly
/// for polynomial-times-Gaussian integrands of degree <= 2 n_quad - 1.
///
/// Weights are held as sqrt(w_i) and as the K-free companion weights; the
/// raw w_i overflow double precision near the extreme nodes once n_quad
/// grows past ~176, while both stored forms stay finite.
///
/// Immutable after construction; safe to share across threads.
class WeightedBasis {
public:
    WeightedBasis(double nu, int n_modes, int n_quad) : nu_(nu), n_modes_(n_modes), n_quad_(n_quad) {
        if (!(nu > 0.0)) throw std::invalid_argument("basis: nu must be positive");
        if (n_modes < 1) throw std::invalid_argument("basis: n_modes must be positive");
        if (n_quad < 2 * n_modes)
            throw std::invalid_argument("basis: n_quad must be at least 2*n_modes (quadrature would alias)");
        if (n_quad > 600)
            throw std::invalid_argument("basis: n_quad above 600 overflows double-precision quadrature scales");
        build_tables();
    }

    double nu() const { return nu_; }
    int n_modes() const { return n_modes_; }
    int n_quad() const { return n_quad_; }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& sqrt_weights() const { return sqrt_w_; }
    /// Companion weights for plain line integrals: sum_i pw_i f(xi_i) ~ int f dxi.
    const std::vector<double>& plain_weights() const { return plain_w_; }

    /// e_k(xi_i); row-major [i * n_modes + k].
    const std::vector<double>& basis_table() const { return raw_; }
    /// Transposed value table [k * n_quad + i]; the synthesis layout.
    const std::vector<double>& basis_table_t() const { return raw_t_; }
    /// e_k(xi_i) * sqrt(w_i); the analysis/Gram table.
    const std::vector<double>& scaled_table() const { return scaled_; }

    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    double basis_value(int i, int k) const { return raw_[static_cast<std::size_t>(i) * n_modes_ + k]; }

    /// Shift coefficients r_k with d/dxi e_k = r_k e_{k+1}, k < n_modes-1,
    /// measured by quadrature (analytically sqrt((k+1)/(2 nu))).
    const std::vector<double>& shift_coefficients() const { return shift_; }
    double shift_coefficient(int k) const { return shift_[static_cast<std::size_t>(k)]; }

    /// int e_0 dxi; the constant turning the mode-0 coefficient into mass.
    double mass_normalizer() const { return mass_norm_; }

    /// Evaluation grid for sup-norm scans: quadrature nodes plus midpoints.
    const std::vector<double>& dense_nodes() const { return dense_nodes_; }
    const std::vector<double>& dense_table() const { return dense_raw_; }

    /// Fill out[k] = e_k(xi) for k < n_modes.  Stable for any real xi.
    void eval_modes(double xi, std::span<double> out) const {
        const int n = n_modes_;
        const double x = xi * inv_two_sqrt_nu_;
        std::vector<double> psi(static_cast<std::size_t>(n));
        detail::hermite_psi_all(x, n, psi.data());
        const double env = std::exp(-0.5 * x * x);
        double sign = 1.0;
        for (int k = 0; k < n; ++k) {
            out[static_cast<std::size_t>(k)] = sign * psi[static_cast<std::size_t>(k)] * env * col_scale_;
            sign = -sign;
        }
    }

    /// d/dxi e_k(xi_i); row-major like basis_table().
    const std::vector<double>& deriv_table() const { return deriv_raw_; }

    SpectralField zero_field() const {
        return SpectralField{std::vector<double>(static_cast<std::size_t>(n_modes_), 0.0), this, false};
    }

    /// The unit basis vector e_k as a field.
    SpectralField mode_field(int k) const {
        if (k < 0 || k >= n_modes_) throw std::invalid_argument("basis: mode index out of range");
        SpectralField f = zero_field();
        f.coeffs[static_cast<std::size_t>(k)] = 1.0;
        return f;
    }

    /// Values of a coefficient vector at the quadrature nodes.
    void synthesize(std::span<const double> coeffs, std::span<double> values) const {
        const int n = n_modes_, m = n_quad_;
        std::fill(values.begin(), values.end(), 0.0);
        for (int k = 0; k < n; ++k) {
            const double ck = coeffs[static_cast<std::size_t>(k)];
            if (ck == 0.0) continue;
            const double* col = raw_t_.data() + static_cast<std::size_t>(k) * m;
            for (int i = 0; i < m; ++i) values[static_cast<std::size_t>(i)] += ck * col[i];
        }
    }

    /// Weighted projection of node values onto the basis:
    /// coeffs[k] = sum_i w_i values[i] e_k(xi_i).
    void analyze(std::span<const double> values, std::span<double> coeffs) const {
        const int n = n_modes_, m = n_quad_;
        std::fill(coeffs.begin(), coeffs.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            const double s = values[static_cast<std::size_t>(i)] * sqrt_w_[static_cast<std::size_t>(i)];
            const double* row = scaled_.data() + static_cast<std::size_t>(i) * n;
            for (int k = 0; k < n; ++k) coeffs[static_cast<std::size_t>(k)] += s * row[k];
        }
    }

private:
    void build_tables() {
        const int m = n_quad_, n = n_modes_;
        const double two_sqrt_nu = 2.0 * std::sqrt(nu_);
        inv_two_sqrt_nu_ = 1.0 / two_sqrt_nu;

        // Nodes in the scaled variable, symmetric about 0.
        std::vector<double> x(static_cast<std::size_t>(m));
        {
            const auto pos = detail::hermite_positive_roots(m);
            const int half = static_cast<int>(pos.size());
            const bool odd = (m % 2 != 0);
            int idx = 0;
            for (int i = half - 1; i >= 0; --i) x[static_cast<std::size_t>(idx++)] = -pos[static_cast<std::size_t>(i)];
            if (odd) x[static_cast<std::size_t>(idx++)] = 0.0;
            for (int i = 0; i < half; ++i) x[static_cast<std::size_t>(idx++)] = pos[static_cast<std::size_t>(i)];
        }

        nodes_.resize(static_cast<std::size_t>(m));
        sqrt_w_.resize(static_cast<std::size_t>(m));
        plain_w_.resize(static_cast<std::size_t>(m));
        raw_.assign(static_cast<std::size_t>(m) * n, 0.0);
        raw_t_.assign(static_cast<std::size_t>(m) * n, 0.0);
        scaled_.assign(static_cast<std::size_t>(m) * n, 0.0);
        deriv_raw_.assign(static_cast<std::size_t>(m) * n, 0.0);

        std::vector<double> psi(static_cast<std::size_t>(m));
        std::vector<double> psi_node(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i < m; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            nodes_[static_cast<std::size_t>(i)] = two_sqrt_nu * xi;
            detail::hermite_psi_all(xi, m, psi.data());
            double denom = 0.0;
            for (int k = 0; k < m; ++k) denom += psi[static_cast<std::size_t>(k)] * psi[static_cast<std::size_t>(k)];
            plain_w_[static_cast<std::size_t>(i)] = two_sqrt_nu / denom;
            sqrt_w_[static_cast<std::size_t>(i)] =
                std::sqrt(two_sqrt_nu) * std::exp(0.5 * xi * xi) / std::sqrt(denom);

            // Unnormalized mode values (-1)^k psi_k e^{-x^2/2} and their
            // scaled-variable derivatives.
            const double env = std::exp(-0.5 * xi * xi);
            double sign = 1.0;
            for (int k = 0; k <= n && k < m; ++k) psi_node[static_cast<std::size_t>(k)] = psi[static_cast<std::size_t>(k)];
            for (int k = 0; k < n; ++k) {
                const double pk = psi_node[static_cast<std::size_t>(k)];
                const double pk1 = (k > 0) ? psi_node[static_cast<std::size_t>(k) - 1] : 0.0;
                raw_[static_cast<std::size_t>(i) * n + k] = sign * pk * env;
                const double dx = std::sqrt(2.0 * k) * pk1 - 2.0 * xi * pk;  // d/dx of h_k e^{-x^2}
                deriv_raw_[static_cast<std::size_t>(i) * n + k] = sign * dx * env * inv_two_sqrt_nu_;
                sign = -sign;
            }
        }

        // Normalize each column by its measured quadrature norm.  The raw
        // columns all carry the same analytic norm sqrt(2 sqrt(nu)), so one
        // shared evaluation scale suffices for eval_modes.
        std::vector<double> inv_norm(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            double g = 0.0;
            for (int i = 0; i < m; ++i) {
                const double s = raw_[static_cast<std::size_t>(i) * n + k] * sqrt_w_[static_cast<std::size_t>(i)];
                g += s * s;
            }
            inv_norm[static_cast<std::size_t>(k)] = 1.0 / std::sqrt(g);
        }
        col_scale_ = 1.0 / std::sqrt(two_sqrt_nu);
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < n; ++k) {
                const std::size_t idx = static_cast<std::size_t>(i) * n + k;
                raw_[idx] *= inv_norm[static_cast<std::size_t>(k)];
                deriv_raw_[idx] *= inv_norm[static_cast<std::size_t>(k)];
                scaled_[idx] = raw_[idx] * sqrt_w_[static_cast<std::size_t>(i)];
                raw_t_[static_cast<std::size_t>(k) * m + i] = raw_[idx];
            }
        }

        // Measured shift coefficients r_k = <e_k', e_{k+1}> and the residual
        // || e_k' - r_k e_{k+1} ||; both guard against normalization drift.
        shift_.resize(static_cast<std::size_t>(n) - 1);
        for (int k = 0; k + 1 < n; ++k) {
            double r = 0.0;
            for (int i = 0; i < m; ++i) {
                r += deriv_raw_[static_cast<std::size_t>(i) * n + k] * sqrt_w_[static_cast<std::size_t>(i)] *
                     scaled_[static_cast<std::size_t>(i) * n + k + 1];
            }
            shift_[static_cast<std::size_t>(k)] = r;
            const double expected = std::sqrt((k + 1) / (2.0 * nu_));
            if (std::abs(r - expected) > 1e-9 * std::max(1.0, expected))
                throw std::logic_error("basis: measured shift coefficient r_" + std::to_string(k) +
                                       " disagrees with sqrt((k+1)/(2 nu))");
            double res2 = 0.0;
            for (int i = 0; i < m; ++i) {
                const double d = (deriv_raw_[static_cast<std::size_t>(i) * n + k] -
                                  r * raw_[static_cast<std::size_t>(i) * n + k + 1]) *
                                 sqrt_w_[static_cast<std::size_t>(i)];
                res2 += d * d;
            }
            if (std::sqrt(res2) > 1e-9)
                throw std::logic_error("basis: derivative of e_" + std::to_string(k) +
                                       " is not a pure shift within quadrature tolerance");
        }

        mass_norm_ = 0.0;
        for (int i = 0; i < m; ++i)
            mass_norm_ += plain_w_[static_cast<std::size_t>(i)] * raw_[static_cast<std::size_t>(i) * n];

        // Dense grid (nodes plus midpoints) for sup-norm scans.
        dense_nodes_.clear();
        dense_nodes_.reserve(2 * static_cast<std::size_t>(m) - 1);
        for (int i = 0; i < m; ++i) {
            dense_nodes_.push_back(nodes_[static_cast<std::size_t>(i)]);
            if (i + 1 < m)
                dense_nodes_.push_back(0.5 * (nodes_[static_cast<std::size_t>(i)] + nodes_[static_cast<std::size_t>(i) + 1]));
        }
        dense_raw_.resize(dense_nodes_.size() * static_cast<std::size_t>(n));
        std::vector<double> row(static_cast<std::size_t>(n));
        for (std::size_t j = 0; j < dense_nodes_.size(); ++j) {
            eval_modes(dense_nodes_[j], row);
            std::copy(row.begin(), row.end(), dense_raw_.begin() + j * static_cast<std::size_t>(n));
        }
    }

    double nu_;
    int n_modes_;
    int n_quad_;
    double inv_two_sqrt_nu_ = 0.0;
    double col_scale_ = 0.0;
    double mass_norm_ = 0.0;
    std::vector<double> nodes_, sqrt_w_, plain_w_;
    std::vector<double> raw_, raw_t_, scaled_, deriv_raw_;
    std::vector<double> shift_;
    std::vector<double> dense_nodes_, dense_raw_;
};

/// Constructs the basis; rejects non-positive nu and aliasing quadratures.
inline WeightedBasis build_basis(double nu, int n_modes, int n_quad) {
    return WeightedBasis(nu, n_modes, n_quad);
}

namespace detail {
inline void require_same_basis(const SpectralField& f, const SpectralField& g) {
    if (f.basis == nullptr || f.basis != g.basis)
        throw std::invalid_argument("fields live in different bases");
}
}  // namespace detail

/// <f, g> in L^2(K); by Parseval this is the coefficient dot product.
inline double inner_product(const SpectralField& f, const SpectralField& g) {
    detail::require_same_basis(f, g);
    double acc = 0.0;
    for (std::size_t k = 0; k < f.coeffs.size(); ++k) acc += f.coeffs[k] * g.coeffs[k];
    return acc;
}

inline double l2k_norm(const SpectralField& f) {
    double acc = 0.0;
    for (double c : f.coeffs) acc += c * c;
    return std::sqrt(acc);
}

/// Fraction of the squared norm sitting in the top retained mode.
inline double tail_energy(const SpectralField& f) {
    const double total = [&] {
        double acc = 0.0;
        for (double c : f.coeffs) acc += c * c;
        return acc;
    }();
    if (total == 0.0) return 0.0;
    const double top = f.coeffs.back();
    return top * top / total;
}

/// L u with (L u)_k = -(k/2) u_k.
inline SpectralField apply_L(const SpectralField& u) {
    SpectralField out = u;
    for (std::size_t k = 0; k < out.coeffs.size(); ++k) out.coeffs[k] *= -0.5 * static_cast<double>(k);
    return out;
}

/// d/dxi via the shift law (d u)_{k+1} = r_k u_k.  A nonzero top input mode
/// leaves the span; the result is computed and flagged.
inline SpectralField derivative_xi(const SpectralField& u) {
    const WeightedBasis& b = *u.basis;
    SpectralField out = b.zero_field();
    out.truncation_loss = u.truncation_loss || (u.coeffs.back() != 0.0);
    const auto& r = b.shift_coefficients();
    for (std::size_t k = 0; k + 1 < u.coeffs.size(); ++k) out.coeffs[k + 1] = r[k] * u.coeffs[k];
    return out;
}

inline std::vector<double> values_at_nodes(const SpectralField& u) {
    std::vector<double> v(static_cast<std::size_t>(u.basis->n_quad()));
    u.basis->synthesize(u.coeffs, v);
    return v;
}

inline SpectralField project_node_values(const WeightedBasis& b, std::span<const double> values) {
    SpectralField out = b.zero_field();
    b.analyze(values, out.coeffs);
    return out;
}

/// Collocation product: evaluate on the quadrature nodes, multiply, project
/// back.  Exact while the product's modal content stays inside the degree
/// the quadrature supports.
inline SpectralField pointwise_product(const SpectralField& f, const SpectralField& g) {
    detail::require_same_basis(f, g);
    const WeightedBasis& b = *f.basis;
    std::vector<double> vf = values_at_nodes(f);
    const std::vector<double> vg = values_at_nodes(g);
    for (std::size_t i = 0; i < vf.size(); ++i) vf[i] *= vg[i];
    SpectralField out = project_node_values(b, vf);
    out.truncation_loss = f.truncation_loss || g.truncation_loss;
    return out;
}

inline std::vector<double> eval_field(const SpectralField& u, std::span<const double> xs) {
    const WeightedBasis& b = *u.basis;
    const int n = b.n_modes();
    std::vector<double> modes(static_cast<std::size_t>(n));
    std::vector<double> out(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        b.eval_modes(xs[j], modes);
        out[j] = detail::dot4(u.coeffs.data(), modes.data(), n);
    }
    return out;
}

/// int u dxi.  Modes k >= 1 are exact derivatives of decaying functions and
/// integrate to zero, so only the mode-0 coefficient contributes.
inline double mass(const SpectralField& u) {
    return u.coeffs[0] * u.basis->mass_normalizer();
}

/// max |u| over the dense evaluation grid (quadrature nodes plus midpoints).
inline double sup_norm(const SpectralField& u) {
    const WeightedBasis& b = *u.basis;
    const int n = b.n_modes();
    const auto& table = b.dense_table();
    const std::size_t rows = b.dense_nodes().size();
    double best = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
        const double* row = table.data() + j * static_cast<std::size_t>(n);
        best = std::max(best, std::abs(detail::dot4(u.coeffs.data(), row, n)));
    }
    return best;
}

/// || d/dxi u ||_{L^2(K)} via the shift law and Parseval.
inline double h1k_norm(const SpectralField& u) {
    const auto& r = u.basis->shift_coefficients();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < u.coeffs.size(); ++k) {
        const double d = r[k] * u.coeffs[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Small coefficient-space helpers.
inline SpectralField scaled(const SpectralField& u, double a) {
    SpectralField out = u;
    for (double& c : out.coeffs) c *= a;
    return out;
}

inline SpectralField add(const SpectralField& u, const SpectralField& v) {
    detail::require_same_basis(u, v);
    SpectralField out = u;
    for (std::size_t k = 0; k < out.coeffs.size(); ++k) out.coeffs[k] += v.coeffs[k];
    out.truncation_loss = u.truncation_loss || v.truncation_loss;
    return out;
}

inline SpectralField sub(const SpectralField& u, const SpectralField& v) {
    detail::require_same_basis(u, v);
    SpectralField out = u;
    for (std::size_t k = 0; k < out.coeffs.size(); ++k) out.coeffs[k] -= v.coeffs[k];
    out.truncation_loss = u.truncation_loss || v.truncation_loss;
    return out;
}

}  // namespace ssb
