#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "ssburgers/basis.hpp"
#include "ssburgers/rng.hpp"
#include "test_support.hpp"

using namespace ssb;
using ssb::test::random_field;

namespace {

double gram_entry(const WeightedBasis& b, int j, int k) {
    double acc = 0.0;
    for (int i = 0; i < b.n_quad(); ++i)
        acc += b.scaled_table()[static_cast<std::size_t>(i) * b.n_modes() + j] *
               b.scaled_table()[static_cast<std::size_t>(i) * b.n_modes() + k];
    return acc;
}

}  // namespace

TEST_CASE("build_basis rejects bad arguments") {
    CHECK_THROWS_AS(build_basis(0.0, 8, 16), std::invalid_argument);
    CHECK_THROWS_AS(build_basis(-1.0, 8, 16), std::invalid_argument);
    CHECK_THROWS_AS(build_basis(1.0, 8, 15), std::invalid_argument);
    CHECK_NOTHROW(build_basis(1.0, 8, 16));
}

TEST_CASE("Gram matrix is the identity (nu=1, N=8, M=16)") {
    const auto b = build_basis(1.0, 8, 16);
    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k)
            CHECK(std::abs(gram_entry(b, j, k) - (j == k ? 1.0 : 0.0)) <= 1e-10);
}

TEST_CASE("Gram identity holds at the reference scale (nu=1, N=64, M=128)") {
    const auto b = build_basis(1.0, 64, 128);
    double worst = 0.0;
    for (int j = 0; j < 64; ++j)
        for (int k = j; k < 64; ++k)
            worst = std::max(worst, std::abs(gram_entry(b, j, k) - (j == k ? 1.0 : 0.0)));
    CHECK(worst <= 1e-10);
}

TEST_CASE("mode 0 carries the Gaussian normalization constants") {
    const double nu = 1.0;
    const auto b = build_basis(nu, 8, 16);
    const double c = std::pow(4.0 * std::numbers::pi * nu, 0.25);

    // int e_0 dxi for the unit-norm mode, against the closed form and
    // against a refined quadrature.
    CHECK(b.mass_normalizer() == doctest::Approx(c).epsilon(1e-11));
    const auto fine = build_basis(nu, 8, 64);
    const double refined = ssb::test::refined_plain_integral(fine, b.mode_field(0));
    CHECK(std::abs(b.mass_normalizer() - refined) <= 1e-10);

    // The mass-normalized profile e_0 / (4 pi nu)^{1/4} integrates to one.
    double plain = 0.0;
    for (int i = 0; i < b.n_quad(); ++i)
        plain += b.plain_weights()[static_cast<std::size_t>(i)] * b.basis_value(i, 0) / c;
    CHECK(plain == doctest::Approx(1.0).epsilon(1e-10));

    // And every higher mode is an exact derivative, so it integrates to zero.
    for (int k = 1; k < 8; ++k) {
        double zk = 0.0;
        for (int i = 0; i < b.n_quad(); ++i)
            zk += b.plain_weights()[static_cast<std::size_t>(i)] * b.basis_value(i, k);
        CHECK(std::abs(zk) <= 1e-10);
    }
}

TEST_CASE("shift coefficients match a finite-difference oracle (nu=0.5, N=16)") {
    const double nu = 0.5;
    const auto b = build_basis(nu, 16, 32);
    const auto fine = build_basis(nu, 16, 96);
    const double h = 1e-5;
    for (int k = 0; k <= 14; ++k) {
        const SpectralField ek = b.mode_field(k);
        const SpectralField ek1 = b.mode_field(k + 1);
        std::vector<double> xp(fine.nodes()), xm(fine.nodes());
        for (auto& x : xp) x += h;
        for (auto& x : xm) x -= h;
        const auto vp = eval_field(ek, xp);
        const auto vm = eval_field(ek, xm);
        const auto w = eval_field(ek1, fine.nodes());
        double r_fd = 0.0;
        for (int i = 0; i < fine.n_quad(); ++i) {
            const double sw = fine.sqrt_weights()[static_cast<std::size_t>(i)];
            r_fd += ((vp[static_cast<std::size_t>(i)] - vm[static_cast<std::size_t>(i)]) / (2.0 * h)) * sw *
                    w[static_cast<std::size_t>(i)] * sw;
        }
        CHECK(std::abs(r_fd - b.shift_coefficient(k)) <= 1e-9 * std::max(1.0, b.shift_coefficient(k)));
        CHECK(b.shift_coefficient(k) == doctest::Approx(std::sqrt((k + 1) / (2.0 * nu))).epsilon(1e-10));
    }
}

TEST_CASE("derivative shift is exactly off-diagonal") {
    const auto b = build_basis(1.0, 16, 32);
    for (int k = 0; k + 1 < 16; ++k) {
        const auto d = derivative_xi(b.mode_field(k));
        for (int m = 0; m < 16; ++m) {
            const double expected = (m == k + 1) ? b.shift_coefficient(k) : 0.0;
            CHECK(std::abs(d.coeffs[static_cast<std::size_t>(m)] - expected) <= 1e-9);
        }
    }
    // Quadrature route: <e_k', e_m> with the stored derivative table.
    for (int k = 0; k + 1 < 16; ++k) {
        for (int m = 0; m < 16; ++m) {
            double ip = 0.0;
            for (int i = 0; i < b.n_quad(); ++i) {
                const double sw = b.sqrt_weights()[static_cast<std::size_t>(i)];
                ip += b.deriv_table()[static_cast<std::size_t>(i) * 16 + k] * sw *
                      b.scaled_table()[static_cast<std::size_t>(i) * 16 + m];
            }
            const double expected = (m == k + 1) ? b.shift_coefficient(k) : 0.0;
            CHECK(std::abs(ip - expected) <= 1e-9);
        }
    }
}

TEST_CASE("inner products") {
    const auto b = build_basis(1.0, 8, 16);
    CHECK(inner_product(b.mode_field(2), b.mode_field(2)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inner_product(b.mode_field(1), b.mode_field(3))) <= 1e-12);

    SpectralField f = add(b.mode_field(0), scaled(b.mode_field(1), 2.0));
    SpectralField g = scaled(b.mode_field(1), 3.0);
    CHECK(inner_product(f, g) == doctest::Approx(6.0).epsilon(1e-12));

    // Coefficient route agrees with the quadrature route.
    Rng rng(11);
    const auto u = random_field(b, rng);
    const auto v = random_field(b, rng);
    const auto vu = values_at_nodes(u);
    const auto vv = values_at_nodes(v);
    double quad = 0.0;
    for (int i = 0; i < b.n_quad(); ++i) {
        const double sw = b.sqrt_weights()[static_cast<std::size_t>(i)];
        quad += vu[static_cast<std::size_t>(i)] * sw * vv[static_cast<std::size_t>(i)] * sw;
    }
    CHECK(std::abs(quad - inner_product(u, v)) <= 1e-10);

    const auto other = build_basis(1.0, 8, 16);
    CHECK_THROWS_AS((void)inner_product(b.mode_field(0), other.mode_field(0)), std::invalid_argument);
}

TEST_CASE("apply_L is diagonal with eigenvalues -k/2") {
    const auto b = build_basis(1.0, 8, 16);
    CHECK(l2k_norm(apply_L(b.mode_field(0))) == doctest::Approx(0.0));
    CHECK(apply_L(b.mode_field(2)).coeffs[2] == doctest::Approx(-1.0));
    CHECK(apply_L(b.mode_field(5)).coeffs[5] == doctest::Approx(-2.5));
}

TEST_CASE("L applied in physical space agrees with the diagonal rule") {
    const int n = 16;
    const auto b = build_basis(1.0, n, 32);
    const double h = 1e-3;
    std::vector<double> lvals(static_cast<std::size_t>(b.n_quad()));
    std::vector<double> coeffs(static_cast<std::size_t>(n));
    for (int j = 0; j <= n - 4; ++j) {
        const SpectralField ej = b.mode_field(j);
        std::vector<double> x0(b.nodes()), xp(b.nodes()), xm(b.nodes()), xpp(b.nodes()), xmm(b.nodes());
        for (auto& x : xp) x += h;
        for (auto& x : xm) x -= h;
        for (auto& x : xpp) x += 2.0 * h;
        for (auto& x : xmm) x -= 2.0 * h;
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
            lvals[ii] = d2 + 0.5 * b.node(i) * d1 + 0.5 * v0[ii];
        }
        b.analyze(lvals, coeffs);
        for (int k = 0; k <= n - 4; ++k) {
            const double expected = (k == j) ? -0.5 * j : 0.0;
            CHECK(std::abs(coeffs[static_cast<std::size_t>(k)] - expected) <= 1e-6);
        }
    }
}

TEST_CASE("derivative_xi basics") {
    const auto b = build_basis(1.0, 8, 16);
    const double r0 = std::sqrt(0.5);
    const auto d0 = derivative_xi(b.mode_field(0));
    CHECK(d0.coeffs[1] == doctest::Approx(r0).epsilon(1e-10));
    CHECK_FALSE(d0.truncation_loss);

    CHECK(l2k_norm(derivative_xi(b.zero_field())) == 0.0);

    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const auto u = random_field(b, rng);
        const auto d = derivative_xi(u);
        CHECK(d.coeffs[0] == 0.0);
        CHECK(mass(d) == 0.0);
    }

    auto top = b.mode_field(7);
    CHECK(derivative_xi(top).truncation_loss);
}

TEST_CASE("pointwise products") {
    // The cubic integrand decays like exp(-2x^2), outside the class the rule
    // integrates exactly, so give the product rule headroom beyond 2N.
    const auto b = build_basis(1.0, 8, 32);
    Rng rng(5);
    const auto f = random_field(b, rng);

    CHECK(l2k_norm(pointwise_product(f, b.zero_field())) == 0.0);

    // Mode-0 projection of e_0^2 equals the cubic node sum, checked against
    // a refined rule.
    const auto e0 = b.mode_field(0);
    const auto p = pointwise_product(e0, e0);
    const auto fine = build_basis(1.0, 8, 64);
    const auto vals = eval_field(e0, fine.nodes());
    double cubic = 0.0;
    for (int i = 0; i < fine.n_quad(); ++i) {
        const double sw = fine.sqrt_weights()[static_cast<std::size_t>(i)];
        const double e0f = vals[static_cast<std::size_t>(i)];
        const double e0b = eval_field(b.mode_field(0), std::vector<double>{fine.node(i)})[0];
        cubic += sw * sw * e0f * e0f * e0b;
    }
    CHECK(std::abs(p.coeffs[0] - cubic) <= 1e-9);

    // d(f^2)/2 carries no mass.
    const auto flux = scaled(derivative_xi(pointwise_product(f, f)), 0.5);
    CHECK(mass(flux) == 0.0);
}

TEST_CASE("eval_field values") {
    const double nu = 1.0;
    const auto b = build_basis(nu, 8, 16);
    const double c = std::pow(4.0 * std::numbers::pi * nu, 0.25);

    // Unit-norm mode at the origin, then the mass-normalized profile which
    // takes the textbook value (4 pi nu)^{-1/2}.
    const double at0 = eval_field(b.mode_field(0), std::vector<double>{0.0})[0];
    CHECK(at0 == doctest::Approx(1.0 / c).epsilon(1e-12));
    const double gauss0 = eval_field(scaled(b.mode_field(0), 1.0 / c), std::vector<double>{0.0})[0];
    CHECK(gauss0 == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi * nu)).epsilon(1e-12));

    const auto zs = eval_field(b.zero_field(), std::vector<double>{-3.0, 0.0, 2.0});
    for (double z : zs) CHECK(z == 0.0);

    CHECK(std::abs(eval_field(b.mode_field(1), std::vector<double>{0.0})[0]) <= 1e-14);

    // Node-table agreement.
    Rng rng(9);
    const auto u = random_field(b, rng);
    const auto direct = eval_field(u, b.nodes());
    const auto table = values_at_nodes(u);
    CHECK(ssb::test::max_abs_diff(direct, table) <= 1e-12);
}

TEST_CASE("mass functional") {
    const auto b = build_basis(1.0, 8, 16);
    const auto fine = build_basis(1.0, 8, 64);

    const double m0 = mass(b.mode_field(0));
    CHECK(std::abs(m0 - ssb::test::refined_plain_integral(fine, b.mode_field(0))) <= 1e-10);
    CHECK(mass(b.mode_field(3)) == 0.0);

    Rng rng(13);
    const auto u = random_field(b, rng);
    const auto v = random_field(b, rng);
    CHECK(mass(add(u, v)) == doctest::Approx(mass(u) + mass(v)).epsilon(1e-13));
}

TEST_CASE("sup_norm") {
    const double nu = 1.0;
    const auto b = build_basis(nu, 8, 16);
    CHECK(sup_norm(b.zero_field()) == 0.0);

    const double c = std::pow(4.0 * std::numbers::pi * nu, 0.25);
    const auto gauss = scaled(b.mode_field(0), 1.0 / c);
    CHECK(sup_norm(gauss) == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi)).epsilon(1e-12));

    Rng rng(17);
    const auto u = random_field(b, rng);
    CHECK(sup_norm(scaled(u, 2.0)) == doctest::Approx(2.0 * sup_norm(u)).epsilon(1e-13));
}

TEST_CASE("h1k_norm and the Poincare inequality") {
    const auto b = build_basis(1.0, 16, 32);
    CHECK(h1k_norm(b.zero_field()) == 0.0);
    CHECK(h1k_norm(b.mode_field(0)) == doctest::Approx(b.shift_coefficient(0)).epsilon(1e-12));

    // (1/2)||u||^2 <= ||u'||^2, sharp at e_0 for nu = 1.
    const auto e0 = b.mode_field(0);
    CHECK(h1k_norm(e0) * h1k_norm(e0) >= 0.5 * l2k_norm(e0) * l2k_norm(e0) * (1.0 - 1e-12));

    Rng rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto u = random_field(b, rng);
        const double lhs = 0.5 * l2k_norm(u) * l2k_norm(u);
        const double rhs = h1k_norm(u) * h1k_norm(u);
        CHECK(rhs >= lhs * (1.0 - 1e-12));
    }
}

TEST_CASE("Parseval identity against quadrature") {
    const auto b = build_basis(0.7, 12, 24);
    Rng rng(29);
    const auto u = random_field(b, rng);
    const auto vals = values_at_nodes(u);
    double quad = 0.0;
    for (int i = 0; i < b.n_quad(); ++i) {
        const double sv = vals[static_cast<std::size_t>(i)] * b.sqrt_weights()[static_cast<std::size_t>(i)];
        quad += sv * sv;
    }
    CHECK(std::sqrt(quad) == doctest::Approx(l2k_norm(u)).epsilon(1e-12));
}
