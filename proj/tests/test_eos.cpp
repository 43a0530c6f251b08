#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "rotstar/eos.hpp"
#include "rotstar/error.hpp"

using namespace rotstar;

TEST_CASE("stored exponents are consistent") {
    for (double nu : {1.0, 1.3, 1.5, 2.5, 3.0, 4.5}) {
        const auto e = EquationOfState::polytrope_from_nu(nu);
        CHECK(e.nu() == doctest::Approx(1.0 / (e.gamma() - 1.0)).epsilon(1e-15));
        CHECK(e.lambda_rho(3.0) == 0.0);
    }
    const auto wd = EquationOfState::white_dwarf(2.0, 3.0, 0.5);
    CHECK(wd.gamma() == 5.0 / 3.0);
    CHECK(wd.A_const() == doctest::Approx(8.0 * 2.0 / (5.0 * std::pow(3.0, 5.0 / 3.0))).epsilon(1e-14));
}

TEST_CASE("invalid laws are rejected") {
    CHECK_THROWS_AS(EquationOfState::polytrope(2.5), InvalidArgument);
    CHECK_THROWS_AS(EquationOfState::polytrope(1.0), InvalidArgument);
    CHECK_THROWS_AS(EquationOfState::polytrope(5.0 / 3.0, -1.0), InvalidArgument);
    CHECK_THROWS_AS(EquationOfState::white_dwarf(1.0, -1.0, 1.0), InvalidArgument);
}

TEST_CASE("f and f' at reference points") {
    const auto p15 = EquationOfState::polytrope_from_nu(1.5);
    CHECK(f_of_u(-0.5, p15, 1.0) == 0.0);
    CHECK(f_of_u(1.0, p15, 1.0) == doctest::Approx(1.0));
    const auto p2 = EquationOfState::polytrope_from_nu(2.0);
    CHECK(fprime_of_u(0.25, p2, 1.0) == doctest::Approx(0.5));
    CHECK(fprime_of_u(-1.0, p2, 1.0) == 0.0);
    CHECK(fprime_of_u(0.0, p15, 1.0) == 0.0);

    // B u_O / (16 A c^2) = 0.01 with A = B = 1, u_O = 1
    const auto wd = EquationOfState::white_dwarf(1.0, 1.0, 2.5);
    CHECK(f_of_u(1.0, wd, 1.0) == doctest::Approx(std::pow(1.01, 1.5)).epsilon(1e-15));
    CHECK(f_of_u(-0.5, wd, 1.0) == 0.0);
    CHECK_THROWS_AS(f_of_u(-200.0, wd, 1.0), DomainError);
}

TEST_CASE("f' is the derivative of f") {
    const auto wd = EquationOfState::white_dwarf(1.0, 1.0, 0.3);
    for (const auto& eos : {EquationOfState::polytrope_from_nu(1.5),
                            EquationOfState::polytrope_from_nu(3.0), wd}) {
        for (double u : {0.05, 0.3, 0.9, 1.7}) {
            const double h = 1e-6 * u;
            const double fd = (f_of_u(u + h, eos, 2.0) - f_of_u(u - h, eos, 2.0)) / (2.0 * h);
            CHECK(fprime_of_u(u, eos, 2.0) == doctest::Approx(fd).epsilon(1e-8));
        }
    }
    // f'/f -> nu/u as u -> 0+
    for (double u : {1e-4, 1e-6}) CHECK(fprime_of_u(u, wd, 1.0) / f_of_u(u, wd, 1.0) * u ==
                                        doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("white dwarf density matches the degenerate gas law") {
    // P = A c^5 F(X), rho = B c^3 X^3, dF/dX = 8 X^4 / sqrt(1 + X^2); u = int dP / rho.
    const double A = 1.3, B = 0.7, c = 0.9;
    const auto wd = EquationOfState::white_dwarf(A, B, c);
    auto u_of_X = [&](double X) {
        auto dudX = [&](double x) {
            return A * std::pow(c, 5) * 8.0 * std::pow(x, 4) / std::sqrt(1.0 + x * x) /
                   (B * std::pow(c, 3) * x * x * x);
        };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(dudX, 0.0, X, 10, 1e-14);
    };
    for (double u : {0.01, 0.4, 2.0, 9.0}) {
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t it = 200;
        auto [lo, hi] = boost::math::tools::bracket_and_solve_root(
            [&](double X) { return u_of_X(X) - u; }, 1.0, 2.0, true, tol, it);
        const double X = 0.5 * (lo + hi);
        CHECK(wd.density_of_enthalpy(u) == doctest::Approx(B * std::pow(c * X, 3)).epsilon(1e-10));
    }
}

TEST_CASE("f is nondecreasing on u >= 0") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 3.0);
    const auto wd = EquationOfState::white_dwarf(1.0, 1.0, 0.4);
    for (const auto& eos : {EquationOfState::polytrope_from_nu(1.2), wd}) {
        for (int k = 0; k < 2000; ++k) {
            double a = U(rng), b = U(rng);
            if (a > b) std::swap(a, b);
            CHECK(f_of_u(a, eos, 1.0) <= f_of_u(b, eos, 1.0));
        }
    }
}

TEST_CASE("scales") {
    const double pi = std::numbers::pi;
    for (double nu : {1.5, 3.0}) {
        const auto eos = EquationOfState::polytrope_from_nu(nu, 2.0);
        const double g = eos.gamma();
        const ScaleSet s = make_scale(eos, 0.7, 1.5);
        CHECK(s.a_len == doctest::Approx(1.0 / std::sqrt(4.0 * pi * 1.5) *
                                         std::pow(2.0 * g / (g - 1.0), 1.0 / (2.0 * (g - 1.0))) *
                                         std::pow(0.7, -(2.0 - g) / (2.0 * (g - 1.0))))
                              .epsilon(1e-14));
        CHECK(s.rho_O == doctest::Approx(std::pow((g - 1.0) / (2.0 * g) * 0.7, nu)).epsilon(1e-14));
        const ScaleSet t = scale_from_central_density(eos, s.rho_O, 1.5);
        CHECK(t.u_O == doctest::Approx(0.7).epsilon(1e-13));
    }
    const auto wd = EquationOfState::white_dwarf(1.0, 1.0, 0.5);
    const ScaleSet w = make_scale(wd, 3.0);
    CHECK(scale_from_central_density(wd, w.rho_O).u_O == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("beta from Omega") {
    const auto eos = EquationOfState::polytrope(5.0 / 3.0);
    const ScaleSet s1 = scale_from_central_density(eos, 1.0, 1.0);
    CHECK(beta_of_omega(0.0, s1, eos) == 0.0);
    CHECK(beta_of_omega(std::sqrt(2.0 * std::numbers::pi), s1, eos) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(beta_of_omega(-1.0, s1, eos), InvalidArgument);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto e = EquationOfState::polytrope(1.2 + 0.8 * U(rng), 0.1 + 3.0 * U(rng));
        const ScaleSet s = make_scale(e, 0.05 + 5.0 * U(rng), 0.2 + U(rng));
        const double Om = 3.0 * U(rng);
        const double a = beta_of_omega(Om, s, e), b = beta_of_omega_density_form(Om, s);
        if (a > 0) worst = std::max(worst, std::abs(a - b) / a);
        CHECK(omega2_of_beta(a, s, e) == doctest::Approx(Om * Om).epsilon(1e-13));
    }
    CHECK(worst <= 1e-14);
}
