#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rotstar/error.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/kernels.hpp"
#include "rotstar/legendre.hpp"
#include "rotstar/potential.hpp"
#include "rotstar/radial.hpp"
#include "test_util.hpp"

using namespace rotstar;

namespace {
const double pi = std::numbers::pi;

double ball(double r, double) { return r <= 1.0 ? 1.0 : 0.0; }
double ball_potential(double r) { return r <= 1.0 ? (1.0 - r * r / 3.0) / 2.0 : 1.0 / (3.0 * r); }
}  // namespace

TEST_CASE("kernel_eval") {
    CHECK(kernel_eval(0.0, 0.3, 1.0, -0.7) == doctest::Approx(2.0 * pi).epsilon(1e-14));
    CHECK(kernel_eval(1.0, 1.0, 1.0, -1.0) == doctest::Approx(pi).epsilon(1e-14));
    CHECK_THROWS_AS(kernel_eval(0.5, 0.2, 0.5, 0.2), SingularPoint);
    CHECK_THROWS_AS(kernel_eval(0.0, 0.2, 0.0, 0.9), SingularPoint);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> R(0.0, 2.0), Z(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double r = R(rng), z = Z(rng), rp = R(rng), zp = Z(rng);
        const double a = kernel_eval(r, z, rp, zp);
        CHECK(a > 0.0);
        CHECK(a == doctest::Approx(kernel_eval(rp, zp, r, z)).epsilon(1e-12));
        CHECK(a == doctest::Approx(kernels::ring_kernel(r, z, rp, zp)).epsilon(1e-10));
    }
}

TEST_CASE("uniform ball") {
    auto grid = AxiGrid::create(clustered_nodes(80, 2.0, 1.0), 16, 8);
    const auto K = apply_K_multipole(grid, ball);
    for (int i = 0; i < grid->n_r(); ++i)
        for (int j = 0; j < grid->n_zeta(); ++j)
            CHECK(K.values(i, j) == doctest::Approx(ball_potential(grid->r()[i])).epsilon(1e-12));
    CHECK(std::abs(grad_at_origin(K)) <= 1e-6);

    DirectOptions opt;
    opt.r_breaks = {0.0, 0.5, 1.0};
    auto small = AxiGrid::create(uniform_nodes(5, 2.0), 4, 2);
    const auto D = apply_K_direct(small, ball, opt);
    CHECK(std::abs(D.values(0, 0) - 0.5) <= 1e-4);
    for (int i = 0; i < small->n_r(); ++i)
        CHECK(D.values(i, 1) == doctest::Approx(ball_potential(small->r()[i])).epsilon(1e-6));
    const auto Z = apply_K_direct(small, [](double, double) { return 0.0; }, opt);
    CHECK(Z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure l = 2 source") {
    // f_2(s) = s^2 on [0, 1]: (K f)_2(1) = (1/5) int_0^1 s^6 ds
    auto grid = AxiGrid::create(uniform_nodes(41, 1.0), 16, 8);
    const auto f = AxiField::from_function(grid, [](double r, double z) { return r * r * legendre(2, z); });
    const auto K = legendre_coeffs(apply_K_multipole(f));
    CHECK(K.coeffs(grid->n_r() - 1, 1) == doctest::Approx(1.0 / 35.0).epsilon(1e-12));
    CHECK(std::abs(K.coeffs(grid->n_r() - 1, 0)) <= 1e-14);
}

TEST_CASE("multipole agrees with direct quadrature") {
    auto grid = AxiGrid::create(clustered_nodes(64, 1.5, 1.0), 32, 8);
    auto src = [](double r, double z) {
        return r <= 1.0 ? (1.0 - r * r) * (1.0 + 0.4 * z * z - 0.2 * std::pow(z, 4)) : 0.0;
    };
    DirectOptions opt;
    for (double r : grid->r())
        if (r <= 1.0) opt.r_breaks.push_back(r);
    const auto M = apply_K_multipole(grid, src);
    const auto D = apply_K_direct(grid, src, opt);
    CHECK((M.values - D.values).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("operator symmetry and positivity") {
    auto grid = AxiGrid::create(clustered_nodes(48, 2.0, 1.2), 16, 8);
    const auto& rule = grid->rule();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
        SourceFn f = [=](double r, double z) { return std::exp(-a * r * r) * (1.0 + b * z * z); };
        SourceFn g = [=](double r, double z) { return (1.0 + c * r) * std::exp(-r) * (1.0 - d * z * z * z * z); };
        const auto fr = rule_modes(grid, f), gr = rule_modes(grid, g);
        const auto Kf = apply_K_at(grid, fr, rule.s), Kg = apply_K_at(grid, gr, rule.s);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
            for (int m = 0; m < grid->n_modes(); ++m) {
                const double w = 2.0 * pi * rule.w[q] * rule.s[q] * rule.s[q] * 2.0 / (4 * m + 1);
                lhs += w * gr(q, m) * Kf(q, m);
                rhs += w * fr(q, m) * Kg(q, m);
            }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));

        const auto K = apply_K_multipole(grid, f);
        CHECK(K.values.minCoeff() >= 0.0);
    }
}

TEST_CASE("gradient at the origin") {
    const auto eos = EquationOfState::polytrope_from_nu(1.5);
    const auto p = solve_lane_emden(eos, 1.0, -1.0);
    auto grid = AxiGrid::create(p.r_nodes, 16, 8);
    SourceFn f = [&](double r, double) { return p.law.f(p.theta_at(r)); };
    const auto K = apply_K_multipole(grid, f);
    CHECK(std::abs(grad_at_origin(K)) <= 1e-6);
    // K f - K f(0) reproduces theta - 1
    double sup = 0.0;
    for (int i = 0; i < grid->n_r(); ++i)
        sup = std::max(sup, std::abs(K.values(i, 3) - K.values(0, 3) - (p.theta[i] - 1.0)));
    CHECK(sup <= 1e-7);

    // |d_r K f| <= C r near the origin
    std::vector<double> r, s;
    for (int i = 1; i < 8; ++i) {
        const double x = grid->r()[i];
        r.push_back(x);
        s.push_back(std::abs(K.values(i, 0) - K.values(0, 0)) / x);
    }
    CHECK(testutil::loglog_slope(r, s) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("discrete Laplacian order") {
    SourceFn f = [](double r, double z) { return std::exp(-2.0 * r * r) * (1.0 + 0.5 * legendre(2, z)); };
    std::vector<double> h, e;
    for (int n : {31, 61, 121, 241}) {
        auto grid = AxiGrid::create(uniform_nodes(n, 3.0), 16, 8);
        h.push_back(3.0 / (n - 1));
        e.push_back(laplacian_defect(grid, f, 0.2, 0.8));
    }
    CHECK(e.back() <= 1e-3);
    CHECK(testutil::loglog_slope(h, e) >= 1.8);
}
