// Acceptance run at the reference resolution N_r = 256, N_zeta = 32, L_max = 8.
// Prints one PASS/FAIL line per criterion; exits 1 when any criterion fails.

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "property_checks.hpp"
#include "rotstar/equilibrium.hpp"
#include "rotstar/error.hpp"
#include "rotstar/mass.hpp"
#include "rotstar/perturb.hpp"
#include "rotstar/potential.hpp"
#include "rotstar/radial.hpp"
#include "rotstar/rotation.hpp"
#include "test_util.hpp"

using namespace rotstar;

namespace {

constexpr int kNr = 256, kNzeta = 32, kLmax = 8;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back((ok ? "" : "FAILED ") + what);
    }
};

std::string g(double x) { return fmt::format("{:.3g}", x); }

double sup(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

RadialProfile profile(double nu) {
    return solve_lane_emden(EquationOfState::polytrope_from_nu(nu), 1.0, -1.0, 1e-13,
                            RadialOptions{.n_nodes = kNr});
}

GridPtr reference_grid(const RadialProfile& p) { return AxiGrid::create(p.r_nodes, kNzeta, kLmax); }

Outcome c1_lane_emden_analytic() {
    Outcome o;
    const double pi = std::numbers::pi;
    const auto p = profile(1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < p.r_nodes.size(); ++i) {
        const double r = p.r_nodes[i];
        if (r > p.xi1) break;
        s = std::max(s, std::abs(p.theta[i] - (r == 0.0 ? 1.0 : std::sin(r) / r)));
    }
    o.check(std::abs(p.xi1 - pi) <= 1e-8, "|xi1 - pi| = " + g(std::abs(p.xi1 - pi)));
    o.check(std::abs(p.mu1 - pi) <= 1e-8, "|mu1 - pi| = " + g(std::abs(p.mu1 - pi)));
    o.check(s <= 1e-8, "sup |theta - sin r/r| = " + g(s));
    return o;
}

Outcome c2_polytrope_zeros() {
    Outcome o;
    const auto gold = testutil::golden("lane_emden_zeros.json");
    for (const auto& z : gold["zeros"]) {
        const double nu = z["nu"].get<double>();
        if (nu != 1.5 && nu != 3.0) continue;
        const double d = std::abs(profile(nu).xi1 - z["xi1"].get<double>());
        o.check(d <= 1e-8, fmt::format("nu={} |xi1 - oracle| = {}", nu, g(d)));
    }
    return o;
}

Outcome c3_beta_zero() {
    Outcome o;
    for (double nu : {1.5, 3.0}) {
        const auto eos = EquationOfState::polytrope_from_nu(nu);
        const auto p = profile(nu);
        const auto grid = reference_grid(p);
        const auto theta = initial_from_profile(grid, p);
        const auto sol = solve_equilibrium(zero_centrifugal(grid), eos, 1.0, theta);
        double dR = 0.0;
        for (double R : sol.R_of_zeta) dR = std::max(dR, std::abs(R - p.xi1));
        const double du = sup(sol.u.values - theta.values);
        o.check(du <= 1e-5, fmt::format("nu={} sup |u - theta| = {}", nu, g(du)));
        o.check(dR <= 1e-5, fmt::format("nu={} sup |R - xi1| = {}", nu, g(dR)));
    }
    return o;
}

Outcome c4_potential() {
    Outcome o;
    auto grid = AxiGrid::create(clustered_nodes(kNr, 2.0, 1.0), kNzeta, kLmax);
    const auto K = apply_K_multipole(grid, [](double r, double) { return r <= 1.0 ? 1.0 : 0.0; });
    double eb = 0.0;
    for (int i = 0; i < grid->n_r(); ++i) {
        const double r = grid->r()[i];
        if (r > 1.0) break;
        for (int j = 0; j < grid->n_zeta(); ++j)
            eb = std::max(eb, std::abs(K.values(i, j) - (1.0 - r * r / 3.0) / 2.0));
    }
    o.check(eb <= 1e-6, "uniform ball error " + g(eb));

    auto g64 = AxiGrid::create(clustered_nodes(64, 1.5, 1.0), 32, kLmax);
    auto src = [](double r, double z) {
        return r <= 1.0 ? (1.0 - r * r) * (1.0 + 0.4 * z * z - 0.2 * std::pow(z, 4)) : 0.0;
    };
    DirectOptions dopt;
    for (double r : g64->r())
        if (r <= 1.0) dopt.r_breaks.push_back(r);
    const double md = sup(apply_K_multipole(g64, src).values - apply_K_direct(g64, src, dopt).values);
    o.check(md <= 1e-5, "multipole vs direct " + g(md));

    SourceFn f = [](double r, double z) { return std::exp(-2.0 * r * r) * (1.0 + 0.5 * legendre(2, z)); };
    std::vector<double> h, e;
    for (int n : {31, 61, 121, 241}) {
        auto gr = AxiGrid::create(uniform_nodes(n, 3.0), 16, kLmax);
        h.push_back(3.0 / (n - 1));
        e.push_back(laplacian_defect(gr, f, 0.2, 0.8));
    }
    const double order = testutil::loglog_slope(h, e);
    o.check(order >= 1.8, "Laplacian order " + g(order));
    return o;
}

Outcome c5_frechet() {
    Outcome o;
    for (double nu : {1.5, 2.5}) {
        const auto eos = EquationOfState::polytrope_from_nu(nu);
        const auto p = profile(nu);
        const auto grid = reference_grid(p);
        const auto u = to_modes(initial_from_profile(grid, p));
        const auto hm = to_modes(AxiField::from_function(grid, [](double r, double z) {
            return 0.3 + 0.1 * r * r * z * z - 0.05 * r;
        }));
        const auto Gu = apply_G(u, eos, 1.0);
        const auto Dh = frechet_G_apply(u, hm, eos, 1.0);
        std::vector<double> eps, rem;
        for (double e : {0.1, 0.05, 0.025, 0.0125, 0.00625}) {
            ModeField ue = u;
            ue.coeffs += e * hm.coeffs;
            eps.push_back(e);
            rem.push_back(sup(apply_G(ue, eos, 1.0).coeffs - Gu.coeffs - e * Dh.coeffs));
        }
        const double s = testutil::loglog_slope(eps, rem);
        o.check(s >= std::min(nu, 2.0) - 0.1, fmt::format("nu={} remainder exponent {}", nu, g(s)));
    }
    return o;
}

Outcome c6_h2() {
    Outcome o;
    for (double nu : {1.2, 1.5, 1.9, 2.5, 3.0}) {
        const auto eos = EquationOfState::polytrope_from_nu(nu);
        const auto p = profile(nu);
        const auto hf = compute_h_field(p, eos, 1.0, reference_grid(p));
        const auto& h2 = hf.h2;
        bool neg = true;
        for (std::size_t i = 1; i < h2.r.size() && h2.r[i] <= p.xi1; ++i) neg = neg && h2.h[i] < 0.0;
        const double ratio = h2.at(0.05) / (-0.05 * 0.05 / 6.0);
        o.check(neg, fmt::format("nu={} h2 < 0 on (0, xi1]", nu));
        o.check(ratio >= 0.98 && ratio <= 1.02, fmt::format("nu={} h2(0.05)/(-r^2/6) = {}", nu, g(ratio)));
        o.check(hf.dual_difference <= 1e-4, fmt::format("nu={} dual-path difference {}", nu, g(hf.dual_difference)));
    }
    return o;
}

Outcome c7_oblateness() {
    Outcome o;
    const double nu = 1.5;
    const auto eos = EquationOfState::polytrope_from_nu(nu);
    const auto p = profile(nu);
    const auto grid = reference_grid(p);
    const auto h = compute_h_field(p, eos, 1.0, grid);
    const auto theta = initial_from_profile(grid, p);
    const auto hn = to_nodal(h.discrete);
    SolverOptions opt;
    opt.compute_hl = false;
    std::vector<double> betas{1e-4, 3e-4, 1e-3}, err, sig;
    for (double beta : betas) {
        const auto sol = solve_equilibrium(b_from_beta(beta, grid), eos, 1.0, theta, opt);
        err.push_back(sup(sol.u.values - theta.values - beta * hn.values));
        sig.push_back(measured_oblateness(sol, p.xi1));
    }
    bool positive = true;
    for (double s : sig) positive = positive && s > 0.0;
    o.check(positive, fmt::format("sigma = {}, {}, {}", g(sig[0]), g(sig[1]), g(sig[2])));
    const auto rep = oblateness(p, h, 1e-3, std::vector<double>{0.0, 1.0});
    const auto fit = fit_oblateness(betas, sig, rep.sigma_slope);
    o.check(fit.relative_difference <= 0.02,
            fmt::format("sigma/beta -> {} vs {} ({})", g(fit.slope_extrapolated), g(rep.sigma_slope),
                        g(fit.relative_difference)));
    const double ex = testutil::loglog_slope(betas, err);
    o.check(ex >= std::min(nu, 2.0) - 0.15, "expansion error exponent " + g(ex));
    return o;
}

Outcome c8_mode_decay() {
    Outcome o;
    for (double nu : {1.5, 3.0}) {
        const auto p = profile(nu);
        for (int j : {4, 6, 8}) {
            const auto s = solve_mode(p, j, 0.0);
            double n = 0.0;
            for (double v : s.h) n = std::max(n, std::abs(v));
            o.check(n <= 1e-8, fmt::format("nu={} j={} |h| = {}", nu, j, g(n)));
            o.check(s.lipschitz <= 3.0 / (2 * j + 1) + 0.05,
                    fmt::format("nu={} j={} Lipschitz {}", nu, j, g(s.lipschitz)));
        }
    }
    return o;
}

Outcome c9_hl() {
    Outcome o;
    for (double nu : {1.5, 3.0}) {
        const auto eos = EquationOfState::polytrope_from_nu(nu);
        const auto p = profile(nu);
        const auto rep = hl_certificate(initial_from_profile(reference_grid(p), p), eos, 1.0);
        double lo = 1e300;
        for (double s : rep.block_sigma) lo = std::min(lo, s);
        o.check(rep.block_diagonal && lo > 1e-3, fmt::format("nu={} min block sigma {}", nu, g(lo)));
    }
    const auto p = profile(1.5);
    AxiField vac = initial_from_profile(reference_grid(p), p);
    vac.values.setConstant(-1.0);
    const double s = hl_certificate(vac, EquationOfState::polytrope_from_nu(1.5), 1.0).sigma_min;
    o.check(std::abs(s - 1.0) <= 1e-12, "vacuum sigma_min " + fmt::format("{:.17g}", s));
    return o;
}

Outcome c10_mass() {
    Outcome o;
    MassOptions opt;
    opt.solver.compute_hl = false;
    for (double gamma : {5.0 / 3.0, 1.5, 1.25}) {
        const auto eos = EquationOfState::polytrope(gamma);
        std::vector<double> rho{1.0, 3.0, 10.0}, M;
        for (double r : rho) M.push_back(mass_point(eos, r, 0.0, opt).M);
        const double d = std::abs(testutil::loglog_slope(rho, M) - (3.0 * gamma - 4.0) / 2.0);
        o.check(d <= 1e-3, fmt::format("gamma={:.4g} slope error {}", gamma, g(d)));
    }
    bool rejected = false;
    try {
        central_density_from_mass(1.0, 0.0, EquationOfState::polytrope(4.0 / 3.0), {0.5, 2.0}, opt);
    } catch (const GammaFourThirds&) {
        rejected = true;
    }
    o.check(rejected, "gamma = 4/3 rejected");
    const auto eos = EquationOfState::polytrope(5.0 / 3.0);
    const auto c = trace_mass_curve(1.0, {0.0, 1e-3, 2e-3, 3e-3, 4e-3}, eos, opt, 1.5);
    double worst = 0.0;
    for (double e : c.relative_error) worst = std::max(worst, e);
    o.check(c.points.size() == 5 && worst <= 1e-6, "curve worst relative mass error " + g(worst));
    return o;
}

Outcome c11_white_dwarf() {
    Outcome o;
    const auto poly = profile(1.5);
    // B u_O / (16 A c^2) with A = B = u_O = 1; c = 1e7 stands in for 0
    for (double c : {1e7, 2.5, std::sqrt(1.0 / 1.6)}) {
        const auto eos = EquationOfState::white_dwarf(1.0, 1.0, c);
        const double eps = 1.0 / (16.0 * c * c);
        const auto p = solve_lane_emden(eos, 1.0, -1.0, 1e-13, RadialOptions{.n_nodes = kNr});
        const auto grid = reference_grid(p);
        const auto sol = solve_equilibrium(zero_centrifugal(grid), eos, 1.0, initial_from_profile(grid, p));
        double Rmax = 0.0;
        for (double R : sol.R_of_zeta) Rmax = std::max(Rmax, R);
        o.check(sol.flags.a2 && std::isfinite(Rmax) && Rmax < grid->r_inf(),
                fmt::format("eps={} radius {}", g(eps), g(Rmax)));
        if (c == 1e7) {
            double d = 0.0;
            for (int i = 0; i < grid->n_r(); ++i)
                for (int j = 0; j < grid->n_zeta(); ++j)
                    d = std::max(d, std::abs(sol.u.values(i, j) - poly.theta_at(grid->r()[i])));
            o.check(d <= 1e-6, "eps=0 vs nu=1.5 polytrope " + g(d));
        }
    }
    return o;
}

Outcome c12_jlaw() {
    Outcome o;
    const auto eos = EquationOfState::polytrope_from_nu(1.5);
    const auto p = profile(1.5);
    const auto grid = reference_grid(p);
    const auto scale = make_scale(eos, 1.0);
    const auto u = initial_from_profile(grid, p);

    const double beta = 1e-3;
    const double Om = std::sqrt(omega2_of_beta(beta, scale, eos));
    const auto m = mass_within_cylinder(u, eos, scale);
    std::vector<double> ms, js;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0 && m[i] <= ms.back()) break;
        ms.push_back(m[i]);
        js.push_back(Om * std::pow(scale.a_len * grid->r()[i], 2));
    }
    const auto bj = b_from_j(RotationLaw::angular_momentum_samples(ms, js), u, eos, scale);
    const auto bo = b_from_beta(beta, grid);
    double rt = 0.0;
    for (std::size_t i = 0; i < bj.b.size(); ++i)
        if (grid->r()[i] <= 0.9 * p.xi1) rt = std::max(rt, std::abs(bj.b[i] - bo.b[i]));
    o.check(rt <= 1e-6, "rigid round trip " + g(rt));

    const double k = 0.01;
    const auto law = RotationLaw::angular_momentum([k](double x) { return k * x * x; },
                                                   [k](double x) { return 2 * k * x; }, 1.0);
    const auto h = AxiField::from_function(grid, [](double r, double z) {
        return 0.05 * std::exp(-r * r / 4.0) * (1.0 + 0.3 * z * z * r * r);
    });
    const auto D = frechet_B_apply(law, u, h, eos, scale);
    const auto b0 = b_from_j(law, u, eos, scale);
    std::vector<double> eps, err;
    for (double e : {4e-2, 2e-2, 1e-2, 5e-3}) {
        AxiField up = u;
        up.values += e * h.values;
        AxiField fd = b_from_j(law, up, eos, scale).g;
        fd.values = (fd.values - b0.g.values) / e;
        eps.push_back(e);
        err.push_back(sup(to_nodal(to_modes(fd)).values - D.values));
    }
    const double order = testutil::loglog_slope(eps, err);
    o.check(order >= 1.0, fmt::format("D_u B finite-difference order {:.4f}", order));

    const auto sol = solve_equilibrium(law, eos, scale, u);
    o.check(sol.flags.a1 && sol.flags.a2 && sol.flags.monotone,
            fmt::format("j-law solve residual {} in {} iterations", g(sol.residual_history.back()),
                        sol.iterations));
    return o;
}

Outcome c13_properties() {
    Outcome o;
    constexpr int n = 10000;
    unsigned seed = 100;
    for (double nu : {1.3, 1.5, 2.5, 3.0}) {
        const auto e1 = testutil::density_remainder_envelope(nu, seed, n);
        const auto e2 = testutil::fprime_holder_envelope(nu, seed + 100, n);
        ++seed;
        const double p1 = std::min(nu, 2.0), p2 = std::min(nu - 1.0, 1.0);
        o.check(e1.slope >= p1 - 0.05 && e1.C_small <= 1.1 * e1.C_large,
                fmt::format("nu={} f remainder exponent {}", nu, g(e1.slope)));
        o.check(e2.slope >= p2 - 0.05 && e2.C_small <= 1.1 * e2.C_large,
                fmt::format("nu={} f' Hoelder exponent {}", nu, g(e2.slope)));
    }
    const auto f = testutil::flat_origin(300, n);
    o.check(f.grad <= 1e-6 && f.curve <= 1.0, "grad at origin / |f|_1 " + g(f.grad));
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"analytic Lane-Emden (nu = 1)", c1_lane_emden_analytic},
        {"polytrope zeros vs step-halving oracle", c2_polytrope_zeros},
        {"beta = 0 reproduces Lane-Emden", c3_beta_zero},
        {"potential operator", c4_potential},
        {"Frechet remainder exponent", c5_frechet},
        {"h2 sign, near-axis ratio, dual paths", c6_h2},
        {"oblateness from full solves", c7_oblateness},
        {"mode decay j = 4, 6, 8", c8_mode_decay},
        {"HL certificate", c9_hl},
        {"mass scaling and constant-mass curve", c10_mass},
        {"white dwarf", c11_white_dwarf},
        {"j(m) law", c12_jlaw},
        {"property suites", c13_properties},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string detail;
        for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
        fmt::print("{} {:>2} {} ({:.1f} s): {}\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, secs, detail);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
