#include "rotstar/mass.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <numbers>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar {

namespace {

constexpr double kPi = std::numbers::pi;

/// int f(u(r, zeta)) r^2 dr along one polar direction, positive part only.
double ray_integral(const ModeEvaluator& ev, const EnthalpyLaw& law, double zeta,
                    const GaussRule& g) {
    const auto r = ev.field().grid->r();
    const int n = static_cast<int>(r.size());
    double total = 0.0;
    double u0 = ev.value_in(0, r[0], zeta);
    for (int k = 0; k + 1 < n; ++k) {
        const double u1 = ev.value_in(k, r[k + 1], zeta);
        if (u0 > 0.0 || u1 > 0.0) {
            auto fn = [&](double x) { return ev.value_in(k, x, zeta); };
            double a = r[k], b = r[k + 1];
            int mode = 0;
            if (u0 > 0.0 && u1 <= 0.0) mode = 1;
            else if (u0 <= 0.0 && u1 > 0.0) mode = 2;
            if (mode != 0) {
                boost::math::tools::eps_tolerance<double> tol(50);
                std::uintmax_t it = 100;
                const auto [lo, hi] = boost::math::tools::toms748_solve(fn, a, b, u0, u1, tol, it);
                (mode == 1 ? b : a) = 0.5 * (lo + hi);
            }
            const double h = b - a;
            for (std::size_t q = 0; q < g.nodes.size(); ++q) {
                const double t = g.nodes[q];
                double x, w;
                if (mode == 0) {
                    x = a + h * t;
                    w = g.weights[q] * h;
                } else {
                    const double s = h * (2.0 * t - t * t);
                    x = mode == 1 ? a + s : b - s;
                    w = g.weights[q] * h * (2.0 - 2.0 * t);
                }
                total += w * law.f(fn(x)) * x * x;
            }
        }
        u0 = (k + 2 < n) ? ev.value_in(k + 1, r[k + 1], zeta) : u1;
    }
    return total;
}

}  // namespace

double total_mass_dimensionless(const ModeField& u, const EquationOfState& eos, double u_O) {
    const ModeEvaluator ev(u);
    const EnthalpyLaw law(eos, u_O);
    const GaussRule g = gauss_legendre(8, 0.0, 1.0);
    const auto zeta = u.grid->zeta();
    const auto w = u.grid->zeta_weights();
    double total = 0.0;
    for (std::size_t j = 0; j < zeta.size(); ++j) total += w[j] * ray_integral(ev, law, zeta[j], g);
    return 2.0 * kPi * total;
}

double total_mass_dimensionless(const EquilibriumSolution& sol, const EquationOfState& eos,
                                double u_O) {
    return total_mass_dimensionless(sol.modes, eos, u_O);
}

double physical_mass(const EquationOfState& eos, const ScaleSet& scale, double M1) {
    return jlaw_scales(eos, scale).cyl_mass * M1;
}

double mass_prefactor(const EquationOfState& eos, double G_grav) {
    return std::pow(eos.enthalpy_coefficient() / (4.0 * kPi * G_grav), 1.5);
}

double mass_exponent(const EquationOfState& eos) {
    const double e = 0.5 * (3.0 * eos.gamma() - 4.0);
    return std::abs(e) < 1e-12 ? 0.0 : e;
}

MassPoint mass_point(const EquationOfState& eos, double rho_O, double Omega2,
                     const MassOptions& opt, AxiField* warm) {
    const ScaleSet scale = scale_from_central_density(eos, rho_O, opt.G_grav);
    RadialOptions ro;
    ro.n_nodes = opt.n_r;
    const RadialProfile prof = solve_lane_emden(eos, scale.u_O, -1.0, 1e-13, ro);
    GridPtr grid;
    AxiField init;
    if (warm && warm->grid && warm->grid->n_r() == opt.n_r &&
        std::equal(prof.r_nodes.begin(), prof.r_nodes.end(), warm->grid->r().begin())) {
        grid = warm->grid;
        init = *warm;
    } else {
        grid = AxiGrid::create(prof.r_nodes, opt.n_zeta, opt.l_max);
        init = initial_from_profile(grid, prof);
    }
    MassPoint p;
    p.rho_O = rho_O;
    p.Omega2 = Omega2;
    p.beta = beta_of_omega(std::sqrt(Omega2), scale, eos);
    const EquilibriumSolution sol =
        solve_equilibrium(b_from_beta(p.beta, grid), eos, scale.u_O, init, opt.solver);
    p.M1 = total_mass_dimensionless(sol, eos, scale.u_O);
    p.M = physical_mass(eos, scale, p.M1);
    if (warm) *warm = sol.u;
    return p;
}

double dM_drho_at_constant_omega(const MassPoint& point, const EquationOfState& eos,
                                 double dM1_dbeta_value, double G_grav) {
    const double e = mass_exponent(eos);
    return mass_prefactor(eos, G_grav) * std::pow(point.rho_O, e - 1.0) *
           (e * point.M1 - point.beta * dM1_dbeta_value);
}

double dM1_dbeta(const EquationOfState& eos, double u_O, double beta, double step,
                 const MassOptions& opt) {
    RadialOptions ro;
    ro.n_nodes = opt.n_r;
    const RadialProfile prof = solve_lane_emden(eos, u_O, -1.0, 1e-13, ro);
    const GridPtr grid = AxiGrid::create(prof.r_nodes, opt.n_zeta, opt.l_max);
    AxiField start = initial_from_profile(grid, prof);
    auto m1 = [&](double b) {
        const EquilibriumSolution s =
            solve_equilibrium(b_from_beta(b, grid), eos, u_O, start, opt.solver);
        start = s.u;
        return total_mass_dimensionless(s, eos, u_O);
    };
    if (beta < step) {
        const double a = m1(beta), b = m1(beta + step), c = m1(beta + 2.0 * step);
        return (-3.0 * a + 4.0 * b - c) / (2.0 * step);
    }
    const double lo = m1(beta - step), hi = m1(beta + step);
    return (hi - lo) / (2.0 * step);
}

double central_density_spherical(double M_target, const EquationOfState& eos, double M1_0,
                                 double G_grav) {
    const double e = mass_exponent(eos);
    if (std::abs(e) < 1e-12) throw GammaFourThirds("gamma = 4/3: mass does not depend on rho_O");
    return std::pow(M_target / (mass_prefactor(eos, G_grav) * M1_0), 1.0 / e);
}

DensityRoot central_density_from_mass(double M_target, double Omega2, const EquationOfState& eos,
                                      std::array<double, 2> bracket, const MassOptions& opt,
                                      double rel_tol) {
    if (std::abs(mass_exponent(eos)) < 1e-12)
        throw GammaFourThirds("gamma = 4/3 is the degenerate case: the mass does not fix rho_O");
    if (!(M_target > 0.0)) throw InvalidArgument("target mass must be positive");
    if (!(bracket[0] > 0.0 && bracket[1] > bracket[0]))
        throw InvalidArgument("density bracket must satisfy 0 < lo < hi");
    DensityRoot out;
    AxiField warm;
    double best = INFINITY;
    auto F = [&](double log_rho) {
        const MassPoint p = mass_point(eos, std::exp(log_rho), Omega2, opt, &warm);
        ++out.evaluations;
        const double v = p.M / M_target - 1.0;
        if (std::abs(v) < best) {
            best = std::abs(v);
            out.point = p;
        }
        return v;
    };
    const double a = std::log(bracket[0]), b = std::log(bracket[1]);
    const double fa = F(a), fb = F(b);
    if ((fa > 0.0) == (fb > 0.0))
        throw NoBracket(fmt::format("M - M_target does not change sign on [{}, {}]", bracket[0],
                                    bracket[1]));
    if (best > rel_tol) {
        auto tol = [&](double, double) { return best <= rel_tol; };
        std::uintmax_t it = 60;
        boost::math::tools::toms748_solve(F, a, b, fa, fb, tol, it);
    }
    out.rho_O = out.point.rho_O;
    return out;
}

MassCurve trace_mass_curve(double rho_bar, const std::vector<double>& Omega2_schedule,
                           const EquationOfState& eos, const MassOptions& opt,
                           double bracket_factor) {
    MassCurve curve;
    const MassPoint base = mass_point(eos, rho_bar, 0.0, opt);
    curve.M_target = base.M;
    if (eos.kind() != EosKind::Polytrope) {
        const double d = 1e-3;
        const MassPoint up = mass_point(eos, rho_bar * (1.0 + d), 0.0, opt);
        const MassPoint dn = mass_point(eos, rho_bar * (1.0 - d), 0.0, opt);
        curve.dM_drho_spherical = (up.M - dn.M) / (2.0 * d * rho_bar);
        if (!(std::abs(*curve.dM_drho_spherical) > 0.0))
            throw NoBracket("dM/drho_O vanishes at Omega = 0; the curve is not determined");
    }
    const int n = static_cast<int>(Omega2_schedule.size());
    curve.points.resize(n);
    curve.relative_error.resize(n);
    std::vector<std::exception_ptr> failure(n);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.jobs))
    for (int i = 0; i < n; ++i) {
        try {
            const double Om2 = Omega2_schedule[i];
            if (Om2 == 0.0) {
                curve.points[i] = base;
                continue;
            }
            const std::array<double, 2> br{rho_bar / bracket_factor, rho_bar * bracket_factor};
            const DensityRoot root = central_density_from_mass(curve.M_target, Om2, eos, br, opt);
            curve.points[i] = root.point;
            curve.relative_error[i] = std::abs(root.point.M / curve.M_target - 1.0);
        } catch (...) {
            failure[i] = std::current_exception();
        }
    }
    for (auto& e : failure)
        if (e) std::rethrow_exception(e);
    for (int i = 0; i < n; ++i) {
        if (i > 0 && (curve.points[i].Omega2 <= curve.points[i - 1].Omega2 ||
                      curve.points[i].rho_O > curve.points[i - 1].rho_O))
            break;
        curve.largest_monotone_beta = std::max(curve.largest_monotone_beta, curve.points[i].beta);
    }
    return curve;
}

}  // namespace rotstar
