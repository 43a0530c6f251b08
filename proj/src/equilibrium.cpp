#include "rotstar/equilibrium.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <fmt/format.h>

#include "rotstar/error.hpp"
#include "rotstar/kernels.hpp"
#include "rotstar/potential.hpp"

namespace rotstar {

namespace {

Eigen::MatrixXd map_f(const Eigen::MatrixXd& v, const EnthalpyLaw& law, bool derivative) {
    Eigen::MatrixXd out(v.rows(), v.cols());
    for (Eigen::Index c = 0; c < v.cols(); ++c)
        for (Eigen::Index r = 0; r < v.rows(); ++r)
            out(r, c) = derivative ? law.fprime(v(r, c)) : law.f(v(r, c));
    return out;
}

/// K of a source given by its values at (s_q, zeta_j), minus its center value.
ModeField centered_potential(const GridPtr& grid, const Eigen::MatrixXd& src_values) {
    ModeField k = apply_K_rule(grid, src_values * grid->projector().transpose());
    const double c = k.coeffs(0, 0);
    k.coeffs.col(0).array() -= c;
    k.coeffs.row(0).setZero();
    return k;
}

double nodal_sup(const GridPtr& grid, const Eigen::VectorXd& flat) {
    return to_nodal(ModeField::from_flat(grid, flat)).values.cwiseAbs().maxCoeff();
}

double default_r0(const ModeField& u, const SolverOptions& opt) {
    if (opt.r0 > 0.0) return opt.r0;
    try {
        return opt.r0_fraction * free_boundary_at(u, 0.0, 0.0);
    } catch (const Error&) {
        return opt.r0_fraction * u.grid->r_inf() / 1.5;
    }
}

}  // namespace

ModeField apply_G(const ModeField& u, const EquationOfState& eos, double u_O) {
    const EnthalpyLaw law(eos, u_O);
    ModeField k = centered_potential(u.grid, map_f(rule_values(u), law, false));
    k.coeffs.col(0).array() += 1.0;
    return k;
}

AxiField apply_G(const AxiField& u, const EquationOfState& eos, double u_O) {
    return to_nodal(apply_G(to_modes(u), eos, u_O));
}

ModeField frechet_G_apply(const ModeField& u, const ModeField& h, const EquationOfState& eos,
                          double u_O) {
    const EnthalpyLaw law(eos, u_O);
    const Eigen::MatrixXd fp = map_f(rule_values(u), law, true);
    return centered_potential(u.grid, fp.cwiseProduct(rule_values(h)));
}

AxiField frechet_G_apply(const AxiField& u, const AxiField& h, const EquationOfState& eos,
                         double u_O) {
    return to_nodal(frechet_G_apply(to_modes(u), to_modes(h), eos, u_O));
}

RowMatrix frechet_G_matrix(const ModeField& u, const EquationOfState& eos, double u_O) {
    const GridPtr& grid = u.grid;
    const EnthalpyLaw law(eos, u_O);
    const Eigen::MatrixXd fp = map_f(rule_values(u), law, true);
    const int nm = grid->n_modes();
    const Eigen::MatrixXd& proj = grid->projector();
    const Eigen::MatrixXd& P = grid->legendre_table();
    Eigen::MatrixXd coupling(fp.rows(), nm * nm);
    for (int m = 0; m < nm; ++m)
        for (int mp = 0; mp < nm; ++mp)
            coupling.col(m * nm + mp) = fp * proj.row(m).transpose().cwiseProduct(P.col(mp));
    RowMatrix D;
    kernels::assemble_linearization(*grid, coupling, D);
    const Eigen::RowVectorXd center = D.row(0);
    for (int i = 0; i < grid->n_r(); ++i) D.row(i) -= center;
    return D;
}

AxiField initial_from_profile(const GridPtr& grid, const RadialProfile& profile) {
    AxiField u = AxiField::zeros(grid);
    for (int i = 0; i < grid->n_r(); ++i)
        u.values.row(i).setConstant(profile.theta_at(grid->r()[i]));
    return u;
}

// ------------------------------------------------------------------ boundary

double free_boundary_at(const ModeField& u, double zeta, double r0) {
    const ModeEvaluator ev(u);
    const auto r = u.grid->r();
    const int n = u.grid->n_r();
    int start = 0;
    while (start < n && r[start] < r0) ++start;
    if (start >= n - 1) throw NoSignChange(zeta, "r0 lies beyond the grid");
    std::vector<double> v(n);
    for (int i = start; i < n; ++i) v[i] = ev.value_in(std::min(i, n - 2), r[i], zeta);
    int changes = 0, at = -1;
    for (int i = start; i + 1 < n; ++i)
        if ((v[i] > 0.0) != (v[i + 1] > 0.0)) {
            ++changes;
            if (at < 0) at = i;
        }
    if (changes == 0)
        throw NoSignChange(zeta, fmt::format("u has no sign change in r at zeta = {}", zeta));
    if (changes > 1 || !(v[start] > 0.0))
        throw NoSignChange(zeta, fmt::format("u changes sign {} times in r at zeta = {}",
                                             changes + (v[start] > 0.0 ? 0 : 1), zeta));
    if (v[at + 1] == 0.0) return r[at + 1];
    auto fn = [&](double x) { return ev.value_in(at, x, zeta); };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 200;
    const auto [lo, hi] =
        boost::math::tools::toms748_solve(fn, r[at], r[at + 1], v[at], v[at + 1], tol, it);
    return 0.5 * (lo + hi);
}

std::vector<double> free_boundary(const ModeField& u, double r0) {
    std::vector<double> R;
    for (double z : u.grid->zeta()) R.push_back(free_boundary_at(u, z, r0));
    return R;
}

std::vector<double> free_boundary(const AxiField& u, double r0) {
    return free_boundary(to_modes(u), r0);
}

AdmissibilityFlags check_admissibility(const ModeField& u, double r0) {
    AdmissibilityFlags fl;
    fl.r0 = r0;
    const GridPtr& grid = u.grid;
    const auto r = grid->r();
    fl.a1 = true;
    double inv_c = INFINITY;
    for (int i = 1; i < grid->n_r(); ++i)
        for (double z : grid->zeta()) {
            const double d = u.dr_at(r[i], z);
            if (r[i] >= r0 && !(d < 0.0)) fl.a1 = false;
            inv_c = std::min(inv_c, -d / r[i]);
        }
    fl.inv_C = inv_c;
    fl.monotone = inv_c > 0.0;
    double num = 0.0, den = 0.0;
    for (int i = 1; i <= std::min(4, grid->n_r() - 1); ++i) {
        num += -u.dr_at(r[i], 0.0) * r[i];
        den += r[i] * r[i];
    }
    fl.inv_C_axis = num / den;
    try {
        fl.R = free_boundary(u, r0);
        fl.a2 = std::all_of(fl.R.begin(), fl.R.end(),
                            [&](double R) { return R > r0 && R < grid->r_inf(); });
    } catch (const NoSignChange&) {
        fl.a2 = false;
        fl.R.clear();
    }
    return fl;
}

AdmissibilityFlags check_admissibility(const AxiField& u, double r0) {
    return check_admissibility(to_modes(u), r0);
}

double boundary_gradient_min(const ModeField& u, std::span<const double> R) {
    const auto zeta = u.grid->zeta();
    double worst = INFINITY;
    for (std::size_t j = 0; j < R.size(); ++j) {
        const double z = zeta[j], d = 1e-6;
        const double ur = u.dr_at(R[j], z);
        const double uz = (u.at(R[j], z + d) - u.at(R[j], z - d)) / (2.0 * d);
        const double ut = std::sqrt(std::max(0.0, 1.0 - z * z)) * uz / R[j];
        worst = std::min(worst, std::hypot(ur, ut));
    }
    return worst;
}

// ------------------------------------------------------------------ HL

HLReport sigma_min_report(const RowMatrix& J, int n_r, int n_modes) {
    HLReport rep;
    const double scale = J.cwiseAbs().maxCoeff();
    double off = 0.0;
    for (int m = 0; m < n_modes; ++m)
        for (int mp = 0; mp < n_modes; ++mp)
            if (m != mp)
                off = std::max(off, J.block(m * n_r, mp * n_r, n_r, n_r).cwiseAbs().maxCoeff());
    rep.block_diagonal = off <= 1e-14 * scale;
    if (rep.block_diagonal) {
        rep.sigma_min = INFINITY;
        for (int m = 0; m < n_modes; ++m) {
            const Eigen::MatrixXd B = J.block(m * n_r, m * n_r, n_r, n_r);
            const Eigen::BDCSVD<Eigen::MatrixXd> svd(B);
            const double s = svd.singularValues().minCoeff();
            rep.block_sigma.push_back(s);
            rep.sigma_min = std::min(rep.sigma_min, s);
        }
        return rep;
    }
    // inverse power iteration on (J^T J)^-1
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(J.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
        const Eigen::VectorXd y = lu.transpose().solve(lu.solve(x));
        const double next = y.norm();
        x = y / next;
        if (std::abs(next - lambda) <= 1e-13 * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    rep.sigma_min = 1.0 / std::sqrt(lambda);
    return rep;
}

HLReport hl_certificate(const ModeField& u, const EquationOfState& eos, const ScaleSet& scale,
                        const RotationLaw* law) {
    const GridPtr& grid = u.grid;
    RowMatrix J = -frechet_G_matrix(u, eos, scale.u_O);
    if (law && law->kind() == RotationLaw::Kind::AngularMomentum)
        J -= frechet_B_matrix(*law, u, eos, scale);
    J.diagonal().array() += 1.0;
    return sigma_min_report(J, grid->n_r(), grid->n_modes());
}

HLReport hl_certificate(const AxiField& u, const EquationOfState& eos, double u_O) {
    return hl_certificate(to_modes(u), eos, make_scale(eos, u_O), nullptr);
}

double weighted_block_norm(const ModeField& u, const EquationOfState& eos, double u_O, int mode,
                           std::span<const double> psi) {
    const RowMatrix D = frechet_G_matrix(u, eos, u_O);
    const int nr = u.grid->n_r();
    double worst = 0.0;
    for (int i = 1; i < nr; ++i) {
        double s = 0.0;
        for (int k = 1; k < nr; ++k) s += std::abs(D(mode * nr + i, mode * nr + k)) * psi[k];
        // the origin column is dropped: h(0) = 0 for mode > 0 and it is the center for mode 0
        worst = std::max(worst, s / psi[i]);
    }
    return worst;
}

// ------------------------------------------------------------------ solver

namespace {

struct Residual {
    Eigen::VectorXd F;  ///< u - g - G(u), flat modes
    double sup = 0.0;
};

using GFn = std::function<ModeField(const ModeField&)>;
using JFn = std::function<RowMatrix(const ModeField&)>;

EquilibriumSolution run_solver(const ModeField& init, const GFn& rhs, const JFn& jac,
                               const EquationOfState& eos, const ScaleSet& scale,
                               const RotationLaw* law, const SolverOptions& opt) {
    const GridPtr grid = init.grid;
    auto residual = [&](const ModeField& u) {
        Residual r;
        r.F = u.flat() - rhs(u).flat();
        r.sup = nodal_sup(grid, r.F);
        return r;
    };

    EquilibriumSolution sol;
    ModeField u = init;
    Residual res = residual(u);
    sol.residual_history.push_back(res.sup);
    int it = 0;
    while (res.sup > opt.tol) {
        if (it >= opt.max_iter)
            throw NoConvergence(fmt::format("no convergence after {} iterations, residual {:.3e}",
                                            it, res.sup));
        ++it;
        if (opt.newton) {
            RowMatrix J = -jac(u);
            J.diagonal().array() += 1.0;
            const Eigen::VectorXd delta = Eigen::PartialPivLU<Eigen::MatrixXd>(J).solve(-res.F);
            if (!delta.allFinite())
                throw SingularLinearization("Newton step is not finite");
            double lam = 1.0;
            bool accepted = false;
            for (int k = 0; k < 12; ++k, lam *= 0.5) {
                const ModeField trial = ModeField::from_flat(grid, u.flat() + lam * delta);
                Residual rt = residual(trial);
                if (rt.sup < res.sup) {
                    u = trial;
                    res = std::move(rt);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (res.sup <= 100.0 * opt.tol) break;
                throw NoConvergence(
                    fmt::format("Newton stagnated at residual {:.3e} after {} iterations", res.sup,
                                it));
            }
        } else {
            const ModeField next = rhs(u);
            u = ModeField::from_flat(
                grid, (1.0 - opt.damping) * u.flat() + opt.damping * next.flat());
            res = residual(u);
            if (!std::isfinite(res.sup)) throw NoConvergence("Picard iteration diverged");
        }
        sol.residual_history.push_back(res.sup);
    }
    sol.iterations = it;
    sol.modes = u;
    sol.u = to_nodal(u);
    const double r0 = default_r0(u, opt);
    sol.flags = check_admissibility(u, r0);
    sol.R_of_zeta = sol.flags.R;
    if (!sol.R_of_zeta.empty()) sol.boundary_grad_min = boundary_gradient_min(u, sol.R_of_zeta);
    if (!opt.compute_hl) return sol;
    sol.hl = hl_certificate(u, eos, scale, law);
    if (opt.check_hl && sol.hl.sigma_min < opt.hl_threshold)
        throw SingularLinearization(fmt::format(
            "smallest singular value {:.3e} of the linearization is below {:.3e}",
            sol.hl.sigma_min, opt.hl_threshold));
    return sol;
}

}  // namespace

EquilibriumSolution solve_equilibrium(const CentrifugalField& g, const EquationOfState& eos,
                                      double u_O, const AxiField& init, const SolverOptions& opt) {
    const ModeField gm = to_modes(g.g);
    auto rhs = [&](const ModeField& u) {
        ModeField v = apply_G(u, eos, u_O);
        v.coeffs += gm.coeffs;
        return v;
    };
    auto jac = [&](const ModeField& u) { return frechet_G_matrix(u, eos, u_O); };
    return run_solver(to_modes(init), rhs, jac, eos, make_scale(eos, u_O), nullptr, opt);
}

EquilibriumSolution solve_equilibrium(const RotationLaw& law, const EquationOfState& eos,
                                      const ScaleSet& scale, const AxiField& init,
                                      const SolverOptions& opt) {
    if (law.kind() != RotationLaw::Kind::AngularMomentum)
        return solve_equilibrium(b_from_omega(law, scale, eos, init.grid), eos, scale.u_O, init,
                                 opt);
    auto rhs = [&](const ModeField& u) {
        ModeField v = apply_G(u, eos, scale.u_O);
        v.coeffs += to_modes(b_from_j(law, u, eos, scale).g).coeffs;
        return v;
    };
    auto jac = [&](const ModeField& u) {
        RowMatrix D = frechet_G_matrix(u, eos, scale.u_O);
        D += frechet_B_matrix(law, u, eos, scale);
        return D;
    };
    return run_solver(to_modes(init), rhs, jac, eos, scale, &law, opt);
}

std::vector<EquilibriumSolution> continuation_in_beta(const std::vector<double>& schedule,
                                                      const EquationOfState& eos, double u_O,
                                                      const AxiField& init,
                                                      const SolverOptions& opt,
                                                      std::vector<EquilibriumSolution>* partial) {
    std::vector<EquilibriumSolution> out;
    AxiField start = init;
    for (double beta : schedule) {
        try {
            EquilibriumSolution s = solve_equilibrium(b_from_beta(beta, init.grid), eos, u_O,
                                                      start, opt);
            s.beta = beta;
            start = s.u;
            out.push_back(std::move(s));
        } catch (const Error& e) {
            if (partial) *partial = out;
            throw SolverError(e.kind(), beta,
                              fmt::format("continuation failed at beta = {}: {}", beta, e.what()));
        }
    }
    return out;
}

}  // namespace rotstar
