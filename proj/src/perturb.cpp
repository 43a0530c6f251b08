#include "rotstar/perturb.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <fmt/format.h>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar {

namespace odeint = boost::numeric::odeint;

namespace {

/// Index of the node equal to xi1.
int surface_index(const RadialProfile& p) {
    for (std::size_t i = 0; i < p.r_nodes.size(); ++i)
        if (std::abs(p.r_nodes[i] - p.xi1) <= 1e-12 * p.xi1) return static_cast<int>(i);
    throw InvalidArgument("profile nodes must contain xi1");
}

/// Quadrature on [0, xi1] with interpolation from the nodes inside. The last
/// interval uses s = a + (xi1 - a)(2t - t^2) to absorb the surface behavior of q.
struct InnerRule {
    std::vector<double> s, w, q;
    std::vector<Stencil> st;
};

InnerRule inner_rule(const RadialProfile& p, int K) {
    InnerRule rule;
    const std::span<const double> nodes(p.r_nodes.data(), K + 1);
    const GaussRule g4 = gauss_legendre(4, 0.0, 1.0);
    const GaussRule g8 = gauss_legendre(8, 0.0, 1.0);
    for (int k = 0; k < K; ++k) {
        const double a = nodes[k], b = nodes[k + 1], h = b - a;
        const bool last = (k == K - 1);
        const GaussRule& g = last ? g8 : g4;
        for (std::size_t t = 0; t < g.nodes.size(); ++t) {
            const double x = g.nodes[t];
            const double s = last ? a + h * (2.0 * x - x * x) : a + h * x;
            const double w = last ? g.weights[t] * h * (2.0 - 2.0 * x) : g.weights[t] * h;
            rule.s.push_back(s);
            rule.w.push_back(w);
            rule.q.push_back(p.law.fprime(p.theta_at(s)));
            rule.st.push_back(lagrange_stencil(nodes, s));
        }
    }
    return rule;
}

}  // namespace

double ModeSolution::at(double x) const {
    if (x >= r.back())
        return A_coef / (2.0 * j + 1.0) * std::pow(x, j) + exterior_b * std::pow(x, -j - 1);
    return lagrange_stencil(r, x).apply(h);
}

ModeSolution solve_mode(const RadialProfile& profile, int j, double A_coef,
                        const std::function<double(double)>& source, const ModeOptions& opt) {
    if (j < 1) throw InvalidArgument("solve_mode needs a positive degree");
    const int K = surface_index(profile);
    const InnerRule rule = inner_rule(profile, K);
    const int n = K + 1;
    const double inv = 1.0 / (2 * j + 1);
    const auto& r = profile.r_nodes;

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 1; i < n; ++i) {
        const double ri = r[i];
        a(i) = inv * A_coef * std::pow(ri, j);
        for (std::size_t q = 0; q < rule.s.size(); ++q) {
            const double s = rule.s[q];
            const double ker = s < ri ? std::pow(s, j + 2) / std::pow(ri, j + 1)
                                      : std::pow(ri, j) * std::pow(s, 1 - j);
            const double c = inv * rule.w[q] * ker;
            if (source) a(i) += c * source(s);
            const double cq = c * rule.q[q];
            if (cq == 0.0) continue;
            const Stencil& st = rule.st[q];
            for (int t = 0; t < 4; ++t) M(i, st.first + t) += cq * st.w[t];
        }
    }

    ModeSolution sol;
    sol.j = j;
    sol.A_coef = A_coef;
    const double omega = opt.damping > 0.0 ? opt.damping : (j <= 2 ? 0.5 : 1.0);

    // psi-weighted Lipschitz constant of y -> M y
    double lip = 0.0;
    for (int i = 1; i < n; ++i) {
        double s = 0.0;
        for (int k = 1; k < n; ++k) s += std::abs(M(i, k)) * profile.psi[k];
        lip = std::max(lip, s / profile.psi[i]);
    }
    sol.lipschitz = lip;

    Eigen::VectorXd y(n);
    if (!opt.init.empty()) {
        if (static_cast<int>(opt.init.size()) != n)
            throw InvalidArgument("solve_mode: init must have one value per node in [0, xi1]");
        y = Eigen::Map<const Eigen::VectorXd>(opt.init.data(), n);
    } else if (A_coef != 0.0 || source) {
        y = a;
    } else {
        for (int i = 0; i < n; ++i) y(i) = std::pow(r[i] / profile.xi1, j);
    }
    y(0) = 0.0;
    int it = 0;
    for (;; ++it) {
        if (it >= opt.max_iter)
            throw NonConvergence(fmt::format("mode j = {} did not converge in {} iterations", j,
                                             opt.max_iter));
        const Eigen::VectorXd next = (1.0 - omega) * y + omega * (a + M * y);
        const double step = (next - y).lpNorm<Eigen::Infinity>();
        y = next;
        if (!std::isfinite(step))
            throw NonConvergence(fmt::format("mode j = {} iteration diverged", j));
        if (step <= opt.tol * std::max(1.0, y.lpNorm<Eigen::Infinity>())) break;
    }
    sol.iterations = it + 1;

    // exterior: y = A r^j/(2j+1) + b r^-(j+1)
    double b = 0.0;
    for (std::size_t q = 0; q < rule.s.size(); ++q) {
        double v = rule.q[q] * rule.st[q].apply(std::span<const double>(y.data(), n));
        if (source) v += source(rule.s[q]);
        b += rule.w[q] * std::pow(rule.s[q], j + 2) * v;
    }
    sol.exterior_b = inv * b;

    sol.r = r;
    sol.h.resize(r.size());
    sol.H.assign(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (static_cast<int>(i) < n) sol.h[i] = y(static_cast<Eigen::Index>(i));
        else sol.h[i] = inv * A_coef * std::pow(r[i], j) + sol.exterior_b * std::pow(r[i], -j - 1);
        if (i > 0 && static_cast<int>(i) < n) sol.H[i] = sol.h[i] / profile.psi_at(r[i]);
    }
    return sol;
}

ModeSolution shoot_mode(const RadialProfile& profile, int j, double A_coef) {
    using State = std::array<double, 4>;  // theta, theta', y, y'
    const EnthalpyLaw law = profile.law;
    const double f1 = law.f(1.0), q0 = law.fprime(1.0);
    const double jj = j * (j + 1.0);
    auto rhs = [&](const State& s, State& d, double r) {
        d[0] = s[1];
        d[1] = -law.f(s[0]) - 2.0 * s[1] / r;
        d[2] = s[3];
        d[3] = -2.0 * s[3] / r + jj * s[2] / (r * r) - law.fprime(s[0]) * s[2];
    };
    const int K = surface_index(profile);
    const double r0 = 1e-4;
    const double c = -q0 / (4.0 * j + 6.0);
    State s{1.0 - f1 * r0 * r0 / 6.0 + q0 * f1 * std::pow(r0, 4) / 120.0,
            -f1 * r0 / 3.0 + q0 * f1 * std::pow(r0, 3) / 30.0,
            std::pow(r0, j) * (1.0 + c * r0 * r0),
            std::pow(r0, j - 1) * (j + (j + 2.0) * c * r0 * r0)};
    std::vector<double> times{r0};
    for (int i = 1; i <= K; ++i)
        if (profile.r_nodes[i] > r0) times.push_back(profile.r_nodes[i]);
    std::vector<double> yv, dyv;
    odeint::integrate_times(
        odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>()), rhs, s,
        times.begin(), times.end(), 1e-4 * r0,
        [&](const State& st, double) {
            yv.push_back(st[2]);
            dyv.push_back(st[3]);
        });
    const double R = profile.xi1, yR = yv.back(), dR = dyv.back();
    // y = alpha r^j + b r^-(j+1) past R
    const double alpha = (( j + 1.0) * yR + R * dR) / ((2.0 * j + 1.0) * std::pow(R, j));
    const double scale = A_coef / ((2.0 * j + 1.0) * alpha);

    ModeSolution sol;
    sol.j = j;
    sol.A_coef = A_coef;
    sol.r = profile.r_nodes;
    sol.h.assign(sol.r.size(), 0.0);
    sol.H.assign(sol.r.size(), 0.0);
    const std::size_t off = times.size() - static_cast<std::size_t>(K);  // 1 when r0 < r_1
    for (int i = 1; i <= K; ++i) sol.h[i] = scale * yv[i - 1 + off];
    sol.exterior_b = scale * (yR - alpha * std::pow(R, j)) * std::pow(R, j + 1);
    for (std::size_t i = K + 1; i < sol.r.size(); ++i)
        sol.h[i] = A_coef / (2.0 * j + 1.0) * std::pow(sol.r[i], j) +
                   sol.exterior_b * std::pow(sol.r[i], -j - 1);
    for (int i = 1; i <= K; ++i) sol.H[i] = sol.h[i] / profile.psi_at(sol.r[i]);
    return sol;
}

double H0Solution::at(double x) const {
    if (x >= r.back()) return x * x / 6.0 + c1 + c2 / x;
    return lagrange_stencil(r, x).apply(h);
}

H0Solution solve_h0(const RadialProfile& profile) {
    using State = std::array<double, 4>;  // theta, theta', h0, h0'
    const EnthalpyLaw law = profile.law;
    const double f1 = law.f(1.0), q0 = law.fprime(1.0);
    auto rhs = [&](const State& s, State& d, double r) {
        d[0] = s[1];
        d[1] = -law.f(s[0]) - 2.0 * s[1] / r;
        d[2] = s[3];
        d[3] = 1.0 - 2.0 * s[3] / r - law.fprime(s[0]) * s[2];
    };
    const int K = surface_index(profile);
    const double r0 = 1e-4;
    State s{1.0 - f1 * r0 * r0 / 6.0 + q0 * f1 * std::pow(r0, 4) / 120.0,
            -f1 * r0 / 3.0 + q0 * f1 * std::pow(r0, 3) / 30.0,
            r0 * r0 / 6.0 - q0 * std::pow(r0, 4) / 120.0, r0 / 3.0 - q0 * std::pow(r0, 3) / 30.0};
    std::vector<double> times{r0};
    for (int i = 1; i <= K; ++i) times.push_back(profile.r_nodes[i]);
    std::vector<double> hv, dhv;
    odeint::integrate_times(
        odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>()), rhs, s,
        times.begin(), times.end(), 1e-4 * r0,
        [&](const State& st, double) {
            hv.push_back(st[2]);
            dhv.push_back(st[3]);
        });
    H0Solution out;
    out.r = profile.r_nodes;
    out.h.assign(out.r.size(), 0.0);
    const double R = profile.xi1;
    out.c2 = (R / 3.0 - dhv.back()) * R * R;
    out.c1 = hv.back() - R * R / 6.0 - out.c2 / R;
    for (std::size_t i = 1; i < out.r.size(); ++i) {
        const double x = out.r[i];
        out.h[i] = static_cast<int>(i) <= K ? hv[i] : x * x / 6.0 + out.c1 + out.c2 / x;
    }
    return out;
}

AxiField g1_field(const GridPtr& grid) {
    return AxiField::from_function(grid, [](double r, double z) { return 0.25 * r * r * (1.0 - z * z); });
}

double HField::at(double r, double zeta) const {
    return h0.at(r) + h2.at(r) * legendre(2, zeta);
}

HField compute_h_field(const RadialProfile& profile, const EquationOfState& eos, double u_O,
                       GridPtr grid) {
    if (!grid) grid = AxiGrid::create(profile.r_nodes, 32, 8);
    HField hf;
    hf.h0 = solve_h0(profile);
    hf.h2 = solve_mode(profile, 2, -5.0 / 6.0);

    const ModeField theta = to_modes(initial_from_profile(grid, profile));
    RowMatrix J = -frechet_G_matrix(theta, eos, u_O);
    J.diagonal().array() += 1.0;
    const Eigen::VectorXd rhs = to_modes(g1_field(grid)).flat();
    hf.discrete = ModeField::from_flat(grid, Eigen::PartialPivLU<Eigen::MatrixXd>(J).solve(rhs));

    double diff = 0.0, high = 0.0;
    for (int i = 0; i < grid->n_r(); ++i) {
        const double r = grid->r()[i];
        diff = std::max(diff, std::abs(hf.discrete.coeffs(i, 0) - hf.h0.at(r)));
        diff = std::max(diff, std::abs(hf.discrete.coeffs(i, 1) - hf.h2.at(r)));
        for (int m = 2; m < grid->n_modes(); ++m)
            high = std::max(high, std::abs(hf.discrete.coeffs(i, m)));
    }
    hf.dual_difference = diff;
    hf.high_modes_sup = high;
    return hf;
}

OblatenessReport oblateness(const RadialProfile& profile, const HField& h, double beta,
                            std::span<const double> zeta) {
    OblatenessReport rep;
    rep.nu = profile.law.nu();
    rep.xi1 = profile.xi1;
    rep.mu1 = profile.mu1;
    rep.beta = beta;
    rep.h0_at_xi1 = h.h0.at(profile.xi1);
    rep.h2_at_xi1 = h.h2.at(profile.xi1);
    const double k = profile.xi1 * profile.xi1 / profile.mu1;
    for (double z : zeta) {
        rep.zeta.push_back(z);
        rep.Xi1.push_back(profile.xi1 + k * (rep.h0_at_xi1 + rep.h2_at_xi1 * legendre(2, z)) * beta);
    }
    rep.sigma_slope = -1.5 * profile.xi1 / profile.mu1 * rep.h2_at_xi1;
    rep.sigma_linear = rep.sigma_slope * beta;
    if (beta > 0.05) rep.warning = "beta > 0.05: the first-order expansion may be inaccurate";
    if (!(rep.sigma_slope > 0.0))
        rep.warning += (rep.warning.empty() ? "" : "; ") + std::string("sigma slope is not positive");
    return rep;
}

double measured_oblateness(const EquilibriumSolution& sol, double xi1) {
    const double r0 = 0.05 * xi1;
    return (free_boundary_at(sol.modes, 0.0, r0) - free_boundary_at(sol.modes, 1.0, r0)) / xi1;
}

OblatenessFit fit_oblateness(std::span<const double> beta, std::span<const double> sigma,
                             double slope) {
    const std::size_t n = beta.size();
    if (n < 2 || sigma.size() != n) throw InvalidArgument("fit_oblateness: need two or more points");
    // least squares in (s0, c) for fixed q; returns the residual
    auto fit = [&](double q, double& s0) {
        double S1 = 0, Sx = 0, Sxx = 0, Sy = 0, Sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::pow(beta[i], q), y = sigma[i] / beta[i];
            S1 += 1;
            Sx += x;
            Sxx += x * x;
            Sy += y;
            Sxy += x * y;
        }
        const double det = S1 * Sxx - Sx * Sx;
        s0 = (Sxx * Sy - Sx * Sxy) / det;
        const double c = (S1 * Sxy - Sx * Sy) / det;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = s0 + c * std::pow(beta[i], q) - sigma[i] / beta[i];
            res += d * d;
        }
        return res;
    };
    OblatenessFit out;
    out.q = 1.0;
    if (n >= 3) {
        double s0 = 0.0;
        out.q = boost::math::tools::brent_find_minima([&](double q) { return fit(q, s0); }, 0.05,
                                                      3.0, 40)
                    .first;
    }
    fit(out.q, out.slope_extrapolated);
    out.relative_difference = std::abs(out.slope_extrapolated / slope - 1.0);
    double Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(beta[i]), y = std::log(std::abs(sigma[i] - slope * beta[i]));
        Sx += x;
        Sy += y;
        Sxx += x * x;
        Sxy += x * y;
    }
    out.error_exponent = (n * Sxy - Sx * Sy) / (n * Sxx - Sx * Sx);
    return out;
}

}  // namespace rotstar
