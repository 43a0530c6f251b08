#include "rotstar/radial.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "rotstar/error.hpp"

namespace rotstar {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

struct LaneEmdenRhs {
    const EnthalpyLaw* law;
    void operator()(const State& y, State& dy, double r) const {
        dy[0] = y[1];
        dy[1] = -law->f(y[0]) - 2.0 * y[1] / r;
    }
};

State series_start(const EnthalpyLaw& law, double r) {
    const double f1 = law.f(1.0), fp1 = law.fprime(1.0);
    return {1.0 - f1 * r * r / 6.0 + fp1 * f1 * std::pow(r, 4) / 120.0,
            -f1 * r / 3.0 + fp1 * f1 * std::pow(r, 3) / 30.0};
}

// Quintic Hermite basis on t in [0, 1].
void hermite5(double t, double h, double* v, double* d) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    v[0] = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    v[1] = (t - 6 * t3 + 8 * t4 - 3 * t5) * h;
    v[2] = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * h * h;
    v[3] = 10 * t3 - 15 * t4 + 6 * t5;
    v[4] = (-4 * t3 + 7 * t4 - 3 * t5) * h;
    v[5] = 0.5 * (t3 - 2 * t4 + t5) * h * h;
    d[0] = (-30 * t2 + 60 * t3 - 30 * t4) / h;
    d[1] = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    d[2] = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4) * h;
    d[3] = (30 * t2 - 60 * t3 + 30 * t4) / h;
    d[4] = -12 * t2 + 28 * t3 - 15 * t4;
    d[5] = 0.5 * (3 * t2 - 8 * t3 + 5 * t4) * h;
}

}  // namespace

double RadialProfile::theta_at(double r) const {
    if (r >= r_inf()) return harmonic_extension(*this, r);
    const int k = locate_interval(r_nodes, r);
    const double h = r_nodes[k + 1] - r_nodes[k];
    double v[6], d[6];
    hermite5((r - r_nodes[k]) / h, h, v, d);
    return v[0] * theta[k] + v[1] * dtheta[k] + v[2] * d2theta[k] + v[3] * theta[k + 1] +
           v[4] * dtheta[k + 1] + v[5] * d2theta[k + 1];
}

double RadialProfile::dtheta_at(double r) const {
    if (r >= r_inf()) return -mu1 / (r * r);
    const int k = locate_interval(r_nodes, r);
    const double h = r_nodes[k + 1] - r_nodes[k];
    double v[6], d[6];
    hermite5((r - r_nodes[k]) / h, h, v, d);
    return d[0] * theta[k] + d[1] * dtheta[k] + d[2] * d2theta[k] + d[3] * theta[k + 1] +
           d[4] * dtheta[k + 1] + d[5] * d2theta[k + 1];
}

double RadialProfile::psi_at(double r) const {
    if (r < 1e-3) {
        const double fp1 = law.fprime(1.0);
        return f1 * r / 3.0 - fp1 * f1 * r * r * r / 30.0;
    }
    return -dtheta_at(r);
}

double harmonic_extension(const RadialProfile& profile, double r) {
    if (r < profile.xi1 * (1.0 - 1e-14))
        throw DomainError("harmonic extension is defined only for r >= xi1");
    return -profile.mu1 * (1.0 / profile.xi1 - 1.0 / r);
}

RadialProfile solve_lane_emden(const EquationOfState& eos, double u_O, double r_inf, double tol,
                               const RadialOptions& opt) {
    eos.validate();
    if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
    RadialProfile p;
    p.law = EnthalpyLaw(eos, u_O);
    p.f1 = p.law.f(1.0);
    const LaneEmdenRhs rhs{&p.law};
    const double r0 = opt.r_start;
    const double r_max = r_inf > 0.0 ? r_inf : 1e4;

    // pass 1: bracket and refine the first zero
    auto dense = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
    dense.initialize(series_start(p.law, r0), r0, 1e-3);
    double t_prev = r0;
    State y_prev = series_start(p.law, r0);
    bool found = false;
    try {
        for (int steps = 0; steps < 10000000; ++steps) {
            const auto [t0, t1] = dense.do_step(rhs);
            const State y = dense.current_state();
            if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
                throw StepFailure("Lane-Emden integration produced a non-finite state");
            if (y[0] <= 0.0) {
                t_prev = t0;
                y_prev = dense.previous_state();
                found = true;
                break;
            }
            if (t1 > r_max) break;
        }
    } catch (const odeint::step_adjustment_error& e) {
        throw StepFailure(e.what());
    }
    if (!found || t_prev > r_max)
        throw NoZeroFound(fmt::format("theta stays positive up to r = {}", r_max));

    // Newton on theta(xi) = 0, each evaluation a fresh controlled integration
    auto state_at = [&](double r) {
        State y = y_prev;
        if (r > t_prev)
            odeint::integrate_adaptive(
                odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>()), rhs, y,
                t_prev, r, std::min(1e-3, r - t_prev));
        return y;
    };
    double lo = t_prev, hi = dense.current_time();
    double xi = 0.5 * (lo + hi);
    State yx{};
    for (int it = 0; it < 100; ++it) {
        yx = state_at(xi);
        if (yx[0] > 0.0) lo = xi;
        else hi = xi;
        double next = xi - yx[0] / yx[1];
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - xi);
        xi = next;
        if (step <= 1e-14 * xi || hi - lo <= 1e-14 * xi) break;
    }
    yx = state_at(xi);
    p.xi1 = xi;
    p.mu1 = -xi * xi * yx[1];
    if (p.xi1 > r_max) throw NoZeroFound(fmt::format("first zero lies beyond r = {}", r_max));

    // nodes
    const double rinf = r_inf > 0.0 ? r_inf : 1.5 * p.xi1;
    if (!(rinf > p.xi1)) throw InvalidArgument("r_inf must exceed the first zero");
    if (!opt.nodes.empty()) {
        p.r_nodes = opt.nodes;
        if (p.r_nodes.front() != 0.0 || std::abs(p.r_nodes.back() - rinf) > 1e-12 * rinf)
            throw InvalidArgument("profile nodes must span [0, r_inf]");
    } else {
        p.r_nodes = clustered_nodes(opt.n_nodes, rinf, p.xi1, opt.cluster);
    }
    const std::size_t n = p.r_nodes.size();
    p.theta.resize(n);
    p.dtheta.resize(n);

    // pass 2: values at the interior nodes
    std::vector<double> times{r0};
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = p.r_nodes[i];
        if (r <= r0) {
            const State s = series_start(p.law, r);
            p.theta[i] = r == 0.0 ? 1.0 : s[0];
            p.dtheta[i] = r == 0.0 ? 0.0 : s[1];
        } else if (r < p.xi1 * (1.0 - 1e-13)) {
            times.push_back(r);
            index.push_back(i);
        } else {
            p.theta[i] = r <= p.xi1 ? 0.0 : harmonic_extension(p, r);
            p.dtheta[i] = -p.mu1 / (r * r);
        }
    }
    if (times.size() > 1) {
        State y = series_start(p.law, r0);
        std::size_t k = 0;
        try {
            odeint::integrate_times(
                odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>()), rhs, y,
                times.begin(), times.end(), 1e-3, [&](const State& s, double) {
                    if (k > 0) {
                        p.theta[index[k - 1]] = s[0];
                        p.dtheta[index[k - 1]] = s[1];
                    }
                    ++k;
                });
        } catch (const odeint::step_adjustment_error& e) {
            throw StepFailure(e.what());
        }
    }
    p.d2theta.resize(n);
    p.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = p.r_nodes[i];
        p.d2theta[i] = r == 0.0 ? -p.f1 / 3.0 : -p.law.f(p.theta[i]) - 2.0 * p.dtheta[i] / r;
        p.psi[i] = -p.dtheta[i];
    }
    return p;
}

double lane_emden_residual(const RadialProfile& p) {
    // theta'' by five-point differentiation of the stored derivative
    const std::size_t n = p.r_nodes.size();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        if (p.r_nodes[i + 2] > p.xi1) break;
        const double x = p.r_nodes[i];
        double d = 0.0;
        for (int a = -2; a <= 2; ++a) {
            const double xa = p.r_nodes[i + a];
            double w = 0.0;
            for (int c = -2; c <= 2; ++c) {
                if (c == a) continue;
                double t = 1.0 / (xa - p.r_nodes[i + c]);
                for (int b = -2; b <= 2; ++b)
                    if (b != a && b != c) t *= (x - p.r_nodes[i + b]) / (xa - p.r_nodes[i + b]);
                w += t;
            }
            d += w * p.dtheta[i + a];
        }
        const double res = -d - 2.0 * p.dtheta[i] / x - p.law.f(p.theta[i]);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

std::string profile_csv(const RadialProfile& p) {
    std::string out = "r,theta,dtheta,psi\n";
    for (std::size_t i = 0; i < p.r_nodes.size(); ++i)
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", p.r_nodes[i], p.theta[i],
                           p.dtheta[i], p.psi[i]);
    return out;
}

}  // namespace rotstar
