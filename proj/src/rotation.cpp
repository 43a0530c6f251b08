#include "rotstar/rotation.hpp"

#include <math.h>  // boost pchip calls isnan unqualified

#include <algorithm>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <memory>
#include <numbers>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar {

namespace {

constexpr double kPi = std::numbers::pi;

void check_samples(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
    if (x.size() != y.size() || x.size() < 4)
        throw InvalidArgument(std::string(what) + ": need at least 4 samples of equal length");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw InvalidArgument(std::string(what) + ": abscissae must increase strictly");
}

std::function<double(double)> clamp_fn(std::function<double(double)> fn, double lo, double hi) {
    return [fn = std::move(fn), lo, hi](double x) { return fn(std::clamp(x, lo, hi)); };
}

}  // namespace

RotationLaw RotationLaw::constant(double Omega) {
    RotationLaw law;
    law.kind_ = Kind::Constant;
    law.omega_ = Omega;
    law.norm_ = std::abs(Omega);
    law.Omega_ = [Omega](double) { return Omega; };
    law.validate();
    return law;
}

RotationLaw RotationLaw::differential(std::function<double(double)> Omega, double Omega_sup) {
    RotationLaw law;
    law.kind_ = Kind::Differential;
    law.Omega_ = std::move(Omega);
    law.norm_ = Omega_sup;
    law.validate();
    return law;
}

RotationLaw RotationLaw::differential_samples(std::vector<double> varpi, std::vector<double> Omega) {
    check_samples(varpi, Omega, "Omega samples");
    RotationLaw law;
    law.kind_ = Kind::Differential;
    law.sx_ = varpi;
    law.sy_ = Omega;
    for (double w : Omega) law.norm_ = std::max(law.norm_, std::abs(w));
    const double lo = varpi.front(), hi = varpi.back();
    auto ip = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(varpi), std::move(Omega));
    law.Omega_ = clamp_fn([ip](double x) { return (*ip)(x); }, lo, hi);
    law.validate();
    return law;
}

RotationLaw RotationLaw::angular_momentum(std::function<double(double)> j,
                                          std::function<double(double)> dj, double j_norm) {
    RotationLaw law;
    law.kind_ = Kind::AngularMomentum;
    law.j_ = std::move(j);
    law.dj_ = std::move(dj);
    law.norm_ = j_norm;
    law.validate();
    return law;
}

RotationLaw RotationLaw::angular_momentum_samples(std::vector<double> m, std::vector<double> j,
                                                  std::vector<double> dj) {
    check_samples(m, j, "j samples");
    if (!dj.empty() && dj.size() != j.size())
        throw InvalidArgument("j samples: dj must match j in length");
    RotationLaw law;
    law.kind_ = Kind::AngularMomentum;
    law.sx_ = m;
    law.sy_ = j;
    const double lo = m.front(), hi = m.back();
    double sup_j = 0.0;
    for (double v : j) sup_j = std::max(sup_j, std::abs(v));
    std::function<double(double)> val, der;
    if (!dj.empty()) {
        auto ip = std::make_shared<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
            std::move(m), std::move(j), std::move(dj));
        val = [ip](double x) { return (*ip)(x); };
        der = [ip](double x) { return ip->prime(x); };
    } else {
        auto ip = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
            std::move(m), std::move(j));
        val = [ip](double x) { return (*ip)(x); };
        der = [ip](double x) { return ip->prime(x); };
    }
    law.j_ = clamp_fn(val, lo, hi);
    law.dj_ = [der, lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : der(x); };
    double sup_dj = 0.0;
    for (std::size_t i = 0; i + 1 < law.sx_.size(); ++i)
        for (int k = 0; k <= 4; ++k) {
            const double x = law.sx_[i] + 0.25 * k * (law.sx_[i + 1] - law.sx_[i]);
            sup_dj = std::max(sup_dj, std::abs(der(x)));
        }
    law.norm_ = sup_j + sup_dj;
    law.validate();
    return law;
}

std::string RotationLaw::kind_name() const {
    switch (kind_) {
        case Kind::Constant: return "constant";
        case Kind::Differential: return "differential";
        case Kind::AngularMomentum: return "angular_momentum";
    }
    return "unknown";
}

double RotationLaw::Omega(double varpi) const {
    if (kind_ == Kind::AngularMomentum)
        throw InvalidArgument("Omega is not defined directly by an angular momentum law");
    return Omega_(varpi);
}

void RotationLaw::validate() const {
    switch (kind_) {
        case Kind::Constant:
            if (!(omega_ >= 0.0) || !std::isfinite(omega_))
                throw InvalidArgument("rotation: Omega must be finite and nonnegative");
            break;
        case Kind::Differential:
            if (!Omega_) throw InvalidArgument("rotation: missing Omega profile");
            for (double w : sy_)
                if (!(w >= 0.0)) throw InvalidArgument("rotation: Omega samples must be nonnegative");
            break;
        case Kind::AngularMomentum:
            if (!j_ || !dj_) throw InvalidArgument("rotation: missing j profile");
            if (!sx_.empty() && sx_.front() != 0.0)
                throw InvalidArgument("rotation: j samples must start at m = 0");
            if (std::abs(j_(0.0)) > 1e-14 * std::max(1.0, norm_))
                throw InvalidArgument("rotation: j(0) must vanish");
            if (!std::isfinite(norm_)) throw InvalidArgument("rotation: j norm is not finite");
            break;
    }
}

CentrifugalField zero_centrifugal(const GridPtr& grid) {
    CentrifugalField c;
    c.grid = grid;
    c.varpi.assign(grid->r().begin(), grid->r().end());
    c.b.assign(grid->n_r(), 0.0);
    c.db.assign(grid->n_r(), 0.0);
    c.g = AxiField::zeros(grid);
    c.b_at = [](double) { return 0.0; };
    return c;
}

namespace {

CentrifugalField from_function(const GridPtr& grid, std::function<double(double)> b,
                               const std::function<double(double)>& db) {
    CentrifugalField c;
    c.grid = grid;
    c.varpi.assign(grid->r().begin(), grid->r().end());
    for (double w : c.varpi) {
        c.b.push_back(b(w));
        c.db.push_back(db(w));
    }
    c.g = AxiField::zeros(grid);
    for (int i = 0; i < grid->n_r(); ++i)
        for (int j = 0; j < grid->n_zeta(); ++j) {
            const double z = grid->zeta()[j];
            c.g.values(i, j) = b(grid->r()[i] * std::sqrt(std::max(0.0, 1.0 - z * z)));
        }
    c.b_at = std::move(b);
    return c;
}

}  // namespace

CentrifugalField b_from_beta(double beta, const GridPtr& grid) {
    return from_function(
        grid, [beta](double w) { return 0.25 * beta * w * w; },
        [beta](double w) { return 0.5 * beta * w; });
}

CentrifugalField b_from_omega(const RotationLaw& law, const ScaleSet& scale,
                              const EquationOfState& eos, const GridPtr& grid) {
    if (law.kind() == RotationLaw::Kind::AngularMomentum)
        throw InvalidArgument("b_from_omega needs a constant or differential law");
    if (law.kind() == RotationLaw::Kind::Constant)
        return b_from_beta(beta_of_omega(law.omega(), scale, eos), grid);

    const double coef = scale.a_len * scale.a_len / scale.u_O;
    auto integrand = [law](double y) {
        const double w = law.Omega(y);
        return w * w * y;
    };
    // cumulative integral over sorted breakpoints: targets plus sample knots
    std::vector<double> pts{0.0};
    for (int i = 0; i < grid->n_r(); ++i)
        for (int j = 0; j < grid->n_zeta(); ++j) {
            const double z = grid->zeta()[j];
            pts.push_back(grid->r()[i] * std::sqrt(std::max(0.0, 1.0 - z * z)));
        }
    for (double x : law.sample_x())
        if (x > 0.0 && x < grid->r_inf()) pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t k = 1; k < pts.size(); ++k)
        cum[k] = cum[k - 1] + boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                                  integrand, pts[k - 1], pts[k], 8, 1e-13);
    auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(
        std::move(pts), std::move(cum));
    auto b = [table, integrand, coef](double w) {
        const auto& [xs, cs] = *table;
        auto it = std::upper_bound(xs.begin(), xs.end(), w);
        const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
            0, std::distance(xs.begin(), it) - 1));
        double v = cs[k];
        if (w > xs[k])
            v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, xs[k], w,
                                                                               8, 1e-13);
        return coef * v;
    };
    return from_function(grid, b, [coef, integrand](double w) { return coef * integrand(w); });
}

JLawScales jlaw_scales(const EquationOfState& eos, const ScaleSet& scale) {
    JLawScales s;
    const double a = scale.a_len;
    s.cyl_mass = eos.density_prefactor() * std::pow(scale.u_O, eos.nu()) * a * a * a;
    s.b_coef = 1.0 / (scale.u_O * a * a);
    return s;
}

namespace {

/// Gauss panels in varpi with breaks at the radial nodes and at the equatorial
/// surface radius. The panel ending at the surface uses x = a + (b - a)(2t - t^2).
struct PanelSet {
    int ng = 6;
    std::vector<double> t, wt;
    Eigen::MatrixXd S;  ///< S(g, h) = int_0^{t_g} L_h
    std::vector<double> a, b;
    std::vector<char> subst;
    std::vector<double> x, dx;  ///< points and dx/dt

    int n_panels() const { return static_cast<int>(a.size()); }

    static double lagrange(const std::vector<double>& t, int h, double s) {
        double v = 1.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (static_cast<int>(k) != h) v *= (s - t[k]) / (t[h] - t[k]);
        return v;
    }

    void partial_weights(double tau, double* W) const {
        for (int h = 0; h < ng; ++h) {
            double acc = 0.0;
            for (int k = 0; k < ng; ++k) acc += wt[k] * lagrange(t, h, tau * t[k]);
            W[h] = tau * acc;
        }
    }

    PanelSet(std::span<const double> nodes, double r_eq, int n_gauss) : ng(n_gauss) {
        const GaussRule g = gauss_legendre(ng, 0.0, 1.0);
        t = g.nodes;
        wt = g.weights;
        S.resize(ng, ng);
        std::vector<double> W(ng);
        for (int gi = 0; gi < ng; ++gi) {
            partial_weights(t[gi], W.data());
            for (int h = 0; h < ng; ++h) S(gi, h) = W[h];
        }
        std::vector<double> br(nodes.begin(), nodes.end());
        const double tol = 1e-12 * nodes.back();
        bool has_eq = r_eq > 0.0 && r_eq < nodes.back();
        if (has_eq) {
            auto it = std::lower_bound(br.begin(), br.end(), r_eq);
            const bool on_node = (it != br.end() && *it - r_eq < tol) ||
                                 (it != br.begin() && r_eq - *(it - 1) < tol);
            if (!on_node) br.insert(it, r_eq);
        }
        for (std::size_t k = 0; k + 1 < br.size(); ++k) {
            a.push_back(br[k]);
            b.push_back(br[k + 1]);
            subst.push_back(has_eq && std::abs(br[k + 1] - r_eq) < tol ? 1 : 0);
        }
        for (int p = 0; p < n_panels(); ++p)
            for (int gi = 0; gi < ng; ++gi) {
                x.push_back(map(p, t[gi]));
                dx.push_back(jac(p, t[gi]));
            }
    }

    double map(int p, double s) const {
        const double h = b[p] - a[p];
        return subst[p] ? a[p] + h * (2.0 * s - s * s) : a[p] + h * s;
    }
    double jac(int p, double s) const {
        const double h = b[p] - a[p];
        return subst[p] ? h * (2.0 - 2.0 * s) : h;
    }
    double inverse(int p, double w) const {
        const double s = std::clamp((w - a[p]) / (b[p] - a[p]), 0.0, 1.0);
        return subst[p] ? 1.0 - std::sqrt(1.0 - s) : s;
    }
    int locate(double w) const {
        auto it = std::upper_bound(b.begin(), b.end(), w);
        return std::min<int>(static_cast<int>(std::distance(b.begin(), it)), n_panels() - 1);
    }
};

/// Root of u along the equator, or -1 if u does not change sign.
double equator_radius(const ModeEvaluator& ev) {
    const auto r = ev.field().grid->r();
    const int n = static_cast<int>(r.size());
    double prev = ev.value_in(0, r[0], 0.0);
    for (int k = 0; k + 1 < n; ++k) {
        const double next = ev.value_in(k, r[k + 1], 0.0);
        if (prev > 0.0 && next <= 0.0) {
            if (next == 0.0) return r[k + 1];
            auto fn = [&](double x) { return ev.value_in(k, x, 0.0); };
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t it = 100;
            const auto [lo, hi] =
                boost::math::tools::toms748_solve(fn, r[k], r[k + 1], prev, next, tol, it);
            return 0.5 * (lo + hi);
        }
        prev = next;
    }
    return -1.0;
}

/// z-line integral Z(x) = 2 int f(u) dz and, optionally, its gradient with
/// respect to the mode-major coefficients of u.
class ZLine {
public:
    ZLine(const ModeEvaluator& ev, const EnthalpyLaw& law) : ev_(ev), law_(law) {
        const GaussRule g = gauss_legendre(6, 0.0, 1.0);
        t_ = g.nodes;
        w_ = g.weights;
    }

    double operator()(double x, double* grad) const {
        const GridPtr& grid = ev_.field().grid;
        const auto r = grid->r();
        const int n = grid->n_r();
        const int k0 = locate_interval(r, x);
        double total = 0.0;
        double z0 = 0.0;
        double u0 = value(k0, x, 0.0);
        for (int k = k0; k + 1 < n; ++k) {
            const double r1 = r[k + 1];
            const double z1 = std::sqrt(std::max(0.0, r1 * r1 - x * x));
            if (z1 <= z0) continue;
            const double u1 = value(k, x, z1);
            if (u0 > 0.0 || u1 > 0.0) total += piece(k, x, z0, z1, u0, u1, grad);
            z0 = z1;
            u0 = (k + 2 < n) ? value(k + 1, x, z1) : u1;
        }
        return 2.0 * total;
    }

private:
    double value(int k, double x, double z) const {
        const double rr = std::sqrt(x * x + z * z);
        return ev_.value_in(k, rr, rr > 0.0 ? z / rr : 1.0);
    }

    double piece(int k, double x, double z0, double z1, double u0, double u1, double* grad) const {
        // 0: plain, 1: root at the right end, 2: root at the left end
        int mode = 0;
        double a = z0, b = z1;
        if (u0 > 0.0 && u1 <= 0.0) {
            mode = 1;
            b = root(k, x, z0, z1, u0, u1);
        } else if (u0 <= 0.0 && u1 > 0.0) {
            mode = 2;
            a = root(k, x, z0, z1, u0, u1);
        }
        const double h = b - a;
        if (h <= 0.0) return 0.0;
        const int nm = ev_.field().grid->n_modes();
        const int nr = ev_.field().grid->n_r();
        double acc = 0.0;
        for (std::size_t q = 0; q < t_.size(); ++q) {
            const double s = t_[q];
            double z, jw;
            if (mode == 1) {
                z = a + h * (2.0 * s - s * s);
                jw = h * (2.0 - 2.0 * s);
            } else if (mode == 2) {
                z = b - h * (2.0 * s - s * s);
                jw = h * (2.0 - 2.0 * s);
            } else {
                z = a + h * s;
                jw = h;
            }
            const double rr = std::sqrt(x * x + z * z);
            const double zeta = z / rr;
            Stencil st;
            double P[64];
            ev_.basis_in(k, rr, zeta, st, P);
            const Eigen::MatrixXd& c = ev_.field().coeffs;
            double u = 0.0;
            for (int m = 0; m < nm; ++m) {
                const double* col = c.col(m).data() + st.first;
                u += P[m] * (st.w[0] * col[0] + st.w[1] * col[1] + st.w[2] * col[2] +
                             st.w[3] * col[3]);
            }
            const double wq = w_[q] * jw;
            acc += wq * law_.f(u);
            if (grad) {
                const double fp = 2.0 * wq * law_.fprime(u);
                if (fp != 0.0)
                    for (int m = 0; m < nm; ++m) {
                        double* row = grad + static_cast<std::ptrdiff_t>(m) * nr + st.first;
                        const double pm = fp * P[m];
                        for (int tt = 0; tt < 4; ++tt) row[tt] += pm * st.w[tt];
                    }
            }
        }
        return acc;
    }

    double root(int k, double x, double z0, double z1, double u0, double u1) const {
        auto fn = [&](double z) { return value(k, x, z); };
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t it = 100;
        const auto [lo, hi] = boost::math::tools::toms748_solve(fn, z0, z1, u0, u1, tol, it);
        return 0.5 * (lo + hi);
    }

    const ModeEvaluator& ev_;
    const EnthalpyLaw& law_;
    std::vector<double> t_, w_;
};

/// Discrete cylinder mass and j(m) centrifugal potential for one field.
struct JEngine {
    const ModeField& u;
    ModeEvaluator ev;
    EnthalpyLaw law;
    JLawScales sc;
    PanelSet panels;
    std::vector<double> G;                 ///< 2 pi x Z(x) dx/dt at the panel points
    std::vector<double> mt;                ///< m_tilde at the panel points
    std::vector<double> mpref;             ///< m_tilde at panel starts (n_panels + 1)
    RowMatrix dG;                          ///< gradient rows of G

    JEngine(const ModeField& field, const EquationOfState& eos, const ScaleSet& scale,
            bool with_grad)
        : u(field),
          ev(field),
          law(eos, scale.u_O),
          sc(jlaw_scales(eos, scale)),
          panels(field.grid->r(), equator_radius(ev), 6) {
        const ZLine zline(ev, law);
        const std::size_t nx = panels.x.size();
        const int ndof = field.grid->n_dof();
        G.resize(nx);
        if (with_grad) dG = RowMatrix::Zero(static_cast<Eigen::Index>(nx), ndof);
        for (std::size_t g = 0; g < nx; ++g) {
            const double xg = panels.x[g];
            const double s = 2.0 * kPi * xg * panels.dx[g];
            G[g] = s * zline(xg, with_grad ? dG.row(g).data() : nullptr);
            if (with_grad) dG.row(g) *= s;
        }
        const int ng = panels.ng;
        mt.resize(nx);
        mpref.assign(panels.n_panels() + 1, 0.0);
        for (int p = 0; p < panels.n_panels(); ++p) {
            double tot = 0.0;
            for (int h = 0; h < ng; ++h) tot += panels.wt[h] * G[p * ng + h];
            for (int gi = 0; gi < ng; ++gi) {
                double v = 0.0;
                for (int h = 0; h < ng; ++h) v += panels.S(gi, h) * G[p * ng + h];
                mt[p * ng + gi] = mpref[p] + v;
            }
            mpref[p + 1] = mpref[p] + tot;
        }
    }

    /// m_tilde at an arbitrary varpi.
    double m_tilde(double w) const {
        if (w <= 0.0) return 0.0;
        const int p = panels.locate(w);
        std::vector<double> W(panels.ng);
        panels.partial_weights(panels.inverse(p, w), W.data());
        double v = mpref[p];
        for (int h = 0; h < panels.ng; ++h) v += W[h] * G[p * panels.ng + h];
        return v;
    }
};

/// Centrifugal part of the j law built on top of a JEngine.
struct JPotential {
    const JEngine& e;
    const RotationLaw& law;
    std::vector<double> H, bpref;

    JPotential(const JEngine& eng, const RotationLaw& jl) : e(eng), law(jl) {
        const PanelSet& ps = e.panels;
        const int ng = ps.ng;
        H.resize(ps.x.size());
        for (std::size_t g = 0; g < ps.x.size(); ++g) {
            const double jm = law.j(e.sc.cyl_mass * e.mt[g]);
            H[g] = e.sc.b_coef * jm * jm / std::pow(ps.x[g], 3) * ps.dx[g];
            if (!std::isfinite(H[g]))
                throw DivergentAxisIntegral("j(m)^2 varpi^-3 is not finite at varpi = " +
                                            std::to_string(ps.x[g]));
        }
        check_axis();
        bpref.assign(ps.n_panels() + 1, 0.0);
        for (int p = 0; p < ps.n_panels(); ++p) {
            double tot = 0.0;
            for (int h = 0; h < ng; ++h) tot += ps.wt[h] * H[p * ng + h];
            bpref[p + 1] = bpref[p] + tot;
        }
    }

    void check_axis() const {
        // integrand ~ varpi^alpha near the axis needs alpha > -1
        const PanelSet& ps = e.panels;
        const double x1 = ps.x[0], x2 = ps.x[ps.ng - 1];
        const double e1 = H[0] / ps.dx[0], e2 = H[ps.ng - 1] / ps.dx[ps.ng - 1];
        if (e1 <= 0.0 || e2 <= 0.0) return;
        const double slope = std::log(e2 / e1) / std::log(x2 / x1);
        if (slope <= -0.9)
            throw DivergentAxisIntegral(
                "j(m(varpi))^2 varpi^-3 grows like varpi^" + std::to_string(slope) +
                " at the axis; j must vanish faster at m = 0");
    }

    double b(double w) const {
        if (w <= 0.0) return 0.0;
        const PanelSet& ps = e.panels;
        const int p = ps.locate(w);
        std::vector<double> W(ps.ng);
        ps.partial_weights(ps.inverse(p, w), W.data());
        double v = bpref[p];
        for (int h = 0; h < ps.ng; ++h) v += W[h] * H[p * ps.ng + h];
        return v;
    }

    double db(double w) const {
        if (w <= 0.0) return 0.0;
        const double jm = law.j(e.sc.cyl_mass * e.m_tilde(w));
        return e.sc.b_coef * jm * jm / (w * w * w);
    }
};

CentrifugalField jlaw_field(const RotationLaw& law, const ModeField& u, const EquationOfState& eos,
                            const ScaleSet& scale) {
    if (law.kind() != RotationLaw::Kind::AngularMomentum)
        throw InvalidArgument("b_from_j needs an angular momentum law");
    // the closures keep a copy of the field and the law alive
    auto keep = std::make_shared<std::pair<ModeField, RotationLaw>>(u, law);
    auto eng = std::make_shared<JEngine>(keep->first, eos, scale, false);
    auto pot = std::make_shared<JPotential>(*eng, keep->second);
    auto b = [keep, eng, pot](double w) { return pot->b(w); };
    auto db = [keep, eng, pot](double w) { return pot->db(w); };
    return from_function(u.grid, b, db);
}

}  // namespace

std::vector<double> mass_within_cylinder(const ModeField& u, const EquationOfState& eos,
                                         const ScaleSet& scale) {
    const JEngine eng(u, eos, scale, false);
    std::vector<double> m;
    for (double w : u.grid->r()) m.push_back(eng.sc.cyl_mass * eng.m_tilde(w));
    return m;
}

std::vector<double> mass_within_cylinder(const AxiField& u, const EquationOfState& eos,
                                         const ScaleSet& scale) {
    return mass_within_cylinder(to_modes(u), eos, scale);
}

CentrifugalField b_from_j(const RotationLaw& law, const ModeField& u, const EquationOfState& eos,
                          const ScaleSet& scale) {
    return jlaw_field(law, u, eos, scale);
}

CentrifugalField b_from_j(const RotationLaw& law, const AxiField& u, const EquationOfState& eos,
                          const ScaleSet& scale) {
    return jlaw_field(law, to_modes(u), eos, scale);
}

RowMatrix frechet_B_matrix(const RotationLaw& law, const ModeField& u, const EquationOfState& eos,
                           const ScaleSet& scale) {
    if (law.kind() != RotationLaw::Kind::AngularMomentum)
        throw InvalidArgument("frechet_B_matrix needs an angular momentum law");
    const GridPtr& grid = u.grid;
    const JEngine eng(u, eos, scale, true);
    const JPotential pot(eng, law);
    const PanelSet& ps = eng.panels;
    const int ng = ps.ng;
    const int ndof = grid->n_dof();
    const auto nx = static_cast<Eigen::Index>(ps.x.size());

    // dH_g = b_coef 2 j j'(m_g) C_m dm_tilde_g x_g^-3 dx_g
    RowMatrix dH(nx, ndof);
    Eigen::RowVectorXd pref = Eigen::RowVectorXd::Zero(ndof);
    for (int p = 0; p < ps.n_panels(); ++p) {
        for (int gi = 0; gi < ng; ++gi) {
            const int g = p * ng + gi;
            Eigen::RowVectorXd dm = pref;
            for (int h = 0; h < ng; ++h) dm += ps.S(gi, h) * eng.dG.row(p * ng + h);
            const double m = eng.sc.cyl_mass * eng.mt[g];
            const double coef = eng.sc.b_coef * 2.0 * law.j(m) * law.dj(m) * eng.sc.cyl_mass /
                                std::pow(ps.x[g], 3) * ps.dx[g];
            dH.row(g) = coef * dm;
        }
        for (int h = 0; h < ng; ++h) pref += ps.wt[h] * eng.dG.row(p * ng + h);
    }
    RowMatrix dbpref = RowMatrix::Zero(ps.n_panels() + 1, ndof);
    for (int p = 0; p < ps.n_panels(); ++p) {
        dbpref.row(p + 1) = dbpref.row(p);
        for (int h = 0; h < ng; ++h) dbpref.row(p + 1) += ps.wt[h] * dH.row(p * ng + h);
    }

    const int nr = grid->n_r(), nz = grid->n_zeta(), nm = grid->n_modes();
    const Eigen::MatrixXd& proj = grid->projector();
    RowMatrix out = RowMatrix::Zero(ndof, ndof);
    Eigen::RowVectorXd row(ndof);
    std::vector<double> W(ng);
    for (int i = 1; i < nr; ++i)
        for (int j = 0; j < nz; ++j) {
            const double z = grid->zeta()[j];
            const double w = grid->r()[i] * std::sqrt(std::max(0.0, 1.0 - z * z));
            if (w <= 0.0) continue;
            const int p = ps.locate(w);
            ps.partial_weights(ps.inverse(p, w), W.data());
            row = dbpref.row(p);
            for (int h = 0; h < ng; ++h) row += W[h] * dH.row(p * ng + h);
            for (int m = 0; m < nm; ++m) out.row(m * nr + i) += proj(m, j) * row;
        }
    return out;
}

AxiField frechet_B_apply(const RotationLaw& law, const AxiField& u, const AxiField& h,
                         const EquationOfState& eos, const ScaleSet& scale) {
    const RowMatrix D = frechet_B_matrix(law, to_modes(u), eos, scale);
    const Eigen::VectorXd dh = D * to_modes(h).flat();
    return to_nodal(ModeField::from_flat(u.grid, dh));
}

ModeField centrifugal_modes(const CentrifugalField& c) { return to_modes(c.g); }

double b_norm(const CentrifugalField& c) {
    double sb = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < c.b.size(); ++i) {
        sb = std::max(sb, std::abs(c.b[i]));
        sd = std::max(sd, std::abs(c.db[i]));
    }
    return sb + sd;
}

double b_norm_bound(const RotationLaw& law, const ScaleSet& scale, double r_inf) {
    if (law.kind() == RotationLaw::Kind::AngularMomentum)
        throw InvalidArgument("b_norm_bound needs a constant or differential law");
    return scale.a_len * scale.a_len / scale.u_O * (0.5 * r_inf * r_inf + r_inf) * law.norm() *
           law.norm();
}

}  // namespace rotstar
