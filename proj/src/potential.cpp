#include "rotstar/potential.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar {

double kernel_eval(double r, double zeta, double rp, double zetap) {
    if (r < 0.0 || rp < 0.0 || std::abs(zeta) > 1.0 || std::abs(zetap) > 1.0)
        throw InvalidArgument("kernel_eval needs r, r' >= 0 and |zeta| <= 1");
    const double w = r * std::sqrt(std::max(0.0, 1.0 - zeta * zeta));
    const double wp = rp * std::sqrt(std::max(0.0, 1.0 - zetap * zetap));
    const double z = r * zeta, zp = rp * zetap;
    const double dist2 = (w - wp) * (w - wp) + (z - zp) * (z - zp);
    const double scale = std::max(r, rp);
    if (scale == 0.0 || dist2 <= 1e-28 * scale * scale)
        throw SingularPoint("kernel evaluated at coincident points");
    auto integrand = [&](double beta) {
        const double sn = std::sin(0.5 * beta);
        return 1.0 / std::sqrt(dist2 + 4.0 * w * wp * sn * sn);
    };
    const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numbers::pi, 18, 1e-14);
    return 2.0 * half;
}

ModeField legendre_coeffs(const AxiField& field) { return to_modes(field); }

Eigen::MatrixXd rule_modes(const AxiField& field) { return to_modes(field).at_rule(); }

Eigen::MatrixXd rule_modes(const GridPtr& grid, const SourceFn& source) {
    const RadialRule& rule = grid->rule();
    Eigen::MatrixXd v(rule.size(), grid->n_zeta());
    for (std::size_t q = 0; q < rule.size(); ++q)
        for (int j = 0; j < grid->n_zeta(); ++j) v(q, j) = source(rule.s[q], grid->zeta()[j]);
    return v * grid->projector().transpose();
}

ModeField apply_K_rule(const GridPtr& grid, const Eigen::MatrixXd& src_rule) {
    ModeField out = ModeField::zeros(grid);
    kernels::multipole_apply(*grid, src_rule, out.coeffs);
    return out;
}

Eigen::MatrixXd apply_K_at(const GridPtr& grid, const Eigen::MatrixXd& src_rule,
                           std::span<const double> radii) {
    const RadialRule& rule = grid->rule();
    Eigen::MatrixXd out(radii.size(), grid->n_modes());
    for (std::size_t t = 0; t < radii.size(); ++t)
        for (int m = 0; m < grid->n_modes(); ++m) {
            double acc = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q)
                acc += multipole_weight(AxiGrid::degree(m), radii[t], rule.s[q], rule.w[q]) *
                       src_rule(q, m);
            out(t, m) = acc;
        }
    return out;
}

AxiField apply_K_multipole(const AxiField& field) {
    return to_nodal(apply_K_rule(field.grid, rule_modes(field)));
}

AxiField apply_K_multipole(const GridPtr& grid, const SourceFn& source) {
    return to_nodal(apply_K_rule(grid, rule_modes(grid, source)));
}

SourceFn nodal_interpolant(const AxiField& field) {
    const GridPtr grid = field.grid;
    const int nz = grid->n_zeta();
    const int lmax = nz - 1;
    const int ne = lmax / 2 + 1;
    Eigen::MatrixXd proj(ne, nz);
    std::vector<double> p(lmax + 1);
    for (int j = 0; j < nz; ++j) {
        legendre_all(lmax, grid->zeta()[j], p);
        for (int m = 0; m < ne; ++m)
            proj(m, j) = 0.5 * (4 * m + 1) * grid->zeta_weights()[j] * p[2 * m];
    }
    const Eigen::MatrixXd coeffs = field.values * proj.transpose();
    return [grid, coeffs, lmax, ne](double r, double zeta) {
        if (r > grid->r_inf()) return 0.0;
        const Stencil st = lagrange_stencil(grid->r(), r);
        std::vector<double> pl(lmax + 1);
        legendre_all(lmax, zeta, pl);
        double v = 0.0;
        for (int m = 0; m < ne; ++m)
            v += pl[2 * m] * st.apply(std::span<const double>(coeffs.col(m).data(), grid->n_r()));
        return v;
    };
}

AxiField apply_K_direct(const GridPtr& grid, const SourceFn& source, const DirectOptions& opt) {
    kernels::DirectSource src;
    src.f = source;
    src.r_breaks = opt.r_breaks.empty() ? std::vector<double>(grid->r().begin(), grid->r().end())
                                        : opt.r_breaks;
    src.gauss = opt.gauss;
    src.theta_panels = opt.theta_panels;
    src.min_panel = opt.min_panel;

    // targets: upper polar half plus one center point
    const int nz = grid->n_zeta();
    std::vector<double> tr{0.0}, tz{1.0};
    for (int i = 1; i < grid->n_r(); ++i)
        for (int j = nz / 2; j < nz; ++j) {
            tr.push_back(grid->r()[i]);
            tz.push_back(grid->zeta()[j]);
        }
    std::vector<double> val(tr.size());
    kernels::direct_potential(src, tr, tz, val);

    AxiField out = AxiField::zeros(grid);
    out.values.row(0).setConstant(val[0]);
    std::size_t k = 1;
    for (int i = 1; i < grid->n_r(); ++i)
        for (int j = nz / 2; j < nz; ++j, ++k) {
            out.values(i, j) = val[k];
            out.values(i, nz - 1 - j) = val[k];
        }
    return out;
}

AxiField apply_K_direct(const AxiField& field, const DirectOptions& opt) {
    return apply_K_direct(field.grid, nodal_interpolant(field), opt);
}

double grad_at_origin(const AxiField& field_K) {
    const GridPtr& grid = field_K.grid;
    const int np = std::min(6, grid->n_r());
    Eigen::MatrixXd A(np, 4);
    for (int i = 0; i < np; ++i) {
        const double r = grid->r()[i];
        A(i, 0) = 1.0;
        A(i, 1) = r;
        A(i, 2) = r * r;
        A(i, 3) = r * r * r;
    }
    const auto qr = A.colPivHouseholderQr();
    double worst = 0.0;
    for (int j = 0; j < grid->n_zeta(); ++j) {
        const Eigen::VectorXd c = qr.solve(Eigen::VectorXd(field_K.values.col(j).head(np)));
        worst = std::max(worst, std::abs(c(1)));
    }
    return worst;
}

double laplacian_defect(const GridPtr& grid, const SourceFn& source, double r_lo, double r_hi) {
    const ModeField Kf = to_modes(apply_K_multipole(grid, source));
    const ModeField f = to_modes(AxiField::from_function(grid, source));
    const auto r = grid->r();
    double sup = 0.0;
    for (int i = 1; i + 1 < grid->n_r(); ++i) {
        if (r[i] < r_lo || r[i] > r_hi) continue;
        const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
        for (int m = 0; m < grid->n_modes(); ++m) {
            const double l = AxiGrid::degree(m);
            const double ym = Kf.coeffs(i - 1, m), y0 = Kf.coeffs(i, m), yp = Kf.coeffs(i + 1, m);
            const double d1 = (yp * hm * hm - ym * hp * hp + y0 * (hp * hp - hm * hm)) /
                              (hm * hp * (hm + hp));
            const double d2 = 2.0 * (yp * hm + ym * hp - y0 * (hm + hp)) / (hm * hp * (hm + hp));
            const double L = -(d2 + 2.0 * d1 / r[i]) + l * (l + 1.0) * y0 / (r[i] * r[i]);
            sup = std::max(sup, std::abs(L - f.coeffs(i, m)));
        }
    }
    return sup;
}

}  // namespace rotstar
