#include "rotstar/eos.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>

#include "rotstar/error.hpp"

namespace rotstar {

EquationOfState EquationOfState::polytrope(double gamma, double A_const) {
    EquationOfState e;
    e.kind_ = EosKind::Polytrope;
    e.gamma_ = gamma;
    e.nu_ = 1.0 / (gamma - 1.0);
    e.A_const_ = A_const;
    e.validate();
    return e;
}

EquationOfState EquationOfState::polytrope_from_nu(double nu, double A_const) {
    return polytrope(1.0 + 1.0 / nu, A_const);
}

EquationOfState EquationOfState::white_dwarf(double A, double B, double c) {
    EquationOfState e;
    e.kind_ = EosKind::WhiteDwarf;
    e.gamma_ = 5.0 / 3.0;
    e.nu_ = 1.5;
    e.A_const_ = 8.0 * A / (5.0 * std::pow(B, 5.0 / 3.0));
    e.wd_ = WhiteDwarfParams{A, B, c};
    e.validate();
    return e;
}

void EquationOfState::validate() const {
    // gamma = 2 (nu = 1) is admitted: it is the closed-form Lane-Emden case.
    if (!(gamma_ > 1.0 && gamma_ <= 2.0))
        throw InvalidArgument("gamma must lie in (1, 2]");
    if (!(A_const_ > 0.0) || !std::isfinite(A_const_))
        throw InvalidArgument("pressure constant A must be positive");
    if (std::abs(nu_ - 1.0 / (gamma_ - 1.0)) > 1e-14 * nu_)
        throw InvalidArgument("nu does not equal 1/(gamma-1)");
    if (kind_ == EosKind::WhiteDwarf) {
        if (!wd_) throw InvalidArgument("white dwarf law without parameters");
        if (!(wd_->A > 0.0 && wd_->B > 0.0 && wd_->c > 0.0))
            throw InvalidArgument("white dwarf constants A, B, c must be positive");
        if (std::abs(gamma_ - 5.0 / 3.0) > 1e-15)
            throw InvalidArgument("white dwarf law requires gamma = 5/3");
        const double expect = 8.0 * wd_->A / (5.0 * std::pow(wd_->B, 5.0 / 3.0));
        if (std::abs(A_const_ - expect) > 1e-13 * expect)
            throw InvalidArgument("white dwarf A_const inconsistent with A, B");
    } else if (wd_) {
        throw InvalidArgument("polytrope carries white dwarf parameters");
    }
}

double EquationOfState::lambda_rho(double xi) const {
    if (kind_ == EosKind::Polytrope) return 0.0;
    const double w = 1.0 + wd_->B * xi / (16.0 * wd_->A * wd_->c * wd_->c);
    if (w < 0.0) throw DomainError("Lambda_rho evaluated below the enthalpy floor");
    return w * std::sqrt(w) - 1.0;
}

double EquationOfState::lambda_rho_prime(double xi) const {
    if (kind_ == EosKind::Polytrope) return 0.0;
    const double k = wd_->B / (16.0 * wd_->A * wd_->c * wd_->c);
    const double w = 1.0 + k * xi;
    if (w < 0.0) throw DomainError("Lambda_rho' evaluated below the enthalpy floor");
    // (w^{3/2} - 1) + (xi/nu) * (3/2) k w^{1/2}, with nu = 3/2
    return w * std::sqrt(w) - 1.0 + xi * k * std::sqrt(w);
}

double EquationOfState::density_prefactor() const {
    return std::pow((gamma_ - 1.0) / (A_const_ * gamma_), nu_);
}

double EquationOfState::density_of_enthalpy(double u) const {
    if (u <= 0.0) return 0.0;
    return density_prefactor() * std::pow(u, nu_) * (1.0 + lambda_rho(u));
}

double EquationOfState::enthalpy_floor() const {
    if (kind_ == EosKind::Polytrope) return -INFINITY;
    return -16.0 * wd_->A * wd_->c * wd_->c / wd_->B;
}

ScaleSet make_scale(const EquationOfState& eos, double u_O, double G_grav) {
    if (!(u_O > 0.0) || !std::isfinite(u_O)) throw InvalidArgument("u_O must be positive");
    if (!(G_grav > 0.0)) throw InvalidArgument("G must be positive");
    const double g = eos.gamma();
    ScaleSet s;
    s.u_O = u_O;
    s.G_grav = G_grav;
    s.rho_O = eos.density_of_enthalpy(u_O);
    s.a_len = 1.0 / std::sqrt(4.0 * std::numbers::pi * G_grav) *
              std::pow(eos.enthalpy_coefficient(), 1.0 / (2.0 * (g - 1.0))) *
              std::pow(u_O, -(2.0 - g) / (2.0 * (g - 1.0)));
    return s;
}

ScaleSet scale_from_central_density(const EquationOfState& eos, double rho_O,
                                    double G_grav) {
    if (!(rho_O > 0.0) || !std::isfinite(rho_O))
        throw InvalidArgument("rho_O must be positive");
    // polytrope: u_O = (A gamma/(gamma-1)) rho_O^(gamma-1)
    double u_O = eos.enthalpy_coefficient() * std::pow(rho_O, eos.gamma() - 1.0);
    if (eos.kind() == EosKind::WhiteDwarf) {
        // rho(u) <= rho_poly(u) bracket: the correction only raises the density
        auto resid = [&](double log_u) {
            return std::log(eos.density_of_enthalpy(std::exp(log_u))) - std::log(rho_O);
        };
        double lo = std::log(u_O) - 40.0;
        double hi = std::log(u_O);
        boost::math::tools::eps_tolerance<double> tol(52);
        std::uintmax_t iters = 200;
        auto [a, b] = boost::math::tools::toms748_solve(resid, lo, hi, tol, iters);
        u_O = std::exp(0.5 * (a + b));
    }
    ScaleSet s = make_scale(eos, u_O, G_grav);
    s.rho_O = rho_O;
    return s;
}

double f_of_u(double u, const EquationOfState& eos, double u_O) {
    if (!std::isfinite(u)) throw DomainError("enthalpy must be finite");
    if (u_O * u < eos.enthalpy_floor())
        throw DomainError("enthalpy below the floor where Lambda_rho is real");
    if (u <= 0.0) return 0.0;
    return std::pow(u, eos.nu()) * (1.0 + eos.lambda_rho(u_O * u));
}

double fprime_of_u(double u, const EquationOfState& eos, double u_O) {
    if (!std::isfinite(u)) throw DomainError("enthalpy must be finite");
    if (u_O * u < eos.enthalpy_floor())
        throw DomainError("enthalpy below the floor where Lambda_rho is real");
    if (u <= 0.0) return 0.0;
    return eos.nu() * std::pow(u, eos.nu() - 1.0) * (1.0 + eos.lambda_rho_prime(u_O * u));
}

double beta_of_omega(double Omega, const ScaleSet& scale, const EquationOfState& eos) {
    if (!(Omega >= 0.0)) throw InvalidArgument("Omega must be nonnegative");
    return Omega * Omega / (2.0 * std::numbers::pi * scale.G_grav) *
           std::pow(eos.enthalpy_coefficient(), eos.nu()) * std::pow(scale.u_O, -eos.nu());
}

double beta_of_omega_density_form(double Omega, const ScaleSet& scale) {
    return Omega * Omega / (2.0 * std::numbers::pi * scale.G_grav * scale.rho_O);
}

double omega2_of_beta(double beta, const ScaleSet& scale, const EquationOfState& eos) {
    return beta * 2.0 * std::numbers::pi * scale.G_grav *
           std::pow(eos.enthalpy_coefficient(), -eos.nu()) * std::pow(scale.u_O, eos.nu());
}

EnthalpyLaw::EnthalpyLaw(const EquationOfState& eos, double u_O) : nu_(eos.nu()) {
    if (const auto& wd = eos.wd_params())
        eps_ = wd->B * u_O / (16.0 * wd->A * wd->c * wd->c);
}

}  // namespace rotstar
