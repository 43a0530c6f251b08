#pragma once

#include <cmath>
#include <optional>

namespace rotstar {

enum class EosKind { Polytrope, WhiteDwarf };

/// Constants of the degenerate-electron law P = A c^5 F(X), rho = B c^3 X^3.
struct WhiteDwarfParams {
    double A = 0.0;
    double B = 0.0;
    double c = 0.0;
};

/// Barotropic equation of state written as P = A rho^gamma (1 + Lambda(A rho^(gamma-1))).
///
/// Only the density-of-enthalpy correction Lambda_rho enters the solver:
///   rho(u) = ((gamma-1)/(A gamma))^nu u^nu (1 + Lambda_rho(u)).
/// For the white-dwarf law, Lambda_rho(xi) = (1 + B xi / (16 A c^2))^(3/2) - 1.
class EquationOfState {
public:
    static EquationOfState polytrope(double gamma, double A_const = 1.0);
    static EquationOfState polytrope_from_nu(double nu, double A_const = 1.0);
    static EquationOfState white_dwarf(double A, double B, double c);

    EosKind kind() const noexcept { return kind_; }
    double gamma() const noexcept { return gamma_; }
    double nu() const noexcept { return nu_; }
    double A_const() const noexcept { return A_const_; }
    const std::optional<WhiteDwarfParams>& wd_params() const noexcept { return wd_; }

    /// Throws InvalidArgument when a stored invariant does not hold.
    void validate() const;

    /// Lambda_rho(xi); identically zero for the polytrope.
    double lambda_rho(double xi) const;
    /// Lambda_rho'(xi) = [1 + (xi/nu) d/dxi] Lambda_rho(xi).
    double lambda_rho_prime(double xi) const;

    /// ((gamma-1)/(A gamma))^nu.
    double density_prefactor() const;
    /// A gamma / (gamma - 1).
    double enthalpy_coefficient() const { return A_const_ * gamma_ / (gamma_ - 1.0); }

    /// Physical density at physical enthalpy u (u <= 0 gives 0).
    double density_of_enthalpy(double u) const;

    /// Smallest physical enthalpy at which Lambda_rho is real.
    double enthalpy_floor() const;

private:
    EosKind kind_ = EosKind::Polytrope;
    double gamma_ = 5.0 / 3.0;
    double nu_ = 1.5;
    double A_const_ = 1.0;
    std::optional<WhiteDwarfParams> wd_;
};

/// Physical scaling constants of one configuration.
struct ScaleSet {
    double u_O = 1.0;    ///< central enthalpy
    double rho_O = 1.0;  ///< central density
    double a_len = 1.0;  ///< length unit
    double G_grav = 1.0;
};

ScaleSet make_scale(const EquationOfState& eos, double u_O, double G_grav = 1.0);

/// Inverts rho_O(u_O); closed form for the polytrope, bracketed root otherwise.
ScaleSet scale_from_central_density(const EquationOfState& eos, double rho_O,
                                    double G_grav = 1.0);

/// Scaled density law f(u) = (u v 0)^nu (1 + Lambda_rho(u_O u)).
double f_of_u(double u, const EquationOfState& eos, double u_O);
/// f'(u) = nu (u v 0)^(nu-1) (1 + Lambda_rho'(u_O u)); zero for u <= 0.
double fprime_of_u(double u, const EquationOfState& eos, double u_O);

/// beta = Omega^2/(2 pi G) (A gamma/(gamma-1))^nu u_O^(-nu).
double beta_of_omega(double Omega, const ScaleSet& scale, const EquationOfState& eos);
/// Omega^2/(2 pi G rho_O); equals beta_of_omega for the exact polytrope.
double beta_of_omega_density_form(double Omega, const ScaleSet& scale);
/// Inverse of beta_of_omega, returning Omega^2.
double omega2_of_beta(double beta, const ScaleSet& scale, const EquationOfState& eos);

/// Inlined f and f' of the scaled problem with u_O folded in. Used by the
/// quadrature kernels, where the generic entry points would dominate.
class EnthalpyLaw {
public:
    EnthalpyLaw() = default;
    EnthalpyLaw(const EquationOfState& eos, double u_O);

    double nu() const noexcept { return nu_; }
    /// B u_O / (16 A c^2); zero for the polytrope.
    double wd_eps() const noexcept { return eps_; }

    double f(double u) const {
        if (u <= 0.0) return 0.0;
        double v = std::pow(u, nu_);
        if (eps_ != 0.0) v *= std::pow(1.0 + eps_ * u, 1.5);
        return v;
    }

    double fprime(double u) const {
        if (u <= 0.0) return 0.0;
        double v = nu_ * std::pow(u, nu_ - 1.0);
        if (eps_ != 0.0) {
            const double w = 1.0 + eps_ * u;
            v *= w * std::sqrt(w) + eps_ * u * std::sqrt(w);
        }
        return v;
    }

private:
    double nu_ = 1.5;
    double eps_ = 0.0;
};

}  // namespace rotstar
