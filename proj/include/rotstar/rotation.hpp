#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"

namespace rotstar {

/// Rotation specification: constant Omega, Omega(varpi) in physical units, or
/// specific angular momentum j(m) as a function of the cylinder mass.
class RotationLaw {
public:
    enum class Kind { Constant, Differential, AngularMomentum };

    static RotationLaw constant(double Omega);
    /// `Omega_sup` is the sup norm of Omega, used for the norm bound checks.
    static RotationLaw differential(std::function<double(double)> Omega, double Omega_sup);
    /// Samples (varpi, Omega) with monotone cubic interpolation, constant past the ends.
    static RotationLaw differential_samples(std::vector<double> varpi, std::vector<double> Omega);
    static RotationLaw angular_momentum(std::function<double(double)> j,
                                        std::function<double(double)> dj, double j_norm);
    /// Samples (m, j) with m[0] = 0, j[0] = 0; cubic Hermite when dj is given,
    /// monotone cubic otherwise. j is held constant past the last sample.
    static RotationLaw angular_momentum_samples(std::vector<double> m, std::vector<double> j,
                                                std::vector<double> dj = {});

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    double omega() const { return omega_; }
    double Omega(double varpi) const;
    double j(double m) const { return j_(m); }
    double dj(double m) const { return dj_(m); }
    /// sup |Omega| for the first two kinds, sup |j| + sup |j'| for the third.
    double norm() const { return norm_; }

    const std::vector<double>& sample_x() const { return sx_; }
    const std::vector<double>& sample_y() const { return sy_; }

    void validate() const;

private:
    Kind kind_ = Kind::Constant;
    double omega_ = 0.0;
    double norm_ = 0.0;
    std::function<double(double)> Omega_, j_, dj_;
    std::vector<double> sx_, sy_;
};

/// b(varpi) and g(r, zeta) = b(r sqrt(1 - zeta^2)) on a grid.
struct CentrifugalField {
    GridPtr grid;
    std::vector<double> varpi;  ///< radial nodes
    std::vector<double> b;
    std::vector<double> db;
    AxiField g;
    std::function<double(double)> b_at;
};

CentrifugalField zero_centrifugal(const GridPtr& grid);
/// Constant or differential law.
CentrifugalField b_from_omega(const RotationLaw& law, const ScaleSet& scale,
                              const EquationOfState& eos, const GridPtr& grid);
/// Constant rotation given directly by beta: b = beta varpi^2 / 4.
CentrifugalField b_from_beta(double beta, const GridPtr& grid);

/// Scaling constants of the j(m) law.
struct JLawScales {
    double cyl_mass = 1.0;  ///< m = cyl_mass * m_tilde, m_tilde = 2 pi iint f varpi dvarpi dz
    double b_coef = 1.0;    ///< b = b_coef * int j(m)^2 varpi^-3 dvarpi (scaled varpi)
};
JLawScales jlaw_scales(const EquationOfState& eos, const ScaleSet& scale);

/// Physical cylinder mass m(varpi) at the grid's radial nodes (varpi scaled).
std::vector<double> mass_within_cylinder(const AxiField& u, const EquationOfState& eos,
                                         const ScaleSet& scale);
std::vector<double> mass_within_cylinder(const ModeField& u, const EquationOfState& eos,
                                         const ScaleSet& scale);

/// Operator B(j, u). Throws DivergentAxisIntegral when j(m(varpi))^2 varpi^-3 is
/// not integrable at the axis.
CentrifugalField b_from_j(const RotationLaw& law, const ModeField& u, const EquationOfState& eos,
                          const ScaleSet& scale);
CentrifugalField b_from_j(const RotationLaw& law, const AxiField& u, const EquationOfState& eos,
                          const ScaleSet& scale);

/// D_u B(j, u) as a dense matrix acting on mode-major flat coefficients and
/// returning flat mode coefficients of the perturbation of g.
RowMatrix frechet_B_matrix(const RotationLaw& law, const ModeField& u, const EquationOfState& eos,
                           const ScaleSet& scale);
AxiField frechet_B_apply(const RotationLaw& law, const AxiField& u, const AxiField& h,
                         const EquationOfState& eos, const ScaleSet& scale);

/// sup |b| + sup |b'| over the radial nodes.
double b_norm(const CentrifugalField& c);
/// (a^2 / u_O) (r_inf^2 / 2 + r_inf) sup Omega^2 for a constant or differential law.
double b_norm_bound(const RotationLaw& law, const ScaleSet& scale, double r_inf);

/// Nodal values of the centrifugal potential in modes (for the solver).
ModeField centrifugal_modes(const CentrifugalField& c);

}  // namespace rotstar
