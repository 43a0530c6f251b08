#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "rotstar/grid.hpp"

/// Hot loops, each in a serial reference form and an OpenMP form. Both forms
/// produce bit-identical results: every output element is reduced by a single
/// thread in a fixed order.
namespace rotstar::kernels {

/// Thread count used by the dispatching entry points; 1 selects the serial form.
void set_threads(int n);
int threads();

/// out(i, m) = sum_q G_m(i, q) src(q, m); src is n_q x n_modes at the rule points.
void multipole_apply_serial(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out);
void multipole_apply_omp(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out);
void multipole_apply(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out);

/// Dense matrix of h -> K(c h) in mode-major flat coordinates, where
/// coupling(q, m * n_modes + m') couples mode m' of h into mode m at rule point q.
void assemble_linearization_serial(const AxiGrid& grid, const Eigen::MatrixXd& coupling,
                                   RowMatrix& out);
void assemble_linearization_omp(const AxiGrid& grid, const Eigen::MatrixXd& coupling,
                                RowMatrix& out);
void assemble_linearization(const AxiGrid& grid, const Eigen::MatrixXd& coupling, RowMatrix& out);

/// Source for the direct potential quadrature: density f(r, zeta) supported
/// in r <= r_breaks.back(), smooth between consecutive breaks.
struct DirectSource {
    std::function<double(double, double)> f;
    std::vector<double> r_breaks;
    int gauss = 8;
    int theta_panels = 8;
    double min_panel = 1e-5;
};

/// Panel Gauss data shared by all targets.
struct DirectCache {
    struct Panel {
        double r0, r1, t0, t1;
        std::vector<double> r, t, wf;  ///< points and weight * f * r^2 sin(t)
    };
    std::vector<Panel> panels;
    std::vector<double> x, w;  ///< 1-D Gauss rule on [0, 1]
};

DirectCache make_direct_cache(const DirectSource& src);

/// (1/4pi) times the volume integral of K f; the equatorial mirror is folded in.
double direct_potential_point(const DirectSource& src, const DirectCache& cache, double r,
                              double zeta);
void direct_potential_serial(const DirectSource& src, std::span<const double> r,
                             std::span<const double> zeta, std::span<double> out);
void direct_potential_omp(const DirectSource& src, std::span<const double> r,
                          std::span<const double> zeta, std::span<double> out);
void direct_potential(const DirectSource& src, std::span<const double> r,
                      std::span<const double> zeta, std::span<double> out);

/// Azimuthal integral of 1/|x - x'| in closed form (complete elliptic integral).
double ring_kernel(double r, double zeta, double rp, double zetap);

}  // namespace rotstar::kernels
