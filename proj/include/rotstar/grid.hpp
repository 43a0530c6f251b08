#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace rotstar {

/// Shape of the radial node distribution. Spacing grows linearly (rate
/// `grading`) away from the origin and from the cluster radius, and is capped
/// at the far-field spacing H; `ratio_center` and `ratio_origin` give H over the
/// local spacing at those two points.
struct ClusterOptions {
    double ratio_center = 64.0;
    double ratio_origin = 4.0;
    double grading = 0.1;
};

/// n nodes on [0, r_inf] with 0, r_cluster (when inside) and r_inf as exact nodes.
std::vector<double> clustered_nodes(int n, double r_inf, double r_cluster,
                                    const ClusterOptions& opt = {});
std::vector<double> uniform_nodes(int n, double r_inf);

/// Four-point Lagrange weights over nodes[first..first+3].
struct Stencil {
    int first = 0;
    std::array<double, 4> w{};

    double apply(std::span<const double> v) const {
        return w[0] * v[first] + w[1] * v[first + 1] + w[2] * v[first + 2] + w[3] * v[first + 3];
    }
};

/// Index k with nodes[k] <= x <= nodes[k+1], clamped to the node range.
int locate_interval(std::span<const double> nodes, double x);
Stencil lagrange_stencil(std::span<const double> nodes, double x);
Stencil lagrange_derivative_stencil(std::span<const double> nodes, double x);

/// Composite Gauss rule with `per_interval` points on every node interval.
struct RadialRule {
    std::vector<double> s;
    std::vector<double> w;
    std::vector<int> interval;
    std::vector<Stencil> stencil;  ///< interpolation from nodal values to s
    std::size_t size() const { return s.size(); }
};

RadialRule make_radial_rule(std::span<const double> nodes, int per_interval);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tensor grid: radial nodes x Gauss-Legendre polar nodes, with the even
/// Legendre modes 0, 2, ..., l_max used for the potential.
class AxiGrid {
public:
    AxiGrid(std::vector<double> r_nodes, int n_zeta, int l_max, int radial_points = 4);

    static std::shared_ptr<const AxiGrid> create(std::vector<double> r_nodes, int n_zeta,
                                                 int l_max, int radial_points = 4) {
        return std::make_shared<const AxiGrid>(std::move(r_nodes), n_zeta, l_max,
                                               radial_points);
    }

    int n_r() const { return static_cast<int>(r_.size()); }
    int n_zeta() const { return static_cast<int>(zeta_.size()); }
    int l_max() const { return l_max_; }
    int n_modes() const { return l_max_ / 2 + 1; }
    static int degree(int mode) { return 2 * mode; }
    int n_dof() const { return n_modes() * n_r(); }

    std::span<const double> r() const { return r_; }
    std::span<const double> zeta() const { return zeta_; }
    std::span<const double> zeta_weights() const { return zeta_w_; }
    double r_inf() const { return r_.back(); }

    const RadialRule& rule() const { return rule_; }

    /// P_{2m}(zeta_j), n_zeta x n_modes.
    const Eigen::MatrixXd& legendre_table() const { return P_; }
    /// (2l+1)/2 w_j P_l(zeta_j), n_modes x n_zeta.
    const Eigen::MatrixXd& projector() const { return proj_; }

    /// Radial multipole weights for mode m: (K f)_l(r_i) = sum_q G(i, q) f_l(s_q).
    const RowMatrix& multipole_weights(int mode) const { return G_[mode]; }

private:
    std::vector<double> r_;
    std::vector<double> zeta_;
    std::vector<double> zeta_w_;
    int l_max_;
    RadialRule rule_;
    Eigen::MatrixXd P_;
    Eigen::MatrixXd proj_;
    std::vector<RowMatrix> G_;
};

using GridPtr = std::shared_ptr<const AxiGrid>;

/// (s/r)^(l+1) s w / (2l+1) for s < r, (r/s)^l s w / (2l+1) otherwise.
double multipole_weight(int l, double r, double s, double w);

/// Nodal field u(r_i, zeta_j).
struct AxiField {
    GridPtr grid;
    Eigen::MatrixXd values;  ///< n_r x n_zeta

    static AxiField zeros(GridPtr grid);
    static AxiField from_function(GridPtr grid, const std::function<double(double, double)>& fn);

    /// Largest violation of equatorial symmetry and of center consistency.
    double symmetry_defect() const;
    double center_defect() const;
};

/// Field in even Legendre modes at the radial nodes.
struct ModeField {
    GridPtr grid;
    Eigen::MatrixXd coeffs;  ///< n_r x n_modes

    static ModeField zeros(GridPtr grid);
    static ModeField from_flat(GridPtr grid, const Eigen::VectorXd& v);
    Eigen::VectorXd flat() const;

    /// Mode m interpolated to radius r.
    double radial(int mode, double r) const;
    double radial_derivative(int mode, double r) const;
    /// Field value at an arbitrary point.
    double at(double r, double zeta) const;
    double dr_at(double r, double zeta) const;
    /// Values at the rule points, n_q x n_modes.
    Eigen::MatrixXd at_rule() const;
};

/// Allocation-free point evaluation of a ModeField; holds a reference.
class ModeEvaluator {
public:
    explicit ModeEvaluator(const ModeField& field);

    /// Interval of r, as used to pick the cubic stencil.
    int interval(double r) const { return locate_interval(r_, r); }
    double value(double r, double zeta) const { return value_in(interval(r), r, zeta); }
    /// Value using the stencil of a given interval (the interpolant is
    /// continuous, so either neighbor works at a shared node).
    double value_in(int k, double r, double zeta) const;
    /// Stencil and P_{2m}(zeta), so that u = sum_m P[m] sum_t w[t] c(first + t, m).
    void basis_in(int k, double r, double zeta, Stencil& st, double* P) const;

    const ModeField& field() const { return *f_; }

private:
    const ModeField* f_;
    std::span<const double> r_;
    int nm_;
};

/// P_0, P_2, ..., P_{2(nm-1)} at zeta into out[0..nm).
void even_legendre(int nm, double zeta, double* out);

/// Mode coefficients by Gauss projection; odd degrees are dropped.
ModeField to_modes(const AxiField& field);
AxiField to_nodal(const ModeField& field);

/// Values of the field at (s_q, zeta_j), n_q x n_zeta.
Eigen::MatrixXd rule_values(const ModeField& field);

}  // namespace rotstar
