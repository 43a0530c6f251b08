#include "rotstar/grid.hpp"

#include <algorithm>
#include <cmath>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar {

namespace {

struct Spacing {
    double H, rc, ratio_c, ratio_0, kappa;
    double operator()(double x) const {
        double h = std::min(H, H / ratio_0 + kappa * x);
        if (rc > 0.0) h = std::min(h, H / ratio_c + kappa * std::abs(x - rc));
        return h;
    }
};

// Cumulative integral of 1/h on a mesh fine relative to h itself.
void cumulative(const Spacing& h, double r_inf, std::vector<double>& xs, std::vector<double>& S) {
    xs.assign(1, 0.0);
    S.assign(1, 0.0);
    double x = 0.0;
    while (x < r_inf) {
        double next = x + h(x) / 64.0;
        if (h.rc > x && next >= h.rc) next = h.rc;
        if (next >= r_inf) next = r_inf;
        S.push_back(S.back() + (next - x) / h(0.5 * (x + next)));
        x = next;
        xs.push_back(x);
    }
    xs.back() = r_inf;
}

double invert(const std::vector<double>& xs, const std::vector<double>& S, double target) {
    auto it = std::lower_bound(S.begin(), S.end(), target);
    if (it == S.begin()) return xs.front();
    if (it == S.end()) return xs.back();
    const std::size_t k = it - S.begin();
    const double t = (target - S[k - 1]) / (S[k] - S[k - 1]);
    return xs[k - 1] + t * (xs[k] - xs[k - 1]);
}

}  // namespace

std::vector<double> uniform_nodes(int n, double r_inf) {
    if (n < 4) throw InvalidArgument("radial grid needs at least 4 nodes");
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = r_inf * i / (n - 1);
    return r;
}

std::vector<double> clustered_nodes(int n, double r_inf, double r_cluster,
                                    const ClusterOptions& opt) {
    if (n < 4) throw InvalidArgument("radial grid needs at least 4 nodes");
    if (!(r_inf > 0.0)) throw InvalidArgument("r_inf must be positive");
    if (opt.ratio_center < 1.0 || opt.ratio_origin < 1.0 || opt.grading <= 0.0)
        throw InvalidArgument("invalid clustering options");
    const double rc = (r_cluster > 0.0 && r_cluster < r_inf) ? r_cluster : -1.0;
    const bool end_cluster = r_cluster >= r_inf;

    Spacing sp{r_inf / (n - 1), end_cluster ? r_inf : rc, opt.ratio_center, opt.ratio_origin,
               opt.grading};
    std::vector<double> xs, S;
    // count(H) decreases with H; find H with count = n - 1
    double lo = r_inf / (n - 1) * 1e-3, hi = r_inf / (n - 1) * 1e3;
    for (int it = 0; it < 80; ++it) {
        sp.H = std::sqrt(lo * hi);
        cumulative(sp, r_inf, xs, S);
        if (S.back() > n - 1) lo = sp.H;
        else hi = sp.H;
        if (hi / lo < 1.0 + 1e-10) break;
    }
    sp.H = std::sqrt(lo * hi);
    cumulative(sp, r_inf, xs, S);

    std::vector<double> r(n);
    r[0] = 0.0;
    r[n - 1] = r_inf;
    if (rc > 0.0) {
        // the fine mesh steps exactly onto rc
        const double Sc = S[std::lower_bound(xs.begin(), xs.end(), rc) - xs.begin()];
        int n1 = static_cast<int>(std::lround((n - 1) * Sc / S.back()));
        n1 = std::clamp(n1, 2, n - 3);
        const int n2 = n - 1 - n1;
        for (int k = 1; k < n1; ++k) r[k] = invert(xs, S, Sc * k / n1);
        r[n1] = rc;
        for (int k = 1; k < n2; ++k) r[n1 + k] = invert(xs, S, Sc + (S.back() - Sc) * k / n2);
    } else {
        for (int k = 1; k < n - 1; ++k) r[k] = invert(xs, S, S.back() * k / (n - 1));
    }
    for (int k = 1; k < n; ++k)
        if (!(r[k] > r[k - 1])) throw InvalidArgument("clustered grid lost monotonicity");
    return r;
}

int locate_interval(std::span<const double> nodes, double x) {
    const int n = static_cast<int>(nodes.size());
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    int k = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(k, 0, n - 2);
}

namespace {
int stencil_first(std::span<const double> nodes, double x) {
    const int n = static_cast<int>(nodes.size());
    return std::clamp(locate_interval(nodes, x) - 1, 0, n - 4);
}
}  // namespace

Stencil lagrange_stencil(std::span<const double> nodes, double x) {
    Stencil st;
    st.first = stencil_first(nodes, x);
    const double* xs = nodes.data() + st.first;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (x - xs[b]) / (xs[a] - xs[b]);
        st.w[a] = w;
    }
    return st;
}

Stencil lagrange_derivative_stencil(std::span<const double> nodes, double x) {
    Stencil st;
    st.first = stencil_first(nodes, x);
    const double* xs = nodes.data() + st.first;
    for (int a = 0; a < 4; ++a) {
        double sum = 0.0;
        for (int c = 0; c < 4; ++c) {
            if (c == a) continue;
            double p = 1.0 / (xs[a] - xs[c]);
            for (int b = 0; b < 4; ++b)
                if (b != a && b != c) p *= (x - xs[b]) / (xs[a] - xs[b]);
            sum += p;
        }
        st.w[a] = sum;
    }
    return st;
}

RadialRule make_radial_rule(std::span<const double> nodes, int per_interval) {
    if (nodes.size() < 4) throw InvalidArgument("radial grid needs at least 4 nodes");
    const GaussRule g = gauss_legendre(per_interval);
    RadialRule rule;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double a = nodes[k], b = nodes[k + 1];
        for (int p = 0; p < per_interval; ++p) {
            const double s = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[p];
            rule.s.push_back(s);
            rule.w.push_back(0.5 * (b - a) * g.weights[p]);
            rule.interval.push_back(static_cast<int>(k));
            Stencil st;
            st.first = std::clamp(static_cast<int>(k) - 1, 0, static_cast<int>(nodes.size()) - 4);
            const double* xs = nodes.data() + st.first;
            for (int i = 0; i < 4; ++i) {
                double w = 1.0;
                for (int j = 0; j < 4; ++j)
                    if (j != i) w *= (s - xs[j]) / (xs[i] - xs[j]);
                st.w[i] = w;
            }
            rule.stencil.push_back(st);
        }
    }
    return rule;
}

double multipole_weight(int l, double r, double s, double w) {
    const double base = w * s / (2 * l + 1);
    if (s < r) return base * std::pow(s / r, l + 1);
    if (l == 0) return base;
    return base * std::pow(r / s, l);
}

AxiGrid::AxiGrid(std::vector<double> r_nodes, int n_zeta, int l_max, int radial_points)
    : r_(std::move(r_nodes)), l_max_(l_max) {
    if (r_.size() < 4) throw InvalidArgument("radial grid needs at least 4 nodes");
    if (r_.front() != 0.0) throw InvalidArgument("first radial node must be 0");
    for (std::size_t i = 1; i < r_.size(); ++i)
        if (!(r_[i] > r_[i - 1])) throw InvalidArgument("radial nodes must increase strictly");
    if (l_max < 0 || l_max % 2 != 0) throw InvalidArgument("L_max must be even and nonnegative");
    if (n_zeta < l_max + 1) throw InvalidArgument("N_zeta must be at least L_max + 1");
    if (radial_points < 1) throw InvalidArgument("radial_points must be positive");

    const GaussRule g = gauss_legendre(n_zeta);
    zeta_ = g.nodes;
    zeta_w_ = g.weights;
    rule_ = make_radial_rule(r_, radial_points);

    const int nm = n_modes();
    P_.resize(n_zeta, nm);
    proj_.resize(nm, n_zeta);
    std::vector<double> p(l_max_ + 1);
    for (int j = 0; j < n_zeta; ++j) {
        legendre_all(l_max_, zeta_[j], p);
        for (int m = 0; m < nm; ++m) {
            const int l = degree(m);
            P_(j, m) = p[l];
            proj_(m, j) = 0.5 * (2 * l + 1) * zeta_w_[j] * p[l];
        }
    }

    const int nr = n_r();
    const int nq = static_cast<int>(rule_.size());
    G_.resize(nm);
    for (int m = 0; m < nm; ++m) {
        G_[m].resize(nr, nq);
        for (int i = 0; i < nr; ++i)
            for (int q = 0; q < nq; ++q)
                G_[m](i, q) = multipole_weight(degree(m), r_[i], rule_.s[q], rule_.w[q]);
    }
}

AxiField AxiField::zeros(GridPtr grid) {
    AxiField f{grid, Eigen::MatrixXd::Zero(grid->n_r(), grid->n_zeta())};
    return f;
}

AxiField AxiField::from_function(GridPtr grid, const std::function<double(double, double)>& fn) {
    AxiField f = zeros(grid);
    for (int i = 0; i < grid->n_r(); ++i)
        for (int j = 0; j < grid->n_zeta(); ++j) f.values(i, j) = fn(grid->r()[i], grid->zeta()[j]);
    return f;
}

double AxiField::symmetry_defect() const {
    const int nz = grid->n_zeta();
    double d = 0.0;
    for (int i = 0; i < grid->n_r(); ++i)
        for (int j = 0; j < nz / 2; ++j)
            d = std::max(d, std::abs(values(i, j) - values(i, nz - 1 - j)));
    return d;
}

double AxiField::center_defect() const {
    double d = 0.0;
    for (int j = 1; j < grid->n_zeta(); ++j) d = std::max(d, std::abs(values(0, j) - values(0, 0)));
    return d;
}

ModeField ModeField::zeros(GridPtr grid) {
    return ModeField{grid, Eigen::MatrixXd::Zero(grid->n_r(), grid->n_modes())};
}

ModeField ModeField::from_flat(GridPtr grid, const Eigen::VectorXd& v) {
    ModeField f = zeros(grid);
    if (v.size() != grid->n_dof()) throw InvalidArgument("flat vector has the wrong size");
    const int nr = grid->n_r();
    for (int m = 0; m < grid->n_modes(); ++m) f.coeffs.col(m) = v.segment(m * nr, nr);
    return f;
}

Eigen::VectorXd ModeField::flat() const {
    const int nr = grid->n_r();
    Eigen::VectorXd v(grid->n_dof());
    for (int m = 0; m < grid->n_modes(); ++m) v.segment(m * nr, nr) = coeffs.col(m);
    return v;
}

double ModeField::radial(int mode, double r) const {
    const Stencil st = lagrange_stencil(grid->r(), r);
    return st.apply(std::span<const double>(coeffs.col(mode).data(), grid->n_r()));
}

double ModeField::radial_derivative(int mode, double r) const {
    const Stencil st = lagrange_derivative_stencil(grid->r(), r);
    return st.apply(std::span<const double>(coeffs.col(mode).data(), grid->n_r()));
}

double ModeField::at(double r, double zeta) const {
    const Stencil st = lagrange_stencil(grid->r(), r);
    std::vector<double> p(grid->l_max() + 1);
    legendre_all(grid->l_max(), zeta, p);
    double v = 0.0;
    for (int m = 0; m < grid->n_modes(); ++m)
        v += p[AxiGrid::degree(m)] *
             st.apply(std::span<const double>(coeffs.col(m).data(), grid->n_r()));
    return v;
}

double ModeField::dr_at(double r, double zeta) const {
    const Stencil st = lagrange_derivative_stencil(grid->r(), r);
    std::vector<double> p(grid->l_max() + 1);
    legendre_all(grid->l_max(), zeta, p);
    double v = 0.0;
    for (int m = 0; m < grid->n_modes(); ++m)
        v += p[AxiGrid::degree(m)] *
             st.apply(std::span<const double>(coeffs.col(m).data(), grid->n_r()));
    return v;
}

Eigen::MatrixXd ModeField::at_rule() const {
    const RadialRule& rule = grid->rule();
    const int nq = static_cast<int>(rule.size());
    Eigen::MatrixXd out(nq, grid->n_modes());
    for (int m = 0; m < grid->n_modes(); ++m) {
        std::span<const double> c(coeffs.col(m).data(), grid->n_r());
        for (int q = 0; q < nq; ++q) out(q, m) = rule.stencil[q].apply(c);
    }
    return out;
}

void even_legendre(int nm, double zeta, double* out) {
    // recurrence over all degrees, keeping the even ones
    double pm1 = 1.0, p = zeta;
    out[0] = 1.0;
    for (int l = 1; l < 2 * nm - 1; ++l) {
        const double next = ((2 * l + 1) * zeta * p - l * pm1) / (l + 1);
        pm1 = p;
        p = next;
        if ((l + 1) % 2 == 0) out[(l + 1) / 2] = p;
    }
}

ModeEvaluator::ModeEvaluator(const ModeField& field)
    : f_(&field), r_(field.grid->r()), nm_(field.grid->n_modes()) {
    if (nm_ > 64) throw InvalidArgument("ModeEvaluator supports at most 64 modes");
}

void ModeEvaluator::basis_in(int k, double r, double zeta, Stencil& st, double* P) const {
    const int n = static_cast<int>(r_.size());
    st.first = std::clamp(k - 1, 0, n - 4);
    const double* xs = r_.data() + st.first;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (r - xs[b]) / (xs[a] - xs[b]);
        st.w[a] = w;
    }
    even_legendre(nm_, zeta, P);
}

double ModeEvaluator::value_in(int k, double r, double zeta) const {
    Stencil st;
    double P[64];
    basis_in(k, r, zeta, st, P);
    const Eigen::MatrixXd& c = f_->coeffs;
    double v = 0.0;
    for (int m = 0; m < nm_; ++m) {
        const double* col = c.col(m).data() + st.first;
        v += P[m] * (st.w[0] * col[0] + st.w[1] * col[1] + st.w[2] * col[2] + st.w[3] * col[3]);
    }
    return v;
}

ModeField to_modes(const AxiField& field) {
    return ModeField{field.grid, field.values * field.grid->projector().transpose()};
}

AxiField to_nodal(const ModeField& field) {
    return AxiField{field.grid, field.coeffs * field.grid->legendre_table().transpose()};
}

Eigen::MatrixXd rule_values(const ModeField& field) {
    return field.at_rule() * field.grid->legendre_table().transpose();
}

}  // namespace rotstar
