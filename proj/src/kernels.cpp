#include "rotstar/kernels.hpp"

#include <omp.h>

#include <atomic>
#include <boost/math/special_functions/ellint_rf.hpp>
#include <cmath>
#include <numbers>

#include "rotstar/error.hpp"
#include "rotstar/legendre.hpp"

namespace rotstar::kernels {

namespace {
std::atomic<int> g_threads{1};
constexpr double kPi = std::numbers::pi;
}  // namespace

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int threads() { return g_threads.load(); }

// ---------------------------------------------------------------- multipole

namespace {
inline void multipole_row(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out,
                          int m, int i) {
    const RowMatrix& G = grid.multipole_weights(m);
    const double* g = G.data() + static_cast<std::size_t>(i) * G.cols();
    const double* s = src.col(m).data();
    double acc = 0.0;
    for (Eigen::Index q = 0; q < G.cols(); ++q) acc += g[q] * s[q];
    out(i, m) = acc;
}
}  // namespace

void multipole_apply_serial(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out) {
    out.resize(grid.n_r(), grid.n_modes());
    for (int m = 0; m < grid.n_modes(); ++m)
        for (int i = 0; i < grid.n_r(); ++i) multipole_row(grid, src, out, m, i);
}

void multipole_apply_omp(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out) {
    out.resize(grid.n_r(), grid.n_modes());
    const int nr = grid.n_r();
    const int total = nr * grid.n_modes();
#pragma omp parallel for num_threads(threads()) schedule(static)
    for (int k = 0; k < total; ++k) multipole_row(grid, src, out, k / nr, k % nr);
}

void multipole_apply(const AxiGrid& grid, const Eigen::MatrixXd& src, Eigen::MatrixXd& out) {
    if (threads() > 1) multipole_apply_omp(grid, src, out);
    else multipole_apply_serial(grid, src, out);
}

// ------------------------------------------------------------ linearization

namespace {
inline void linearization_row(const AxiGrid& grid, const Eigen::MatrixXd& coupling,
                              const std::vector<char>& active, RowMatrix& out, int m, int i) {
    const int nm = grid.n_modes();
    const int nr = grid.n_r();
    const RadialRule& rule = grid.rule();
    const RowMatrix& G = grid.multipole_weights(m);
    const double* g = G.data() + static_cast<std::size_t>(i) * G.cols();
    double* row = out.data() + static_cast<std::size_t>(m * nr + i) * out.cols();
    for (int mp = 0; mp < nm; ++mp) {
        if (!active[m * nm + mp]) continue;
        const double* c = coupling.col(m * nm + mp).data();
        double* blk = row + mp * nr;
        for (Eigen::Index q = 0; q < G.cols(); ++q) {
            const double a = g[q] * c[q];
            if (a == 0.0) continue;
            const Stencil& st = rule.stencil[q];
            blk[st.first] += a * st.w[0];
            blk[st.first + 1] += a * st.w[1];
            blk[st.first + 2] += a * st.w[2];
            blk[st.first + 3] += a * st.w[3];
        }
    }
}

std::vector<char> active_pairs(const AxiGrid& grid, const Eigen::MatrixXd& coupling) {
    const int nm = grid.n_modes();
    std::vector<char> active(nm * nm);
    for (int k = 0; k < nm * nm; ++k) active[k] = coupling.col(k).cwiseAbs().maxCoeff() > 0.0;
    return active;
}
}  // namespace

void assemble_linearization_serial(const AxiGrid& grid, const Eigen::MatrixXd& coupling,
                                   RowMatrix& out) {
    const int n = grid.n_dof();
    out.setZero(n, n);
    const auto active = active_pairs(grid, coupling);
    for (int m = 0; m < grid.n_modes(); ++m)
        for (int i = 0; i < grid.n_r(); ++i) linearization_row(grid, coupling, active, out, m, i);
}

void assemble_linearization_omp(const AxiGrid& grid, const Eigen::MatrixXd& coupling,
                                RowMatrix& out) {
    const int n = grid.n_dof();
    out.setZero(n, n);
    const auto active = active_pairs(grid, coupling);
    const int nr = grid.n_r();
#pragma omp parallel for num_threads(threads()) schedule(static)
    for (int k = 0; k < n; ++k) linearization_row(grid, coupling, active, out, k / nr, k % nr);
}

void assemble_linearization(const AxiGrid& grid, const Eigen::MatrixXd& coupling, RowMatrix& out) {
    if (threads() > 1) assemble_linearization_omp(grid, coupling, out);
    else assemble_linearization_serial(grid, coupling, out);
}

// ------------------------------------------------------------------- direct

namespace {

// Same integral in polar angles, with |x - x'|^2 at beta = 0 formed without cancellation.
inline double ring_kernel_theta(double r, double t, double rp, double tp) {
    const double dr = r - rp;
    const double sm = std::sin(0.5 * (t - tp));
    const double sp = std::sin(0.5 * (t + tp));
    const double amb = dr * dr + 4.0 * r * rp * sm * sm;
    const double apb = dr * dr + 4.0 * r * rp * sp * sp;
    if (apb == 0.0) return INFINITY;
    return 4.0 / std::sqrt(apb) * boost::math::ellint_rf(0.0, amb / apb, 1.0);
}

struct Rule1 {
    std::vector<double> x, w;
};

void panel_points(const DirectSource& src, const Rule1& g, double r0, double r1, double t0,
                  double t1, DirectCache::Panel& p) {
    p.r0 = r0;
    p.r1 = r1;
    p.t0 = t0;
    p.t1 = t1;
    const std::size_t n = g.x.size();
    p.r.resize(n * n);
    p.t.resize(n * n);
    p.wf.resize(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        const double rr = r0 + (r1 - r0) * g.x[a];
        for (std::size_t b = 0; b < n; ++b) {
            const double tt = t0 + (t1 - t0) * g.x[b];
            const std::size_t k = a * n + b;
            p.r[k] = rr;
            p.t[k] = tt;
            p.wf[k] = (r1 - r0) * (t1 - t0) * g.w[a] * g.w[b] * rr * rr * std::sin(tt) *
                      src.f(rr, std::cos(tt));
        }
    }
}

inline double panel_sum(const DirectCache::Panel& p, double r, double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p.r.size(); ++k) {
        if (p.wf[k] == 0.0) continue;
        acc += p.wf[k] * (ring_kernel_theta(r, t, p.r[k], p.t[k]) +
                          ring_kernel_theta(r, t, p.r[k], kPi - p.t[k]));
    }
    return acc;
}

bool is_near(double r0, double r1, double t0, double t1, double r, double ts) {
    const double wr = 0.75 * (r1 - r0), wt = 0.75 * (t1 - t0);
    return r >= r0 - wr && r <= r1 + wr && ts >= t0 - wt && ts <= t1 + wt;
}

double near_panel(const DirectSource& src, const Rule1& g, double r0, double r1, double t0,
                  double t1, double r, double t, double ts, double rscale, int depth) {
    const bool small = (r1 - r0) <= src.min_panel * rscale && (t1 - t0) <= src.min_panel;
    if (depth >= 60 || small || !is_near(r0, r1, t0, t1, r, ts)) {
        DirectCache::Panel p;
        panel_points(src, g, r0, r1, t0, t1, p);
        return panel_sum(p, r, t);
    }
    const double rm = 0.5 * (r0 + r1), tm = 0.5 * (t0 + t1);
    return near_panel(src, g, r0, rm, t0, tm, r, t, ts, rscale, depth + 1) +
           near_panel(src, g, r0, rm, tm, t1, r, t, ts, rscale, depth + 1) +
           near_panel(src, g, rm, r1, t0, tm, r, t, ts, rscale, depth + 1) +
           near_panel(src, g, rm, r1, tm, t1, r, t, ts, rscale, depth + 1);
}

Rule1 unit_rule(int n) {
    const GaussRule g = gauss_legendre(n, 0.0, 1.0);
    return Rule1{g.nodes, g.weights};
}

}  // namespace

double ring_kernel(double r, double zeta, double rp, double zetap) {
    return ring_kernel_theta(r, std::acos(std::clamp(zeta, -1.0, 1.0)), rp,
                             std::acos(std::clamp(zetap, -1.0, 1.0)));
}

DirectCache make_direct_cache(const DirectSource& src) {
    if (src.r_breaks.size() < 2) throw InvalidArgument("direct source needs radial breaks");
    DirectCache cache;
    const Rule1 g = unit_rule(src.gauss);
    cache.x = g.x;
    cache.w = g.w;
    const double dt = 0.5 * kPi / src.theta_panels;
    for (std::size_t k = 0; k + 1 < src.r_breaks.size(); ++k)
        for (int j = 0; j < src.theta_panels; ++j) {
            DirectCache::Panel p;
            panel_points(src, g, src.r_breaks[k], src.r_breaks[k + 1], j * dt, (j + 1) * dt, p);
            cache.panels.push_back(std::move(p));
        }
    return cache;
}

double direct_potential_point(const DirectSource& src, const DirectCache& cache, double r,
                              double zeta) {
    const double t = std::acos(std::clamp(zeta, -1.0, 1.0));
    const double ts = std::min(t, kPi - t);
    const Rule1 g{cache.x, cache.w};
    const double rscale = src.r_breaks.back();
    double acc = 0.0;
    for (const auto& p : cache.panels) {
        if (r > 0.0 && is_near(p.r0, p.r1, p.t0, p.t1, r, ts))
            acc += near_panel(src, g, p.r0, p.r1, p.t0, p.t1, r, t, ts, rscale, 0);
        else acc += panel_sum(p, r, t);
    }
    return acc / (4.0 * kPi);
}

void direct_potential_serial(const DirectSource& src, std::span<const double> r,
                             std::span<const double> zeta, std::span<double> out) {
    const DirectCache cache = make_direct_cache(src);
    for (std::size_t k = 0; k < r.size(); ++k)
        out[k] = direct_potential_point(src, cache, r[k], zeta[k]);
}

void direct_potential_omp(const DirectSource& src, std::span<const double> r,
                          std::span<const double> zeta, std::span<double> out) {
    const DirectCache cache = make_direct_cache(src);
    const long n = static_cast<long>(r.size());
#pragma omp parallel for num_threads(threads()) schedule(dynamic, 4)
    for (long k = 0; k < n; ++k) out[k] = direct_potential_point(src, cache, r[k], zeta[k]);
}

void direct_potential(const DirectSource& src, std::span<const double> r,
                      std::span<const double> zeta, std::span<double> out) {
    if (threads() > 1) direct_potential_omp(src, r, zeta, out);
    else direct_potential_serial(src, r, zeta, out);
}

}  // namespace rotstar::kernels
