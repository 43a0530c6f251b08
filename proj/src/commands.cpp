#include "rotstar/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "rotstar/error.hpp"
#include "rotstar/kernels.hpp"
#include "rotstar/legendre.hpp"
#include "rotstar/mass.hpp"
#include "rotstar/perturb.hpp"
#include "rotstar/potential.hpp"

namespace rotstar {

namespace {

namespace fs = std::filesystem;
using io::Json;

class Context {
public:
    Context(const RunConfig& c, const RunOptions& o) : cfg(c), opt(o) {}

    const RunConfig& cfg;
    const RunOptions& opt;
    std::vector<std::string> files;

    template <typename... Args>
    void log(fmt::format_string<Args...> f, Args&&... args) const {
        if (opt.verbose) fmt::print(stderr, "[rotstar] {}\n", fmt::format(f, std::forward<Args>(args)...));
    }

    void write(const std::string& name, const std::string& content) {
        const std::string file = cfg.output.prefix + name;
        io::write_atomic(opt.out_dir / file, content);
        files.push_back(file);
        log("wrote {}", file);
    }
    void json(const std::string& name, const Json& j) {
        if (cfg.output.json) write(name, io::dump_json(j));
    }
    void csv(const std::string& name, const io::CsvTable& t) {
        if (cfg.output.csv) write(name, t.str());
    }
};

struct Setup {
    EquationOfState eos;
    ScaleSet scale;
    RadialProfile profile;
    GridPtr grid;
};

Setup make_setup(const RunConfig& cfg) {
    Setup s{make_eos(cfg.eos), {}, {}, nullptr};
    s.scale = make_scale(s.eos, cfg.eos.u_O, cfg.eos.G);
    RadialOptions ro;
    ro.n_nodes = cfg.grid.n_r;
    const double r_inf = cfg.grid.r_inf > 0.0 ? cfg.grid.r_inf : -1.0;
    try {
        s.profile = solve_lane_emden(s.eos, s.scale.u_O, r_inf, 1e-13, ro);
    } catch (const InvalidArgument& e) {
        throw ConfigError("grid.r_inf", std::string("grid.r_inf: ") + e.what());
    }
    s.grid = AxiGrid::create(s.profile.r_nodes, cfg.grid.n_zeta, cfg.grid.l_max);
    return s;
}

Json eos_json(const RunConfig& cfg, const Setup& s) {
    Json j;
    j["kind"] = cfg.eos.kind;
    j["nu"] = s.eos.nu();
    j["gamma"] = s.eos.gamma();
    j["u_O"] = s.scale.u_O;
    j["rho_O"] = s.scale.rho_O;
    j["a"] = s.scale.a_len;
    if (s.eos.kind() == EosKind::WhiteDwarf) j["wd_eps"] = s.profile.law.wd_eps();
    return j;
}

Json hl_json(const HLReport& hl, double threshold) {
    Json j;
    j["sigma_min"] = hl.sigma_min;
    j["threshold"] = threshold;
    j["passes"] = hl.sigma_min > threshold;
    j["block_diagonal"] = hl.block_diagonal;
    j["block_sigma"] = hl.block_sigma;
    return j;
}

Json solution_json(const EquilibriumSolution& sol, const Setup& s, double threshold) {
    Json j;
    j["beta"] = sol.beta;
    j["iterations"] = sol.iterations;
    j["residual_history"] = sol.residual_history;
    const auto& f = sol.flags;
    j["flags"] = {{"a1", f.a1}, {"a2", f.a2}, {"monotone", f.monotone},
                  {"all", f.a1 && f.a2 && f.monotone}};
    j["r0"] = f.r0;
    j["inv_C"] = f.inv_C;
    j["inv_C_axis"] = f.inv_C_axis;
    if (f.a2) {
        j["R_equator"] = free_boundary_at(sol.modes, 0.0, f.r0);
        j["R_pole"] = free_boundary_at(sol.modes, 1.0, f.r0);
        j["sigma"] = (j["R_equator"].get<double>() - j["R_pole"].get<double>()) / s.profile.xi1;
    }
    j["boundary_grad_min"] = sol.boundary_grad_min;
    j["M1"] = total_mass_dimensionless(sol, s.eos, s.scale.u_O);
    if (sol.hl.sigma_min > 0.0) j["hl"] = hl_json(sol.hl, threshold);
    return j;
}

io::CsvTable boundary_csv(const EquilibriumSolution& sol) {
    io::CsvTable t;
    const auto z = sol.modes.grid->zeta();
    t.add("zeta", {z.begin(), z.end()});
    std::vector<double> R = sol.R_of_zeta;
    R.resize(z.size(), std::nan(""));
    t.add("R", R);
    return t;
}

io::CsvTable modes_csv(const ModeField& u) {
    io::CsvTable t;
    const auto r = u.grid->r();
    t.add("r", {r.begin(), r.end()});
    for (int m = 0; m < u.grid->n_modes(); ++m) {
        std::vector<double> c(u.coeffs.rows());
        for (int i = 0; i < u.coeffs.rows(); ++i) c[i] = u.coeffs(i, m);
        t.add(fmt::format("u_{}", AxiGrid::degree(m)), c);
    }
    return t;
}

Json cmd_lane_emden(Context& ctx) {
    const Setup s = make_setup(ctx.cfg);
    const auto& p = s.profile;
    io::CsvTable t;
    t.add("r", p.r_nodes);
    t.add("theta", p.theta);
    t.add("dtheta", p.dtheta);
    t.add("psi", p.psi);
    ctx.csv("profile.csv", t);
    Json j;
    j["command"] = "lane-emden";
    j["eos"] = eos_json(ctx.cfg, s);
    j["xi1"] = p.xi1;
    j["mu1"] = p.mu1;
    j["r_inf"] = p.r_inf();
    j["n_r"] = static_cast<int>(p.r_nodes.size());
    j["residual"] = lane_emden_residual(p);
    ctx.json("lane_emden.json", j);
    return j;
}

Json cmd_solve(Context& ctx) {
    const Setup s = make_setup(ctx.cfg);
    const auto& rc = ctx.cfg.rotation;
    SolverOptions so = make_solver_options(ctx.cfg.solver);
    const AxiField init = initial_from_profile(s.grid, s.profile);
    Json j;
    j["command"] = "solve";
    j["eos"] = eos_json(ctx.cfg, s);
    j["rotation"] = rc.kind;
    j["xi1"] = s.profile.xi1;
    const bool by_beta = rc.kind == "none" || (rc.kind == "constant" && rc.beta);
    std::vector<EquilibriumSolution> sols;
    if (by_beta) {
        std::vector<double> schedule = ctx.cfg.solver.beta_schedule;
        if (schedule.empty()) schedule.push_back(rc.beta.value_or(0.0));
        ctx.log("continuation over {} beta values", schedule.size());
        sols = continuation_in_beta(schedule, s.eos, s.scale.u_O, init, so);
    } else if (rc.kind == "angular-momentum") {
        const RotationLaw law = make_rotation_law(rc, s.eos, s.scale);
        sols.push_back(solve_equilibrium(law, s.eos, s.scale, init, so));
    } else {
        const RotationLaw law = make_rotation_law(rc, s.eos, s.scale);
        const CentrifugalField c = b_from_omega(law, s.scale, s.eos, s.grid);
        j["b_norm"] = b_norm(c);
        j["b_norm_bound"] = b_norm_bound(law, s.scale, s.grid->r_inf());
        sols.push_back(solve_equilibrium(c, s.eos, s.scale.u_O, init, so));
        if (law.kind() == RotationLaw::Kind::Constant)
            sols.back().beta = beta_of_omega(law.omega(), s.scale, s.eos);
    }
    const EquilibriumSolution& last = sols.back();
    j["solution"] = solution_json(last, s, so.hl_threshold);
    if (sols.size() > 1) {
        io::CsvTable t;
        std::vector<double> b, Re, Rp, sg, smin, it;
        Json sweep = Json::array();
        for (const auto& sol : sols) {
            Json e = solution_json(sol, s, so.hl_threshold);
            b.push_back(sol.beta);
            Re.push_back(e.value("R_equator", std::nan("")));
            Rp.push_back(e.value("R_pole", std::nan("")));
            sg.push_back(e.value("sigma", std::nan("")));
            smin.push_back(sol.hl.sigma_min);
            it.push_back(sol.iterations);
            sweep.push_back(std::move(e));
        }
        j["sweep"] = std::move(sweep);
        t.add("beta", b);
        t.add("R_equator", Re);
        t.add("R_pole", Rp);
        t.add("sigma", sg);
        t.add("sigma_min", smin);
        t.add("iterations", it);
        ctx.csv("sweep.csv", t);
    }
    ctx.csv("boundary.csv", boundary_csv(last));
    ctx.csv("modes.csv", modes_csv(last.modes));
    ctx.json("solution.json", j);
    return j;
}

Json cmd_oblateness(Context& ctx) {
    const Setup s = make_setup(ctx.cfg);
    ctx.log("h field on {} x {} grid", s.grid->n_r(), s.grid->n_zeta());
    const HField h = compute_h_field(s.profile, s.eos, s.scale.u_O, s.grid);
    std::vector<double> betas = ctx.cfg.oblateness.betas;
    std::sort(betas.begin(), betas.end());
    SolverOptions so = make_solver_options(ctx.cfg.solver);
    so.compute_hl = false;
    const auto sols = continuation_in_beta(betas, s.eos, s.scale.u_O,
                                           initial_from_profile(s.grid, s.profile), so);
    Json j;
    j["command"] = "oblateness";
    j["eos"] = eos_json(ctx.cfg, s);
    j["xi1"] = s.profile.xi1;
    j["mu1"] = s.profile.mu1;
    j["h0_at_xi1"] = h.h0.at(s.profile.xi1);
    j["h2_at_xi1"] = h.h2.at(s.profile.xi1);
    j["dual_difference"] = h.dual_difference;
    j["high_modes_sup"] = h.high_modes_sup;
    std::vector<double> sig_m, sig_l, ratio;
    Json entries = Json::array();
    OblatenessReport rep;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        rep = oblateness(s.profile, h, betas[i], s.grid->zeta());
        const double sm = measured_oblateness(sols[i], s.profile.xi1);
        sig_m.push_back(sm);
        sig_l.push_back(rep.sigma_linear);
        ratio.push_back(sm / betas[i]);
        Json e{{"beta", betas[i]}, {"sigma_measured", sm}, {"sigma_linear", rep.sigma_linear}};
        if (!rep.warning.empty()) e["warning"] = rep.warning;
        entries.push_back(std::move(e));
    }
    j["sigma_slope"] = rep.sigma_slope;
    j["entries"] = std::move(entries);
    const OblatenessFit fit = fit_oblateness(betas, sig_m, rep.sigma_slope);
    j["fit"] = {{"slope_extrapolated", fit.slope_extrapolated},
                {"q", fit.q},
                {"error_exponent", fit.error_exponent},
                {"relative_difference", fit.relative_difference}};
    io::CsvTable t;
    t.add("beta", betas);
    t.add("sigma_measured", sig_m);
    t.add("sigma_linear", sig_l);
    t.add("sigma_over_beta", ratio);
    ctx.csv("oblateness.csv", t);
    io::CsvTable hm;
    std::vector<double> r, h0, h2;
    for (double x : s.profile.r_nodes) {
        r.push_back(x);
        h0.push_back(h.h0.at(x));
        h2.push_back(h.h2.at(x));
    }
    hm.add("r", r);
    hm.add("h0", h0);
    hm.add("h2", h2);
    ctx.csv("h_modes.csv", hm);
    io::CsvTable xb;
    xb.add("zeta", rep.zeta);
    xb.add("Xi1", rep.Xi1);
    xb.add("R_measured", sols.back().R_of_zeta);
    ctx.csv("boundary_xi1.csv", xb);
    ctx.json("oblateness.json", j);
    return j;
}

Json cmd_mass_curve(Context& ctx) {
    const EquationOfState eos = make_eos(ctx.cfg.eos);
    MassOptions mo;
    mo.n_r = ctx.cfg.grid.n_r;
    mo.n_zeta = ctx.cfg.grid.n_zeta;
    mo.l_max = ctx.cfg.grid.l_max;
    mo.solver = make_solver_options(ctx.cfg.solver);
    mo.solver.compute_hl = false;
    mo.G_grav = ctx.cfg.eos.G;
    mo.jobs = ctx.opt.jobs;
    const auto& mc = ctx.cfg.mass;
    ctx.log("tracing {} points", mc.omega2_schedule.size());
    MassCurve curve = trace_mass_curve(mc.rho_bar, mc.omega2_schedule, eos, mo, mc.bracket_factor);
    if (eos.kind() == EosKind::Polytrope) {
        for (auto& p : curve.points) {
            const double u_O = scale_from_central_density(eos, p.rho_O, mo.G_grav).u_O;
            const double d = p.beta > 0.0 ? dM1_dbeta(eos, u_O, p.beta, 1e-4, mo) : 0.0;
            p.dM_drho = dM_drho_at_constant_omega(p, eos, d, mo.G_grav);
        }
    }
    Json j;
    j["command"] = "mass-curve";
    j["eos"] = {{"kind", ctx.cfg.eos.kind}, {"nu", eos.nu()}, {"gamma", eos.gamma()}};
    j["rho_bar"] = mc.rho_bar;
    j["M_target"] = curve.M_target;
    j["mass_exponent"] = mass_exponent(eos);
    if (curve.dM_drho_spherical) j["dM_drho_spherical"] = *curve.dM_drho_spherical;
    j["largest_monotone_beta"] = curve.largest_monotone_beta;
    Json pts = Json::array();
    io::CsvTable t;
    std::vector<double> c0, c1, c2, c3, c4, c5;
    double worst = 0.0;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        Json e{{"Omega2", p.Omega2}, {"beta", p.beta},   {"rho_O", p.rho_O},
               {"M1", p.M1},         {"M", p.M},         {"relative_error", curve.relative_error[i]}};
        if (eos.kind() == EosKind::Polytrope) e["dM_drho"] = p.dM_drho;
        pts.push_back(std::move(e));
        c0.push_back(p.Omega2);
        c1.push_back(p.beta);
        c2.push_back(p.rho_O);
        c3.push_back(p.M1);
        c4.push_back(p.M);
        c5.push_back(curve.relative_error[i]);
        worst = std::max(worst, curve.relative_error[i]);
    }
    j["points"] = std::move(pts);
    j["max_relative_error"] = worst;
    t.add("Omega2", c0);
    t.add("beta", c1);
    t.add("rho_O", c2);
    t.add("M1", c3);
    t.add("M", c4);
    t.add("relative_error", c5);
    ctx.csv("mass_curve.csv", t);
    ctx.json("mass_curve.json", j);
    return j;
}

Json cmd_kernel_check(Context& ctx) {
    const auto& g = ctx.cfg.grid;
    Json j;
    j["command"] = "kernel-check";
    // uniform ball of radius 1
    const GridPtr ball = AxiGrid::create(clustered_nodes(g.n_r, 1.5, 1.0), g.n_zeta, g.l_max);
    const SourceFn one = [](double r, double) { return r <= 1.0 ? 1.0 : 0.0; };
    const AxiField Kb = apply_K_multipole(ball, one);
    double in = 0.0, out = 0.0;
    for (int i = 0; i < ball->n_r(); ++i) {
        const double r = ball->r()[i];
        const double exact = r <= 1.0 ? 0.5 * (1.0 - r * r / 3.0) : 1.0 / (3.0 * r);
        for (int k = 0; k < ball->n_zeta(); ++k)
            (r <= 1.0 ? in : out) = std::max(r <= 1.0 ? in : out, std::abs(Kb.values(i, k) - exact));
    }
    j["ball"] = {{"inside_error", in}, {"outside_error", out}};
    // multipole against direct quadrature on a 64 x 32 grid
    const GridPtr g64 = AxiGrid::create(clustered_nodes(64, 1.5, 1.0), 32, g.l_max);
    const SourceFn src = [](double r, double z) {
        return r < 1.0 ? (1.0 - r * r) * (1.0 + 0.3 * legendre(2, z)) : 0.0;
    };
    const AxiField Km = apply_K_multipole(g64, src);
    DirectOptions dopt;
    for (double r : g64->r())
        if (r <= 1.0) dopt.r_breaks.push_back(r);
    const AxiField Kd = apply_K_direct(g64, src, dopt);
    j["multipole_vs_direct"] = (Km.values - Kd.values).cwiseAbs().maxCoeff();
    // -Laplacian of K f against f under refinement
    Json lap = Json::array();
    std::vector<double> hs, es;
    for (int n : {31, 61, 121, 241}) {
        const GridPtr gu = AxiGrid::create(uniform_nodes(n, 1.5), g.n_zeta, g.l_max);
        const SourceFn smooth = [](double r, double z) {
            const double t = 1.0 - r * r;
            return r < 1.0 ? t * t * (1.0 + 0.5 * legendre(2, z)) : 0.0;
        };
        const double e = laplacian_defect(gu, smooth, 0.2, 0.8);
        hs.push_back(1.5 / (n - 1));
        es.push_back(e);
        lap.push_back({{"n_r", n}, {"defect", e}});
    }
    double order = 0.0;
    {
        const std::size_t m = hs.size();
        double Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = std::log(hs[i]), y = std::log(es[i]);
            Sx += x;
            Sy += y;
            Sxx += x * x;
            Sxy += x * y;
        }
        order = (m * Sxy - Sx * Sy) / (m * Sxx - Sx * Sx);
    }
    j["laplacian"] = {{"levels", lap}, {"order", order}};
    // serial and OpenMP kernels agree bit for bit
    const Eigen::MatrixXd srcq = rule_modes(g64, src);
    Eigen::MatrixXd a, b;
    kernels::multipole_apply_serial(*g64, srcq, a);
    kernels::multipole_apply_omp(*g64, srcq, b);
    const double d_mp = (a - b).cwiseAbs().maxCoeff();
    const int nm = g64->n_modes();
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g64->rule().size()), nm * nm);
    for (Eigen::Index q = 0; q < coupling.rows(); ++q)
        for (int m = 0; m < nm; ++m) coupling(q, m * nm + m) = std::exp(-g64->rule().s[q]);
    RowMatrix La, Lb;
    kernels::assemble_linearization_serial(*g64, coupling, La);
    kernels::assemble_linearization_omp(*g64, coupling, Lb);
    const double d_lin = (La - Lb).cwiseAbs().maxCoeff();
    kernels::DirectSource ds{src, dopt.r_breaks};
    std::vector<double> rr(g64->r().begin(), g64->r().end()), zz(rr.size(), 0.3);
    std::vector<double> o1(rr.size()), o2(rr.size());
    kernels::direct_potential_serial(ds, rr, zz, o1);
    kernels::direct_potential_omp(ds, rr, zz, o2);
    double d_dir = 0.0;
    for (std::size_t i = 0; i < rr.size(); ++i) d_dir = std::max(d_dir, std::abs(o1[i] - o2[i]));
    j["serial_vs_omp"] = {{"threads", kernels::threads()},
                          {"multipole_apply", d_mp},
                          {"assemble_linearization", d_lin},
                          {"direct_potential", d_dir}};
    ctx.json("kernel_check.json", j);
    return j;
}

Json cmd_hl_check(Context& ctx) {
    const Setup s = make_setup(ctx.cfg);
    const auto& rc = ctx.cfg.rotation;
    SolverOptions so = make_solver_options(ctx.cfg.solver);
    so.check_hl = false;
    Json j;
    j["command"] = "hl-check";
    j["eos"] = eos_json(ctx.cfg, s);
    HLReport hl;
    const AxiField theta = initial_from_profile(s.grid, s.profile);
    if (rc.kind == "none" || (rc.kind == "constant" && rc.beta && *rc.beta == 0.0)) {
        hl = hl_certificate(theta, s.eos, s.scale.u_O);
        j["beta"] = 0.0;
    } else {
        EquilibriumSolution sol;
        if (rc.kind == "constant" && rc.beta) {
            sol = solve_equilibrium(b_from_beta(*rc.beta, s.grid), s.eos, s.scale.u_O, theta, so);
            sol.beta = *rc.beta;
        } else if (rc.kind == "angular-momentum") {
            sol = solve_equilibrium(make_rotation_law(rc, s.eos, s.scale), s.eos, s.scale, theta, so);
        } else {
            const RotationLaw law = make_rotation_law(rc, s.eos, s.scale);
            sol = solve_equilibrium(b_from_omega(law, s.scale, s.eos, s.grid), s.eos, s.scale.u_O,
                                    theta, so);
        }
        hl = sol.hl;
        j["beta"] = sol.beta;
    }
    j["hl"] = hl_json(hl, so.hl_threshold);
    AxiField vac = AxiField::zeros(s.grid);
    vac.values.setConstant(-1.0);
    j["vacuum_sigma_min"] = hl_certificate(vac, s.eos, s.scale.u_O).sigma_min;
    ctx.json("hl_check.json", j);
    return j;
}

}  // namespace

RunResult run(const RunConfig& cfg, const RunOptions& opt) {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (!fs::is_directory(opt.out_dir))
        throw IOError("output directory " + opt.out_dir.string() + " is not usable");
    kernels::set_threads(std::max(1, opt.jobs));
    Context ctx(cfg, opt);
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    try {
        switch (cfg.command) {
        case Command::LaneEmden: res.summary = cmd_lane_emden(ctx); break;
        case Command::Solve: res.summary = cmd_solve(ctx); break;
        case Command::Oblateness: res.summary = cmd_oblateness(ctx); break;
        case Command::MassCurve: res.summary = cmd_mass_curve(ctx); break;
        case Command::KernelCheck: res.summary = cmd_kernel_check(ctx); break;
        case Command::HLCheck: res.summary = cmd_hl_check(ctx); break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const IOError&) {
        throw;
    } catch (const SolverError&) {
        throw;
    } catch (const Error& e) {
        throw SolverError(e.kind(), cfg.rotation.beta.value_or(std::nan("")), e.what());
    }
    ctx.log("{} finished in {:.2f} s", command_name(cfg.command),
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const std::string canon = canonical_config(cfg);
    Json m;
    m["library"] = "rotstar";
    m["version"] = ROTSTAR_VERSION;
    m["command"] = command_name(cfg.command);
    m["config_sha256"] = io::sha256_hex(canon);
    m["config_file_sha256"] = io::sha256_hex(opt.config_text);
    m["config"] = Json::parse(canon);
    Json files = Json::array();
    for (const auto& f : ctx.files) {
        const std::string body = io::read_file(opt.out_dir / f);
        files.push_back({{"name", f}, {"bytes", body.size()}, {"sha256", io::sha256_hex(body)}});
    }
    m["files"] = std::move(files);
    ctx.write("manifest.json", io::dump_json(m));
    res.files = ctx.files;
    return res;
}

Json error_report(const std::exception& e) {
    Json j;
    j["status"] = "error";
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        j["kind"] = c->kind();
        j["field"] = c->field();
    } else if (const auto* s = dynamic_cast<const SolverError*>(&e)) {
        j["kind"] = s->kind();
        j["inner_kind"] = s->inner_kind();
        if (std::isfinite(s->beta())) j["beta"] = s->beta();
    } else if (const auto* r = dynamic_cast<const Error*>(&e)) {
        j["kind"] = r->kind();
    } else {
        j["kind"] = "InternalError";
    }
    j["message"] = e.what();
    return j;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const IOError*>(&e)) return 4;
    return 3;
}

}  // namespace rotstar
