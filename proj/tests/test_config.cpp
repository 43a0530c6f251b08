#include <doctest.h>

#include <cmath>
#include <string>

#include "rotstar/config.hpp"
#include "rotstar/error.hpp"
#include "rotstar/io.hpp"

using namespace rotstar;

namespace {

std::string field_of(const std::string& text, const std::string& name = "c.ini") {
    try {
        parse_config(text, name);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("INI and JSON encode the same schema") {
    const std::string ini = R"(
; comment
[run]
command = solve
[eos]
nu = 1.5
[rotation]
kind = constant
beta = 1e-3
[grid]
n_r = 128
n_zeta = 16
[solver]
tol = 1e-10
newton = true
beta_schedule = 0, 1e-4, 1e-3
)";
    const std::string json = R"({
  "run": {"command": "solve"},
  "eos": {"nu": 1.5},
  "rotation": {"kind": "constant", "beta": 0.001},
  "grid": {"n_r": 128, "n_zeta": 16},
  "solver": {"tol": 1e-10, "newton": true, "beta_schedule": [0, 1e-4, 1e-3]}
})";
    const auto a = parse_config(ini, "x.ini");
    const auto b = parse_config(json, "x.json");
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(a.command == Command::Solve);
    CHECK(a.grid.n_r == 128);
    CHECK(a.grid.l_max == 8);
    CHECK(a.solver.beta_schedule == std::vector<double>{0.0, 1e-4, 1e-3});
    CHECK(*a.rotation.beta == 1e-3);
    // sniffed from content without a known extension
    CHECK(canonical_config(parse_config(json, "config")) == canonical_config(a));
    CHECK(canonical_config(parse_config(ini, "config")) == canonical_config(a));
}

TEST_CASE("canonical form is stable and sensitive") {
    const auto a = parse_config("[run]\ncommand = lane-emden\n[eos]\nnu = 1\n");
    const auto b = parse_config("[eos]\nnu = 1.0\n[run]\ncommand = lane-emden\n");
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(io::sha256_hex(canonical_config(a)) == io::sha256_hex(canonical_config(b)));
    const auto c = parse_config("[run]\ncommand = lane-emden\n[eos]\nnu = 1.0000000000000002\n");
    CHECK(canonical_config(a) != canonical_config(c));
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK(field_of("[run]\ncommand = solve\n[solver]\ntolerance = 1e-9\n") == "solver.tolerance");
    CHECK(field_of("[run]\ncommand = solve\n[solvr]\ntol = 1e-9\n") == "solvr");
    CHECK(field_of(R"({"run": {"command": "solve"}, "grid": {"nr": 3}})", "c.json") == "grid.nr");
    CHECK(field_of("[run]\ncommand = fly\n") == "run.command");
    CHECK(field_of("[run]\ncommand = solve\n[rotation]\nkind = constant\nm_samples = 0, 1\n") ==
          "rotation.m_samples");
}

TEST_CASE("range checks name the field") {
    const std::string head = "[run]\ncommand = solve\n";
    CHECK(field_of(head + "[solver]\ntol = -1e-10\n") == "solver.tol");
    CHECK(field_of(head + "[solver]\ndamping = 1.5\n") == "solver.damping");
    CHECK(field_of(head + "[eos]\nnu = 5\n") == "eos.nu");
    CHECK(field_of(head + "[eos]\ngamma = 1.1\n") == "eos.gamma");
    CHECK(field_of(head + "[grid]\nn_zeta = 15\n") == "grid.n_zeta");
    CHECK(field_of(head + "[grid]\nl_max = 32\n") == "grid.l_max");
    CHECK(field_of(head + "[grid]\nn_r = 2.5\n") == "grid.n_r");
    CHECK(field_of(head + "[solver]\ntol = abc\n") == "solver.tol");
    CHECK(field_of(head + "[output]\nprefix = a/b\n") == "output.prefix");
    CHECK(field_of(head + "[eos]\nkind = white-dwarf\nnu = 1.5\n") == "eos.nu");
    CHECK(field_of(head + "[oblateness]\nbetas = 1e-3\n") == "oblateness.betas");
}

TEST_CASE("conversions") {
    const auto cfg = parse_config("[run]\ncommand = solve\n[eos]\ngamma = 1.5\nA = 2\n"
                                  "[rotation]\nkind = constant\nbeta = 0.01\n");
    const auto eos = make_eos(cfg.eos);
    CHECK(eos.gamma() == 1.5);
    CHECK(eos.A_const() == 2.0);
    const ScaleSet s = make_scale(eos, 1.0);
    const auto law = make_rotation_law(cfg.rotation, eos, s);
    CHECK(beta_of_omega(law.omega(), s, eos) == doctest::Approx(0.01).epsilon(1e-13));
    const auto so = make_solver_options(cfg.solver);
    CHECK(so.tol == cfg.solver.tol);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}
