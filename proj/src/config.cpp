#include "rotstar/config.hpp"

#include <algorithm>
#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "rotstar/error.hpp"
#include "rotstar/io.hpp"

namespace rotstar {

namespace {

using io::Json;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"command"}},
        {"eos", {"kind", "nu", "gamma", "A", "B", "c", "u_O", "G"}},
        {"rotation",
         {"kind", "beta", "omega", "varpi_samples", "omega_samples", "m_samples", "j_samples",
          "dj_samples"}},
        {"grid", {"n_r", "n_zeta", "l_max", "r_inf"}},
        {"solver",
         {"tol", "max_iter", "damping", "hl_threshold", "newton", "check_hl", "beta_schedule"}},
        {"mass", {"rho_bar", "omega2_schedule", "bracket_factor", "rel_tol"}},
        {"oblateness", {"betas"}},
        {"output", {"prefix", "formats"}},
    };
    return s;
}

/// One configuration value: raw text from INI or a JSON value.
using Raw = std::variant<std::string, nlohmann::json>;

class Source {
public:
    std::map<std::string, Raw> values;  ///< keyed by "section.key"

    bool has(const std::string& f) const { return values.count(f) != 0; }

    std::optional<double> number(const std::string& f) const {
        auto it = values.find(f);
        if (it == values.end()) return std::nullopt;
        double v = 0.0;
        if (auto s = std::get_if<std::string>(&it->second)) {
            v = parse_double(f, *s);
        } else {
            const auto& j = std::get<nlohmann::json>(it->second);
            if (!j.is_number()) throw ConfigError(f, f + ": expected a number");
            v = j.get<double>();
        }
        if (!std::isfinite(v)) throw ConfigError(f, f + ": value must be finite");
        return v;
    }

    std::optional<int> integer(const std::string& f) const {
        auto v = number(f);
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || std::abs(*v) > 1e9)
            throw ConfigError(f, f + ": expected an integer");
        return static_cast<int>(*v);
    }

    std::optional<bool> boolean(const std::string& f) const {
        auto it = values.find(f);
        if (it == values.end()) return std::nullopt;
        if (auto s = std::get_if<std::string>(&it->second)) {
            if (*s == "true") return true;
            if (*s == "false") return false;
        } else {
            const auto& j = std::get<nlohmann::json>(it->second);
            if (j.is_boolean()) return j.get<bool>();
        }
        throw ConfigError(f, f + ": expected true or false");
    }

    std::optional<std::string> text(const std::string& f) const {
        auto it = values.find(f);
        if (it == values.end()) return std::nullopt;
        if (auto s = std::get_if<std::string>(&it->second)) return *s;
        const auto& j = std::get<nlohmann::json>(it->second);
        if (!j.is_string()) throw ConfigError(f, f + ": expected a string");
        return j.get<std::string>();
    }

    std::optional<std::vector<std::string>> words(const std::string& f) const {
        auto it = values.find(f);
        if (it == values.end()) return std::nullopt;
        std::vector<std::string> out;
        if (auto s = std::get_if<std::string>(&it->second)) {
            for (auto& item : split(*s)) out.push_back(item);
        } else {
            const auto& j = std::get<nlohmann::json>(it->second);
            if (j.is_string()) {
                out.push_back(j.get<std::string>());
            } else if (j.is_array()) {
                for (const auto& e : j) {
                    if (!e.is_string()) throw ConfigError(f, f + ": expected strings");
                    out.push_back(e.get<std::string>());
                }
            } else {
                throw ConfigError(f, f + ": expected a list of strings");
            }
        }
        return out;
    }

    std::optional<std::vector<double>> list(const std::string& f) const {
        auto it = values.find(f);
        if (it == values.end()) return std::nullopt;
        std::vector<double> out;
        if (auto s = std::get_if<std::string>(&it->second)) {
            for (auto& item : split(*s)) out.push_back(parse_double(f, item));
        } else {
            const auto& j = std::get<nlohmann::json>(it->second);
            if (j.is_number()) {
                out.push_back(j.get<double>());
            } else if (j.is_array()) {
                for (const auto& e : j) {
                    if (!e.is_number()) throw ConfigError(f, f + ": expected numbers");
                    out.push_back(e.get<double>());
                }
            } else {
                throw ConfigError(f, f + ": expected a list of numbers");
            }
        }
        for (double v : out)
            if (!std::isfinite(v)) throw ConfigError(f, f + ": values must be finite");
        return out;
    }

private:
    static double parse_double(const std::string& f, const std::string& s) {
        double v = 0.0;
        const char* b = s.data();
        const char* e = s.data() + s.size();
        if (b != e && *b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e || b == e)
            throw ConfigError(f, f + ": cannot parse '" + s + "' as a number");
        return v;
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            boost::algorithm::trim(item);
            out.push_back(item);
        }
        if (out.size() == 1 && out[0].empty()) out.clear();
        return out;
    }
};

void check_keys(const std::string& section, const std::string& key) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError(section, "unknown section '" + section + "'");
    if (!it->second.count(key))
        throw ConfigError(section + "." + key, "unknown key '" + section + "." + key + "'");
}

Source from_ini(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", fmt::format("malformed INI: {} (line {})", e.message(), e.line()));
    }
    Source src;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(section, "key '" + section + "' is outside a section");
        if (!schema().count(section))
            throw ConfigError(section, "unknown section '" + section + "'");
        for (const auto& [key, value] : body) {
            check_keys(section, key);
            src.values.emplace(section + "." + key, value.get_value<std::string>());
        }
    }
    return src;
}

Source from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("", "JSON config must be an object of sections");
    Source src;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!schema().count(it.key()))
            throw ConfigError(it.key(), "unknown section '" + it.key() + "'");
        if (!it.value().is_object())
            throw ConfigError(it.key(), "section '" + it.key() + "' must be an object");
        for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
            check_keys(it.key(), kv.key());
            src.values.emplace(it.key() + "." + kv.key(), kv.value());
        }
    }
    return src;
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field, field + ": " + what);
}

Command parse_command(const std::string& s) {
    static const std::map<std::string, Command> m{
        {"lane-emden", Command::LaneEmden},   {"solve", Command::Solve},
        {"oblateness", Command::Oblateness},  {"mass-curve", Command::MassCurve},
        {"kernel-check", Command::KernelCheck}, {"hl-check", Command::HLCheck}};
    auto it = m.find(s);
    if (it == m.end())
        throw ConfigError("run.command", "run.command: unknown command '" + s + "'");
    return it->second;
}

RunConfig build(const Source& src) {
    RunConfig c;
    auto cmd = src.text("run.command");
    require(cmd.has_value(), "run.command", "missing");
    c.command = parse_command(*cmd);

    auto& e = c.eos;
    if (auto v = src.text("eos.kind")) e.kind = *v;
    require(e.kind == "polytrope" || e.kind == "white-dwarf", "eos.kind",
            "must be polytrope or white-dwarf");
    e.nu = src.number("eos.nu");
    e.gamma = src.number("eos.gamma");
    if (auto v = src.number("eos.A")) e.A = *v;
    if (auto v = src.number("eos.B")) e.B = *v;
    if (auto v = src.number("eos.c")) e.c = *v;
    if (auto v = src.number("eos.u_O")) e.u_O = *v;
    if (auto v = src.number("eos.G")) e.G = *v;
    require(e.A > 0.0, "eos.A", "must be positive");
    require(e.u_O > 0.0, "eos.u_O", "must be positive");
    require(e.G > 0.0, "eos.G", "must be positive");
    if (e.kind == "polytrope") {
        require(!src.has("eos.B"), "eos.B", "only used by the white-dwarf law");
        require(!src.has("eos.c"), "eos.c", "only used by the white-dwarf law");
        require(!(e.nu && e.gamma), "eos.gamma", "give nu or gamma, not both");
        if (!e.nu && !e.gamma) e.nu = 1.5;
        if (e.gamma) {
            require(*e.gamma > 6.0 / 5.0 && *e.gamma <= 2.0, "eos.gamma", "must lie in (6/5, 2]");
            e.nu = 1.0 / (*e.gamma - 1.0);
        } else {
            require(*e.nu >= 1.0 && *e.nu < 5.0, "eos.nu", "must lie in [1, 5)");
            e.gamma = 1.0 + 1.0 / *e.nu;
        }
    } else {
        require(!e.nu, "eos.nu", "fixed at 1.5 for the white-dwarf law");
        require(!e.gamma, "eos.gamma", "fixed at 5/3 for the white-dwarf law");
        require(e.B > 0.0, "eos.B", "must be positive");
        require(e.c > 0.0, "eos.c", "must be positive");
        e.nu = 1.5;
        e.gamma = 5.0 / 3.0;
    }

    auto& r = c.rotation;
    if (auto v = src.text("rotation.kind")) r.kind = *v;
    const std::set<std::string> kinds{"none", "constant", "differential", "angular-momentum"};
    require(kinds.count(r.kind) != 0, "rotation.kind",
            "must be none, constant, differential or angular-momentum");
    const std::map<std::string, std::set<std::string>> uses{
        {"none", {}},
        {"constant", {"beta", "omega"}},
        {"differential", {"varpi_samples", "omega_samples"}},
        {"angular-momentum", {"m_samples", "j_samples", "dj_samples"}}};
    for (const auto& key : schema().at("rotation")) {
        if (key == "kind") continue;
        require(!src.has("rotation." + key) || uses.at(r.kind).count(key), "rotation." + key,
                "not used by rotation kind " + r.kind);
    }
    r.beta = src.number("rotation.beta");
    r.omega = src.number("rotation.omega");
    if (r.kind == "constant") {
        require(r.beta.has_value() != r.omega.has_value(), "rotation.beta",
                "give exactly one of beta and omega");
        if (r.beta) require(*r.beta >= 0.0, "rotation.beta", "must be nonnegative");
        if (r.omega) require(*r.omega >= 0.0, "rotation.omega", "must be nonnegative");
    }
    if (auto v = src.list("rotation.varpi_samples")) r.varpi_samples = *v;
    if (auto v = src.list("rotation.omega_samples")) r.omega_samples = *v;
    if (auto v = src.list("rotation.m_samples")) r.m_samples = *v;
    if (auto v = src.list("rotation.j_samples")) r.j_samples = *v;
    if (auto v = src.list("rotation.dj_samples")) r.dj_samples = *v;
    if (r.kind == "differential") {
        require(r.varpi_samples.size() >= 4, "rotation.varpi_samples", "need at least 4 samples");
        require(r.omega_samples.size() == r.varpi_samples.size(), "rotation.omega_samples",
                "must match varpi_samples in length");
        for (double v : r.omega_samples)
            require(v >= 0.0, "rotation.omega_samples", "must be nonnegative");
    }
    if (r.kind == "angular-momentum") {
        require(r.m_samples.size() >= 4, "rotation.m_samples", "need at least 4 samples");
        require(r.j_samples.size() == r.m_samples.size(), "rotation.j_samples",
                "must match m_samples in length");
        require(r.dj_samples.empty() || r.dj_samples.size() == r.m_samples.size(),
                "rotation.dj_samples", "must match m_samples in length");
        require(r.m_samples[0] == 0.0, "rotation.m_samples", "must start at 0");
        require(r.j_samples[0] == 0.0, "rotation.j_samples", "must start at 0");
    }

    auto& g = c.grid;
    if (auto v = src.integer("grid.n_r")) g.n_r = *v;
    if (auto v = src.integer("grid.n_zeta")) g.n_zeta = *v;
    if (auto v = src.integer("grid.l_max")) g.l_max = *v;
    if (auto v = src.number("grid.r_inf")) g.r_inf = *v;
    require(g.n_r >= 16 && g.n_r <= 8192, "grid.n_r", "must lie in [16, 8192]");
    require(g.n_zeta >= 2 && g.n_zeta % 2 == 0 && g.n_zeta <= 512, "grid.n_zeta",
            "must be even and in [2, 512]");
    require(g.l_max >= 0 && g.l_max % 2 == 0 && g.l_max < g.n_zeta, "grid.l_max",
            "must be even, nonnegative and below n_zeta");
    require(g.r_inf >= 0.0, "grid.r_inf", "must be nonnegative (0 selects 1.5 xi1)");

    auto& s = c.solver;
    if (auto v = src.number("solver.tol")) s.tol = *v;
    if (auto v = src.integer("solver.max_iter")) s.max_iter = *v;
    if (auto v = src.number("solver.damping")) s.damping = *v;
    if (auto v = src.number("solver.hl_threshold")) s.hl_threshold = *v;
    if (auto v = src.boolean("solver.newton")) s.newton = *v;
    if (auto v = src.boolean("solver.check_hl")) s.check_hl = *v;
    if (auto v = src.list("solver.beta_schedule")) s.beta_schedule = *v;
    require(s.tol > 0.0, "solver.tol", "must be positive");
    require(s.max_iter >= 1, "solver.max_iter", "must be at least 1");
    require(s.damping > 0.0 && s.damping <= 1.0, "solver.damping", "must lie in (0, 1]");
    require(s.hl_threshold > 0.0, "solver.hl_threshold", "must be positive");
    for (double b : s.beta_schedule) require(b >= 0.0, "solver.beta_schedule", "must be nonnegative");
    if (!s.beta_schedule.empty())
        require(r.kind == "none" || (r.kind == "constant" && r.beta), "solver.beta_schedule",
                "applies to constant rotation given by beta");

    auto& m = c.mass;
    if (auto v = src.number("mass.rho_bar")) m.rho_bar = *v;
    if (auto v = src.list("mass.omega2_schedule")) m.omega2_schedule = *v;
    if (auto v = src.number("mass.bracket_factor")) m.bracket_factor = *v;
    if (auto v = src.number("mass.rel_tol")) m.rel_tol = *v;
    require(m.rho_bar > 0.0, "mass.rho_bar", "must be positive");
    require(!m.omega2_schedule.empty(), "mass.omega2_schedule", "must not be empty");
    for (double w : m.omega2_schedule)
        require(w >= 0.0, "mass.omega2_schedule", "must be nonnegative");
    require(m.bracket_factor > 1.0, "mass.bracket_factor", "must exceed 1");
    require(m.rel_tol > 0.0 && m.rel_tol <= 1e-6, "mass.rel_tol", "must lie in (0, 1e-6]");

    if (auto v = src.list("oblateness.betas")) c.oblateness.betas = *v;
    require(c.oblateness.betas.size() >= 2, "oblateness.betas", "need at least two values");
    for (double b : c.oblateness.betas) require(b > 0.0, "oblateness.betas", "must be positive");

    if (auto v = src.text("output.prefix")) c.output.prefix = *v;
    require(c.output.prefix.find('/') == std::string::npos, "output.prefix",
            "must not contain '/'");
    if (auto v = src.words("output.formats")) {
        c.output.json = c.output.csv = false;
        for (const auto& w : *v) {
            require(w == "json" || w == "csv", "output.formats", "entries must be json or csv");
            (w == "json" ? c.output.json : c.output.csv) = true;
        }
    }
    return c;
}

}  // namespace

std::string command_name(Command c) {
    switch (c) {
    case Command::LaneEmden: return "lane-emden";
    case Command::Solve: return "solve";
    case Command::Oblateness: return "oblateness";
    case Command::MassCurve: return "mass-curve";
    case Command::KernelCheck: return "kernel-check";
    case Command::HLCheck: return "hl-check";
    }
    return "unknown";
}

RunConfig parse_config(const std::string& text, const std::string& name) {
    const std::string ext = std::filesystem::path(name).extension().string();
    bool json = ext == ".json";
    if (ext != ".json" && ext != ".ini") {
        const auto p = text.find_first_not_of(" \t\r\n");
        json = p != std::string::npos && text[p] == '{';
    }
    return build(json ? from_json(text) : from_ini(text));
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const IOError&) {
        throw ConfigError("", "cannot read config file " + path);
    }
    return parse_config(text, path);
}

std::string canonical_config(const RunConfig& c) {
    nlohmann::json j;
    j["run"]["command"] = command_name(c.command);
    j["eos"] = {{"kind", c.eos.kind}, {"nu", *c.eos.nu},   {"gamma", *c.eos.gamma},
                {"A", c.eos.A},       {"u_O", c.eos.u_O}, {"G", c.eos.G}};
    if (c.eos.kind == "white-dwarf") {
        j["eos"]["B"] = c.eos.B;
        j["eos"]["c"] = c.eos.c;
    }
    auto& r = j["rotation"];
    r["kind"] = c.rotation.kind;
    if (c.rotation.beta) r["beta"] = *c.rotation.beta;
    if (c.rotation.omega) r["omega"] = *c.rotation.omega;
    if (c.rotation.kind == "differential") {
        r["varpi_samples"] = c.rotation.varpi_samples;
        r["omega_samples"] = c.rotation.omega_samples;
    }
    if (c.rotation.kind == "angular-momentum") {
        r["m_samples"] = c.rotation.m_samples;
        r["j_samples"] = c.rotation.j_samples;
        r["dj_samples"] = c.rotation.dj_samples;
    }
    j["grid"] = {{"n_r", c.grid.n_r},
                 {"n_zeta", c.grid.n_zeta},
                 {"l_max", c.grid.l_max},
                 {"r_inf", c.grid.r_inf}};
    j["solver"] = {{"tol", c.solver.tol},
                   {"max_iter", c.solver.max_iter},
                   {"damping", c.solver.damping},
                   {"hl_threshold", c.solver.hl_threshold},
                   {"newton", c.solver.newton},
                   {"check_hl", c.solver.check_hl},
                   {"beta_schedule", c.solver.beta_schedule}};
    j["mass"] = {{"rho_bar", c.mass.rho_bar},
                 {"omega2_schedule", c.mass.omega2_schedule},
                 {"bracket_factor", c.mass.bracket_factor},
                 {"rel_tol", c.mass.rel_tol}};
    j["oblateness"]["betas"] = c.oblateness.betas;
    std::vector<std::string> formats;
    if (c.output.csv) formats.push_back("csv");
    if (c.output.json) formats.push_back("json");
    j["output"] = {{"prefix", c.output.prefix}, {"formats", formats}};
    return io::dump_json(io::Json::parse(j.dump()));
}

EquationOfState make_eos(const EosConfig& c) {
    try {
        if (c.kind == "white-dwarf") return EquationOfState::white_dwarf(c.A, c.B, c.c);
        return EquationOfState::polytrope_from_nu(*c.nu, c.A);
    } catch (const InvalidArgument& e) {
        throw ConfigError("eos", std::string("eos: ") + e.what());
    }
}

SolverOptions make_solver_options(const SolverConfig& c) {
    SolverOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.newton = c.newton;
    o.damping = c.damping;
    o.hl_threshold = c.hl_threshold;
    o.check_hl = c.check_hl;
    return o;
}

RotationLaw make_rotation_law(const RotationConfig& c, const EquationOfState& eos,
                              const ScaleSet& scale) {
    try {
        if (c.kind == "none") return RotationLaw::constant(0.0);
        if (c.kind == "constant") {
            if (c.omega) return RotationLaw::constant(*c.omega);
            return RotationLaw::constant(std::sqrt(omega2_of_beta(*c.beta, scale, eos)));
        }
        if (c.kind == "differential")
            return RotationLaw::differential_samples(c.varpi_samples, c.omega_samples);
        return RotationLaw::angular_momentum_samples(c.m_samples, c.j_samples, c.dj_samples);
    } catch (const InvalidArgument& e) {
        throw ConfigError("rotation", std::string("rotation: ") + e.what());
    }
}

}  // namespace rotstar
