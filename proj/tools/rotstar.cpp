#include <CLI11.hpp>
#include <fmt/format.h>

#include "rotstar/commands.hpp"
#include "rotstar/error.hpp"

namespace {

void print_summary(const rotstar::io::Json& j, const std::string& indent = "  ") {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (v.is_object()) {
            fmt::print("{}{}:\n", indent, it.key());
            print_summary(v, indent + "  ");
        } else if (v.is_number_float()) {
            fmt::print("{}{} = {:.10g}\n", indent, it.key(), v.get<double>());
        } else if (!v.is_array()) {
            fmt::print("{}{} = {}\n", indent, it.key(), v.dump());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotating axisymmetric stellar equilibria"};
    std::string config_path;
    std::string out_dir = ".";
    int jobs = 1;
    bool verbose = false;
    app.add_option("--config", config_path, "Run configuration (INI or JSON)")->required();
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 1024));
    app.add_flag("--verbose", verbose, "Progress messages on stderr");
    CLI11_PARSE(app, argc, argv);

    rotstar::RunOptions opt;
    opt.out_dir = out_dir;
    opt.jobs = jobs;
    opt.verbose = verbose;
    try {
        const rotstar::RunConfig cfg = rotstar::load_config(config_path);
        opt.config_text = rotstar::io::read_file(config_path);
        const rotstar::RunResult res = rotstar::run(cfg, opt);
        fmt::print("{}: ok\n", rotstar::command_name(cfg.command));
        print_summary(res.summary);
        fmt::print("  files:");
        for (const auto& f : res.files) fmt::print(" {}", f);
        fmt::print("\n");
        return 0;
    } catch (const std::exception& e) {
        const auto report = rotstar::error_report(e);
        fmt::print(stderr, "{}", rotstar::io::dump_json(report));
        try {
            if (std::filesystem::is_directory(opt.out_dir))
                rotstar::io::write_atomic(opt.out_dir / "error.json", rotstar::io::dump_json(report));
        } catch (const std::exception&) {
        }
        return rotstar::exit_code(e);
    }
}
