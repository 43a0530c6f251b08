#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "rotstar/config.hpp"
#include "rotstar/io.hpp"

namespace rotstar {

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int jobs = 1;
    bool verbose = false;
    std::string config_text;  ///< raw file contents, hashed into the manifest
};

struct RunResult {
    std::vector<std::string> files;  ///< written files, manifest last
    io::Json summary;                ///< the main JSON report
};

/// Executes the configured command and writes its outputs and manifest.json.
RunResult run(const RunConfig& cfg, const RunOptions& opt);

/// {"status": "error", "kind", "field", "message"} for any exception.
io::Json error_report(const std::exception& e);
/// 2 for configuration errors, 4 for I/O, 3 for everything else.
int exit_code(const std::exception& e);

}  // namespace rotstar
