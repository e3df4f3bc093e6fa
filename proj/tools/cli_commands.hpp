#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fqr::cli {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    int threads = 0;  // 0 = leave the OpenMP default
    std::optional<std::uint64_t> seed_override;
};

/// Dispatch one subcommand. Returns the process exit status: 0 iff every
/// output file was fully written; on failure the partial outputs are removed
/// and a machine-readable error JSON is printed to stdout.
int run_command(const std::string& command, const GlobalOptions& options);

int run_fit(const GlobalOptions& options);
int run_predict(const GlobalOptions& options);
int run_select(const GlobalOptions& options);
int run_simulate(const GlobalOptions& options);

}  // namespace fqr::cli
