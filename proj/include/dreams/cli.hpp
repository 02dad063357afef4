#ifndef DREAMS_CLI_HPP
#define DREAMS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dreams/report.hpp"

namespace dreams {

enum ExitCode : int { exit_ok = 0, exit_input_error = 2, exit_divergence = 3 };

/// Result of the data preparation shared by embed, sweep and metrics.
struct PreparedData {
    Dataset dataset;
    /// Matrix that is embedded and measured against (PCA-reduced when wider than pca_dims).
    DataMatrix embedded;
    std::vector<std::string> warnings;
};

/// Loads cfg.input and applies the optional PCA reduction.
PreparedData prepare_input(const RunConfig& cfg);

/// Runs one command. Writes artifacts under cfg.out and returns the exit code.
int cmd_gen(const RunConfig& cfg, std::ostream& out);
int cmd_embed(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_metrics(const RunConfig& cfg, std::ostream& out);

/// Parses `args` (without the program name) and dispatches. Library errors are
/// mapped to exit codes: 2 for configuration or input problems, 3 for divergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dreams

#endif // DREAMS_CLI_HPP
