#pragma once

#include "codyad/config.hpp"
#include "codyad/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace codyad {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitIo = 4 };

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out;
};

/// Dry run: prints one issue per line; exit 2 when any issue is found.
int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err);

/// build -> fit -> surface -> score; writes the full artifact set.
int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err);

/// Fits the none / time / space / space-time weight models and writes a four-row scores.csv.
int cmd_compare(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err);

/// Recomputes surface.csv from the draw CSVs in `draws_dir` (default: the output directory).
int cmd_surface(const std::string& config_path, const std::string& draws_dir, const CliOverrides& overrides,
                std::ostream& out, std::ostream& err);

struct AppendixACli {
    std::vector<std::uint64_t> seeds;
    AppendixAOptions options;
    std::string out_dir = "out";
};

/// Writes the appendix artifacts under <out>/sim/appendixA.
int cmd_simulate_appendix_a(const AppendixACli& args, std::ostream& out, std::ostream& err);

}  // namespace codyad
