#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqgame/model.h"

namespace lqgame::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kConvergenceFailure = 2, kVerificationFailure = 3 };

struct CommandOutcome {
  int exit_code = kOk;
  std::vector<std::string> artifacts;  // fully written files only
  std::string summary;
};

struct CommandOptions {
  std::optional<std::string> config;  // built-in two-state example when empty
  std::string out_dir = ".";
  std::optional<int> horizon;
  int runs = 10000;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  int max_iter = 2000;
  std::string profile = "nash";  // nash | symmetric | zero
  int threads = 0;
};

// Published cost values optionally carried by a config under "reference_costs"
// ({"J1_sym", "J2_sym", "J1_asym", "J2_asym"}); printed next to computed ones.
struct ReferenceCosts {
  std::optional<double> J1_sym, J2_sym, J1_asym, J2_asym;
};

ReferenceCosts load_reference_costs(const std::string& path);

CommandOutcome cmd_solve(const CommandOptions& opts);
CommandOutcome cmd_steady(const CommandOptions& opts);
CommandOutcome cmd_compare(const CommandOptions& opts);
CommandOutcome cmd_verify(const CommandOptions& opts);
CommandOutcome cmd_figures(const CommandOptions& opts);

// Writes through `path + ".tmp"` and renames on success.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& body);

}  // namespace lqgame::cli
