#include <iostream>

#include "CLI11.hpp"
#include "lqgame/cli.h"

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 ok, 1 validation failure, 2 solver/convergence failure, 3 verification failure.";

void add_common(CLI::App* cmd, lqgame::cli::CommandOptions& o) {
  cmd->add_option("--config", o.config, "Model JSON (default: built-in two-state example)")->check(CLI::ExistingFile);
  cmd->add_option("--horizon", o.horizon, "Override the horizon N")->check(CLI::NonNegativeNumber);
}

void add_out(CLI::App* cmd, lqgame::cli::CommandOptions& o) {
  cmd->add_option("--out", o.out_dir, "Output directory (created if missing)")->capture_default_str();
}

void add_mc(CLI::App* cmd, lqgame::cli::CommandOptions& o) {
  cmd->add_option("--runs", o.runs, "Monte Carlo runs M")->check(CLI::Range(2, 100000000))->capture_default_str();
  cmd->add_option("--seed", o.seed, "Base seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores; results do not depend on it)")
      ->capture_default_str();
}

void add_profile(CLI::App* cmd, lqgame::cli::CommandOptions& o) {
  cmd->add_option("--profile", o.profile, "Strategy profile under test")
      ->check(CLI::IsMember({"nash", "symmetric", "zero"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace lqgame::cli;
  CLI::App app{"Two-player LQG game solver with one-step-delayed asymmetric information"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  CommandOptions o;
  CommandOutcome (*run)(const CommandOptions&) = nullptr;

  auto* solve = app.add_subcommand("solve", "Riccati, covariance, gain and analytic cost tables");
  add_common(solve, o);
  add_out(solve, o);
  solve->footer(kExitCodes);
  solve->callback([&] { run = cmd_solve; });

  auto* steady = app.add_subcommand("steady", "Steady-state coupled Riccati and filter fixed points");
  add_common(steady, o);
  add_out(steady, o);
  steady->add_option("--tol", o.tol, "Relative Frobenius tolerance")->capture_default_str();
  steady->add_option("--max-iter", o.max_iter, "Iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  steady->footer(kExitCodes);
  steady->callback([&] { run = cmd_steady; });

  auto* compare = app.add_subcommand("compare", "Symmetric vs asymmetric costs (analytic, Monte Carlo, exact) and gap terms");
  add_common(compare, o);
  add_out(compare, o);
  add_mc(compare, o);
  compare->footer(kExitCodes);
  compare->callback([&] { run = cmd_compare; });

  auto* verify = app.add_subcommand("verify", "Covariance ordering, orthogonality, Nash certificate, oracle agreement");
  add_common(verify, o);
  add_out(verify, o);
  add_mc(verify, o);
  add_profile(verify, o);
  verify->footer(kExitCodes);
  verify->callback([&] { run = cmd_verify; });

  auto* figures = app.add_subcommand("figures", "Plot-ready CSVs: Riccati matrices, gains, a trajectory, covariance traces");
  add_common(figures, o);
  add_out(figures, o);
  figures->add_option("--seed", o.seed, "Seed of the plotted trajectory")->capture_default_str();
  add_profile(figures, o);
  figures->footer(kExitCodes);
  figures->callback([&] { run = cmd_figures; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationFailure;
  }

  CommandOutcome outcome;
  try {
    outcome = run(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  for (const auto& path : outcome.artifacts) std::cout << "wrote " << path << '\n';
  (outcome.exit_code == kOk ? std::cout : std::cerr) << outcome.summary << '\n';
  return outcome.exit_code;
}
