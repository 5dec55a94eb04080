#include "lqgame/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lqgame/equilibrium.h"
#include "lqgame/errors.h"
#include "lqgame/filter.h"
#include "lqgame/montecarlo.h"
#include "lqgame/riccati.h"

namespace lqgame::cli {

namespace fs = std::filesystem;

namespace {

ProblemSpec load(const CommandOptions& opts) {
  ProblemSpec spec = opts.config ? load_spec_file(*opts.config) : paper_example();
  if (opts.horizon) spec.horizon = *opts.horizon;
  require_valid(spec);
  return spec;
}

// Maps library exceptions onto the exit-code contract.
CommandOutcome guarded(const std::function<CommandOutcome()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    return {kValidationFailure, {}, std::string("validation failed: ") + e.what()};
  } catch (const SpecParseError& e) {
    return {kValidationFailure, {}, std::string("config error: ") + e.what()};
  } catch (const SolverError& e) {
    return {kConvergenceFailure, {}, std::string("solver failed: ") + e.what()};
  } catch (const ConvergenceError& e) {
    return {kConvergenceFailure, {}, std::string("did not converge: ") + e.what()};
  }
}

class Artifacts {
 public:
  explicit Artifacts(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const std::string path = (dir_ / name).string();
    write_atomic(path, body);
    written_.push_back(path);
  }
  std::vector<std::string> take() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

void emit_matrix_columns(std::ostream& os, const std::string& name, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << name << '_' << i + 1 << j + 1;
}

void emit_matrix_values(std::ostream& os, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << m(i, j);
}

// One row per k with the listed matrix sequences flattened row-major.
void write_wide(std::ostream& os, const std::vector<std::pair<std::string, const std::vector<MatrixXd>*>>& cols,
                int rows) {
  os << 'k';
  for (const auto& [name, seq] : cols) emit_matrix_columns(os, name, seq->front());
  os << '\n';
  os.precision(17);
  for (int k = 0; k < rows; ++k) {
    os << k;
    for (const auto& [name, seq] : cols) emit_matrix_values(os, (*seq)[static_cast<size_t>(k)]);
    os << '\n';
  }
}

void write_gains(std::ostream& os, const RiccatiTrajectory& rt) {
  os << "k,gain,i,j,value\n";
  os.precision(17);
  for (int k = 0; k <= rt.horizon(); ++k)
    for (const auto& [name, K] : {std::pair{"K1", &rt.K1[k]}, std::pair{"K2", &rt.K2[k]}})
      for (Eigen::Index i = 0; i < K->rows(); ++i)
        for (Eigen::Index j = 0; j < K->cols(); ++j)
          os << k << ',' << name << ',' << i << ',' << j << ',' << (*K)(i, j) << '\n';
}

StrategyProfile select_profile(const std::string& name, const ProblemSpec& spec, const RiccatiTrajectory& rt) {
  const int m1 = spec.system.m1();
  if (name == "nash") return nash_profile(rt, m1);
  if (name == "symmetric") return symmetric_profile(rt, m1);
  if (name == "zero") return zero_profile(spec);
  throw ValidationError("unknown profile '" + name + "' (expected nash, symmetric or zero)");
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp + " for writing");
    body(os);
    os.flush();
    if (!os) throw Error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

ReferenceCosts load_reference_costs(const std::string& path) {
  std::ifstream is(path);
  if (!is) return {};
  const auto doc = nlohmann::json::parse(is, nullptr, false);
  ReferenceCosts ref;
  if (doc.is_discarded() || !doc.contains("reference_costs")) return ref;
  const auto& r = doc["reference_costs"];
  auto get = [&r](const char* key) -> std::optional<double> {
    if (r.contains(key) && r[key].is_number()) return r[key].get<double>();
    return std::nullopt;
  };
  ref.J1_sym = get("J1_sym");
  ref.J2_sym = get("J2_sym");
  ref.J1_asym = get("J1_asym");
  ref.J2_asym = get("J2_asym");
  return ref;
}

CommandOutcome cmd_solve(const CommandOptions& opts) {
  return guarded([&] {
    const ProblemSpec spec = load(opts);
    const AugmentedModel aug = augment(spec);
    const RiccatiTrajectory rt = backward(spec, aug);
    const CovarianceSchedule cov = covariance_forward(spec, aug, rt.K2);
    const CostReport asym = analytic_cost_asym(spec, rt, cov);
    const CostReport split = orthogonal_split_cost_asym(spec, rt, cov);

    Artifacts out(opts.out_dir);
    out.write("riccati.csv", [&](std::ostream& os) { write_riccati_csv(os, rt); });
    out.write("covariances.csv", [&](std::ostream& os) { write_covariance_csv(os, cov); });
    out.write("gains.csv", [&](std::ostream& os) { write_gains(os, rt); });
    out.write("costs.csv", [&](std::ostream& os) {
      auto rows = report_rows(asym, "asym_");
      for (auto& r : report_rows(split, "split_")) rows.push_back(std::move(r));
      write_name_value_csv(os, rows);
    });

    std::ostringstream msg;
    msg.precision(10);
    msg << "N=" << spec.horizon << " J1=" << asym.J1 << " J2=" << asym.J2;
    return CommandOutcome{kOk, out.take(), msg.str()};
  });
}

CommandOutcome cmd_steady(const CommandOptions& opts) {
  return guarded([&] {
    const ProblemSpec spec = load(opts);
    const ValidationReport report = validate(spec);
    if (!report.steady_state_ready()) {
      std::string failed;
      for (const auto* c : report.failures())
        if (c->severity == Severity::kWarning) failed += " " + c->name;
      return CommandOutcome{kValidationFailure, {}, "steady state needs stabilizability, detectability and observability of (A,C); failing:" + failed};
    }
    const AugmentedModel aug = augment(spec);
    SteadyOptions so;
    so.tol = opts.tol;
    so.max_iter = opts.max_iter;
    const SteadyRiccati sr = forward_steady(spec, aug, so);
    const SteadyCovariances sc = steady_covariances(spec, aug, sr.K2);
    const ClosedLoopSpectra rho = closed_loop_spectra(sr, spec, aug);

    Artifacts out(opts.out_dir);
    out.write("steady.csv", [&](std::ostream& os) {
      os << "name,i,j,value\n";
      os.precision(17);
      auto mat = [&os](const char* name, const MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index j = 0; j < m.cols(); ++j) os << name << ',' << i << ',' << j << ',' << m(i, j) << '\n';
      };
      mat("P1", sr.P1);
      mat("Phi1", sr.Phi1);
      mat("P2", sr.P2);
      mat("Phi2", sr.Phi2);
      mat("K1", sr.K1);
      mat("K2", sr.K2);
      mat("Sigma1", sc.Sigma1);
      mat("Sigma2", sc.Sigma2);
      os << "rho1,,," << rho.rho1 << '\n';
      os << "rho2,,," << rho.rho2 << '\n';
      os << "iterations,,," << sr.iterations << '\n';
      os << "residual,,," << sr.residual << '\n';
    });

    std::ostringstream msg;
    msg << "converged in " << sr.iterations << " iterations, residual " << sr.residual << ", rho1=" << rho.rho1
        << ", rho2=" << rho.rho2;
    return CommandOutcome{kOk, out.take(), msg.str()};
  });
}

CommandOutcome cmd_compare(const CommandOptions& opts) {
  return guarded([&] {
    const ProblemSpec spec = load(opts);
    const AugmentedModel aug = augment(spec);
    const RiccatiTrajectory rt = backward(spec, aug);
    const CovarianceSchedule cov = covariance_forward(spec, aug, rt.K2);
    const CostReport asym = analytic_cost_asym(spec, rt, cov);
    const CostReport sym = analytic_cost_sym(spec, rt, cov);
    const GapReport gap = gap_decomposition(spec, rt, cov);

    const int m1 = spec.system.m1();
    const SimulationSetup asym_setup = make_setup(spec, nash_profile(rt, m1), cov);
    const SimulationSetup sym_setup = make_setup(spec, symmetric_profile(rt, m1), cov);
    const CostEstimate mc_asym = estimate_costs(asym_setup, opts.runs, opts.seed, opts.threads);
    const CostEstimate mc_sym = estimate_costs(sym_setup, opts.runs, opts.seed, opts.threads);
    const MomentCosts ex_asym = moment_oracle(asym_setup);
    const MomentCosts ex_sym = moment_oracle(sym_setup);
    const ReferenceCosts ref = opts.config ? load_reference_costs(*opts.config) : ReferenceCosts{};

    Artifacts out(opts.out_dir);
    out.write("table1.csv", [&](std::ostream& os) {
      os << "quantity,analytic,mc_mean,mc_stderr,exact_moment,reference,delta_reference\n";
      os.precision(10);
      auto row = [&os](const char* name, double analytic, double mean, double se, double exact,
                       const std::optional<double>& r) {
        os << name << ',' << analytic << ',' << mean << ',' << se << ',' << exact << ',';
        if (r) os << *r << ',' << analytic - *r;
        else os << ',';
        os << '\n';
      };
      row("J1_sym", sym.J1, mc_sym.mean1, mc_sym.stderr1, ex_sym.J1, ref.J1_sym);
      row("J2_sym", sym.J2, mc_sym.mean2, mc_sym.stderr2, ex_sym.J2, ref.J2_sym);
      row("J1_asym", asym.J1, mc_asym.mean1, mc_asym.stderr1, ex_asym.J1, ref.J1_asym);
      row("J2_asym", asym.J2, mc_asym.mean2, mc_asym.stderr2, ex_asym.J2, ref.J2_asym);
    });
    out.write("gap.csv", [&](std::ostream& os) { write_name_value_csv(os, gap.terms()); });

    const double tol = 1e-6 * (1.0 + std::abs(asym.J1));
    const bool ordered = asym.J1 - sym.J1 >= -tol;
    std::ostringstream msg;
    msg.precision(10);
    msg << "J1 asym " << asym.J1 << " vs sym " << sym.J1 << "; J2 asym " << asym.J2 << " vs sym " << sym.J2;
    if (!ordered) msg << "; ordering violated";
    return CommandOutcome{ordered ? kOk : kVerificationFailure, out.take(), msg.str()};
  });
}

CommandOutcome cmd_verify(const CommandOptions& opts) {
  return guarded([&] {
    const ProblemSpec spec = load(opts);
    const AugmentedModel aug = augment(spec);
    const RiccatiTrajectory rt = backward(spec, aug);
    const CovarianceSchedule cov = covariance_forward(spec, aug, rt.K2);
    const int m1 = spec.system.m1();

    struct Check {
      std::string name;
      double value, threshold;
      bool pass;
    };
    std::vector<Check> checks;

    double min_gap = 0.0;
    for (const auto& r : covariance_gap(cov)) min_gap = std::min(min_gap, r.min_eig_gap);
    checks.push_back({"covariance_monotonicity", min_gap, -1e-8, min_gap >= -1e-8});

    const SimulationSetup nominal = make_setup(spec, nash_profile(rt, m1), cov);
    const OrthogonalityReport orth = orthogonality_stats(nominal, opts.runs, opts.seed, opts.threads);
    checks.push_back({"orthogonality", orth.worst_normalized(), orth.threshold, orth.passed()});

    const StrategyProfile candidate = select_profile(opts.profile, spec, rt);
    const SimulationSetup cert_setup = make_setup(spec, candidate);
    const NashCertificate cert = best_response_certificate(cert_setup, {1e-2}, opts.runs, opts.seed, opts.threads);
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& d : cert.deviations) worst_margin = std::min(worst_margin, d.delta_J + 3.0 * d.stderr);
    checks.push_back({"nash_certificate", worst_margin, 0.0, cert.overall_pass});

    const CostReport asym = analytic_cost_asym(spec, rt, cov);
    const CostReport sym = analytic_cost_sym(spec, rt, cov);
    const MomentCosts ex_asym = moment_oracle(nominal);
    const MomentCosts ex_sym = moment_oracle(make_setup(spec, symmetric_profile(rt, m1), cov));
    const double d_asym = std::max(rel_diff(asym.J1, ex_asym.J1), rel_diff(asym.J2, ex_asym.J2));
    const double d_sym = std::max(rel_diff(sym.J1, ex_sym.J1), rel_diff(sym.J2, ex_sym.J2));
    checks.push_back({"oracle_agreement_asym", d_asym, 1e-6, d_asym <= 1e-6});
    checks.push_back({"oracle_agreement_sym", d_sym, 1e-6, d_sym <= 1e-6});

    Artifacts out(opts.out_dir);
    out.write("verify.csv", [&](std::ostream& os) {
      os << "check,value,threshold,pass\n";
      os.precision(10);
      for (const auto& c : checks)
        os << c.name << ',' << c.value << ',' << c.threshold << ',' << (c.pass ? "true" : "false") << '\n';
    });
    out.write("certificate.csv", [&](std::ostream& os) { write_certificate_csv(os, cert); });

    bool all = true;
    std::string failed;
    for (const auto& c : checks)
      if (!c.pass) {
        all = false;
        failed += " " + c.name;
      }
    return CommandOutcome{all ? kOk : kVerificationFailure, out.take(),
                          all ? "all checks passed" : "failed:" + failed};
  });
}

CommandOutcome cmd_figures(const CommandOptions& opts) {
  return guarded([&] {
    const ProblemSpec spec = load(opts);
    const AugmentedModel aug = augment(spec);
    const RiccatiTrajectory rt = backward(spec, aug);
    const CovarianceSchedule cov = covariance_forward(spec, aug, rt.K2);
    const int N = spec.horizon;

    Artifacts out(opts.out_dir);
    out.write("fig_riccati1.csv", [&](std::ostream& os) { write_wide(os, {{"P1", &rt.P1}, {"Phi1", &rt.Phi1}}, N + 2); });
    out.write("fig_riccati2.csv", [&](std::ostream& os) { write_wide(os, {{"P2", &rt.P2}, {"Phi2", &rt.Phi2}}, N + 2); });
    out.write("fig_gains.csv", [&](std::ostream& os) { write_wide(os, {{"K1", &rt.K1}, {"K2", &rt.K2}}, N + 1); });
    out.write("fig_trajectory.csv", [&](std::ostream& os) {
      const SimulationSetup setup = make_setup(spec, select_profile(opts.profile, spec, rt), cov);
      write_trajectory_csv(os, simulate(setup, opts.seed));
    });
    out.write("fig_sigma_trace.csv", [&](std::ostream& os) {
      os << "k,tr_sigma1,tr_sigma2\n";
      os.precision(17);
      for (const auto& r : covariance_gap(cov)) os << r.k << ',' << r.trace1 << ',' << r.trace2 << '\n';
    });
    return CommandOutcome{kOk, out.take(), "wrote figure data for N=" + std::to_string(N)};
  });
}

}  // namespace lqgame::cli
