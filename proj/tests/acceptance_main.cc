// Acceptance suite: one PASS/FAIL line per criterion, details indented above it.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "lqgame/cli.h"
#include "lqgame/equilibrium.h"
#include "lqgame/montecarlo.h"
#include "support/instances.h"

using namespace lqgame;

namespace {

constexpr int kRandomInstances = 100;

struct Solved {
  ProblemSpec spec;
  AugmentedModel aug;
  RiccatiTrajectory rt;
  CovarianceSchedule cov;
};

Solved solve(const ProblemSpec& spec) {
  Solved s{spec, augment(spec), {}, {}};
  s.rt = backward(spec, s.aug);
  s.cov = covariance_forward(spec, s.aug, s.rt.K2);
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool steady_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  ProblemSpec spec = paper_example();
  const auto aug = augment(spec);
  const SteadyRiccati sr = forward_steady(spec, aug);
  spec.horizon = 500;
  const RiccatiTrajectory rt = backward(spec, aug);
  const double d = std::max({(rt.P1[0] - sr.P1).norm(), (rt.Phi1[0] - sr.Phi1).norm(), (rt.P2[0] - sr.P2).norm(),
                             (rt.Phi2[0] - sr.Phi2).norm(), (rt.K1[0] - sr.K1).norm(), (rt.K2[0] - sr.K2).norm()});
  const double secs = seconds_since(t0);
  detail("iterations=%d residual=%.3e max|backward(N=500)_0 - fixed point|=%.3e runtime=%.2fs", sr.iterations,
         sr.residual, d, secs);
  return sr.residual < 1e-10 && sr.iterations <= 2000 && d < 1e-6 && secs < 5.0;
}

bool covariance_monotonicity() {
  auto min_gap = [](const CovarianceSchedule& cov) {
    double m = 0.0;
    for (const auto& r : covariance_gap(cov)) m = std::min(m, r.min_eig_gap);
    return m;
  };
  const Solved ex = solve(paper_example());
  const double ex_gap = min_gap(ex.cov);
  bool trace_positive = true;
  for (const auto& r : covariance_gap(ex.cov))
    if (r.k >= 1 && !(r.trace1 - r.trace2 > 0.0)) trace_positive = false;
  double worst = 0.0;
  for (int i = 0; i < kRandomInstances; ++i) worst = std::min(worst, min_gap(solve(testing::random_instance(1000 + i)).cov));
  detail("example min eig gap=%.3e, trace gap > 0 for k>=1: %s; worst over %d random instances=%.3e", ex_gap,
         trace_positive ? "yes" : "no", kRandomInstances, worst);
  return ex_gap >= -1e-8 && worst >= -1e-8 && trace_positive;
}

bool cost_ordering() {
  auto margin = [](const Solved& s) {
    const double a = analytic_cost_asym(s.spec, s.rt, s.cov).J1;
    const double b = analytic_cost_sym(s.spec, s.rt, s.cov).J1;
    return (a - b) / (1.0 + std::abs(a));
  };
  auto terms_ok = [](const Solved& s) {
    const GapReport g = gap_decomposition(s.spec, s.rt, s.cov);
    const double floor = -1e-8 * (1.0 + std::abs(g.sum));
    return g.initial_term >= floor && g.q1_term >= floor && g.u_term >= floor && g.pred_term >= floor &&
           g.curr_term >= floor;
  };
  const Solved ex = solve(paper_example());
  const double ex_margin = margin(ex);
  int ordered = 0, material = 0, bad_terms = terms_ok(ex) ? 0 : 1, exact_ordered = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kRandomInstances; ++i) {
    const Solved s = solve(testing::random_instance(1000 + i));
    const double m = margin(s);
    worst = std::min(worst, m);
    if (m >= -1e-6) ++ordered;
    if (m < -1e-4) ++material;
    if (!terms_ok(s)) ++bad_terms;
    const int m1 = s.spec.system.m1();
    const double ea = moment_oracle(make_setup(s.spec, nash_profile(s.rt, m1), s.cov)).J1;
    const double es = moment_oracle(make_setup(s.spec, symmetric_profile(s.rt, m1), s.cov)).J1;
    if (ea - es >= -1e-6 * (1.0 + std::abs(ea))) ++exact_ordered;
  }
  const GapReport g = gap_decomposition(ex.spec, ex.rt, ex.cov);
  detail("example relative margin=%.4e; ordered %d/%d random instances, worst margin=%.3e, materially negative=%d",
         ex_margin, ordered, kRandomInstances, worst, material);
  detail("gap terms: q1=%.4f u=%.4f pred=%.4f curr=%.4f sum=%.4f direct=%.4f; instances with a negative term=%d",
         g.q1_term, g.u_term, g.pred_term, g.curr_term, g.sum, g.direct_difference, bad_terms);
  detail("exact second-moment costs: asymmetric >= symmetric on %d/%d random instances", exact_ordered,
         kRandomInstances);
  return ex_margin >= -1e-6 && ordered >= 95 && material == 0 && bad_terms == 0;
}

bool oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const std::map<std::string, ProblemSpec> cases{{"scalar", testing::scalar_game()}, {"example", paper_example()}};
  for (const auto& [name, spec] : cases) {
    const Solved s = solve(spec);
    const int m1 = spec.system.m1();
    for (const bool symmetric : {false, true}) {
      const StrategyProfile p = symmetric ? symmetric_profile(s.rt, m1) : nash_profile(s.rt, m1);
      const SimulationSetup setup = make_setup(spec, p, s.cov);
      const CostReport analytic =
          symmetric ? analytic_cost_sym(spec, s.rt, s.cov) : analytic_cost_asym(spec, s.rt, s.cov);
      const MomentCosts exact = moment_oracle(setup);
      const CostEstimate mc = estimate_costs(setup, 10000, 2024);
      const double d = std::max(rel(analytic.J1, exact.J1), rel(analytic.J2, exact.J2));
      const bool mc_analytic = std::abs(mc.mean1 - analytic.J1) <= 3 * mc.stderr1 &&
                               std::abs(mc.mean2 - analytic.J2) <= 3 * mc.stderr2;
      const bool mc_exact =
          std::abs(mc.mean1 - exact.J1) <= 3 * mc.stderr1 && std::abs(mc.mean2 - exact.J2) <= 3 * mc.stderr2;
      detail("%s/%s: analytic=(%.6f, %.6f) exact=(%.6f, %.6f) rel diff=%.2e; mc=(%.4f, %.4f) +/- (%.4f, %.4f); "
             "mc~analytic %s, mc~exact %s",
             name.c_str(), symmetric ? "sym" : "asym", analytic.J1, analytic.J2, exact.J1, exact.J2, d, mc.mean1,
             mc.mean2, mc.stderr1, mc.stderr2, mc_analytic ? "yes" : "no", mc_exact ? "yes" : "no");
      if (!symmetric) {
        const CostReport split = orthogonal_split_cost_asym(spec, s.rt, s.cov);
        detail("%s/asym orthogonal-split diagnostic=(%.6f, %.6f)", name.c_str(), split.J1, split.J2);
      }
      ok = ok && d <= 1e-6 && mc_analytic && mc_exact;
    }
  }
  const double secs = seconds_since(t0);
  detail("runtime=%.2fs", secs);
  return ok && secs < 30.0;
}

bool nash_certificate() {
  bool ok = true;
  const std::map<std::string, ProblemSpec> cases{{"scalar", testing::scalar_game()}, {"example", paper_example()}};
  for (const auto& [name, spec] : cases) {
    const Solved s = solve(spec);
    const auto setup = make_setup(spec, nash_profile(s.rt, spec.system.m1()), s.cov);
    const NashCertificate cert = best_response_certificate(setup, {1e-2}, 5000, 77);
    int failed = 0;
    const Deviation* worst = nullptr;
    for (const auto& d : cert.deviations) {
      if (!d.pass) ++failed;
      if (!worst || d.delta_J / std::max(d.stderr, 1e-300) < worst->delta_J / std::max(worst->stderr, 1e-300))
        worst = &d;
    }
    detail("%s: %zu deviations, %d fail; worst player %d %s dJ=%.4e stderr=%.4e", name.c_str(),
           cert.deviations.size(), failed, worst->player, worst->direction.c_str(), worst->delta_J, worst->stderr);
    ok = ok && cert.overall_pass;
  }
  const ProblemSpec unstable = testing::load_config("unstable_scalar");
  const NashCertificate zero = best_response_certificate(make_setup(unstable, zero_profile(unstable)), {1e-2}, 5000, 77);
  detail("zero-gain profile on unstable system: certificate %s", zero.overall_pass ? "passes (wrong)" : "fails");
  return ok && !zero.overall_pass;
}

bool orthogonality() {
  const Solved s = solve(paper_example());
  const auto rep = orthogonality_stats(make_setup(s.spec, nash_profile(s.rt, 2), s.cov), 10000, 5);
  double a = 0, b = 0, c = 0;
  for (const auto& r : rep.rows) {
    a = std::max(a, r.xhat1_e2.normalized_max);
    b = std::max(b, r.d_e2.normalized_max);
    c = std::max(c, r.xhat1_d.normalized_max);
  }
  detail("normalized max: E[xhat1 e2']=%.4f E[d e2']=%.4f E[xhat1 d']=%.4f threshold=%.4f", a, b, c, rep.threshold);
  return rep.passed();
}

bool reference_table() {
  namespace fs = std::filesystem;
  cli::CommandOptions o;
  o.config = testing::config_path("paper_example");
  o.out_dir = (fs::temp_directory_path() / "lqgame_acceptance_compare").string();
  o.runs = 2000;
  const auto out = cli::cmd_compare(o);
  std::ifstream is(fs::path(o.out_dir) / "table1.csv");
  std::string line;
  std::getline(is, line);
  std::map<std::string, double> analytic;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    analytic[cells[0]] = std::stod(cells[1]);
    detail("%-8s computed=%.4f reference=%s delta=%s", cells[0].c_str(), analytic[cells[0]], cells[5].c_str(),
           cells.size() > 6 ? cells[6].c_str() : "");
  }
  const bool ordering = analytic["J1_asym"] > analytic["J1_sym"] && analytic["J2_asym"] > analytic["J2_sym"];
  detail("compare exit code %d; ordering gate %s (deltas are report-only)", out.exit_code, ordering ? "holds" : "violated");
  return out.exit_code == cli::kOk && ordering;
}

bool trivial_anchors() {
  const Solved zd = solve(testing::load_config("zero_dynamics"));
  bool zero_ok = true;
  for (int k = 0; k <= zd.spec.horizon; ++k)
    zero_ok = zero_ok && zd.rt.K1[k].isZero(0) && zd.rt.K2[k].isZero(0) && zd.rt.P1[k] == zd.spec.weights.Q1;

  const Solved idf = solve(testing::load_config("identical_filters"));
  const auto a = analytic_cost_asym(idf.spec, idf.rt, idf.cov);
  const auto b = analytic_cost_sym(idf.spec, idf.rt, idf.cov);
  const double collapse = std::max(rel(a.J1, b.J1), rel(a.J2, b.J2));

  const Solved nl = solve(testing::load_config("noiseless"));
  const auto na = analytic_cost_asym(nl.spec, nl.rt, nl.cov);
  const auto nb = analytic_cost_sym(nl.spec, nl.rt, nl.cov);
  const MomentCosts nm = moment_oracle(make_setup(nl.spec, nash_profile(nl.rt, 2), nl.cov));
  const bool noiseless = na.J1 == 0 && na.J2 == 0 && nb.J1 == 0 && nb.J2 == 0 && nm.J1 == 0 && nm.J2 == 0;

  detail("A=0: zero gains and P1_k=Q1 %s; identical filters rel diff=%.2e; noiseless costs zero %s",
         zero_ok ? "yes" : "no", collapse, noiseless ? "yes" : "no");
  return zero_ok && collapse <= 1e-10 && noiseless;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<bool()>> criteria[] = {
      {"steady-state convergence", steady_convergence},
      {"covariance monotonicity", covariance_monotonicity},
      {"cost ordering", cost_ordering},
      {"oracle equivalence", oracle_equivalence},
      {"nash certificate", nash_certificate},
      {"orthogonality", orthogonality},
      {"reference table ordering", reference_table},
      {"trivial anchors", trivial_anchors},
  };
  int failures = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    bool pass = false;
    try {
      pass = check();
    } catch (const std::exception& e) {
      detail("exception: %s", e.what());
    }
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", index, name);
    std::fflush(stdout);
    failures += pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
