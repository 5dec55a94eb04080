#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqgame/equilibrium.h"
#include "lqgame/filter.h"

namespace lqgame {

// Everything a closed-loop run needs. The filter gains always come from the
// nominal schedule. `belief_K1` is the gain player 1 believes generates the
// public part of u2; estimator 1 predicts with B1 u1 + B2 [0 I] belief_K1 xhat1,
// so a unilateral deviation by player 2 is invisible to player 1.
struct SimulationSetup {
  ProblemSpec spec;
  AugmentedModel aug;
  CovarianceSchedule schedule;
  StrategyProfile profile;
  std::vector<MatrixXd> belief_K1;

  int horizon() const { return spec.horizon; }
};

// Nominal setup: Riccati and covariance passes run internally, belief = profile.
SimulationSetup make_setup(const ProblemSpec& spec, const StrategyProfile& profile);
SimulationSetup make_setup(const ProblemSpec& spec, const StrategyProfile& profile,
                           const CovarianceSchedule& schedule);

// Predicted quantities are indexed k = 0..N+1, measurements and inputs k = 0..N.
struct Trajectory {
  std::vector<VectorXd> x;
  std::vector<VectorXd> y1, y2;
  std::vector<VectorXd> u1, u2;
  std::vector<VectorXd> xhat1_pred, xhat2_pred;
  std::vector<VectorXd> d;       // xhat2 - xhat1
  std::vector<VectorXd> e1, e2;  // x - xhat_i
  double realized_cost1 = 0.0;
  double realized_cost2 = 0.0;
};

// Single run. Noise is drawn from a counter-based generator keyed by
// (seed, run, k, stream), so any run can be reproduced in isolation.
Trajectory simulate(const SimulationSetup& setup, std::uint64_t seed, std::uint64_t run = 0);

struct CostEstimate {
  double mean1 = 0.0, mean2 = 0.0;
  double stderr1 = 0.0, stderr2 = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
};

// Mean and standard error over runs 0..M-1. `threads` = 0 picks the hardware
// concurrency; results do not depend on it.
CostEstimate estimate_costs(const SimulationSetup& setup, int runs, std::uint64_t seed,
                            int threads = 0);

struct MomentStats {
  double raw_max = 0.0;         // max |entry| of the sample cross moment
  double normalized_max = 0.0;  // same, each entry divided by std(a_i) std(b_j)
};

struct OrthogonalityRow {
  int k = 0;
  MomentStats xhat1_e2, d_e2, xhat1_d;
};

struct OrthogonalityReport {
  std::vector<OrthogonalityRow> rows;  // k = 0..N+1
  double threshold = 0.0;              // 5 / sqrt(M)
  int runs = 0;

  double worst_normalized() const;
  bool passed() const { return worst_normalized() <= threshold; }
};

OrthogonalityReport orthogonality_stats(const SimulationSetup& setup, int runs, std::uint64_t seed,
                                        int threads = 0);

struct Deviation {
  int player = 1;
  std::string direction;  // e.g. "K1[0][1]+" or "random"
  double epsilon = 0.0;
  double delta_J = 0.0;  // deviator's cost change, common random numbers
  double stderr = 0.0;
  bool pass = true;
  std::string note;
};

struct NashCertificate {
  CostEstimate baseline;
  std::vector<Deviation> deviations;
  bool overall_pass = true;
};

// Unilateral linear-gain deviations. Player 1 moves the rows of K1 that feed
// u1; player 2 moves the rows feeding u2 and all of K2. Each coordinate is
// shifted by +/-eps at every k, plus one random unit-Frobenius direction per
// player. Pass iff delta_J >= -3 stderr.
NashCertificate best_response_certificate(const SimulationSetup& setup,
                                          const std::vector<double>& epsilons, int runs,
                                          std::uint64_t seed, int threads = 0);

// Exact expected costs from the second moment of (x, xhat1, xhat2); no sampling.
struct MomentCosts {
  double J1 = 0.0;
  double J2 = 0.0;
};

MomentCosts moment_oracle(const SimulationSetup& setup);
MomentCosts moment_oracle(const ProblemSpec& spec, const StrategyProfile& profile);

// k, x_1..x_n, xhat1_1..n, xhat2_1..n, u1_.., u2_.. (inputs blank at k = N+1).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// player,direction,epsilon,delta_J,stderr,pass,note
void write_certificate_csv(std::ostream& os, const NashCertificate& cert);

}  // namespace lqgame
