#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lqgame/filter.h"
#include "lqgame/riccati.h"

namespace lqgame {

enum class ProfileKind { kAsymmetricNash, kSymmetricNash, kCustom };

std::string_view to_string(ProfileKind kind);

// Linear feedback on the delayed estimates.
//   asymmetric: uhat = K1_k xhat1,  utilde2 = K2_k (xhat2 - xhat1)
//   symmetric:  uhat = K1_k xhat2,  utilde2 = 0
//   u1 = [I 0] uhat,  u2 = [0 I] uhat + utilde2
// Custom profiles use the asymmetric realization with arbitrary gains.
struct StrategyProfile {
  std::vector<MatrixXd> K1;  // (m1+m2) x n, k = 0..N
  std::vector<MatrixXd> K2;  // m2 x n
  int m1 = 0;
  ProfileKind kind = ProfileKind::kCustom;

  int horizon() const { return static_cast<int>(K1.size()) - 1; }
};

StrategyProfile nash_profile(const RiccatiTrajectory& rt, int m1);
StrategyProfile symmetric_profile(const RiccatiTrajectory& rt, int m1);
// Constant steady-state gains repeated over `horizon`+1 steps.
StrategyProfile steady_profile(const SteadyRiccati& sr, int m1, int horizon);
// All gains zero (kind = Custom); used to exercise certificate failures.
StrategyProfile zero_profile(const ProblemSpec& spec);

struct Actions {
  VectorXd u1, u2;
  VectorXd uhat;     // [u1; E[u2 | player 1 info]]
  VectorXd utilde2;  // private part of u2
};

Actions apply_strategy(const StrategyProfile& profile, int k, const VectorXd& xhat1,
                       const VectorXd& xhat2);

struct CostReport {
  double J1 = 0.0;
  double J2 = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  std::string note;

  double term(const std::string& name) const;
};

// Expected equilibrium costs under asymmetric information, evaluated with the
// closed-form trace expressions (initial quadratic + terminal trace + per-step
// trace sums). `cov` must come from covariance_forward with rt.K2.
CostReport analytic_cost_asym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                              const CovarianceSchedule& cov);

// Cost via the orthogonal split x = xhat1 + d + e2:
//   J = mu'V_0 mu + Tr(T Sigma1_{N+1}) + sum_k Tr[Sigma1_k(A'V_{k+1}A G1_k C1 + Q)]
//                                            + Tr[K2_k' R K2_k (Sigma1_k - Sigma2_k)]
// with (V, T, Q, R) = (P1, P1_term, Q1, R1) or (Phi2, Phi2_term, Q2, R2).
// Exact whenever xhat1 and d are uncorrelated (e.g. K2 = 0); a diagnostic, not
// the published expression.
CostReport orthogonal_split_cost_asym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                                      const CovarianceSchedule& cov);

// Symmetric information: both players feed back on xhat2. Only the
// estimator-2 half of `cov` is read. J2 is the index-swapped analog of J1.
CostReport analytic_cost_sym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                             const CovarianceSchedule& cov);

struct GapReport {
  double initial_term = 0.0;
  double q1_term = 0.0;
  double u_term = 0.0;
  double pred_term = 0.0;
  double curr_term = 0.0;
  double sum = 0.0;
  double direct_difference = 0.0;  // J1_asym - J1_sym, same Riccati family
  double residual = 0.0;           // sum - direct_difference

  std::vector<std::pair<std::string, double>> terms() const;
};

GapReport gap_decomposition(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                            const CovarianceSchedule& cov);

// Flat name,value CSV.
void write_name_value_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows);
std::vector<std::pair<std::string, double>> report_rows(const CostReport& report,
                                                        const std::string& prefix);

}  // namespace lqgame
