#pragma once

#include <iosfwd>
#include <vector>

#include "lqgame/model.h"

namespace lqgame {

// Gains for one step of the coupled recursion.
//   K1 = -H1^{-1} B' P1_next A,   H1 = Gamma1 + B' P1_next B    ((m1+m2) x n)
//   K2 = -H2^{-1} B2' P2_next A,  H2 = R2 + B2' P2_next B2      (m2 x n)
struct StepGains {
  MatrixXd K1, K2, H1, H2;
};

StepGains gains_from(const ProblemSpec& spec, const AugmentedModel& aug, const MatrixXd& P1_next,
                     const MatrixXd& P2_next);

// Finite-horizon solution. P1..Phi2 are indexed k = 0..N+1, the gains and
// Hessians k = 0..N.
struct RiccatiTrajectory {
  std::vector<MatrixXd> P1, Phi1, P2, Phi2;
  std::vector<MatrixXd> K1, K2, H1, H2;

  int horizon() const { return static_cast<int>(K1.size()) - 1; }
};

RiccatiTrajectory backward(const ProblemSpec& spec, const AugmentedModel& aug);

struct SteadyRiccati {
  MatrixXd P1, Phi1, P2, Phi2;
  MatrixXd K1, K2;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

struct SteadyOptions {
  double init_scale = 1.0;  // P = Phi = a I at the start
  double tol = 1e-10;
  int max_iter = 2000;
};

// Forward fixed-point iteration of the coupled algebraic equations. Throws
// ConvergenceError on non-convergence or a non-stabilizing limit.
SteadyRiccati forward_steady(const ProblemSpec& spec, const AugmentedModel& aug,
                             const SteadyOptions& opts = {});

struct ClosedLoopSpectra {
  double rho1 = 0.0;  // rho(A + B K1)
  double rho2 = 0.0;  // rho(A + B2 K2)
};

ClosedLoopSpectra closed_loop_spectra(const SteadyRiccati& sr, const ProblemSpec& spec,
                                      const AugmentedModel& aug);

// Max relative residual of the four algebraic equations evaluated at `sr`
// (gains recomputed from sr.P1, sr.P2).
double fixed_point_residual(const SteadyRiccati& sr, const ProblemSpec& spec,
                            const AugmentedModel& aug);

// Long-format CSV: k,matrix,i,j,value for P1,Phi1,P2,Phi2,K1,K2.
void write_riccati_csv(std::ostream& os, const RiccatiTrajectory& rt);

}  // namespace lqgame
