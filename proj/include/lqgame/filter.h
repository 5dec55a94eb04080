#pragma once

#include <iosfwd>
#include <vector>

#include "lqgame/model.h"

namespace lqgame {

// Error covariances of the two one-step-delayed estimators.
// Estimator 1 sees y1 only; estimator 2 sees y = [y1; y2] and both inputs.
// Predicted covariances are indexed k = 0..N+1, filtered ones and gains
// k = 0..N.
struct CovarianceSchedule {
  std::vector<MatrixXd> Sigma1_pred, Sigma2_pred;
  std::vector<MatrixXd> Sigma1_filt, Sigma2_filt;
  std::vector<MatrixXd> G1;  // n x p1
  std::vector<MatrixXd> G2;  // n x (p1+p2)

  int horizon() const { return static_cast<int>(G1.size()) - 1; }
};

// Runs both covariance recursions forward. Estimator 1's prediction step
// depends on player 2's private gain K2_k, so `K2_seq` (length N+1) must
// come from the Riccati pass first.
CovarianceSchedule covariance_forward(const ProblemSpec& spec, const AugmentedModel& aug,
                                      const std::vector<MatrixXd>& K2_seq);

struct FilterState {
  VectorXd xhat1_pred, xhat2_pred;
  VectorXd xhat1_filt, xhat2_filt;
  int k = 0;
};

// Both estimators start at the prior mean.
FilterState initial_filter_state(const SystemModel& sys);

// Measurement update with y_k followed by the prediction to k+1.
//   estimator 1 predicts with B uhat, estimator 2 with B uhat + B2 utilde2.
FilterState filter_step(const FilterState& state, const VectorXd& y1, const VectorXd& y2,
                        const VectorXd& uhat, const VectorXd& utilde2, const MatrixXd& G1,
                        const MatrixXd& G2, const AugmentedModel& aug, const SystemModel& sys);

struct SteadyCovariances {
  MatrixXd Sigma1, Sigma2;  // predicted
  MatrixXd G1, G2;
  int iterations1 = 0;
  int iterations2 = 0;
};

struct SteadyFilterOptions {
  double tol = 1e-12;
  int max_iter = 100000;
};

// Fixed points of the two predicted-covariance recursions for a constant K2.
SteadyCovariances steady_covariances(const ProblemSpec& spec, const AugmentedModel& aug,
                                     const MatrixXd& K2, const SteadyFilterOptions& opts = {});

struct CovarianceGapRow {
  int k = 0;
  double min_eig_gap = 0.0;  // min eig(Sigma1_pred - Sigma2_pred)
  double trace1 = 0.0;
  double trace2 = 0.0;
};

std::vector<CovarianceGapRow> covariance_gap(const CovarianceSchedule& sched);

// CSV: k,tr_sigma1_pred,tr_sigma2_pred,min_eig_gap
void write_covariance_csv(std::ostream& os, const CovarianceSchedule& sched);

}  // namespace lqgame
