#include "lqgame/filter.h"

#include <ostream>
#include <string>

#include "lqgame/errors.h"

namespace lqgame {

namespace {

// G = Sigma C' (C Sigma C' + Qv)^{-1}, through an SPD factorization.
MatrixXd kalman_gain(const MatrixXd& Sigma, const MatrixXd& C, const MatrixXd& Qv, const char* who,
                     int k) {
  const MatrixXd S = symmetrize(C * Sigma * C.transpose() + Qv);
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond))
    throw SolverError(std::string("innovation covariance singular for ") + who, k);
  return llt.solve(C * Sigma).transpose();
}

// Joseph form (I - G C) Sigma (I - G C)' + G Qv G'.
MatrixXd joseph(const MatrixXd& Sigma, const MatrixXd& G, const MatrixXd& C, const MatrixXd& Qv) {
  const MatrixXd L = MatrixXd::Identity(Sigma.rows(), Sigma.cols()) - G * C;
  return symmetrize(L * Sigma * L.transpose() + G * Qv * G.transpose());
}

// Estimator 1's one-step prediction: the private part d = xhat2 - xhat1 has
// covariance Sigma1 - Sigma2 and is orthogonal to estimator 2's error.
MatrixXd predict_sigma1(const MatrixXd& Sigma1, const MatrixXd& Sigma2, const MatrixXd& G1,
                        const MatrixXd& K2, const SystemModel& sys) {
  const auto& A = sys.A;
  const MatrixXd AL = A * (MatrixXd::Identity(sys.n(), sys.n()) - G1 * sys.C1);
  const MatrixXd M = AL + sys.B2 * K2;
  return symmetrize(M * (Sigma1 - Sigma2) * M.transpose() + AL * Sigma2 * AL.transpose() +
                    A * G1 * sys.Qv1 * G1.transpose() * A.transpose() + sys.Qw);
}

}  // namespace

CovarianceSchedule covariance_forward(const ProblemSpec& spec, const AugmentedModel& aug,
                                      const std::vector<MatrixXd>& K2_seq) {
  const auto& sys = spec.system;
  const int N = static_cast<int>(K2_seq.size()) - 1;
  if (N < 0) throw ValidationError("covariance_forward needs at least one K2 gain");

  CovarianceSchedule cs;
  cs.Sigma1_pred.resize(N + 2);
  cs.Sigma2_pred.resize(N + 2);
  cs.Sigma1_filt.resize(N + 1);
  cs.Sigma2_filt.resize(N + 1);
  cs.G1.resize(N + 1);
  cs.G2.resize(N + 1);
  cs.Sigma1_pred[0] = symmetrize(sys.sigma);
  cs.Sigma2_pred[0] = symmetrize(sys.sigma);

  for (int k = 0; k <= N; ++k) {
    const MatrixXd& S1 = cs.Sigma1_pred[k];
    const MatrixXd& S2 = cs.Sigma2_pred[k];
    cs.G1[k] = kalman_gain(S1, sys.C1, sys.Qv1, "estimator 1", k);
    cs.G2[k] = kalman_gain(S2, aug.C, aug.Qv, "estimator 2", k);
    cs.Sigma1_filt[k] = joseph(S1, cs.G1[k], sys.C1, sys.Qv1);
    cs.Sigma2_filt[k] = joseph(S2, cs.G2[k], aug.C, aug.Qv);
    cs.Sigma2_pred[k + 1] = symmetrize(sys.A * cs.Sigma2_filt[k] * sys.A.transpose() + sys.Qw);
    cs.Sigma1_pred[k + 1] = predict_sigma1(S1, S2, cs.G1[k], K2_seq[k], sys);
  }
  return cs;
}

FilterState initial_filter_state(const SystemModel& sys) {
  FilterState st;
  st.xhat1_pred = sys.mu;
  st.xhat2_pred = sys.mu;
  st.xhat1_filt = sys.mu;
  st.xhat2_filt = sys.mu;
  return st;
}

FilterState filter_step(const FilterState& state, const VectorXd& y1, const VectorXd& y2,
                        const VectorXd& uhat, const VectorXd& utilde2, const MatrixXd& G1,
                        const MatrixXd& G2, const AugmentedModel& aug, const SystemModel& sys) {
  VectorXd y(y1.size() + y2.size());
  y << y1, y2;
  FilterState next;
  next.k = state.k + 1;
  next.xhat1_filt = state.xhat1_pred + G1 * (y1 - sys.C1 * state.xhat1_pred);
  next.xhat2_filt = state.xhat2_pred + G2 * (y - aug.C * state.xhat2_pred);
  next.xhat1_pred = sys.A * next.xhat1_filt + aug.B * uhat;
  next.xhat2_pred = sys.A * next.xhat2_filt + aug.B * uhat + sys.B2 * utilde2;
  return next;
}

SteadyCovariances steady_covariances(const ProblemSpec& spec, const AugmentedModel& aug,
                                     const MatrixXd& K2, const SteadyFilterOptions& opts) {
  const auto& sys = spec.system;
  SteadyCovariances out;

  // Estimator 2: standard filter Riccati iteration.
  MatrixXd S2 = symmetrize(sys.sigma);
  std::vector<double> history;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const MatrixXd G2 = kalman_gain(S2, aug.C, aug.Qv, "estimator 2", it - 1);
    const MatrixXd next =
        symmetrize(sys.A * joseph(S2, G2, aug.C, aug.Qv) * sys.A.transpose() + sys.Qw);
    const double r = relative_change(next, S2);
    history.push_back(r);
    S2 = next;
    if (r < opts.tol) {
      out.iterations2 = it;
      break;
    }
  }
  if (out.iterations2 == 0) throw ConvergenceError("estimator-2 covariance did not converge", history);

  // Estimator 1: Sigma1 and G1 iterated jointly with Sigma2 frozen.
  history.clear();
  MatrixXd S1 = S2;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const MatrixXd G1 = kalman_gain(S1, sys.C1, sys.Qv1, "estimator 1", it - 1);
    const MatrixXd next = predict_sigma1(S1, S2, G1, K2, sys);
    const double r = relative_change(next, S1);
    history.push_back(r);
    S1 = next;
    if (r < opts.tol) {
      out.iterations1 = it;
      break;
    }
  }
  if (out.iterations1 == 0) throw ConvergenceError("estimator-1 covariance did not converge", history);

  out.Sigma1 = S1;
  out.Sigma2 = S2;
  out.G1 = kalman_gain(S1, sys.C1, sys.Qv1, "estimator 1", -1);
  out.G2 = kalman_gain(S2, aug.C, aug.Qv, "estimator 2", -1);
  return out;
}

std::vector<CovarianceGapRow> covariance_gap(const CovarianceSchedule& sched) {
  std::vector<CovarianceGapRow> rows;
  rows.reserve(sched.Sigma1_pred.size());
  for (size_t k = 0; k < sched.Sigma1_pred.size(); ++k) {
    const auto& S1 = sched.Sigma1_pred[k];
    const auto& S2 = sched.Sigma2_pred[k];
    rows.push_back({static_cast<int>(k), min_sym_eigenvalue(S1 - S2), S1.trace(), S2.trace()});
  }
  return rows;
}

void write_covariance_csv(std::ostream& os, const CovarianceSchedule& sched) {
  os << "k,tr_sigma1_pred,tr_sigma2_pred,min_eig_gap\n";
  os.precision(17);
  for (const auto& r : covariance_gap(sched))
    os << r.k << ',' << r.trace1 << ',' << r.trace2 << ',' << r.min_eig_gap << '\n';
}

}  // namespace lqgame
