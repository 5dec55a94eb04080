#include "lqgame/equilibrium.h"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "lqgame/errors.h"

namespace lqgame {

namespace {

void require_same_horizon(const RiccatiTrajectory& rt, const CovarianceSchedule& cov) {
  if (rt.horizon() != cov.horizon())
    throw ValidationError("Riccati horizon " + std::to_string(rt.horizon()) +
                          " does not match covariance horizon " + std::to_string(cov.horizon()));
}

}  // namespace

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kAsymmetricNash:
      return "asymmetric_nash";
    case ProfileKind::kSymmetricNash:
      return "symmetric_nash";
    case ProfileKind::kCustom:
      return "custom";
  }
  return "custom";
}

StrategyProfile nash_profile(const RiccatiTrajectory& rt, int m1) {
  return {rt.K1, rt.K2, m1, ProfileKind::kAsymmetricNash};
}

StrategyProfile symmetric_profile(const RiccatiTrajectory& rt, int m1) {
  return {rt.K1, rt.K2, m1, ProfileKind::kSymmetricNash};
}

StrategyProfile steady_profile(const SteadyRiccati& sr, int m1, int horizon) {
  const auto steps = static_cast<size_t>(horizon + 1);
  return {std::vector<MatrixXd>(steps, sr.K1), std::vector<MatrixXd>(steps, sr.K2), m1,
          ProfileKind::kAsymmetricNash};
}

StrategyProfile zero_profile(const ProblemSpec& spec) {
  const auto& s = spec.system;
  const auto steps = static_cast<size_t>(spec.horizon + 1);
  return {std::vector<MatrixXd>(steps, MatrixXd::Zero(s.m1() + s.m2(), s.n())),
          std::vector<MatrixXd>(steps, MatrixXd::Zero(s.m2(), s.n())), s.m1(), ProfileKind::kCustom};
}

Actions apply_strategy(const StrategyProfile& profile, int k, const VectorXd& xhat1,
                       const VectorXd& xhat2) {
  if (k < 0 || k > profile.horizon())
    throw std::out_of_range("strategy index " + std::to_string(k) + " outside 0.." +
                            std::to_string(profile.horizon()));
  const MatrixXd& K1 = profile.K1[static_cast<size_t>(k)];
  const MatrixXd& K2 = profile.K2[static_cast<size_t>(k)];
  const auto m1 = profile.m1;
  const auto m2 = K2.rows();

  Actions a;
  if (profile.kind == ProfileKind::kSymmetricNash) {
    a.uhat = K1 * xhat2;
    a.utilde2 = VectorXd::Zero(m2);
  } else {
    a.uhat = K1 * xhat1;
    a.utilde2 = K2 * (xhat2 - xhat1);
  }
  a.u1 = a.uhat.head(m1);
  a.u2 = a.uhat.tail(m2) + a.utilde2;
  return a;
}

double CostReport::term(const std::string& name) const {
  for (const auto& [key, value] : terms)
    if (key == name) return value;
  throw std::out_of_range("no cost term named " + name);
}

CostReport analytic_cost_asym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                              const CovarianceSchedule& cov) {
  require_same_horizon(rt, cov);
  const auto& A = spec.system.A;
  const auto& B2 = spec.system.B2;
  const auto& C1 = spec.system.C1;
  const auto& mu = spec.system.mu;
  const MatrixXd C = augment(spec).C;
  const int N = rt.horizon();

  // Both initial estimates equal mu, so the private-part initial terms vanish.
  const double init1 = mu.dot(rt.P1[0] * mu);
  const double init2 = mu.dot(rt.Phi2[0] * mu);
  const double term1 = (cov.Sigma1_pred[N + 1] * rt.P1[N + 1]).trace();
  const double term2 = (cov.Sigma1_pred[N + 1] * rt.Phi2[N + 1]).trace();

  double sum1 = 0.0, sum2 = 0.0;
  for (int k = 0; k <= N; ++k) {
    const auto& S1 = cov.Sigma1_pred[k];
    const auto& S2 = cov.Sigma2_pred[k];
    const MatrixXd AG1C1 = A * cov.G1[k] * C1;
    const MatrixXd AG2C = A * cov.G2[k] * C;
    const auto& P1n = rt.P1[k + 1];
    const auto& Phi1n = rt.Phi1[k + 1];
    const auto& P2n = rt.P2[k + 1];
    const auto& Phi2n = rt.Phi2[k + 1];
    const auto& K2 = rt.K2[k];

    sum1 += (S1 * (A.transpose() * P1n * AG1C1 + spec.weights.Q1) +
             (S1 - S2) * (K2.transpose() * B2.transpose() * P1n * AG1C1 -
                          (A + B2 * K2).transpose() * Phi1n * AG1C1) +
             S2 * (A.transpose() * Phi1n * AG2C - A.transpose() * Phi1n * AG1C1))
                .trace();
    sum2 += (S2 * (A.transpose() * P2n * AG2C) +
             S1 * (A.transpose() * (Phi2n - P2n) * AG1C1 + spec.weights.Q2))
                .trace();
  }

  CostReport r;
  r.J1 = init1 + term1 + sum1;
  r.J2 = init2 + term2 + sum2;
  r.terms = {{"J1_initial", init1}, {"J1_terminal", term1}, {"J1_stage_sum", sum1},
             {"J2_initial", init2}, {"J2_terminal", term2}, {"J2_stage_sum", sum2}};
  return r;
}

CostReport orthogonal_split_cost_asym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                                      const CovarianceSchedule& cov) {
  require_same_horizon(rt, cov);
  const auto& A = spec.system.A;
  const auto& C1 = spec.system.C1;
  const auto& mu = spec.system.mu;
  const auto& w = spec.weights;
  const int N = rt.horizon();

  auto evaluate = [&](const std::vector<MatrixXd>& V, const MatrixXd& T, const MatrixXd& Q,
                      const MatrixXd& R, double& init, double& terminal, double& stage,
                      double& priv) {
    init = mu.dot(V[0] * mu);
    terminal = (T * cov.Sigma1_pred[N + 1]).trace();
    stage = 0.0;
    priv = 0.0;
    for (int k = 0; k <= N; ++k) {
      const auto& S1 = cov.Sigma1_pred[k];
      const auto& K2 = rt.K2[k];
      stage += (S1 * (A.transpose() * V[k + 1] * A * cov.G1[k] * C1 + Q)).trace();
      priv += (K2.transpose() * R * K2 * (S1 - cov.Sigma2_pred[k])).trace();
    }
    return init + terminal + stage + priv;
  };

  CostReport r;
  double i1, t1, s1, p1, i2, t2, s2, p2;
  r.J1 = evaluate(rt.P1, w.P1_term, w.Q1, w.R1, i1, t1, s1, p1);
  r.J2 = evaluate(rt.Phi2, w.Phi2_term, w.Q2, w.R2, i2, t2, s2, p2);
  r.terms = {{"J1_initial", i1}, {"J1_terminal", t1}, {"J1_stage_sum", s1}, {"J1_private_sum", p1},
             {"J2_initial", i2}, {"J2_terminal", t2}, {"J2_stage_sum", s2}, {"J2_private_sum", p2}};
  r.note = "orthogonal split; exact only when xhat1 and d are uncorrelated";
  return r;
}

CostReport analytic_cost_sym(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                             const CovarianceSchedule& cov) {
  require_same_horizon(rt, cov);
  const auto& A = spec.system.A;
  const auto& mu = spec.system.mu;
  const MatrixXd C = augment(spec).C;
  const int N = rt.horizon();

  const double init1 = mu.dot(rt.P1[0] * mu);
  const double init2 = mu.dot(rt.Phi2[0] * mu);
  const double term1 = (cov.Sigma2_pred[N + 1] * rt.P1[N + 1]).trace();
  const double term2 = (cov.Sigma2_pred[N + 1] * rt.Phi2[N + 1]).trace();
  double sum1 = 0.0, sum2 = 0.0;
  for (int k = 0; k <= N; ++k) {
    const auto& S2 = cov.Sigma2_pred[k];
    const MatrixXd AG2C = A * cov.G2[k] * C;
    sum1 += (S2 * (A.transpose() * rt.P1[k + 1] * AG2C + spec.weights.Q1)).trace();
    sum2 += (S2 * (A.transpose() * rt.Phi2[k + 1] * AG2C + spec.weights.Q2)).trace();
  }

  CostReport r;
  r.J1 = init1 + term1 + sum1;
  r.J2 = init2 + term2 + sum2;
  r.terms = {{"J1_initial", init1}, {"J1_terminal", term1}, {"J1_stage_sum", sum1},
             {"J2_initial", init2}, {"J2_terminal", term2}, {"J2_stage_sum", sum2}};
  r.note = "J2 derived by index swap, MC-verified";
  return r;
}

std::vector<std::pair<std::string, double>> GapReport::terms() const {
  return {{"initial_term", initial_term}, {"q1_term", q1_term},   {"u_term", u_term},
          {"pred_term", pred_term},       {"curr_term", curr_term}, {"sum", sum},
          {"direct_difference", direct_difference}, {"residual", residual}};
}

GapReport gap_decomposition(const ProblemSpec& spec, const RiccatiTrajectory& rt,
                            const CovarianceSchedule& cov) {
  require_same_horizon(rt, cov);
  const auto& B2 = spec.system.B2;
  const int N = rt.horizon();

  GapReport g;
  // xhat1_0 = xhat2_0 = mu, so the initial private part is zero.
  const VectorXd d0 = VectorXd::Zero(spec.system.n());
  g.initial_term = d0.dot(rt.Phi1[0] * d0);
  for (int k = 0; k <= N; ++k) {
    const MatrixXd dS = cov.Sigma1_pred[k] - cov.Sigma2_pred[k];
    const MatrixXd dS_next = cov.Sigma1_pred[k + 1] - cov.Sigma2_pred[k + 1];
    const MatrixXd dP = rt.P1[k] - rt.Phi1[k];
    const MatrixXd dP_next = rt.P1[k + 1] - rt.Phi1[k + 1];
    const MatrixXd BK = B2 * rt.K2[k];
    const MatrixXd du = BK * (-dS) * BK.transpose();
    g.q1_term += (spec.weights.Q1 * dS).trace();
    g.u_term -= (dP_next * du).trace();
    g.pred_term += (dP_next * dS_next).trace();
    g.curr_term += (dP * dS).trace();
  }
  g.sum = g.initial_term + g.q1_term + g.u_term + g.pred_term + g.curr_term;
  g.direct_difference = analytic_cost_asym(spec, rt, cov).J1 - analytic_cost_sym(spec, rt, cov).J1;
  g.residual = g.sum - g.direct_difference;
  return g;
}

void write_name_value_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows) {
  os << "name,value\n";
  os.precision(17);
  for (const auto& [name, value] : rows) os << name << ',' << value << '\n';
}

std::vector<std::pair<std::string, double>> report_rows(const CostReport& report,
                                                        const std::string& prefix) {
  std::vector<std::pair<std::string, double>> rows{{prefix + "J1", report.J1},
                                                   {prefix + "J2", report.J2}};
  for (const auto& [name, value] : report.terms) rows.emplace_back(prefix + name, value);
  return rows;
}

}  // namespace lqgame
