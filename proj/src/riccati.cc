#include "lqgame/riccati.h"

#include <algorithm>
#include <ostream>
#include <string>

#include "lqgame/errors.h"

namespace lqgame {

namespace {

// Solves H X = rhs for symmetric H, refusing near-singular H.
MatrixXd solve_hessian(const MatrixXd& H, const MatrixXd& rhs, const char* player) {
  Eigen::LDLT<MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= kMinRcond))
    throw SolverError(std::string("gain Hessian singular for ") + player);
  return ldlt.solve(rhs);
}

struct Quad {
  MatrixXd P1, Phi1, P2, Phi2;
};

// One application of the four coupled updates with gains (K1, K2) applied to
// the "next" matrices. Shared by the backward and forward schemes, which
// differ only in which index they call "next".
Quad coupled_update(const ProblemSpec& spec, const AugmentedModel& aug, const Quad& next,
                    const MatrixXd& K1, const MatrixXd& K2) {
  const auto& A = spec.system.A;
  const auto& B2 = spec.system.B2;
  const auto& w = spec.weights;
  const MatrixXd cl1 = A + aug.B * K1;
  const MatrixXd cl2 = A + B2 * K2;
  Quad out;
  out.P1 = symmetrize(cl1.transpose() * next.P1 * cl1 + w.Q1 + K1.transpose() * aug.Gamma1 * K1);
  out.Phi1 = symmetrize(cl2.transpose() * next.Phi1 * cl2 + K2.transpose() * w.R1 * K2);
  out.Phi2 =
      symmetrize(cl1.transpose() * next.Phi2 * cl1 + K1.transpose() * aug.Gamma2 * K1 + w.Q2);
  out.P2 = symmetrize(cl2.transpose() * next.P2 * cl2 + w.Q2 + K2.transpose() * w.R2 * K2);
  return out;
}

}  // namespace

StepGains gains_from(const ProblemSpec& spec, const AugmentedModel& aug, const MatrixXd& P1_next,
                     const MatrixXd& P2_next) {
  const auto& A = spec.system.A;
  const auto& B2 = spec.system.B2;
  StepGains g;
  g.H1 = symmetrize(aug.Gamma1 + aug.B.transpose() * P1_next * aug.B);
  g.H2 = symmetrize(spec.weights.R2 + B2.transpose() * P2_next * B2);
  g.K1 = -solve_hessian(g.H1, aug.B.transpose() * P1_next * A, "player 1");
  g.K2 = -solve_hessian(g.H2, B2.transpose() * P2_next * A, "player 2");
  return g;
}

RiccatiTrajectory backward(const ProblemSpec& spec, const AugmentedModel& aug) {
  const int N = spec.horizon;
  if (N < 0) throw ValidationError("horizon must be >= 0");
  const auto& w = spec.weights;

  RiccatiTrajectory rt;
  rt.P1.resize(N + 2);
  rt.Phi1.resize(N + 2);
  rt.P2.resize(N + 2);
  rt.Phi2.resize(N + 2);
  rt.K1.resize(N + 1);
  rt.K2.resize(N + 1);
  rt.H1.resize(N + 1);
  rt.H2.resize(N + 1);
  rt.P1[N + 1] = w.P1_term;
  rt.Phi1[N + 1] = w.Phi1_term;
  rt.P2[N + 1] = w.P2_term;
  rt.Phi2[N + 1] = w.Phi2_term;

  for (int k = N; k >= 0; --k) {
    StepGains g;
    try {
      g = gains_from(spec, aug, rt.P1[k + 1], rt.P2[k + 1]);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), k);
    }
    const Quad next{rt.P1[k + 1], rt.Phi1[k + 1], rt.P2[k + 1], rt.Phi2[k + 1]};
    Quad cur = coupled_update(spec, aug, next, g.K1, g.K2);
    rt.P1[k] = std::move(cur.P1);
    rt.Phi1[k] = std::move(cur.Phi1);
    rt.P2[k] = std::move(cur.P2);
    rt.Phi2[k] = std::move(cur.Phi2);
    rt.K1[k] = std::move(g.K1);
    rt.K2[k] = std::move(g.K2);
    rt.H1[k] = std::move(g.H1);
    rt.H2[k] = std::move(g.H2);
  }
  return rt;
}

SteadyRiccati forward_steady(const ProblemSpec& spec, const AugmentedModel& aug,
                             const SteadyOptions& opts) {
  if (!(opts.init_scale > 0.0)) throw ValidationError("forward iteration needs a > 0");
  const int n = spec.system.n();
  const MatrixXd start = opts.init_scale * MatrixXd::Identity(n, n);
  Quad cur{start, start, start, start};

  SteadyRiccati sr;
  StepGains g;
  for (int it = 1; it <= opts.max_iter; ++it) {
    try {
      g = gains_from(spec, aug, cur.P1, cur.P2);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), it - 1);
    }
    Quad next = coupled_update(spec, aug, cur, g.K1, g.K2);
    const double r = std::max({relative_change(next.P1, cur.P1), relative_change(next.Phi1, cur.Phi1),
                               relative_change(next.P2, cur.P2), relative_change(next.Phi2, cur.Phi2)});
    sr.residual_history.push_back(r);
    cur = std::move(next);
    if (r < opts.tol) {
      sr.iterations = it;
      sr.residual = r;
      break;
    }
  }
  if (sr.iterations == 0)
    throw ConvergenceError("no convergence after " + std::to_string(opts.max_iter) +
                               " iterations (residual " +
                               std::to_string(sr.residual_history.empty() ? 0.0 : sr.residual_history.back()) +
                               ")",
                           sr.residual_history);

  sr.P1 = cur.P1;
  sr.Phi1 = cur.Phi1;
  sr.P2 = cur.P2;
  sr.Phi2 = cur.Phi2;
  g = gains_from(spec, aug, sr.P1, sr.P2);
  sr.K1 = g.K1;
  sr.K2 = g.K2;

  const auto spectra = closed_loop_spectra(sr, spec, aug);
  if (!(spectra.rho1 < 1.0) || !(spectra.rho2 < 1.0))
    throw ConvergenceError("non-stabilizing solution (rho1=" + std::to_string(spectra.rho1) +
                               ", rho2=" + std::to_string(spectra.rho2) + ")",
                           sr.residual_history);
  return sr;
}

ClosedLoopSpectra closed_loop_spectra(const SteadyRiccati& sr, const ProblemSpec& spec,
                                      const AugmentedModel& aug) {
  const auto& A = spec.system.A;
  return {spectral_radius(A + aug.B * sr.K1), spectral_radius(A + spec.system.B2 * sr.K2)};
}

double fixed_point_residual(const SteadyRiccati& sr, const ProblemSpec& spec,
                            const AugmentedModel& aug) {
  const auto g = gains_from(spec, aug, sr.P1, sr.P2);
  const Quad at{sr.P1, sr.Phi1, sr.P2, sr.Phi2};
  const Quad rhs = coupled_update(spec, aug, at, g.K1, g.K2);
  return std::max({relative_change(rhs.P1, sr.P1), relative_change(rhs.Phi1, sr.Phi1),
                   relative_change(rhs.P2, sr.P2), relative_change(rhs.Phi2, sr.Phi2)});
}

void write_riccati_csv(std::ostream& os, const RiccatiTrajectory& rt) {
  os << "k,matrix,i,j,value\n";
  os.precision(17);
  auto emit = [&os](int k, const char* name, const MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        os << k << ',' << name << ',' << i << ',' << j << ',' << m(i, j) << '\n';
  };
  const int N = rt.horizon();
  for (int k = 0; k <= N + 1; ++k) {
    emit(k, "P1", rt.P1[k]);
    emit(k, "Phi1", rt.Phi1[k]);
    emit(k, "P2", rt.P2[k]);
    emit(k, "Phi2", rt.Phi2[k]);
    if (k <= N) {
      emit(k, "K1", rt.K1[k]);
      emit(k, "K2", rt.K2[k]);
    }
  }
}

}  // namespace lqgame
