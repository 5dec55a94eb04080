#include "lqgame/montecarlo.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "lqgame/errors.h"

namespace lqgame {

namespace {

enum Stream : std::uint64_t { kInitialState = 0, kProcess = 1, kSensor1 = 2, kSensor2 = 3, kDirection = 4 };

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// SplitMix64 as a UniformRandomBitGenerator, seeded from a hashed key.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

SplitMix64 keyed_engine(std::uint64_t seed, std::uint64_t run, std::uint64_t k, std::uint64_t stream) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ run);
  h = mix64(h ^ k);
  h = mix64(h ^ stream);
  return SplitMix64(h);
}

VectorXd standard_normal(Eigen::Index dim, std::uint64_t seed, std::uint64_t run, std::uint64_t k,
                         std::uint64_t stream) {
  auto eng = keyed_engine(seed, run, k, stream);
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = nd(eng);
  return z;
}

struct NoiseRoots {
  MatrixXd sigma, Qw, Qv1, Qv2;
  explicit NoiseRoots(const SystemModel& s)
      : sigma(psd_sqrt(s.sigma)), Qw(psd_sqrt(s.Qw)), Qv1(psd_sqrt(s.Qv1)), Qv2(psd_sqrt(s.Qv2)) {}
};

// Per-step observer; the lightweight cost path passes a no-op.
struct NullObserver {
  void operator()(int, const VectorXd&, const FilterState&) const {}
};

template <typename Observer>
std::pair<double, double> run_closed_loop(const SimulationSetup& setup, const NoiseRoots& roots,
                                          std::uint64_t seed, std::uint64_t run, Observer&& observe,
                                          Trajectory* traj) {
  const auto& sys = setup.spec.system;
  const auto& w = setup.spec.weights;
  const auto& profile = setup.profile;
  const int N = setup.horizon();
  const auto m2 = sys.m2();
  const bool symmetric = profile.kind == ProfileKind::kSymmetricNash;

  VectorXd x = sys.mu + roots.sigma * standard_normal(sys.n(), seed, run, 0, kInitialState);
  FilterState st = initial_filter_state(sys);
  double J1 = 0.0, J2 = 0.0;

  for (int k = 0; k <= N; ++k) {
    observe(k, x, st);
    const auto uk = static_cast<std::uint64_t>(k);
    const VectorXd y1 = sys.C1 * x + roots.Qv1 * standard_normal(sys.p1(), seed, run, uk, kSensor1);
    const VectorXd y2 = sys.C2 * x + roots.Qv2 * standard_normal(sys.p2(), seed, run, uk, kSensor2);
    const Actions a = apply_strategy(profile, k, st.xhat1_pred, st.xhat2_pred);

    J1 += x.dot(w.Q1 * x) + a.u1.dot(w.S1 * a.u1) + a.u2.dot(w.R1 * a.u2);
    J2 += x.dot(w.Q2 * x) + a.u1.dot(w.S2 * a.u1) + a.u2.dot(w.R2 * a.u2);

    if (traj) {
      traj->x.push_back(x);
      traj->y1.push_back(y1);
      traj->y2.push_back(y2);
      traj->u1.push_back(a.u1);
      traj->u2.push_back(a.u2);
      traj->xhat1_pred.push_back(st.xhat1_pred);
      traj->xhat2_pred.push_back(st.xhat2_pred);
    }

    // Estimator 1 sees its own u1 but only the believed public part of u2.
    const VectorXd& source = symmetric ? st.xhat2_pred : st.xhat1_pred;
    VectorXd uhat_belief(a.u1.size() + m2);
    uhat_belief << a.u1, setup.belief_K1[static_cast<size_t>(k)].bottomRows(m2) * source;
    const VectorXd residual_u2 = a.u2 - uhat_belief.tail(m2);

    st = filter_step(st, y1, y2, uhat_belief, residual_u2, setup.schedule.G1[k], setup.schedule.G2[k],
                     setup.aug, sys);
    x = sys.A * x + sys.B1 * a.u1 + sys.B2 * a.u2 + roots.Qw * standard_normal(sys.n(), seed, run, uk, kProcess);
  }
  observe(N + 1, x, st);
  J1 += x.dot(w.P1_term * x);
  J2 += x.dot(w.Phi2_term * x);

  if (traj) {
    traj->x.push_back(x);
    traj->xhat1_pred.push_back(st.xhat1_pred);
    traj->xhat2_pred.push_back(st.xhat2_pred);
    for (size_t k = 0; k < traj->x.size(); ++k) {
      traj->e1.push_back(traj->x[k] - traj->xhat1_pred[k]);
      traj->e2.push_back(traj->x[k] - traj->xhat2_pred[k]);
      traj->d.push_back(traj->xhat2_pred[k] - traj->xhat1_pred[k]);
    }
    traj->realized_cost1 = J1;
    traj->realized_cost2 = J2;
  }
  return {J1, J2};
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(block) for block = 0..blocks-1 on a worker pool. Bodies write to
// block-indexed slots, so the reduction order never depends on scheduling.
template <typename Body>
void parallel_blocks(int blocks, int threads, Body&& body) {
  const int workers = std::min(resolve_threads(threads), std::max(blocks, 1));
  if (workers <= 1) {
    for (int b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int b = next++; b < blocks; b = next++) body(b);
    });
  for (auto& th : pool) th.join();
}

constexpr int kBlock = 256;

std::vector<std::pair<double, double>> per_run_costs(const SimulationSetup& setup, int runs,
                                                     std::uint64_t seed, int threads) {
  const NoiseRoots roots(setup.spec.system);
  std::vector<std::pair<double, double>> out(static_cast<size_t>(runs));
  const int blocks = (runs + kBlock - 1) / kBlock;
  parallel_blocks(blocks, threads, [&](int b) {
    const int end = std::min(runs, (b + 1) * kBlock);
    for (int r = b * kBlock; r < end; ++r)
      out[static_cast<size_t>(r)] =
          run_closed_loop(setup, roots, seed, static_cast<std::uint64_t>(r), NullObserver{}, nullptr);
  });
  return out;
}

void mean_stderr(const std::vector<double>& v, double& mean, double& se) {
  const double M = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  mean = s / M;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / (M - 1.0) / M) : 0.0;
}

CostEstimate summarize(const std::vector<std::pair<double, double>>& costs, std::uint64_t seed) {
  std::vector<double> c1, c2;
  c1.reserve(costs.size());
  c2.reserve(costs.size());
  for (const auto& [a, b] : costs) {
    c1.push_back(a);
    c2.push_back(b);
  }
  CostEstimate e;
  mean_stderr(c1, e.mean1, e.stderr1);
  mean_stderr(c2, e.mean2, e.stderr2);
  e.runs = static_cast<int>(costs.size());
  e.seed = seed;
  return e;
}

}  // namespace

SimulationSetup make_setup(const ProblemSpec& spec, const StrategyProfile& profile,
                           const CovarianceSchedule& schedule) {
  if (profile.horizon() != spec.horizon || schedule.horizon() != spec.horizon)
    throw ValidationError("profile/schedule horizon does not match the spec horizon");
  return {spec, augment(spec), schedule, profile, profile.K1};
}

SimulationSetup make_setup(const ProblemSpec& spec, const StrategyProfile& profile) {
  const AugmentedModel aug = augment(spec);
  return make_setup(spec, profile, covariance_forward(spec, aug, profile.K2));
}

Trajectory simulate(const SimulationSetup& setup, std::uint64_t seed, std::uint64_t run) {
  const NoiseRoots roots(setup.spec.system);
  Trajectory t;
  run_closed_loop(setup, roots, seed, run, NullObserver{}, &t);
  return t;
}

CostEstimate estimate_costs(const SimulationSetup& setup, int runs, std::uint64_t seed, int threads) {
  if (runs < 2) throw ValidationError("estimate_costs needs at least 2 runs");
  return summarize(per_run_costs(setup, runs, seed, threads), seed);
}

double OrthogonalityReport::worst_normalized() const {
  double worst = 0.0;
  for (const auto& r : rows)
    worst = std::max({worst, r.xhat1_e2.normalized_max, r.d_e2.normalized_max, r.xhat1_d.normalized_max});
  return worst;
}

namespace {

struct MomentSums {
  VectorXd s_x1, s_d, s_e2;     // first moments
  VectorXd q_x1, q_d, q_e2;     // squared
  MatrixXd x1_e2, d_e2, x1_d;   // cross

  explicit MomentSums(Eigen::Index n)
      : s_x1(VectorXd::Zero(n)), s_d(VectorXd::Zero(n)), s_e2(VectorXd::Zero(n)),
        q_x1(VectorXd::Zero(n)), q_d(VectorXd::Zero(n)), q_e2(VectorXd::Zero(n)),
        x1_e2(MatrixXd::Zero(n, n)), d_e2(MatrixXd::Zero(n, n)), x1_d(MatrixXd::Zero(n, n)) {}

  void add(const VectorXd& x1, const VectorXd& d, const VectorXd& e2) {
    s_x1 += x1;
    s_d += d;
    s_e2 += e2;
    q_x1 += x1.cwiseAbs2();
    q_d += d.cwiseAbs2();
    q_e2 += e2.cwiseAbs2();
    x1_e2 += x1 * e2.transpose();
    d_e2 += d * e2.transpose();
    x1_d += x1 * d.transpose();
  }

  void merge(const MomentSums& o) {
    s_x1 += o.s_x1;
    s_d += o.s_d;
    s_e2 += o.s_e2;
    q_x1 += o.q_x1;
    q_d += o.q_d;
    q_e2 += o.q_e2;
    x1_e2 += o.x1_e2;
    d_e2 += o.d_e2;
    x1_d += o.x1_d;
  }
};

VectorXd sample_std(const VectorXd& s, const VectorXd& q, double M) {
  const VectorXd mean = s / M;
  return (q / M - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
}

MomentStats moment_stats(const MatrixXd& cross, const VectorXd& sd_a, const VectorXd& sd_b, double M) {
  MomentStats st;
  const MatrixXd m = cross / M;
  st.raw_max = m.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double scale = sd_a(i) * sd_b(j);
      if (scale > 0.0) st.normalized_max = std::max(st.normalized_max, std::abs(m(i, j)) / scale);
    }
  return st;
}

}  // namespace

OrthogonalityReport orthogonality_stats(const SimulationSetup& setup, int runs, std::uint64_t seed,
                                        int threads) {
  if (runs < 2) throw ValidationError("orthogonality_stats needs at least 2 runs");
  const auto n = setup.spec.system.n();
  const int steps = setup.horizon() + 2;
  const NoiseRoots roots(setup.spec.system);
  const int blocks = (runs + kBlock - 1) / kBlock;

  std::vector<std::vector<MomentSums>> partial(static_cast<size_t>(blocks));
  parallel_blocks(blocks, threads, [&](int b) {
    auto& acc = partial[static_cast<size_t>(b)];
    acc.assign(static_cast<size_t>(steps), MomentSums(n));
    const int end = std::min(runs, (b + 1) * kBlock);
    for (int r = b * kBlock; r < end; ++r) {
      auto observe = [&](int k, const VectorXd& x, const FilterState& st) {
        acc[static_cast<size_t>(k)].add(st.xhat1_pred, st.xhat2_pred - st.xhat1_pred, x - st.xhat2_pred);
      };
      run_closed_loop(setup, roots, seed, static_cast<std::uint64_t>(r), observe, nullptr);
    }
  });

  std::vector<MomentSums> total(static_cast<size_t>(steps), MomentSums(n));
  for (const auto& block : partial)
    for (int k = 0; k < steps; ++k) total[static_cast<size_t>(k)].merge(block[static_cast<size_t>(k)]);

  OrthogonalityReport rep;
  rep.runs = runs;
  rep.threshold = 5.0 / std::sqrt(static_cast<double>(runs));
  const double M = static_cast<double>(runs);
  for (int k = 0; k < steps; ++k) {
    const auto& t = total[static_cast<size_t>(k)];
    const VectorXd sd_x1 = sample_std(t.s_x1, t.q_x1, M);
    const VectorXd sd_d = sample_std(t.s_d, t.q_d, M);
    const VectorXd sd_e2 = sample_std(t.s_e2, t.q_e2, M);
    rep.rows.push_back({k, moment_stats(t.x1_e2, sd_x1, sd_e2, M), moment_stats(t.d_e2, sd_d, sd_e2, M),
                        moment_stats(t.x1_d, sd_x1, sd_d, M)});
  }
  return rep;
}

namespace {

// Entries a player controls: (matrix, row) pairs with matrix 0 = K1, 1 = K2.
std::vector<std::pair<int, Eigen::Index>> controlled_rows(const StrategyProfile& p, int player) {
  std::vector<std::pair<int, Eigen::Index>> rows;
  const Eigen::Index total = p.K1.front().rows();
  if (player == 1) {
    for (Eigen::Index r = 0; r < p.m1; ++r) rows.emplace_back(0, r);
  } else {
    for (Eigen::Index r = p.m1; r < total; ++r) rows.emplace_back(0, r);
    for (Eigen::Index r = 0; r < p.K2.front().rows(); ++r) rows.emplace_back(1, r);
  }
  return rows;
}

void shift_entry(StrategyProfile& p, int mat, Eigen::Index r, Eigen::Index c, double delta) {
  auto& seq = mat == 0 ? p.K1 : p.K2;
  for (auto& K : seq) K(r, c) += delta;
}

}  // namespace

NashCertificate best_response_certificate(const SimulationSetup& setup,
                                          const std::vector<double>& epsilons, int runs,
                                          std::uint64_t seed, int threads) {
  if (epsilons.empty()) throw ValidationError("certificate needs at least one epsilon");
  if (runs < 2) throw ValidationError("certificate needs at least 2 runs");

  const auto base = per_run_costs(setup, runs, seed, threads);
  NashCertificate cert;
  cert.baseline = summarize(base, seed);
  const auto n = setup.spec.system.n();

  auto evaluate = [&](int player, const StrategyProfile& deviated, std::string direction, double eps) {
    SimulationSetup dev = setup;
    dev.profile = deviated;
    const auto costs = per_run_costs(dev, runs, seed, threads);
    std::vector<double> diff(costs.size());
    for (size_t r = 0; r < costs.size(); ++r)
      diff[r] = player == 1 ? costs[r].first - base[r].first : costs[r].second - base[r].second;
    Deviation d;
    d.player = player;
    d.direction = std::move(direction);
    d.epsilon = eps;
    mean_stderr(diff, d.delta_J, d.stderr);
    const double base_mean = player == 1 ? cert.baseline.mean1 : cert.baseline.mean2;
    const double floor = 1e-12 * (1.0 + std::abs(base_mean));
    d.pass = d.delta_J >= -3.0 * d.stderr - floor;
    if (d.pass && d.delta_J < 0.0 && std::abs(d.delta_J) < d.stderr) d.note = "inconclusive";
    cert.overall_pass = cert.overall_pass && d.pass;
    cert.deviations.push_back(std::move(d));
  };

  for (double eps : epsilons) {
    for (int player = 1; player <= 2; ++player) {
      const auto rows = controlled_rows(setup.profile, player);
      for (const auto& [mat, r] : rows)
        for (Eigen::Index c = 0; c < n; ++c)
          for (int sign : {+1, -1}) {
            StrategyProfile p = setup.profile;
            shift_entry(p, mat, r, c, sign * eps);
            const std::string name = std::string(mat == 0 ? "K1[" : "K2[") + std::to_string(r) + "][" +
                                     std::to_string(c) + "]" + (sign > 0 ? "+" : "-");
            evaluate(player, p, name, eps);
          }

      const VectorXd dir = standard_normal(static_cast<Eigen::Index>(rows.size()) * n, seed,
                                           std::numeric_limits<std::uint64_t>::max() - player, 0, kDirection)
                               .normalized();
      StrategyProfile p = setup.profile;
      for (size_t i = 0; i < rows.size(); ++i)
        for (Eigen::Index c = 0; c < n; ++c)
          shift_entry(p, rows[i].first, rows[i].second, c,
                      eps * dir(static_cast<Eigen::Index>(i) * n + c));
      evaluate(player, p, "random", eps);
    }
  }
  return cert;
}

MomentCosts moment_oracle(const SimulationSetup& setup) {
  const auto& s = setup.spec.system;
  const auto& w = setup.spec.weights;
  const auto& profile = setup.profile;
  const auto n = s.n();
  const auto m1 = s.m1();
  const auto m2 = s.m2();
  const auto p1 = s.p1();
  const auto p = p1 + s.p2();
  const int N = setup.horizon();
  const bool symmetric = profile.kind == ProfileKind::kSymmetricNash;
  const MatrixXd I = MatrixXd::Identity(n, n);

  // z = (x, xhat1, xhat2); selectors for the feedback sources.
  MatrixXd X = MatrixXd::Zero(n, 3 * n), Src = MatrixXd::Zero(n, 3 * n), D = MatrixXd::Zero(n, 3 * n);
  X.leftCols(n) = I;
  if (symmetric) {
    Src.rightCols(n) = I;
  } else {
    Src.middleCols(n, n) = I;
    D.middleCols(n, n) = -I;
    D.rightCols(n) = I;
  }

  VectorXd mz(3 * n);
  mz << s.mu, s.mu, s.mu;
  MatrixXd M = mz * mz.transpose();
  M.topLeftCorner(n, n) += s.sigma;
  const MatrixXd W = block_diag(block_diag(s.Qw, s.Qv1), s.Qv2);

  MomentCosts out;
  for (int k = 0; k <= N; ++k) {
    const auto& K1 = profile.K1[static_cast<size_t>(k)];
    const auto& K2 = profile.K2[static_cast<size_t>(k)];
    const MatrixXd U1 = K1.topRows(m1) * Src;
    const MatrixXd U2 = K1.bottomRows(m2) * Src + K2 * D;
    const MatrixXd Ub2 = setup.belief_K1[static_cast<size_t>(k)].bottomRows(m2) * Src;

    out.J1 += (X.transpose() * w.Q1 * X * M).trace() + (U1.transpose() * w.S1 * U1 * M).trace() +
              (U2.transpose() * w.R1 * U2 * M).trace();
    out.J2 += (X.transpose() * w.Q2 * X * M).trace() + (U1.transpose() * w.S2 * U1 * M).trace() +
              (U2.transpose() * w.R2 * U2 * M).trace();

    const auto& G1 = setup.schedule.G1[k];
    const auto& G2 = setup.schedule.G2[k];
    MatrixXd F(3 * n, 3 * n);
    MatrixXd Fx = MatrixXd::Zero(n, 3 * n), F1 = MatrixXd::Zero(n, 3 * n), F2 = MatrixXd::Zero(n, 3 * n);
    Fx.leftCols(n) = s.A;
    F1.leftCols(n) = s.A * G1 * s.C1;
    F1.middleCols(n, n) = s.A - s.A * G1 * s.C1;
    F2.leftCols(n) = s.A * G2 * setup.aug.C;
    F2.rightCols(n) = s.A - s.A * G2 * setup.aug.C;
    F << Fx + s.B1 * U1 + s.B2 * U2, F1 + s.B1 * U1 + s.B2 * Ub2, F2 + s.B1 * U1 + s.B2 * U2;

    MatrixXd Gn = MatrixXd::Zero(3 * n, n + p);
    Gn.topLeftCorner(n, n) = I;
    Gn.block(n, n, n, p1) = s.A * G1;
    Gn.block(2 * n, n, n, p) = s.A * G2;
    M = symmetrize(F * M * F.transpose() + Gn * W * Gn.transpose());
  }
  out.J1 += (w.P1_term * M.topLeftCorner(n, n)).trace();
  out.J2 += (w.Phi2_term * M.topLeftCorner(n, n)).trace();
  return out;
}

MomentCosts moment_oracle(const ProblemSpec& spec, const StrategyProfile& profile) {
  return moment_oracle(make_setup(spec, profile));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto n = traj.x.front().size();
  const auto m1 = traj.u1.empty() ? 0 : traj.u1.front().size();
  const auto m2 = traj.u2.empty() ? 0 : traj.u2.front().size();
  os << 'k';
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",xhat1_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",xhat2_" << i;
  for (Eigen::Index i = 1; i <= m1; ++i) os << ",u1_" << i;
  for (Eigen::Index i = 1; i <= m2; ++i) os << ",u2_" << i;
  os << '\n';
  os.precision(17);
  for (size_t k = 0; k < traj.x.size(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.x[k](i);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.xhat1_pred[k](i);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.xhat2_pred[k](i);
    const bool has_u = k < traj.u1.size();
    for (Eigen::Index i = 0; i < m1; ++i) {
      os << ',';
      if (has_u) os << traj.u1[k](i);
    }
    for (Eigen::Index i = 0; i < m2; ++i) {
      os << ',';
      if (has_u) os << traj.u2[k](i);
    }
    os << '\n';
  }
}

void write_certificate_csv(std::ostream& os, const NashCertificate& cert) {
  os << "player,direction,epsilon,delta_J,stderr,pass,note\n";
  os.precision(17);
  for (const auto& d : cert.deviations)
    os << d.player << ',' << d.direction << ',' << d.epsilon << ',' << d.delta_J << ',' << d.stderr << ','
       << (d.pass ? "true" : "false") << ',' << d.note << '\n';
}

}  // namespace lqgame
