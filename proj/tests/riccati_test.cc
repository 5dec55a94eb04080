#include <gtest/gtest.h>

#include <sstream>

#include "lqgame/errors.h"
#include "lqgame/riccati.h"
#include "support/instances.h"

namespace lqgame {
namespace {

using testing::load_config;
using testing::scalar_game;

struct ScalarStep {
  double k1a, k1b, k2, p1, phi1, p2, phi2;
};

// Scalar recursion written out with plain doubles and an explicit 2x2 inverse.
std::vector<ScalarStep> scalar_recursion(double a, double b1, double b2, double q1, double q2, double s1,
                                         double s2, double r1, double r2, int N) {
  std::vector<ScalarStep> out(N + 2);
  out[N + 1] = {0, 0, 0, 1.0, 0.0, 0.0, 1.0};
  for (int k = N; k >= 0; --k) {
    const auto& nx = out[k + 1];
    const double h11 = s1 + b1 * b1 * nx.p1, h12 = b1 * b2 * nx.p1, h22 = r1 + b2 * b2 * nx.p1;
    const double det = h11 * h22 - h12 * h12;
    const double g1 = b1 * nx.p1 * a, g2 = b2 * nx.p1 * a;
    const double k1a = -(h22 * g1 - h12 * g2) / det;
    const double k1b = -(-h12 * g1 + h11 * g2) / det;
    const double k2 = -b2 * nx.p2 * a / (r2 + b2 * b2 * nx.p2);
    const double cl1 = a + b1 * k1a + b2 * k1b;
    const double cl2 = a + b2 * k2;
    ScalarStep st;
    st.k1a = k1a;
    st.k1b = k1b;
    st.k2 = k2;
    st.p1 = cl1 * cl1 * nx.p1 + q1 + s1 * k1a * k1a + r1 * k1b * k1b;
    st.phi1 = cl2 * cl2 * nx.phi1 + r1 * k2 * k2;
    st.phi2 = cl1 * cl1 * nx.phi2 + s2 * k1a * k1a + r2 * k1b * k1b + q2;
    st.p2 = cl2 * cl2 * nx.p2 + q2 + r2 * k2 * k2;
    out[k] = st;
  }
  return out;
}

TEST(GainsFrom, ScalarTwoInputCase) {
  const ProblemSpec spec = scalar_game();
  const StepGains g = gains_from(spec, augment(spec), MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1));
  EXPECT_NEAR(g.K1(0, 0), -0.3, 1e-14);
  EXPECT_NEAR(g.K1(1, 0), -0.3, 1e-14);
  EXPECT_NEAR(g.K2(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(g.H1(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(g.H1(0, 1), 1.0, 1e-14);
}

TEST(Backward, MatchesScalarRecursion) {
  ProblemSpec spec = scalar_game();
  spec.weights.S2(0, 0) = 0.7;
  spec.weights.R1(0, 0) = 1.3;
  spec.weights.Q2(0, 0) = 2.0;
  const auto rt = backward(spec, augment(spec));
  const auto ref = scalar_recursion(0.9, 1, 1, 1, 2.0, 1, 0.7, 1.3, 1, spec.horizon);
  for (int k = 0; k <= spec.horizon; ++k) {
    EXPECT_NEAR(rt.K1[k](0, 0), ref[k].k1a, 1e-13) << k;
    EXPECT_NEAR(rt.K1[k](1, 0), ref[k].k1b, 1e-13) << k;
    EXPECT_NEAR(rt.K2[k](0, 0), ref[k].k2, 1e-13) << k;
    EXPECT_NEAR(rt.P1[k](0, 0), ref[k].p1, 1e-12) << k;
    EXPECT_NEAR(rt.Phi1[k](0, 0), ref[k].phi1, 1e-12) << k;
    EXPECT_NEAR(rt.P2[k](0, 0), ref[k].p2, 1e-12) << k;
    EXPECT_NEAR(rt.Phi2[k](0, 0), ref[k].phi2, 1e-12) << k;
  }
}

TEST(Backward, ScalarGameReferenceValues) {
  const auto rt = backward(scalar_game(), augment(scalar_game()));
  EXPECT_NEAR(rt.K1[0](0, 0), -0.3244355871023259, 1e-12);
  EXPECT_NEAR(rt.K2[0](0, 0), -0.5360992257966898, 1e-12);
  EXPECT_NEAR(rt.P1[0](0, 0), 1.2919920283920934, 1e-12);
  EXPECT_NEAR(rt.Phi1[0](0, 0), 0.32776547642333687, 1e-12);
}

TEST(Backward, TwoStateExampleReferenceValues) {
  const ProblemSpec spec = paper_example();
  const auto rt = backward(spec, augment(spec));
  MatrixXd K1(4, 2), K2(2, 2), P1(2, 2), Phi1(2, 2);
  K1 << -0.8379065472495382, -0.06771883825306202, -0.03402887010675778, -0.7157932354172284,
      -0.3665841144216729, -0.029626991735714647, -0.022685913404505206, -0.4771954902781522;
  K2 << -0.7913417607089056, -0.08719238102413712, -0.07010960729923973, -0.743464272180131;
  P1 << 4.0551396321018185, 0.2136307027478172, 0.2136307027478172, 4.299003208116764;
  Phi1 << 2.485001281309756, 0.4969007299657587, 0.4969007299657586, 2.0224111894858945;
  EXPECT_LT((rt.K1[0] - K1).norm(), 1e-10);
  EXPECT_LT((rt.K2[0] - K2).norm(), 1e-10);
  EXPECT_LT((rt.P1[0] - P1).norm(), 1e-10);
  EXPECT_LT((rt.Phi1[0] - Phi1).norm(), 1e-10);
}

TEST(Backward, ZeroDynamicsGivesZeroGains) {
  const ProblemSpec spec = load_config("zero_dynamics");
  const auto rt = backward(spec, augment(spec));
  for (int k = 0; k <= spec.horizon; ++k) {
    EXPECT_EQ(rt.K1[k].norm(), 0.0);
    EXPECT_EQ(rt.K2[k].norm(), 0.0);
    EXPECT_EQ(rt.P1[k], spec.weights.Q1);
    EXPECT_EQ(rt.Phi1[k].norm(), 0.0);
  }
}

TEST(Backward, MatricesStaySymmetricPsdOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const ProblemSpec spec = testing::random_instance(seed);
    const auto rt = backward(spec, augment(spec));
    for (int k = 0; k <= spec.horizon + 1; ++k)
      for (const auto* m : {&rt.P1[k], &rt.Phi1[k], &rt.P2[k], &rt.Phi2[k]}) {
        EXPECT_TRUE(is_symmetric(*m)) << "seed " << seed << " k " << k;
        EXPECT_TRUE(is_psd(*m)) << "seed " << seed << " k " << k;
      }
  }
}

TEST(Backward, SingularHessianReportsStep) {
  ProblemSpec spec = scalar_game();
  spec.weights.S1 = MatrixXd::Zero(1, 1);
  spec.weights.R1 = MatrixXd::Zero(1, 1);
  spec.weights.P1_term = MatrixXd::Zero(1, 1);
  try {
    backward(spec, augment(spec));
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.step(), spec.horizon);
    EXPECT_NE(std::string(e.what()).find("player 1"), std::string::npos);
  }
}

TEST(ForwardSteady, ConvergesToStabilizingFixedPoint) {
  const ProblemSpec spec = paper_example();
  const auto aug = augment(spec);
  const SteadyRiccati sr = forward_steady(spec, aug);
  EXPECT_LT(sr.residual, 1e-10);
  EXPECT_LE(sr.iterations, 2000);
  EXPECT_LT(fixed_point_residual(sr, spec, aug), 1e-9);
  const auto rho = closed_loop_spectra(sr, spec, aug);
  EXPECT_LT(rho.rho1, 1.0);
  EXPECT_LT(rho.rho2, 1.0);
}

TEST(ForwardSteady, AgreesWithLongBackwardPass) {
  ProblemSpec spec = paper_example();
  spec.horizon = 500;
  const auto aug = augment(spec);
  const auto sr = forward_steady(spec, aug);
  const auto rt = backward(spec, aug);
  EXPECT_LT((rt.P1[0] - sr.P1).norm(), 1e-6);
  EXPECT_LT((rt.Phi1[0] - sr.Phi1).norm(), 1e-6);
  EXPECT_LT((rt.P2[0] - sr.P2).norm(), 1e-6);
  EXPECT_LT((rt.Phi2[0] - sr.Phi2).norm(), 1e-6);
  EXPECT_LT((rt.K1[0] - sr.K1).norm(), 1e-6);
  EXPECT_LT((rt.K2[0] - sr.K2).norm(), 1e-6);
}

TEST(ForwardSteady, ZeroDynamicsConvergesImmediately) {
  const ProblemSpec spec = load_config("zero_dynamics");
  const auto sr = forward_steady(spec, augment(spec));
  EXPECT_LE(sr.iterations, 2);
  EXPECT_EQ(sr.K1.norm(), 0.0);
}

TEST(ForwardSteady, IterationCapRaisesWithHistory) {
  const ProblemSpec spec = paper_example();
  SteadyOptions opts;
  opts.max_iter = 3;
  try {
    forward_steady(spec, augment(spec), opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.residuals().size(), 3u);
  }
}

TEST(ForwardSteady, InitialScaleDoesNotChangeLimit) {
  const ProblemSpec spec = paper_example();
  const auto aug = augment(spec);
  SteadyOptions a, b;
  b.init_scale = 10.0;
  const auto s1 = forward_steady(spec, aug, a);
  const auto s2 = forward_steady(spec, aug, b);
  EXPECT_LT((s1.P1 - s2.P1).norm(), 1e-8);
  EXPECT_LT((s1.Phi2 - s2.Phi2).norm(), 1e-8);
}

TEST(RiccatiCsv, HasHeaderAndAllEntries) {
  const ProblemSpec spec = scalar_game();
  std::ostringstream os;
  write_riccati_csv(os, backward(spec, augment(spec)));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("k,matrix,i,j,value\n", 0), 0u);
  // 4 matrices x (N+2) + (2 + 1) gain entries x (N+1), plus the header.
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 4 * 5 + 3 * 4);
}

}  // namespace
}  // namespace lqgame
