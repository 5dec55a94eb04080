#include <gtest/gtest.h>

#include "lqgame/errors.h"
#include "lqgame/model.h"
#include "support/instances.h"

namespace lqgame {
namespace {

using testing::load_config;

constexpr const char* kScalarDoc = R"({
  "system": {"A": [[0.9]], "B1": [[1]], "B2": [[1]], "C1": [[1]], "C2": [[1]],
             "Qw": [[0.5]], "Qv1": [[1]], "Qv2": [[1]], "sigma": [[1]]},
  "weights": {"Q1": [[1]], "Q2": [[1]], "S1": [[1]], "S2": [[1]], "R1": [[1]], "R2": [[1]]},
  "horizon": 3, "info": "asymmetric"})";

TEST(LoadSpec, FillsDefaults) {
  const ProblemSpec spec = load_spec(kScalarDoc);
  EXPECT_EQ(spec.system.n(), 1);
  EXPECT_EQ(spec.horizon, 3);
  EXPECT_EQ(spec.system.mu(0), 0.0);
  EXPECT_EQ(spec.weights.P1_term(0, 0), 1.0);
  EXPECT_EQ(spec.weights.Phi1_term(0, 0), 0.0);
  EXPECT_EQ(spec.weights.P2_term(0, 0), 0.0);
  EXPECT_EQ(spec.weights.Phi2_term(0, 0), 1.0);
}

TEST(LoadSpec, ConfigMatchesBuiltInExample) {
  const ProblemSpec a = load_config("paper_example");
  const ProblemSpec b = paper_example();
  EXPECT_TRUE(a.system.A.isApprox(b.system.A));
  EXPECT_TRUE(a.system.B1.isApprox(b.system.B1));
  EXPECT_TRUE(a.system.B2.isApprox(b.system.B2));
  EXPECT_TRUE(a.system.C1.isApprox(b.system.C1));
  EXPECT_TRUE(a.system.Qv2.isApprox(b.system.Qv2));
  EXPECT_TRUE(a.weights.R1.isApprox(b.weights.R1));
  EXPECT_EQ(a.horizon, b.horizon);
}

TEST(LoadSpec, RoundTripsThroughSerialize) {
  const ProblemSpec a = paper_example();
  const ProblemSpec b = load_spec(serialize(a));
  EXPECT_EQ(a.system.A, b.system.A);
  EXPECT_EQ(a.system.sigma, b.system.sigma);
  EXPECT_EQ(a.weights.Phi2_term, b.weights.Phi2_term);
  EXPECT_EQ(a.info, b.info);
}

TEST(LoadSpec, MissingKeyNamesPath) {
  std::string doc = kScalarDoc;
  doc.replace(doc.find("\"Qw\""), 4, "\"Qx\"");
  try {
    load_spec(doc);
    FAIL() << "expected SpecParseError";
  } catch (const SpecParseError& e) {
    EXPECT_NE(std::string(e.what()).find("Qw"), std::string::npos);
    EXPECT_EQ(e.path(), "/system/Qw");
  }
}

TEST(LoadSpec, ShapeMismatchNamesMatrix) {
  std::string doc = kScalarDoc;
  doc.replace(doc.find("\"B1\": [[1]]"), 11, "\"B1\": [[1], [2]]");
  try {
    load_spec(doc);
    FAIL() << "expected SpecParseError";
  } catch (const SpecParseError& e) {
    EXPECT_EQ(e.path(), "/system/B1");
  }
}

TEST(LoadSpec, RejectsUnknownInfoAndNegativeHorizon) {
  std::string doc = kScalarDoc;
  doc.replace(doc.find("asymmetric"), 10, "partial");
  EXPECT_THROW(load_spec(doc), SpecParseError);
  std::string neg = kScalarDoc;
  neg.replace(neg.find("\"horizon\": 3"), 12, "\"horizon\": -1");
  EXPECT_THROW(load_spec(neg), SpecParseError);
  EXPECT_THROW(load_spec("{not json"), SpecParseError);
}

TEST(Validate, ExampleIsClean) {
  const auto report = validate(paper_example());
  EXPECT_TRUE(report.passed()) << report.summary();
  EXPECT_TRUE(report.steady_state_ready()) << report.summary();
}

TEST(Validate, SingularSensorNoiseIsFatalAndNamed) {
  ProblemSpec spec = paper_example();
  spec.system.Qv1 = MatrixXd::Zero(2, 2);
  const auto report = validate(spec);
  EXPECT_FALSE(report.passed());
  EXPECT_NE(report.summary().find("Qv1"), std::string::npos);
  try {
    require_valid(spec);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Qv1"), std::string::npos);
  }
}

TEST(Validate, IndefiniteWeightIsFatal) {
  ProblemSpec spec = paper_example();
  spec.weights.Q2(0, 0) = -1.0;
  EXPECT_FALSE(validate(spec).passed());
}

TEST(Validate, ObservabilityLossIsOnlyAWarning) {
  const auto report = validate(load_config("identical_filters"));
  EXPECT_TRUE(report.passed());
  const auto* c = report.find("observable:(A,C2)");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->passed);
  EXPECT_EQ(c->severity, Severity::kWarning);
}

TEST(Validate, UndetectableCostBlocksSteadyState) {
  ProblemSpec spec = load_config("unstable_scalar");
  spec.weights.Q1 = MatrixXd::Zero(1, 1);
  const auto report = validate(spec);
  EXPECT_TRUE(report.passed());
  EXPECT_FALSE(report.steady_state_ready());
}

TEST(Augment, StacksBlocks) {
  const ProblemSpec spec = paper_example();
  const AugmentedModel aug = augment(spec);
  EXPECT_EQ(aug.B.rows(), 2);
  EXPECT_EQ(aug.B.cols(), 4);
  EXPECT_EQ(aug.C.rows(), 4);
  EXPECT_EQ(aug.Qv.rows(), 4);
  EXPECT_EQ(aug.Qv(1, 1), 0.3);
  EXPECT_EQ(aug.Qv(3, 3), 0.01);
  EXPECT_EQ(aug.Qv(0, 3), 0.0);
  EXPECT_EQ(aug.Gamma1(0, 0), 1.0);
  EXPECT_EQ(aug.Gamma1(2, 2), 2.0);
}

TEST(Pbh, DetectsUncontrollableUnstableMode) {
  MatrixXd A(2, 2);
  A << 1.5, 0, 0, 0.5;
  MatrixXd B(2, 1);
  B << 0, 1;
  EXPECT_FALSE(pbh_controllable(A, B, true));
  A(1, 1) = 0.5;
  A(0, 0) = 0.5;
  EXPECT_TRUE(pbh_controllable(A, B, true));
  EXPECT_FALSE(pbh_controllable(A, B, false));
  EXPECT_TRUE(pbh_observable(A, B.transpose(), true));
}

TEST(RandomInstance, IsDeterministicAndValid) {
  const ProblemSpec a = testing::random_instance(7);
  const ProblemSpec b = testing::random_instance(7);
  EXPECT_EQ(a.system.A, b.system.A);
  EXPECT_LE(a.system.n(), 4);
  EXPECT_TRUE(validate(a).steady_state_ready());
}

}  // namespace
}  // namespace lqgame
