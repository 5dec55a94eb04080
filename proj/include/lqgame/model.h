#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lqgame/linalg.h"

namespace lqgame {

// Plant  x' = A x + B1 u1 + B2 u2 + w,  y1 = C1 x + v1,  y2 = C2 x + v2,
// with x0 ~ N(mu, sigma), w ~ N(0, Qw), vi ~ N(0, Qvi), all independent.
// Input maps are n x m_i.
struct SystemModel {
  MatrixXd A, B1, B2, C1, C2;
  MatrixXd Qw, Qv1, Qv2;
  VectorXd mu;
  MatrixXd sigma;

  int n() const { return static_cast<int>(A.rows()); }
  int m1() const { return static_cast<int>(B1.cols()); }
  int m2() const { return static_cast<int>(B2.cols()); }
  int p1() const { return static_cast<int>(C1.rows()); }
  int p2() const { return static_cast<int>(C2.rows()); }
};

// Player i pays  sum_k x'Q_i x + u1'S_i u1 + u2'R_i u2  plus a terminal
// quadratic. The four terminal matrices seed the four backward recursions.
struct CostWeights {
  MatrixXd Q1, Q2;
  MatrixXd S1, S2;  // m1 x m1
  MatrixXd R1, R2;  // m2 x m2
  MatrixXd P1_term, Phi1_term, P2_term, Phi2_term;
};

enum class InfoStructure { kAsymmetric, kSymmetric };

std::string_view to_string(InfoStructure info);

struct ProblemSpec {
  SystemModel system;
  CostWeights weights;
  int horizon = 0;
  InfoStructure info = InfoStructure::kAsymmetric;
};

// Stacked quantities shared by both players' recursions.
struct AugmentedModel {
  MatrixXd B;       // [B1 B2]
  MatrixXd C;       // [C1; C2]
  MatrixXd Qv;      // blockdiag(Qv1, Qv2)
  MatrixXd Gamma1;  // blockdiag(S1, R1)
  MatrixXd Gamma2;  // blockdiag(S2, R2)
};

enum class Severity { kFatal, kWarning };

struct ValidationCheck {
  std::string name;
  Severity severity = Severity::kFatal;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  // No fatal check failed: finite-horizon solves may proceed.
  bool passed() const;
  // Every check, including warnings, passed.
  bool clean() const;
  // Stabilizability/detectability and (A,C) observability all hold, which is
  // what the steady-state solve needs.
  bool steady_state_ready() const;

  const ValidationCheck* find(std::string_view name) const;
  std::vector<const ValidationCheck*> failures() const;
  std::string summary() const;
};

ValidationReport validate(const ProblemSpec& spec);

// Throws ValidationError listing every fatal failure.
void require_valid(const ProblemSpec& spec);

AugmentedModel augment(const ProblemSpec& spec);

// PBH tests. `stable_modes_ok` relaxes controllability to stabilizability
// (only modes with |lambda| >= 1 are tested).
bool pbh_controllable(const MatrixXd& A, const MatrixXd& B, bool stable_modes_ok);
bool pbh_observable(const MatrixXd& A, const MatrixXd& C, bool stable_modes_ok);

// JSON model document <-> ProblemSpec. See README for the schema.
ProblemSpec load_spec(std::string_view text);
ProblemSpec load_spec_file(const std::string& path);
std::string serialize(const ProblemSpec& spec);

// The two-state, two-input example used throughout the numerical section.
ProblemSpec paper_example();

}  // namespace lqgame
