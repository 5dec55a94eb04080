#include "lqgame/model.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include "json.hpp"

#include "lqgame/errors.h"

namespace lqgame {

namespace {

using json = nlohmann::json;

std::string shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shape(ValidationReport& report, const std::string& name, const MatrixXd& m, int rows,
                 int cols) {
  ValidationCheck c{"dim:" + name, Severity::kFatal, true, ""};
  if (m.rows() != rows || m.cols() != cols) {
    c.passed = false;
    c.detail = name + " is " + shape(m) + ", expected " + std::to_string(rows) + "x" +
               std::to_string(cols);
  }
  report.checks.push_back(std::move(c));
}

void check_psd(ValidationReport& report, const std::string& name, const MatrixXd& m) {
  ValidationCheck c{"psd:" + name, Severity::kFatal, true, ""};
  if (!is_symmetric(m)) {
    c.passed = false;
    c.detail = name + " is not symmetric";
  } else if (!is_psd(m)) {
    c.passed = false;
    c.detail = name + " has min eigenvalue " + std::to_string(min_sym_eigenvalue(m));
  }
  report.checks.push_back(std::move(c));
}

void check_pd(ValidationReport& report, const std::string& name, const MatrixXd& m) {
  ValidationCheck c{"pd:" + name, Severity::kFatal, true, ""};
  if (!is_symmetric(m)) {
    c.passed = false;
    c.detail = name + " is not symmetric";
  } else {
    Eigen::LLT<MatrixXd> llt(symmetrize(m));
    if (llt.info() != Eigen::Success || llt.rcond() < kMinRcond) {
      c.passed = false;
      c.detail = "innovation covariance singular: " + name + " must be positive definite";
    }
  }
  report.checks.push_back(std::move(c));
}

void check_warning(ValidationReport& report, const std::string& name, bool ok,
                   const std::string& detail) {
  report.checks.push_back({name, Severity::kWarning, ok, ok ? "" : detail});
}

}  // namespace

std::string_view to_string(InfoStructure info) {
  return info == InfoStructure::kAsymmetric ? "asymmetric" : "symmetric";
}

bool ValidationReport::passed() const {
  for (const auto& c : checks)
    if (c.severity == Severity::kFatal && !c.passed) return false;
  return true;
}

bool ValidationReport::clean() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

bool ValidationReport::steady_state_ready() const {
  if (!passed()) return false;
  for (const char* name : {"stabilizable:(A,B)", "stabilizable:(A,B2)", "detectable:(A,Q1^1/2)",
                           "detectable:(A,Q2^1/2)", "observable:(A,C)"}) {
    const auto* c = find(name);
    if (c == nullptr || !c->passed) return false;
  }
  return true;
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<const ValidationCheck*> ValidationReport::failures() const {
  std::vector<const ValidationCheck*> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(&c);
  return out;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto* c : failures()) {
    os << (c->severity == Severity::kFatal ? "error: " : "warning: ") << c->name;
    if (!c->detail.empty()) os << " (" << c->detail << ")";
    os << "\n";
  }
  return os.str();
}

bool pbh_controllable(const MatrixXd& A, const MatrixXd& B, bool stable_modes_ok) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (stable_modes_ok && std::abs(lambda) < 1.0 - 1e-12) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil << lambda * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>(),
        B.cast<std::complex<double>>();
    if (rank_of(pencil) < n) return false;
  }
  return true;
}

bool pbh_observable(const MatrixXd& A, const MatrixXd& C, bool stable_modes_ok) {
  return pbh_controllable(A.transpose(), C.transpose(), stable_modes_ok);
}

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport report;
  const auto& s = spec.system;
  const auto& w = spec.weights;
  const int n = static_cast<int>(s.A.rows());
  const int m1 = s.m1(), m2 = s.m2(), p1 = s.p1(), p2 = s.p2();

  report.checks.push_back({"dim:positive", Severity::kFatal, n > 0 && m1 > 0 && m2 > 0 && p1 > 0 && p2 > 0,
                           "n, m1, m2, p1, p2 must all be positive"});
  if (!report.checks.back().passed) return report;
  report.checks.push_back({"horizon", Severity::kFatal, spec.horizon >= 0, "horizon must be >= 0"});

  check_shape(report, "A", s.A, n, n);
  check_shape(report, "B1", s.B1, n, m1);
  check_shape(report, "B2", s.B2, n, m2);
  check_shape(report, "C1", s.C1, p1, n);
  check_shape(report, "C2", s.C2, p2, n);
  check_shape(report, "Qw", s.Qw, n, n);
  check_shape(report, "Qv1", s.Qv1, p1, p1);
  check_shape(report, "Qv2", s.Qv2, p2, p2);
  check_shape(report, "mu", s.mu, n, 1);
  check_shape(report, "sigma", s.sigma, n, n);
  check_shape(report, "Q1", w.Q1, n, n);
  check_shape(report, "Q2", w.Q2, n, n);
  check_shape(report, "S1", w.S1, m1, m1);
  check_shape(report, "S2", w.S2, m1, m1);
  check_shape(report, "R1", w.R1, m2, m2);
  check_shape(report, "R2", w.R2, m2, m2);
  check_shape(report, "P1_term", w.P1_term, n, n);
  check_shape(report, "Phi1_term", w.Phi1_term, n, n);
  check_shape(report, "P2_term", w.P2_term, n, n);
  check_shape(report, "Phi2_term", w.Phi2_term, n, n);
  if (!report.passed()) return report;

  check_psd(report, "Qw", s.Qw);
  check_psd(report, "sigma", s.sigma);
  check_pd(report, "Qv1", s.Qv1);
  check_pd(report, "Qv2", s.Qv2);
  check_psd(report, "Q1", w.Q1);
  check_psd(report, "Q2", w.Q2);
  check_psd(report, "S1", w.S1);
  check_psd(report, "S2", w.S2);
  check_psd(report, "R1", w.R1);
  check_psd(report, "R2", w.R2);
  check_psd(report, "P1_term", w.P1_term);
  check_psd(report, "Phi1_term", w.Phi1_term);
  check_psd(report, "P2_term", w.P2_term);
  check_psd(report, "Phi2_term", w.Phi2_term);
  if (!report.passed()) return report;

  MatrixXd B(n, m1 + m2);
  B << s.B1, s.B2;
  MatrixXd C(p1 + p2, n);
  C << s.C1, s.C2;
  check_warning(report, "stabilizable:(A,B)", pbh_controllable(s.A, B, true),
                "(A,B) has an uncontrollable mode with |lambda| >= 1");
  check_warning(report, "stabilizable:(A,B2)", pbh_controllable(s.A, s.B2, true),
                "(A,B2) has an uncontrollable mode with |lambda| >= 1");
  check_warning(report, "detectable:(A,Q1^1/2)", pbh_observable(s.A, psd_sqrt(w.Q1), true),
                "(A,Q1^1/2) has an unobservable mode with |lambda| >= 1");
  check_warning(report, "detectable:(A,Q2^1/2)", pbh_observable(s.A, psd_sqrt(w.Q2), true),
                "(A,Q2^1/2) has an unobservable mode with |lambda| >= 1");
  check_warning(report, "observable:(A,C1)", pbh_observable(s.A, s.C1, false),
                "(A,C1) is not observable");
  check_warning(report, "observable:(A,C2)", pbh_observable(s.A, s.C2, false),
                "(A,C2) is not observable");
  check_warning(report, "observable:(A,C)", pbh_observable(s.A, C, false),
                "(A,C) is not observable");
  return report;
}

void require_valid(const ProblemSpec& spec) {
  const auto report = validate(spec);
  if (!report.passed()) throw ValidationError(report.summary());
}

AugmentedModel augment(const ProblemSpec& spec) {
  const auto& s = spec.system;
  const auto& w = spec.weights;
  AugmentedModel aug;
  aug.B.resize(s.n(), s.m1() + s.m2());
  aug.B << s.B1, s.B2;
  aug.C.resize(s.p1() + s.p2(), s.n());
  aug.C << s.C1, s.C2;
  aug.Qv = block_diag(s.Qv1, s.Qv2);
  aug.Gamma1 = block_diag(w.S1, w.R1);
  aug.Gamma2 = block_diag(w.S2, w.R2);
  return aug;
}

// ---------------------------------------------------------------------------
// JSON model documents

namespace {

const json& require_key(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SpecParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SpecParseError(path + "/" + key, "missing required key '" + key + "'");
  return *it;
}

double parse_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SpecParseError(path, "expected a number");
  return v.get<double>();
}

MatrixXd parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw SpecParseError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array() || v[0].empty())
    throw SpecParseError(path + "/0", "expected a non-empty row array");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<size_t>(i)];
    const std::string row_path = path + "/" + std::to_string(i);
    if (!row.is_array()) throw SpecParseError(row_path, "expected a row array");
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw SpecParseError(row_path, "ragged matrix: row has " + std::to_string(row.size()) +
                                         " entries, expected " + std::to_string(cols));
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = parse_number(row[static_cast<size_t>(j)], row_path + "/" + std::to_string(j));
  }
  return m;
}

VectorXd parse_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw SpecParseError(path, "expected a flat array");
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = parse_number(v[i], path + "/" + std::to_string(i));
  return out;
}

MatrixXd matrix_at(const json& obj, const std::string& key, const std::string& path, Eigen::Index rows,
                   Eigen::Index cols) {
  const std::string here = path + "/" + key;
  MatrixXd m = parse_matrix(require_key(obj, key, path), here);
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols))
    throw SpecParseError(here, key + " has shape " + shape(m) + ", expected " +
                                   (rows >= 0 ? std::to_string(rows) : std::string("?")) + "x" +
                                   (cols >= 0 ? std::to_string(cols) : std::string("?")));
  return m;
}

MatrixXd optional_matrix(const json& obj, const std::string& key, const std::string& path,
                         Eigen::Index n, const MatrixXd& fallback) {
  if (!obj.contains(key)) return fallback;
  return matrix_at(obj, key, path, n, n);
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

ProblemSpec load_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecParseError("", std::string("malformed document: ") + e.what());
  }

  ProblemSpec spec;
  const json& sys = require_key(doc, "system", "");
  const std::string sp = "/system";
  auto& s = spec.system;
  s.A = matrix_at(sys, "A", sp, -1, -1);
  if (s.A.rows() != s.A.cols())
    throw SpecParseError(sp + "/A", "A has shape " + shape(s.A) + ", expected a square matrix");
  const Eigen::Index n = s.A.rows();
  s.B1 = matrix_at(sys, "B1", sp, n, -1);
  s.B2 = matrix_at(sys, "B2", sp, n, -1);
  s.C1 = matrix_at(sys, "C1", sp, -1, n);
  s.C2 = matrix_at(sys, "C2", sp, -1, n);
  s.Qw = matrix_at(sys, "Qw", sp, n, n);
  s.Qv1 = matrix_at(sys, "Qv1", sp, s.C1.rows(), s.C1.rows());
  s.Qv2 = matrix_at(sys, "Qv2", sp, s.C2.rows(), s.C2.rows());
  s.sigma = matrix_at(sys, "sigma", sp, n, n);
  if (sys.contains("mu")) {
    s.mu = parse_vector(sys["mu"], sp + "/mu");
    if (s.mu.size() != n)
      throw SpecParseError(sp + "/mu", "mu has length " + std::to_string(s.mu.size()) +
                                           ", expected " + std::to_string(n));
  } else {
    s.mu = VectorXd::Zero(n);
  }

  const json& wts = require_key(doc, "weights", "");
  const std::string wp = "/weights";
  auto& w = spec.weights;
  const Eigen::Index m1 = s.B1.cols(), m2 = s.B2.cols();
  w.Q1 = matrix_at(wts, "Q1", wp, n, n);
  w.Q2 = matrix_at(wts, "Q2", wp, n, n);
  w.S1 = matrix_at(wts, "S1", wp, m1, m1);
  w.S2 = matrix_at(wts, "S2", wp, m1, m1);
  w.R1 = matrix_at(wts, "R1", wp, m2, m2);
  w.R2 = matrix_at(wts, "R2", wp, m2, m2);
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const MatrixXd zero = MatrixXd::Zero(n, n);
  w.P1_term = optional_matrix(wts, "P1_term", wp, n, eye);
  w.Phi1_term = optional_matrix(wts, "Phi1_term", wp, n, zero);
  w.P2_term = optional_matrix(wts, "P2_term", wp, n, zero);
  w.Phi2_term = optional_matrix(wts, "Phi2_term", wp, n, eye);

  const json& horizon = require_key(doc, "horizon", "");
  if (!horizon.is_number_integer() || horizon.get<long long>() < 0)
    throw SpecParseError("/horizon", "horizon must be a nonnegative integer");
  spec.horizon = horizon.get<int>();

  const json& info = require_key(doc, "info", "");
  if (info == "asymmetric") {
    spec.info = InfoStructure::kAsymmetric;
  } else if (info == "symmetric") {
    spec.info = InfoStructure::kSymmetric;
  } else {
    throw SpecParseError("/info", "info must be \"asymmetric\" or \"symmetric\"");
  }
  return spec;
}

ProblemSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_spec(buf.str());
}

std::string serialize(const ProblemSpec& spec) {
  const auto& s = spec.system;
  const auto& w = spec.weights;
  json doc;
  doc["system"] = {{"A", to_json(s.A)},   {"B1", to_json(s.B1)},   {"B2", to_json(s.B2)},
                   {"C1", to_json(s.C1)}, {"C2", to_json(s.C2)},   {"Qw", to_json(s.Qw)},
                   {"Qv1", to_json(s.Qv1)}, {"Qv2", to_json(s.Qv2)}, {"mu", to_json(s.mu)},
                   {"sigma", to_json(s.sigma)}};
  doc["weights"] = {{"Q1", to_json(w.Q1)},
                    {"Q2", to_json(w.Q2)},
                    {"S1", to_json(w.S1)},
                    {"S2", to_json(w.S2)},
                    {"R1", to_json(w.R1)},
                    {"R2", to_json(w.R2)},
                    {"P1_term", to_json(w.P1_term)},
                    {"Phi1_term", to_json(w.Phi1_term)},
                    {"P2_term", to_json(w.P2_term)},
                    {"Phi2_term", to_json(w.Phi2_term)}};
  doc["horizon"] = spec.horizon;
  doc["info"] = std::string(to_string(spec.info));
  return doc.dump(2);
}

ProblemSpec paper_example() {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  ProblemSpec spec;
  auto& s = spec.system;
  s.A.resize(2, 2);
  s.A << 0.98, 0.05, 0.02, 0.96;
  s.B1 = VectorXd((VectorXd(2) << 0.40, 0.30).finished()).asDiagonal();
  s.B2 = VectorXd((VectorXd(2) << 0.35, 0.40).finished()).asDiagonal();
  s.C1.resize(2, 2);
  s.C1 << 1, 0, 0, 0;
  s.C2 = I2;
  s.Qw = 0.06 * I2;
  s.sigma = 0.1 * I2;
  s.Qv1 = 0.3 * I2;
  s.Qv2 = 0.01 * I2;
  s.mu = VectorXd::Zero(2);

  auto& w = spec.weights;
  w.Q1 = 2.0 * I2;
  w.Q2 = 2.0 * I2;
  w.S1 = I2;
  w.S2 = I2;
  w.R1 = 2.0 * I2;
  w.R2 = 2.0 * I2;
  w.P1_term = I2;
  w.Phi1_term = MatrixXd::Zero(2, 2);
  w.P2_term = MatrixXd::Zero(2, 2);
  w.Phi2_term = I2;

  spec.horizon = 50;
  spec.info = InfoStructure::kAsymmetric;
  return spec;
}

}  // namespace lqgame
