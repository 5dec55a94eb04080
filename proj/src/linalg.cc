#include "lqgame/linalg.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace lqgame {

double min_sym_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).norm() <= rel_tol * (1.0 + m.norm());
}

bool is_psd(const MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  return min_sym_eigenvalue(m) >= -kPsdRelTol * (1.0 + m.norm());
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

int rank_of(const Eigen::MatrixXcd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s(0));
  return static_cast<int>((s.array() > rel_tol * scale).count());
}

}  // namespace lqgame
