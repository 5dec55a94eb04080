#pragma once

#include <Eigen/Dense>

namespace lqgame {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative tolerance used for every PSD test: min eig of the symmetric part
// must be >= -kPsdRelTol * (1 + ||M||).
inline constexpr double kPsdRelTol = 1e-10;

// Reciprocal-condition threshold below which a gain Hessian or innovation
// covariance is declared singular (condition estimate above 1e12).
inline constexpr double kMinRcond = 1e-12;

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Smallest eigenvalue of (M + M')/2. Returns 0 for empty matrices.
double min_sym_eigenvalue(const MatrixXd& m);

bool is_symmetric(const MatrixXd& m, double rel_tol = 1e-9);

// PSD up to kPsdRelTol * (1 + ||M||_F).
bool is_psd(const MatrixXd& m);

// Largest eigenvalue modulus.
double spectral_radius(const MatrixXd& m);

// Relative Frobenius change ||next - prev|| / (1 + ||prev||).
inline double relative_change(const MatrixXd& next, const MatrixXd& prev) {
  return (next - prev).norm() / (1.0 + prev.norm());
}

// Symmetric square root V diag(sqrt(max(lambda,0))) V' of a PSD matrix.
MatrixXd psd_sqrt(const MatrixXd& m);

MatrixXd block_diag(const MatrixXd& a, const MatrixXd& b);

// Numerical rank via SVD, tolerance relative to the largest singular value.
int rank_of(const Eigen::MatrixXcd& m, double rel_tol = 1e-9);

}  // namespace lqgame
