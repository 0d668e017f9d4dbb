#pragma once

#include <Eigen/Dense>

namespace gridfreq {

/// Solves A^T X + X A + Q = 0 for Hurwitz A (complex Bartels-Stewart).
/// Throws NumericalError if some pair of eigenvalues of A sums to ~0 or A
/// has an eigenvalue in the closed right half-plane.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Same equation when A has a known simple zero eigenvalue with right null
/// vector `null_vector` that Q does not see (Q v = 0). The rotation mode is
/// projected out, the reduced equation solved, and X re-embedded with X v = 0.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                               const Eigen::VectorXd& null_vector);

/// Orthonormal basis (dim x dim-1) of the complement of `v`, from the
/// Householder reflector that maps v onto e1.
Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& v);

/// ||A^T X + X A + Q||_F
double lyapunov_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& q);

}  // namespace gridfreq
