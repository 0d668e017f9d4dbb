#include "gridfreq/lyapunov.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "gridfreq/errors.hpp"

namespace gridfreq {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

}  // namespace

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw NumericalError("solve_lyapunov: A and Q must be square and of equal size");
  const Eigen::Index n = a.rows();
  if (n == 0) return MatrixXd(0, 0);

  // A = U T U^H. With Y = U^H X U the equation becomes T^H Y + Y T = -U^H Q U,
  // and column j of Y solves a lower-triangular system.
  Eigen::ComplexSchur<MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success)
    throw NumericalError("solve_lyapunov: Schur factorization failed");
  const MatrixXcd& u = schur.matrixU();
  const MatrixXcd& t = schur.matrixT();

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (t(i, i).real() >= -1e-13 * scale)
      throw NumericalError("solve_lyapunov: A is not Hurwitz (eigenvalue " +
                           std::to_string(t(i, i).real()) + " + " +
                           std::to_string(t(i, i).imag()) + "i)");
  }

  const MatrixXcd f = u.adjoint() * q.cast<std::complex<double>>() * u;
  const MatrixXcd t_h = t.adjoint();
  MatrixXcd y = MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = -f.col(j);
    for (Eigen::Index k = 0; k < j; ++k) rhs -= y.col(k) * t(k, j);
    MatrixXcd lhs = t_h;
    lhs.diagonal().array() += t(j, j);
    y.col(j) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  MatrixXd x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

MatrixXd orthogonal_complement(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  const double norm = v.norm();
  if (!(norm > 0.0)) throw NumericalError("orthogonal_complement: zero vector");
  Eigen::VectorXd e = v / norm;
  // Reflector H = I - 2 h h^T / h^T h with h = e + sign(e0) e1 maps e to -sign(e0) e1.
  Eigen::VectorXd h = e;
  h(0) += e(0) >= 0.0 ? 1.0 : -1.0;
  MatrixXd reflector = MatrixXd::Identity(n, n) - 2.0 * h * h.transpose() / h.squaredNorm();
  return reflector.rightCols(n - 1);
}

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q,
                        const Eigen::VectorXd& null_vector) {
  if (null_vector.size() != a.rows())
    throw NumericalError("solve_lyapunov: null vector has the wrong size");
  const double anorm = std::max(1.0, a.norm());
  if ((a * null_vector).norm() > 1e-12 * anorm * null_vector.norm())
    throw NumericalError("solve_lyapunov: supplied vector is not in the null space of A");
  const MatrixXd basis = orthogonal_complement(null_vector);
  const MatrixXd a_red = basis.transpose() * a * basis;
  const MatrixXd q_red = basis.transpose() * q * basis;
  const MatrixXd x_red = solve_lyapunov(a_red, q_red);
  return basis * x_red * basis.transpose();
}

double lyapunov_residual(const MatrixXd& a, const MatrixXd& x, const MatrixXd& q) {
  return (a.transpose() * x + x * a + q).norm();
}

}  // namespace gridfreq
