#include "gridfreq/h2_norm.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "gridfreq/lyapunov.hpp"

namespace gridfreq {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using cplx = std::complex<double>;

// Realization with the rotation mode projected out (when present).
struct Deflated {
  MatrixXd a, b, c;
};

Deflated deflate(const StateSpaceModel& model) {
  if (model.rotation.size() == 0) return {model.a, model.b, model.c};
  const MatrixXd basis = orthogonal_complement(model.rotation);
  return {basis.transpose() * model.a * basis, basis.transpose() * model.b,
          model.c * basis};
}

double sigma_max(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXcd>(m).singularValues()(0);
}

void require_stable(const MatrixXd& a) {
  if (a.rows() == 0) return;
  const Eigen::VectorXcd eig = a.eigenvalues();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    if (eig(i).real() >= -1e-13 * scale)
      throw NumericalError("closed loop is not asymptotically stable (eigenvalue " +
                           std::to_string(eig(i).real()) + " + " +
                           std::to_string(eig(i).imag()) + "i)");
}

// ||G(i w)||_F^2 for a strictly proper G = C (sI - A)^-1 B.
class SpectralDensity {
 public:
  SpectralDensity(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
    Eigen::EigenSolver<MatrixXd> eig(a);
    if (eig.info() == Eigen::Success) {
      const MatrixXcd v = eig.eigenvectors();
      const auto sv = Eigen::JacobiSVD<MatrixXcd>(v).singularValues();
      if (sv.size() > 0 && sv(sv.size() - 1) > 1e-10 * sv(0)) {
        poles_ = eig.eigenvalues();
        const MatrixXcd cv = c.cast<cplx>() * v;
        const MatrixXcd h = v.partialPivLu().solve(b.cast<cplx>());
        const MatrixXcd cc = cv.adjoint() * cv;
        const MatrixXcd hh = h * h.adjoint();
        weights_ = cc.cwiseProduct(hh.transpose());
        diagonal_ = true;
        return;
      }
    }
    // Near-defective A: evaluate through the Schur form instead.
    Eigen::ComplexSchur<MatrixXcd> schur(a.cast<cplx>());
    if (schur.info() != Eigen::Success)
      throw NumericalError("frequency response: Schur factorization failed");
    t_ = schur.matrixT();
    cu_ = c.cast<cplx>() * schur.matrixU();
    ub_ = schur.matrixU().adjoint() * b.cast<cplx>();
  }

  double operator()(double omega) const {
    const cplx s(0.0, omega);
    if (diagonal_) {
      Eigen::VectorXcd r(poles_.size());
      for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = 1.0 / (s - poles_(k));
      return std::max(0.0, (r.adjoint() * (weights_ * r))(0).real());
    }
    MatrixXcd shifted = -t_;
    shifted.diagonal().array() += s;
    const MatrixXcd y = shifted.triangularView<Eigen::Upper>().solve(ub_);
    return (cu_ * y).squaredNorm();
  }

 private:
  bool diagonal_ = false;
  Eigen::VectorXcd poles_;
  MatrixXcd weights_;
  MatrixXcd t_, cu_, ub_;
};

// integral_{10^a}^{10^(a+1)} f(w) dw by composite Simpson in u = ln w.
double decade_integral(const SpectralDensity& f, int decade, int intervals) {
  const double u0 = decade * std::numbers::ln10;
  const double h = std::numbers::ln10 / intervals;
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double u = u0 + k * h;
    const double w = std::exp(u);
    const double weight = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += weight * f(w) * w;
  }
  return sum * h / 3.0;
}

}  // namespace

H2Result H2Result::make_finite(double value, std::string method) {
  H2Result r;
  r.kind = Kind::Finite;
  r.value = value;
  r.method = std::move(method);
  return r;
}

H2Result H2Result::make_infinite(double gain, double gain_check) {
  H2Result r;
  r.kind = Kind::Infinite;
  r.value = std::numeric_limits<double>::infinity();
  r.feedthrough_gain = gain;
  r.gain_at_1mhz = gain_check;
  r.method = "frequency-weighted";
  return r;
}

H2Result h2_gramian(const StateSpaceModel& model) {
  if (model.derivative_noise_present)
    throw NumericalError(
        "h2_gramian: model has derivative measurement noise (w3 = dw2/dt); "
        "use h2_frequency_weighted");
  const MatrixXd q = model.c.transpose() * model.c;
  const MatrixXd x = model.rotation.size() > 0
                         ? solve_lyapunov(model.a, q, model.rotation)
                         : solve_lyapunov(model.a, q);
  // B3 is zero here; only the w1/w2 blocks contribute.
  const MatrixXd b = model.b;
  return H2Result::make_finite((b.transpose() * x * b).trace(), "gramian");
}

double gain_at_frequency(const StateSpaceModel& model, double omega) {
  const int n = model.channels;
  const cplx s(0.0, omega);
  MatrixXcd resolvent = -model.a.cast<cplx>();
  resolvent.diagonal().array() += s;
  MatrixXcd inputs(model.state_dim(), 2 * n);
  inputs.leftCols(n) = model.b_injection().cast<cplx>();
  inputs.rightCols(n) = model.b_measurement().cast<cplx>() +
                        s * model.b_derivative().cast<cplx>();
  const MatrixXcd g = model.c.cast<cplx>() * resolvent.partialPivLu().solve(inputs);
  return sigma_max(g);
}

H2Result h2_frequency_weighted(const StateSpaceModel& model,
                               const QuadratureOptions& options) {
  const int n = model.channels;
  const MatrixXd direct = model.c * model.b_derivative();
  const double gain = sigma_max(direct.cast<cplx>());
  if (gain > options.feedthrough_threshold)
    return H2Result::make_infinite(gain,
                                   gain_at_frequency(model, 2.0 * std::numbers::pi * 1e6));

  const Deflated sys = deflate(model);
  require_stable(sys.a);
  // With C B3 = 0, C (sI-A)^-1 s B3 = C (sI-A)^-1 A B3, so the weighted
  // channel is realized by B2 + A B3.
  MatrixXd inputs(sys.a.rows(), 2 * n);
  inputs.leftCols(n) = sys.b.leftCols(n);
  inputs.rightCols(n) = sys.b.middleCols(n, n) + sys.a * sys.b.rightCols(n);
  const SpectralDensity density(sys.a, inputs, sys.c);

  const int intervals = options.points_per_decade + options.points_per_decade % 2;
  double total = 0.0;
  for (int a = options.first_decade; a < options.last_decade; ++a)
    total += decade_integral(density, a, intervals);

  int lo = options.first_decade;
  int hi = options.last_decade;
  double low_end = decade_integral(density, lo, intervals);
  double high_end = decade_integral(density, hi - 1, intervals);
  int extra = 0;
  while (low_end > options.tail_tolerance * total ||
         high_end > options.tail_tolerance * total) {
    if (++extra > options.max_extra_decades) {
      const double tail = density(std::pow(10.0, hi)) * std::pow(10.0, hi);
      throw QuadratureError(
          "h2_frequency_weighted: spectral integral did not converge (partial " +
              std::to_string(total / std::numbers::pi) + ", tail bound " +
              std::to_string(tail / std::numbers::pi) + ")",
          total / std::numbers::pi, tail / std::numbers::pi);
    }
    if (high_end > options.tail_tolerance * total) {
      high_end = decade_integral(density, hi, intervals);
      total += high_end;
      ++hi;
    }
    if (low_end > options.tail_tolerance * total) {
      --lo;
      low_end = decade_integral(density, lo, intervals);
      total += low_end;
    }
  }
  // Flat below the grid, ~1/w^2 above it.
  const double w_lo = std::pow(10.0, lo);
  const double w_hi = std::pow(10.0, hi);
  total += density(w_lo) * w_lo + density(w_hi) * w_hi;
  // Integrand is even in w: (1/2pi) * 2 * integral over w > 0.
  return H2Result::make_finite(total / std::numbers::pi, "frequency-weighted");
}

H2Result h2_norm(const StateSpaceModel& model, const QuadratureOptions& options) {
  return model.derivative_noise_present ? h2_frequency_weighted(model, options)
                                        : h2_gramian(model);
}

double h2_closed_form(ClosedFormKind kind, const HomogeneousParams& p) {
  if (p.n < 1 || !(p.m > 0.0) || !(p.r_g > 0.0) || p.d < 0.0 || p.k1 < 0.0)
    throw ValidationError("h2_closed_form: need n >= 1, m > 0, r_g > 0, d >= 0, k1 >= 0");
  if (kind == ClosedFormKind::Swing) {
    const double damping = p.d + 1.0 / p.r_g;
    return p.n * p.k1 * p.k1 / (2.0 * p.m * damping);
  }
  if (!(p.r_r > 0.0) || p.k2 < 0.0)
    throw ValidationError("h2_closed_form: droop needs r_r > 0 and k2 >= 0");
  const double inv_r = 1.0 / p.r_r;
  const double damping = p.d + 1.0 / p.r_g + inv_r;
  return p.n * (p.k1 * p.k1 + (p.k2 * inv_r) * (p.k2 * inv_r)) / (2.0 * p.m * damping);
}

}  // namespace gridfreq
