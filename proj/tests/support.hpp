#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/control.hpp"
#include "gridfreq/dynamics.hpp"
#include "gridfreq/grid_model.hpp"

namespace gridfreq::testing {

inline Bus generator(int id, double m = 1.0, double d = 0.1, double r_g = 15.0,
                     double p = 0.0) {
  Bus b;
  b.id = id;
  b.kind = BusKind::Generator;
  b.inertia = m;
  b.damping = d;
  b.governor_droop = r_g;
  b.injection = p;
  return b;
}

inline Bus load(int id, double p = 0.0) {
  Bus b;
  b.id = id;
  b.kind = BusKind::Load;
  b.injection = p;
  return b;
}

/// n generator buses on a path 0-1-...-(n-1) with unit susceptances.
inline PowerNetwork path_network(int n, double m = 1.0, double d = 0.1, double r_g = 15.0) {
  PowerNetwork net;
  for (int i = 0; i < n; ++i) net.buses.push_back(generator(i, m, d, r_g));
  for (int i = 0; i + 1 < n; ++i) net.lines.push_back({i, i + 1, 1.0});
  return net;
}

/// n generator buses on a ring with susceptances 1 + i (deterministic).
inline PowerNetwork ring_network(int n, double m = 1.0, double d = 0.1, double r_g = 15.0) {
  PowerNetwork net;
  for (int i = 0; i < n; ++i) net.buses.push_back(generator(i, m, d, r_g));
  for (int i = 0; i < n && n > 1; ++i) {
    if (n == 2 && i == 1) break;
    net.lines.push_back({i, (i + 1) % n, 1.0 + i});
  }
  return net;
}

/// Connected random graph: a random spanning tree plus extra edges.
inline std::vector<Line> random_lines(int n, std::mt19937_64& rng, double extra = 0.3) {
  std::uniform_real_distribution<double> b(0.5, 5.0), u(0.0, 1.0);
  std::vector<Line> lines;
  std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
  for (int i = 1; i < n; ++i) {
    int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
    lines.push_back({j, i, b(rng)});
    used[i][j] = used[j][i] = true;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!used[i][j] && u(rng) < extra) {
        lines.push_back({i, j, b(rng)});
        used[i][j] = used[j][i] = true;
      }
  return lines;
}

inline PowerNetwork random_generator_network(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> m(0.2, 3.0), d(0.0, 1.0), rg(2.0, 30.0), p(-1.0, 1.0);
  PowerNetwork net;
  for (int i = 0; i < n; ++i) net.buses.push_back(generator(i, m(rng), d(rng), rg(rng), p(rng)));
  net.lines = random_lines(n, rng);
  return net;
}

inline std::vector<InverterConfig> fleet(int n, const InverterConfig& c) {
  return std::vector<InverterConfig>(n, c);
}

inline std::vector<NoiseGains> uniform_noise(int n, double k1, double k2, double k3) {
  return std::vector<NoiseGains>(n, NoiseGains{k1, k2, k3});
}

/// Reference inverter settings.
inline InverterConfig dc15() { return InverterConfig::droop_control(15.0); }
inline InverterConfig vi15() { return InverterConfig::virtual_inertia_control(15.0, 0.15); }
inline InverterConfig idroop15(double delta = 6.0, double nu = 0.9) {
  return InverterConfig::idroop(15.0, delta, nu);
}

/// Direct Kronecker-form Lyapunov solve (A^T X + X A + Q = 0), no deflation.
inline Eigen::MatrixXd kronecker_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(A^T X) = (I kron A^T) vec X ; vec(X A) = (A^T kron I) vec X
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      big.block(i * n, j * n, n, n) += id(i, j) * a.transpose();
      big.block(i * n, j * n, n, n) += a(j, i) * id;
    }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
  Eigen::VectorXd x = big.fullPivLu().solve(rhs);
  return Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
}

/// H2 norm squared by an independent route: deflate the rotation mode with
/// a QR basis and solve the Gramian equation in Kronecker form.
inline double oracle_h2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const Eigen::MatrixXd& c, const Eigen::VectorXd& null_vector) {
  const int n = static_cast<int>(a.rows());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(null_vector.normalized());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd p = q.rightCols(n - 1);
  Eigen::MatrixXd at = p.transpose() * a * p;
  Eigen::MatrixXd bt = p.transpose() * b;
  Eigen::MatrixXd ct = c * p;
  Eigen::MatrixXd x = kronecker_lyapunov(at, ct.transpose() * ct);
  return (bt.transpose() * x * bt).trace();
}

}  // namespace gridfreq::testing
