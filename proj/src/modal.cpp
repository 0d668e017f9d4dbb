#include "gridfreq/modal.hpp"

#include <cmath>

#include "gridfreq/errors.hpp"

namespace gridfreq {

namespace {

bool same(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

void require_homogeneous(const PowerNetwork& network,
                         std::span<const InverterConfig> configs,
                         std::span<const NoiseGains> noise) {
  const Bus& b0 = network.buses.front();
  const InverterConfig& c0 = configs.front();
  for (int i = 1; i < network.size(); ++i) {
    const Bus& b = network.buses[i];
    const InverterConfig& c = configs[i];
    const bool ok = same(b.inertia, b0.inertia) && same(b.damping, b0.damping) &&
                    same(b.governor_droop, b0.governor_droop) && c.mode == c0.mode &&
                    same(c.inverse_droop(), c0.inverse_droop()) &&
                    same(c.added_inertia(), c0.added_inertia()) &&
                    (c.mode != InverterMode::IDroop ||
                     (same(c.delta, c0.delta) && same(c.nu, c0.nu)));
    if (!ok)
      throw ValidationError("modal_decompose: bus " + std::to_string(i) +
                            " parameters differ from bus 0; fleet is not homogeneous");
    if (!noise.empty() &&
        !(same(noise[i].k1, noise[0].k1) && same(noise[i].k2, noise[0].k2) &&
          same(noise[i].k3, noise[0].k3)))
      throw ValidationError("modal_decompose: noise gains at bus " +
                            std::to_string(i) + " differ from bus 0");
  }
}

StateSpaceModel mode_subsystem(double lambda, bool rotation_mode, const Bus& bus,
                               const InverterConfig& c, const NoiseGains& k) {
  const bool idroop = c.mode == InverterMode::IDroop;
  const int dim = idroop ? 3 : 2;
  const double m_hat = bus.inertia + c.added_inertia();
  const double d_hat =
      bus.damping + 1.0 / bus.governor_droop + (idroop ? 0.0 : c.inverse_droop());

  StateSpaceModel mode;
  mode.channels = 1;
  mode.a = Eigen::MatrixXd::Zero(dim, dim);
  mode.b = Eigen::MatrixXd::Zero(dim, 3);
  mode.c = Eigen::MatrixXd::Zero(1, dim);
  mode.injection = Eigen::MatrixXd::Zero(dim, 1);
  mode.a(0, 1) = 1.0;
  mode.a(1, 0) = -lambda / m_hat;
  mode.a(1, 1) = -d_hat / m_hat;
  mode.injection(1, 0) = 1.0 / m_hat;
  mode.c(0, 1) = 1.0;
  mode.state_labels = {"theta'", "omega'"};
  mode.input_labels = {"w1'", "w2'", "w3'"};
  if (c.mode == InverterMode::Droop || c.mode == InverterMode::VirtualInertia)
    mode.b(1, 1) = -k.k2 * c.inverse_droop() / m_hat;
  if (c.mode == InverterMode::VirtualInertia) {
    mode.b(1, 2) = -k.k3 * c.virtual_inertia / m_hat;
    mode.derivative_noise_present = k.k3 * c.virtual_inertia != 0.0;
  }
  if (idroop) {
    mode.a(1, 2) = 1.0 / m_hat;
    mode.a.row(2) = -c.nu * mode.a.row(1);
    mode.a(2, 1) -= c.delta * c.inverse_droop();
    mode.a(2, 2) -= c.delta;
    mode.injection(2, 0) = -c.nu / m_hat;
    mode.b(2, 1) = -c.delta * k.k2 * c.inverse_droop();
    mode.b(2, 2) = -c.nu * k.k3;
    mode.derivative_noise_present = k.k3 * c.nu != 0.0;
    mode.state_labels.push_back("x'");
    mode.idroop_buses = {0};
  }
  mode.b.col(0) = mode.injection.col(0) * k.k1;
  if (rotation_mode) {
    mode.rotation = Eigen::VectorXd::Zero(dim);
    mode.rotation(0) = 1.0;
  }
  return mode;
}

}  // namespace

ModalDecomposition modal_decompose(const PowerNetwork& network,
                                   std::span<const InverterConfig> configs,
                                   std::span<const NoiseGains> noise) {
  check_fleet(network, configs, noise);
  require_homogeneous(network, configs, noise);
  const int n = network.size();
  const LaplacianMatrix laplacian = build_laplacian(network);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian);
  if (eig.info() != Eigen::Success)
    throw NumericalError("modal_decompose: eigendecomposition failed");
  ModalDecomposition modal;
  modal.eigenvalues = eig.eigenvalues();
  modal.transform = eig.eigenvectors();
  // Connected graph: the smallest eigenvalue is the simple zero of 1_n.
  modal.eigenvalues(0) = 0.0;
  modal.transform.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));

  const NoiseGains k = noise.empty() ? NoiseGains{} : noise[0];
  for (int i = 0; i < n; ++i)
    modal.modes.push_back(mode_subsystem(modal.eigenvalues(i), i == 0,
                                         network.buses[0], configs[0], k));
  return modal;
}

std::vector<H2Result> modal_norms(const ModalDecomposition& modal,
                                  const QuadratureOptions& options) {
  std::vector<H2Result> out;
  out.reserve(modal.modes.size());
  for (const auto& mode : modal.modes) out.push_back(h2_norm(mode, options));
  return out;
}

}  // namespace gridfreq
