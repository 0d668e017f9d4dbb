#include "gridfreq/dynamics.hpp"

#include <cmath>

#include "gridfreq/errors.hpp"

namespace gridfreq {

namespace {

double total_damping(const PowerNetwork& network,
                     std::span<const InverterConfig> configs) {
  double sum = 0.0;
  for (int i = 0; i < network.size(); ++i) {
    const Bus& bus = network.buses[i];
    sum += bus.damping + 1.0 / bus.governor_droop + configs[i].inverse_droop();
  }
  return sum;
}

}  // namespace

void check_fleet(const PowerNetwork& network, std::span<const InverterConfig> configs,
                 std::span<const NoiseGains> noise) {
  auto issues = validate_network(network);
  if (!issues.empty()) throw ValidationError(issues.front());
  if (!network.all_generators())
    throw ValidationError("network still has load buses; Kron-reduce it first");
  if (static_cast<int>(configs.size()) != network.size())
    throw ValidationError(std::to_string(configs.size()) + " inverter configs for " +
                          std::to_string(network.size()) + " buses");
  if (!noise.empty() && static_cast<int>(noise.size()) != network.size())
    throw ValidationError(std::to_string(noise.size()) + " noise entries for " +
                          std::to_string(network.size()) + " buses");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto inv = validate_inverter(configs[i]);
    if (!inv.empty())
      throw ValidationError("inverter at bus " + std::to_string(i) + ": " + inv.front());
  }
  for (std::size_t i = 0; i < noise.size(); ++i)
    if (!(noise[i].k1 >= 0.0 && noise[i].k2 >= 0.0 && noise[i].k3 >= 0.0))
      throw ValidationError("noise gains at bus " + std::to_string(i) +
                            " must be >= 0");
}

double sync_frequency(const PowerNetwork& network,
                      std::span<const InverterConfig> configs) {
  check_fleet(network, configs);
  double supply = 0.0;
  for (int i = 0; i < network.size(); ++i)
    supply += network.buses[i].injection + configs[i].q0;
  const double damping = total_damping(network, configs);
  if (!(damping > 0.0))
    throw NumericalError("sync_frequency: total damping is zero");
  return supply / damping;
}

SteadyState steady_state(const PowerNetwork& network,
                         std::span<const InverterConfig> configs) {
  SteadyState ss;
  ss.omega0 = sync_frequency(network, configs);
  const int n = network.size();
  const double w0 = ss.omega0;

  ss.q_r.resize(n);
  ss.delta_q_g.resize(n);
  ss.delta_q_r.resize(n);
  Eigen::VectorXd rhs(n);
  double demand_relief = 0.0;
  double supply = 0.0;
  for (int i = 0; i < n; ++i) {
    const Bus& bus = network.buses[i];
    const InverterConfig& c = configs[i];
    ss.delta_q_g(i) = -w0 / bus.governor_droop;
    ss.delta_q_r(i) = -w0 * c.inverse_droop();
    ss.q_r(i) = c.q0 + ss.delta_q_r(i);
    rhs(i) = bus.injection + ss.q_r(i) - (bus.damping + 1.0 / bus.governor_droop) * w0;
    supply += bus.injection + c.q0;
    demand_relief += bus.damping * w0;
    if (c.mode == InverterMode::IDroop) ss.idroop_buses.push_back(i);
  }
  ss.imbalance = -(supply - demand_relief);

  ss.x.resize(ss.idroop_buses.size());
  for (std::size_t s = 0; s < ss.idroop_buses.size(); ++s)
    ss.x(s) = ss.delta_q_r(ss.idroop_buses[s]);

  // L theta = rhs on the complement of 1_n, with theta_0 = 0.
  ss.theta = Eigen::VectorXd::Zero(n);
  if (n > 1) {
    const LaplacianMatrix laplacian = build_laplacian(network);
    const Eigen::MatrixXd sub = laplacian.bottomRightCorner(n - 1, n - 1);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success)
      throw NumericalError("steady_state: grounded Laplacian is singular");
    ss.theta.tail(n - 1) = llt.solve(rhs.tail(n - 1));
  }
  return ss;
}

StateSpaceModel assemble_closed_loop(const PowerNetwork& network,
                                     std::span<const InverterConfig> configs,
                                     std::span<const NoiseGains> noise) {
  check_fleet(network, configs, noise);
  const int n = network.size();
  const LaplacianMatrix laplacian = build_laplacian(network);

  StateSpaceModel model;
  model.channels = n;
  model.inverters.assign(configs.begin(), configs.end());
  std::vector<int> x_index(n, -1);
  for (int i = 0; i < n; ++i)
    if (configs[i].mode == InverterMode::IDroop) {
      x_index[i] = static_cast<int>(model.idroop_buses.size());
      model.idroop_buses.push_back(i);
    }
  const int nx = static_cast<int>(model.idroop_buses.size());
  const int dim = 2 * n + nx;

  model.a = Eigen::MatrixXd::Zero(dim, dim);
  model.b = Eigen::MatrixXd::Zero(dim, 3 * n);
  model.c = Eigen::MatrixXd::Zero(n, dim);
  model.injection = Eigen::MatrixXd::Zero(dim, n);
  model.rotation = Eigen::VectorXd::Zero(dim);
  model.rotation.head(n).setOnes();

  for (int i = 0; i < n; ++i) {
    const Bus& bus = network.buses[i];
    const InverterConfig& c = configs[i];
    const NoiseGains k = noise.empty() ? NoiseGains{} : noise[i];
    const int w = n + i;  // omega row
    const double m_hat = bus.inertia + c.added_inertia();
    const double d_hat = bus.damping + 1.0 / bus.governor_droop +
                         (c.mode == InverterMode::IDroop ? 0.0 : c.inverse_droop());

    model.a(i, w) = 1.0;
    model.a.row(w).head(n) = -laplacian.row(i) / m_hat;
    model.a(w, w) = -d_hat / m_hat;
    model.injection(w, i) = 1.0 / m_hat;
    model.c(i, w) = 1.0;

    switch (c.mode) {
      case InverterMode::ConstantPower:
        break;
      case InverterMode::Droop:
        model.b(w, n + i) = -k.k2 * c.inverse_droop() / m_hat;
        break;
      case InverterMode::VirtualInertia:
        model.b(w, n + i) = -k.k2 * c.inverse_droop() / m_hat;
        model.b(w, 2 * n + i) = -c.virtual_inertia * k.k3 / m_hat;
        if (k.k3 * c.virtual_inertia != 0.0) model.derivative_noise_present = true;
        break;
      case InverterMode::IDroop: {
        const int xr = 2 * n + x_index[i];
        model.a(w, xr) = 1.0 / m_hat;
        // x' = -delta (omega/R + x) - nu omega', with omega' substituted
        // from the swing row so the model stays explicit.
        model.a.row(xr) = -c.nu * model.a.row(w);
        model.a(xr, w) += -c.delta * c.inverse_droop();
        model.a(xr, xr) += -c.delta;
        model.injection(xr, i) = -c.nu / m_hat;
        model.b(xr, n + i) = -c.delta * k.k2 * c.inverse_droop();
        model.b(xr, 2 * n + i) = -c.nu * k.k3;
        if (k.k3 * c.nu != 0.0) model.derivative_noise_present = true;
        break;
      }
    }
    model.b.col(i) = model.injection.col(i) * k.k1;
  }

  for (int i = 0; i < n; ++i) model.state_labels.push_back("dtheta_" + std::to_string(i));
  for (int i = 0; i < n; ++i) model.state_labels.push_back("domega_" + std::to_string(i));
  for (int bus : model.idroop_buses) model.state_labels.push_back("dx_" + std::to_string(bus));
  for (const char* block : {"w1_", "w2_", "w3_"})
    for (int i = 0; i < n; ++i) model.input_labels.push_back(block + std::to_string(i));
  return model;
}

Eigen::VectorXd steady_state_vector(const StateSpaceModel& model,
                                    const SteadyState& steady) {
  const int n = model.channels;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(model.state_dim());
  z.head(n) = steady.theta;
  z.segment(n, n).setConstant(steady.omega0);
  z.tail(model.idroop_buses.size()) = steady.x;
  return z;
}

Eigen::VectorXd closed_loop_drift(const StateSpaceModel& model,
                                  const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& bus_injection) {
  return model.a * state + model.injection * bus_injection;
}

Eigen::VectorXd base_injection(const PowerNetwork& network,
                               std::span<const InverterConfig> configs) {
  Eigen::VectorXd u(network.size());
  for (int i = 0; i < network.size(); ++i)
    u(i) = network.buses[i].injection + configs[i].q0;
  return u;
}

}  // namespace gridfreq
