#include "gridfreq/control.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "gridfreq/errors.hpp"

namespace gridfreq {

std::string to_string(InverterMode mode) {
  switch (mode) {
    case InverterMode::ConstantPower: return "CP";
    case InverterMode::Droop: return "DC";
    case InverterMode::VirtualInertia: return "VI";
    case InverterMode::IDroop: return "IDROOP";
  }
  return "?";
}

InverterMode parse_inverter_mode(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "CP") return InverterMode::ConstantPower;
  if (upper == "DC") return InverterMode::Droop;
  if (upper == "VI") return InverterMode::VirtualInertia;
  if (upper == "IDROOP") return InverterMode::IDroop;
  throw ValidationError("unknown inverter mode '" + text +
                        "' (expected CP, DC, VI or IDROOP)");
}

InverterConfig InverterConfig::constant_power(double q0) {
  InverterConfig c;
  c.q0 = q0;
  return c;
}

InverterConfig InverterConfig::droop_control(double droop, double q0) {
  InverterConfig c;
  c.mode = InverterMode::Droop;
  c.q0 = q0;
  c.droop = droop;
  return c;
}

InverterConfig InverterConfig::virtual_inertia_control(double droop, double m_v,
                                                       double q0) {
  InverterConfig c = droop_control(droop, q0);
  c.mode = InverterMode::VirtualInertia;
  c.virtual_inertia = m_v;
  return c;
}

InverterConfig InverterConfig::idroop(double droop, double delta, double nu,
                                      double q0) {
  InverterConfig c = droop_control(droop, q0);
  c.mode = InverterMode::IDroop;
  c.delta = delta;
  c.nu = nu;
  return c;
}

std::vector<std::string> validate_inverter(const InverterConfig& config) {
  std::vector<std::string> issues;
  if (!std::isfinite(config.q0)) issues.push_back("q0 is not finite");
  if (config.droop_active() && !(config.droop > 0.0))
    issues.push_back("droop coefficient r_r must be > 0");
  if (config.mode == InverterMode::VirtualInertia && !(config.virtual_inertia >= 0.0))
    issues.push_back("virtual inertia m_v must be >= 0");
  if (config.mode == InverterMode::IDroop) {
    if (!(config.delta > 0.0)) issues.push_back("iDroop delta must be > 0");
    if (!(config.nu >= 0.0)) issues.push_back("iDroop nu must be >= 0");
  }
  return issues;
}

double inverter_power(const InverterConfig& config, double omega,
                      double omega_dot, std::optional<double> x) {
  switch (config.mode) {
    case InverterMode::ConstantPower:
      return config.q0;
    case InverterMode::Droop:
      return config.q0 - omega / config.droop;
    case InverterMode::VirtualInertia:
      return config.q0 - omega / config.droop - config.virtual_inertia * omega_dot;
    case InverterMode::IDroop:
      if (!x) throw ValidationError("inverter_power: iDroop mode needs its state x");
      return config.q0 + *x;
  }
  return config.q0;
}

double idroop_step(const InverterConfig& config, double omega, double omega_dot,
                   double x, std::optional<MeasurementNoise> noise,
                   const NoiseGains& gains) {
  if (config.mode != InverterMode::IDroop)
    throw ValidationError("idroop_step: inverter is in " + to_string(config.mode) +
                          " mode");
  double rate = config.delta * (-omega / config.droop - x) - config.nu * omega_dot;
  if (noise) {
    rate -= config.delta * gains.k2 * noise->w2 / config.droop +
            config.nu * gains.k3 * noise->w2_dot;
  }
  return rate;
}

StabilityCertificate check_decentralized_stability(
    std::span<const InverterConfig> configs, std::span<const Bus> buses) {
  if (configs.size() != buses.size())
    throw ValidationError("check_decentralized_stability: " +
                          std::to_string(configs.size()) + " inverters for " +
                          std::to_string(buses.size()) + " buses");
  StabilityCertificate cert;
  cert.pass = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const InverterConfig& c = configs[i];
    const Bus& bus = buses[i];
    BusCertificate entry;
    entry.bus = bus.id;
    if (c.mode != InverterMode::IDroop) {
      entry.pass = true;
      entry.note = "not iDroop (" + to_string(c.mode) + "); not covered";
      ++cert.other_buses;
      cert.buses.push_back(entry);
      continue;
    }
    ++cert.idroop_buses;
    entry.idroop = true;
    const double inv_r = 1.0 / c.droop;
    const double filter = c.delta * (c.nu + inv_r);
    entry.condition2 =
        bus.damping + 1.0 / bus.governor_droop + c.nu * inv_r / (c.nu + inv_r);
    if (filter == 0.0 || !std::isfinite(filter)) {
      entry.condition1 = std::numeric_limits<double>::quiet_NaN();
      entry.t_weight = std::numeric_limits<double>::quiet_NaN();
      entry.note = "delta (nu + 1/R^r) is zero; condition undefined";
    } else {
      entry.t_weight = 1.0 / filter;
      entry.condition1 = c.nu / filter;
    }
    entry.pass = entry.condition1 > 0.0 && entry.condition2 > 0.0;
    if (!entry.pass && entry.note.empty()) {
      if (entry.condition1 == 0.0 || entry.condition2 == 0.0)
        entry.note = "marginal: a condition is exactly zero";
      else
        entry.note = "condition violated";
    }
    cert.pass = cert.pass && entry.pass;
    cert.buses.push_back(entry);
  }
  return cert;
}

Eigen::VectorXd lyapunov_weights(std::span<const InverterConfig> configs) {
  Eigen::VectorXd t(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const InverterConfig& c = configs[i];
    if (c.mode != InverterMode::IDroop)
      throw ValidationError("Lyapunov weights need every bus in iDroop mode; bus " +
                            std::to_string(i) + " is " + to_string(c.mode));
    const double filter = c.delta * (c.nu + 1.0 / c.droop);
    if (filter == 0.0 || !std::isfinite(filter))
      throw ValidationError("Lyapunov weight undefined at bus " + std::to_string(i) +
                            ": delta (nu + 1/R^r) = 0");
    t(i) = 1.0 / filter;
  }
  return t;
}

LyapunovValue lyapunov_diagnostics(const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& omega,
                                   const Eigen::VectorXd& x,
                                   const PowerNetwork& network,
                                   std::span<const InverterConfig> configs) {
  const int n = network.size();
  if (theta.size() != n || omega.size() != n || x.size() != n ||
      static_cast<int>(configs.size()) != n)
    throw ValidationError("lyapunov_diagnostics: dimension mismatch");
  const Eigen::VectorXd t = lyapunov_weights(configs);
  const LaplacianMatrix laplacian = build_laplacian(network);

  Eigen::VectorXd m(n), nu(n), inv_r(n), damping(n);
  for (int i = 0; i < n; ++i) {
    m(i) = network.buses[i].inertia;
    damping(i) = network.buses[i].damping + 1.0 / network.buses[i].governor_droop;
    nu(i) = configs[i].nu;
    inv_r(i) = 1.0 / configs[i].droop;
  }
  const Eigen::VectorXd shifted = x + nu.cwiseProduct(omega);

  LyapunovValue out;
  out.value = 0.5 * theta.dot(laplacian * theta) +
              0.5 * omega.dot(m.cwiseProduct(omega)) +
              0.5 * shifted.dot(t.cwiseProduct(shifted));

  // With T chosen to cancel the omega-x cross term, dV/dt is the sum of two
  // diagonal quadratic forms.
  const Eigen::ArrayXd filter = (nu + inv_r).array();
  const Eigen::ArrayXd omega_weight =
      damping.array() + nu.array() * inv_r.array() / filter;
  const Eigen::ArrayXd x_weight = 1.0 / filter;  // T K_delta
  out.derivative = -(omega.array().square() * omega_weight).sum() -
                   (x.array().square() * x_weight).sum();
  return out;
}

}  // namespace gridfreq
