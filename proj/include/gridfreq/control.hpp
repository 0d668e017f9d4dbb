#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/grid_model.hpp"

namespace gridfreq {

/// Inverter operating mode: constant power, droop, virtual inertia, iDroop.
enum class InverterMode { ConstantPower, Droop, VirtualInertia, IDroop };

std::string to_string(InverterMode mode);
/// Accepts "CP", "DC", "VI", "IDROOP" (case-insensitive).
InverterMode parse_inverter_mode(const std::string& text);

struct InverterConfig {
  InverterMode mode = InverterMode::ConstantPower;
  double q0 = 0.0;             // power set point q^{r,0}
  double droop = 0.0;          // R^r; unused in CP
  double virtual_inertia = 0.0;  // M^v; VI only
  double delta = 0.0;          // iDroop filter rate
  double nu = 0.0;             // iDroop derivative gain

  /// True for DC, VI and iDroop: the inverter shares load in steady state.
  bool droop_active() const { return mode != InverterMode::ConstantPower; }
  /// 1/R^r for droop-active modes, 0 otherwise.
  double inverse_droop() const { return droop_active() ? 1.0 / droop : 0.0; }
  /// Inertia the inverter adds to the swing equation (M^v for VI).
  double added_inertia() const {
    return mode == InverterMode::VirtualInertia ? virtual_inertia : 0.0;
  }

  static InverterConfig constant_power(double q0 = 0.0);
  static InverterConfig droop_control(double droop, double q0 = 0.0);
  static InverterConfig virtual_inertia_control(double droop, double m_v,
                                                double q0 = 0.0);
  static InverterConfig idroop(double droop, double delta, double nu,
                               double q0 = 0.0);
};

/// Mode-specific sign rules; empty when valid.
std::vector<std::string> validate_inverter(const InverterConfig& config);

struct NoiseGains {
  double k1 = 0.0;  // injection noise
  double k2 = 0.0;  // frequency measurement noise
  double k3 = 0.0;  // frequency-derivative measurement noise
};

/// Power injected by the inverter. `x` is the iDroop internal state and is
/// required (only) in iDroop mode.
double inverter_power(const InverterConfig& config, double omega,
                      double omega_dot, std::optional<double> x = std::nullopt);

/// Sample of the frequency measurement noise w2 and its derivative.
struct MeasurementNoise {
  double w2 = 0.0;
  double w2_dot = 0.0;
};

/// Time derivative of the iDroop internal state,
///   x' = delta (-omega/R^r - x) - nu omega'
/// minus delta k2 w2 / R^r + nu k3 w2' when noise is supplied.
double idroop_step(const InverterConfig& config, double omega, double omega_dot,
                   double x, std::optional<MeasurementNoise> noise = std::nullopt,
                   const NoiseGains& gains = {});

struct BusCertificate {
  int bus = 0;
  bool idroop = false;
  double condition1 = 0.0;  // nu / (delta (nu + 1/R^r))
  double condition2 = 0.0;  // D + 1/R^g + nu (1/R^r) / (nu + 1/R^r)
  double t_weight = 0.0;    // 1 / (delta (nu + 1/R^r))
  bool pass = false;
  std::string note;
};

struct StabilityCertificate {
  std::vector<BusCertificate> buses;
  bool pass = false;
  int idroop_buses = 0;
  int other_buses = 0;  // non-iDroop buses, reported as vacuously passing
};

/// Decentralized sufficient condition for convergence of the iDroop loop.
/// Both per-bus values must be strictly positive.
StabilityCertificate check_decentralized_stability(
    std::span<const InverterConfig> configs, std::span<const Bus> buses);

struct LyapunovValue {
  double value = 0.0;       // V
  double derivative = 0.0;  // dV/dt along the noise-free closed loop
};

/// Diagonal weights T = K_delta^-1 (K_nu + 1/R^r)^-1. Requires every bus in
/// iDroop mode; throws ValidationError when a weight is undefined.
Eigen::VectorXd lyapunov_weights(std::span<const InverterConfig> configs);

/// V and dV/dt for a deviation state (angles, frequencies, iDroop states).
/// Every bus must run iDroop.
LyapunovValue lyapunov_diagnostics(const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& omega,
                                   const Eigen::VectorXd& x,
                                   const PowerNetwork& network,
                                   std::span<const InverterConfig> configs);

}  // namespace gridfreq
