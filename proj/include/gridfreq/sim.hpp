#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/errors.hpp"

namespace gridfreq {

/// Step change of the injection at `bus` (model bus index) by `delta_p`.
struct Disturbance {
  double time = 0.0;
  int bus = 0;
  double delta_p = 0.0;
};

struct SimConfig {
  double dt = 0.01;
  double horizon = 30.0;
  std::vector<Disturbance> disturbances;
  std::uint64_t seed = 0;
  bool noise_enabled = false;
  /// Deviation state at t = 0; zero when empty.
  Eigen::VectorXd initial_state;
  /// Constant bus injection added to every step (for runs in the original,
  /// non-deviation coordinates); zero when empty.
  Eigen::VectorXd base_injection;
};

/// Sampled closed-loop response on the uniform grid t_k = k dt. Rows are
/// samples; columns are buses (x: iDroop buses in model order).
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd q_r;  // inverter power deviation from the initial point
  Eigen::MatrixXd x;
  std::vector<int> idroop_buses;

  int samples() const { return static_cast<int>(times.size()); }
  /// Full model state at sample k.
  Eigen::VectorXd state(int k) const;
};

struct Metrics {
  double nadir = 0.0;
  double settling_frequency = 0.0;
  double peak_inverter_power = 0.0;
  Eigen::VectorXd peak_inverter_power_per_bus;
  double empirical_output_variance = 0.0;
};

/// Raised when the state stops being finite; carries the last finite state.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double t, Eigen::VectorXd last)
      : NumericalError(what), time(t), last_state(std::move(last)) {}
  double time;
  Eigen::VectorXd last_state;
};

/// Classical RK4 with piecewise-constant injections; a step takes effect at
/// the first grid point at or after its time.
Trajectory simulate_deterministic(const StateSpaceModel& model, const SimConfig& sim);

/// RK4 drift plus additive noise increments: w1 and w2 increments are
/// N(0, dt) per channel, and the derivative channel receives
/// (dW2_k - dW2_{k-1}) / dt from the same w2 path.
Trajectory simulate_stochastic(const StateSpaceModel& model, const SimConfig& sim);

/// `reference.omega0` sets the sign of the nadir; with omega0 = 0 the
/// largest-magnitude frequency deviation is used.
Metrics compute_metrics(const Trajectory& trajectory, const SteadyState& reference);

/// Steady-state shift caused by the disturbances alone (setpoints and base
/// injections zeroed). Because the model is linear this is what a
/// deviation-coordinate run settles to.
SteadyState disturbance_shift(const PowerNetwork& network,
                              std::span<const InverterConfig> configs,
                              std::span<const Disturbance> disturbances);

/// V(t_k) relative to `reference` along an all-iDroop trajectory.
std::vector<double> lyapunov_trace(const Trajectory& trajectory,
                                   const PowerNetwork& network,
                                   std::span<const InverterConfig> configs,
                                   const SteadyState& reference);

}  // namespace gridfreq
