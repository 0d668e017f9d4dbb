#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/control.hpp"
#include "gridfreq/grid_model.hpp"

namespace gridfreq {

/// Closed-loop deviation model  z' = A z + B w,  y = C z  with
/// z = (dtheta[n], domega[n], dx[iDroop buses]) and
/// w = (w1[n] injection noise, w2[n] frequency noise, w3[n] derivative noise).
/// The w3 block is kept separate: w3 is the derivative of w2, and that
/// correlation is applied by the analysis routines, not here.
struct StateSpaceModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  /// Response of z' to a unit power injection at each bus (dim x n).
  Eigen::MatrixXd injection;
  /// Right null vector of A: unit rotation of all angles.
  Eigen::VectorXd rotation;
  int channels = 0;  // width of each noise block (bus count)
  std::vector<int> idroop_buses;  // bus of each x state, in state order
  std::vector<InverterConfig> inverters;  // per bus; empty for modal blocks
  std::vector<std::string> state_labels;
  std::vector<std::string> input_labels;
  bool derivative_noise_present = false;

  int state_dim() const { return static_cast<int>(a.rows()); }
  int omega_offset() const { return channels; }
  int x_offset() const { return 2 * channels; }
  auto b_injection() const { return b.leftCols(channels); }
  auto b_measurement() const { return b.middleCols(channels, channels); }
  auto b_derivative() const { return b.rightCols(channels); }
};

struct SteadyState {
  double omega0 = 0.0;
  Eigen::VectorXd theta;          // relative angles, bus 0 pinned to 0
  Eigen::VectorXd q_r;            // inverter output per bus
  std::vector<int> idroop_buses;
  Eigen::VectorXd x;              // per iDroop bus, x* = -omega0 / R^r
  Eigen::VectorXd delta_q_g;      // -omega0 / R^g per bus
  Eigen::VectorXd delta_q_r;      // q_r - q0 per bus (0 for CP)
  /// Power the deviations must cover: sum(delta_q_g) + sum(delta_q_r).
  /// Equals -(sum(p_in + q0) - sum(D) omega0).
  double imbalance = 0.0;
};

/// Checks the network is Kron-reduced and valid, and the per-bus arrays
/// match it. Throws ValidationError.
void check_fleet(const PowerNetwork& network, std::span<const InverterConfig> configs,
                 std::span<const NoiseGains> noise = {});

/// Synchronous frequency deviation omega0. iDroop counts as droop-active.
double sync_frequency(const PowerNetwork& network,
                      std::span<const InverterConfig> configs);

SteadyState steady_state(const PowerNetwork& network,
                         std::span<const InverterConfig> configs);

/// Noise gains default to zero when `noise` is empty.
StateSpaceModel assemble_closed_loop(const PowerNetwork& network,
                                     std::span<const InverterConfig> configs,
                                     std::span<const NoiseGains> noise = {});

/// (theta*, omega0 1, x*) laid out as a model state.
Eigen::VectorXd steady_state_vector(const StateSpaceModel& model,
                                    const SteadyState& steady);

/// A z + injection u for a bus injection vector u.
Eigen::VectorXd closed_loop_drift(const StateSpaceModel& model,
                                  const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& bus_injection);

/// Constant per-bus forcing of the original (non-deviation) coordinates:
/// p_in + q0.
Eigen::VectorXd base_injection(const PowerNetwork& network,
                               std::span<const InverterConfig> configs);

}  // namespace gridfreq
