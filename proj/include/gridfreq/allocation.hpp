#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/control.hpp"
#include "gridfreq/grid_model.hpp"

namespace gridfreq {

/// Minimizer of sum(alpha_g/2 dq_g^2) + sum(alpha_r/2 dq_r^2) subject to
/// sum(dq_g) + sum(dq_r) = imbalance. The multiplier satisfies
/// alpha_i dq_i = lambda_star for every participant.
struct OptimalAllocation {
  Eigen::VectorXd delta_q_g;
  Eigen::VectorXd delta_q_r;
  double lambda_star = 0.0;
  double ss_cost = 0.0;
};

/// Throws ValidationError when there are no participants or some alpha <= 0.
OptimalAllocation optimal_allocation(double imbalance, const Eigen::VectorXd& alpha_g,
                                     const Eigen::VectorXd& alpha_r);

/// Quadratic steady-state cost of an arbitrary allocation.
double steady_state_cost(const Eigen::VectorXd& alpha_g, const Eigen::VectorXd& delta_q_g,
                         const Eigen::VectorXd& alpha_r, const Eigen::VectorXd& delta_q_r);

struct OptimalityReport {
  bool pass = false;
  double omega0 = 0.0;
  double imbalance = 0.0;
  double lambda_star = 0.0;
  double max_gap = 0.0;             // max |steady-state deviation - KKT allocation|
  std::vector<int> droop_buses;     // buses holding an alpha_r entry
  Eigen::VectorXd steady_q_g, steady_q_r;  // deviations realized by the loop
  OptimalAllocation allocation;
  std::string message;
};

/// Compares the loop's steady-state deviations with the cost-optimal split
/// of the same imbalance. `alpha_r` is indexed by bus; entries at
/// constant-power buses are ignored.
OptimalityReport verify_steady_state_optimality(const PowerNetwork& network,
                                                std::span<const InverterConfig> configs,
                                                const Eigen::VectorXd& alpha_g,
                                                const Eigen::VectorXd& alpha_r,
                                                double tolerance = 1e-9);

}  // namespace gridfreq
