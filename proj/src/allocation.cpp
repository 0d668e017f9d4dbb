#include "gridfreq/allocation.hpp"

#include <cmath>
#include <sstream>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/errors.hpp"

namespace gridfreq {

OptimalAllocation optimal_allocation(double imbalance, const Eigen::VectorXd& alpha_g,
                                     const Eigen::VectorXd& alpha_r) {
  if (alpha_g.size() + alpha_r.size() == 0)
    throw ValidationError("optimal_allocation: no participants");
  if ((alpha_g.array() <= 0.0).any() || (alpha_r.array() <= 0.0).any())
    throw ValidationError("optimal_allocation: every alpha must be > 0");
  const double capacity = alpha_g.cwiseInverse().sum() + alpha_r.cwiseInverse().sum();
  OptimalAllocation out;
  out.lambda_star = imbalance / capacity;
  out.delta_q_g = out.lambda_star * alpha_g.cwiseInverse();
  out.delta_q_r = out.lambda_star * alpha_r.cwiseInverse();
  out.ss_cost = steady_state_cost(alpha_g, out.delta_q_g, alpha_r, out.delta_q_r);
  return out;
}

double steady_state_cost(const Eigen::VectorXd& alpha_g, const Eigen::VectorXd& delta_q_g,
                         const Eigen::VectorXd& alpha_r, const Eigen::VectorXd& delta_q_r) {
  return 0.5 * (alpha_g.array() * delta_q_g.array().square()).sum() +
         0.5 * (alpha_r.array() * delta_q_r.array().square()).sum();
}

OptimalityReport verify_steady_state_optimality(const PowerNetwork& network,
                                                std::span<const InverterConfig> configs,
                                                const Eigen::VectorXd& alpha_g,
                                                const Eigen::VectorXd& alpha_r,
                                                double tolerance) {
  const int n = network.size();
  if (alpha_g.size() != n || alpha_r.size() != n)
    throw ValidationError("verify_steady_state_optimality: alpha arrays must have one "
                          "entry per bus");
  const SteadyState ss = steady_state(network, configs);

  OptimalityReport report;
  report.omega0 = ss.omega0;
  report.imbalance = ss.imbalance;
  report.steady_q_g = ss.delta_q_g;
  for (int i = 0; i < n; ++i)
    if (configs[i].droop_active()) report.droop_buses.push_back(i);
  const int nr = static_cast<int>(report.droop_buses.size());
  Eigen::VectorXd alpha_active(nr);
  report.steady_q_r.resize(nr);
  for (int k = 0; k < nr; ++k) {
    alpha_active(k) = alpha_r(report.droop_buses[k]);
    report.steady_q_r(k) = ss.delta_q_r(report.droop_buses[k]);
  }

  report.allocation = optimal_allocation(ss.imbalance, alpha_g, alpha_active);
  report.lambda_star = report.allocation.lambda_star;
  report.max_gap = (report.allocation.delta_q_g - report.steady_q_g).cwiseAbs().maxCoeff();
  if (nr > 0)
    report.max_gap = std::max(
        report.max_gap,
        (report.allocation.delta_q_r - report.steady_q_r).cwiseAbs().maxCoeff());
  report.pass = report.max_gap <= tolerance;

  std::ostringstream msg;
  if (report.pass)
    msg << "steady state matches the cost-optimal allocation (max gap "
        << report.max_gap << "); lambda* = " << report.lambda_star
        << ", omega0 = " << report.omega0;
  else
    msg << "steady state deviates from the cost-optimal allocation by up to "
        << report.max_gap;
  report.message = msg.str();
  return report;
}

}  // namespace gridfreq
