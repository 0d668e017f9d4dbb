#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/h2_norm.hpp"

namespace gridfreq {

/// Decoupling of a homogeneous fleet along the eigenvectors of L_B.
struct ModalDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending, first exactly 0
  Eigen::MatrixXd transform;    // orthonormal U, first column 1_n / sqrt(n)
  /// One single-channel subsystem per eigenvalue: 2 states (angle,
  /// frequency), plus the iDroop state when the fleet runs iDroop.
  std::vector<StateSpaceModel> modes;
};

/// Throws ValidationError when bus, inverter or noise parameters differ
/// between buses.
ModalDecomposition modal_decompose(const PowerNetwork& network,
                                   std::span<const InverterConfig> configs,
                                   std::span<const NoiseGains> noise = {});

/// h2_norm of each mode subsystem.
std::vector<H2Result> modal_norms(const ModalDecomposition& modal,
                                  const QuadratureOptions& options = {});

}  // namespace gridfreq
