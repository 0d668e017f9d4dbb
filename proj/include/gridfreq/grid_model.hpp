#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridfreq {

enum class BusKind { Generator, Load };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::Generator;
  // Swing-equation parameters; ignored for load buses.
  double inertia = 0.0;         // M_i
  double damping = 0.0;         // D_i
  double governor_droop = 0.0;  // R^g_i, enters the dynamics as 1/R^g_i
  double injection = 0.0;       // p^in_i
  std::string name;             // free-form label, kept through Kron reduction
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;
};

struct PowerNetwork {
  std::vector<Bus> buses;
  std::vector<Line> lines;

  int size() const { return static_cast<int>(buses.size()); }
  bool all_generators() const;
};

/// Symmetric susceptance-weighted Laplacian.
using LaplacianMatrix = Eigen::MatrixXd;

/// Absolute tolerance on each Laplacian row sum.
inline constexpr double kRowSumTolerance = 1e-12;

/// Every violated model invariant, one message per violation. Never throws.
std::vector<std::string> validate_network(const PowerNetwork& network);

/// Line-level and connectivity violations only.
std::vector<std::string> topology_issues(const PowerNetwork& network);

/// Connected components of the line graph, each sorted by bus id.
std::vector<std::vector<int>> connected_components(int bus_count,
                                                   const std::vector<Line>& lines);

/// Throws ValidationError if the graph is disconnected or a line is malformed.
LaplacianMatrix build_laplacian(const PowerNetwork& network);

/// Invariant violations of a Laplacian: symmetry, zero row sums
/// (kRowSumTolerance), nonpositive off-diagonals.
std::vector<std::string> laplacian_violations(const LaplacianMatrix& laplacian);

/// Schur complement of `laplacian` onto `retained` (in the given order).
LaplacianMatrix kron_reduce(const LaplacianMatrix& laplacian,
                            const std::vector<int>& retained);

/// Map from full-network injections to equivalent retained-bus injections,
/// [I | -L_re L_ee^-1] in the retained order. Shape retained x n.
Eigen::MatrixXd kron_injection_map(const LaplacianMatrix& laplacian,
                                   const std::vector<int>& retained);

struct KronResult {
  PowerNetwork reduced;          // generator buses only, ids 0..r-1
  std::vector<int> retained;     // original id of reduced bus k
  Eigen::MatrixXd injection_map; // r x n_original
};

/// Eliminates every load bus. Load injections are pushed onto generators
/// through the injection map; reduced lines come from the off-diagonals.
KronResult reduce_to_generators(const PowerNetwork& network);

/// Rebuilds a line list from a Laplacian; entries with -L_ij below
/// `drop_below` (relative to the largest |L_ij|) are omitted.
std::vector<Line> lines_from_laplacian(const LaplacianMatrix& laplacian,
                                       double drop_below = 1e-14);

}  // namespace gridfreq
