#include "gridfreq/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "gridfreq/errors.hpp"

namespace gridfreq {

namespace {

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream os;
  os << "{";
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (k) os << ", ";
    os << ids[k];
  }
  os << "}";
  return os.str();
}

std::string describe_components(const std::vector<std::vector<int>>& comps) {
  std::ostringstream os;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (k) os << " ";
    os << join_ids(comps[k]);
  }
  return os.str();
}

// Union-find over bus indices.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<int> complement(int n, const std::vector<int>& retained) {
  std::vector<bool> keep(n, false);
  for (int r : retained) keep[r] = true;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!keep[i]) out.push_back(i);
  return out;
}

void check_retained(const LaplacianMatrix& laplacian,
                    const std::vector<int>& retained) {
  if (retained.empty())
    throw ValidationError("kron_reduce: retained bus set is empty");
  std::set<int> seen;
  for (int r : retained) {
    if (r < 0 || r >= laplacian.rows())
      throw ValidationError("kron_reduce: retained bus " + std::to_string(r) +
                            " out of range");
    if (!seen.insert(r).second)
      throw ValidationError("kron_reduce: retained bus " + std::to_string(r) +
                            " listed twice");
  }
}

Eigen::MatrixXd pick(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                     const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

// Eliminated buses that cannot reach any retained bus through eliminated
// buses make L_ee singular; report them by island.
std::vector<std::vector<int>> load_islands(const LaplacianMatrix& laplacian,
                                           const std::vector<int>& retained) {
  const int n = static_cast<int>(laplacian.rows());
  DisjointSets sets(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (laplacian(i, j) != 0.0) sets.unite(i, j);
  std::set<int> anchored;
  for (int r : retained) anchored.insert(sets.find(r));
  std::map<int, std::vector<int>> islands;
  for (int e : complement(n, retained))
    if (!anchored.count(sets.find(e))) islands[sets.find(e)].push_back(e);
  std::vector<std::vector<int>> out;
  for (auto& [root, ids] : islands) out.push_back(ids);
  return out;
}

Eigen::MatrixXd eliminated_solve(const LaplacianMatrix& laplacian,
                                 const std::vector<int>& retained,
                                 const std::vector<int>& eliminated) {
  // Returns L_ee^-1 L_er.
  auto islands = load_islands(laplacian, retained);
  if (!islands.empty())
    throw ValidationError(
        "kron_reduce: eliminated block is singular; load islands without a "
        "retained bus: " +
        describe_components(islands));
  const Eigen::MatrixXd l_ee = pick(laplacian, eliminated, eliminated);
  const Eigen::MatrixXd l_er = pick(laplacian, eliminated, retained);
  Eigen::LLT<Eigen::MatrixXd> llt(l_ee);
  if (llt.info() != Eigen::Success)
    throw ValidationError("kron_reduce: eliminated block " +
                          join_ids(eliminated) + " is not positive definite");
  return llt.solve(l_er);
}

}  // namespace

bool PowerNetwork::all_generators() const {
  return std::all_of(buses.begin(), buses.end(),
                     [](const Bus& b) { return b.kind == BusKind::Generator; });
}

std::vector<std::vector<int>> connected_components(int bus_count,
                                                   const std::vector<Line>& lines) {
  DisjointSets sets(bus_count);
  for (const auto& line : lines)
    if (line.from >= 0 && line.from < bus_count && line.to >= 0 &&
        line.to < bus_count)
      sets.unite(line.from, line.to);
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < bus_count; ++i) groups[sets.find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, ids] : groups) out.push_back(ids);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> topology_issues(const PowerNetwork& network) {
  std::vector<std::string> issues;
  const int n = network.size();
  std::set<std::pair<int, int>> pairs;
  for (const auto& line : network.lines) {
    const std::string tag = "line " + std::to_string(line.from) + "-" +
                            std::to_string(line.to);
    if (line.from < 0 || line.from >= n || line.to < 0 || line.to >= n) {
      issues.push_back(tag + ": endpoint is not a bus id");
      continue;
    }
    if (line.from == line.to) issues.push_back(tag + ": self-loop");
    if (!(line.susceptance > 0.0))
      issues.push_back(tag + ": susceptance must be > 0 (got " +
                       std::to_string(line.susceptance) + ")");
    auto key = std::minmax(line.from, line.to);
    if (!pairs.insert(key).second) issues.push_back(tag + ": duplicate line");
  }
  auto comps = connected_components(n, network.lines);
  if (comps.size() > 1)
    issues.push_back("network is disconnected; components: " +
                     describe_components(comps));
  return issues;
}

std::vector<std::string> validate_network(const PowerNetwork& network) {
  std::vector<std::string> issues;
  const int n = network.size();
  if (n == 0) {
    issues.push_back("network has no buses");
    return issues;
  }
  for (int k = 0; k < n; ++k) {
    const Bus& bus = network.buses[k];
    const std::string tag = "bus " + std::to_string(bus.id);
    if (bus.id != k)
      issues.push_back(tag + ": ids must be contiguous 0..n-1 (found at position " +
                       std::to_string(k) + ")");
    if (!std::isfinite(bus.injection))
      issues.push_back(tag + ": injection is not finite");
    if (bus.kind == BusKind::Generator) {
      if (!(bus.inertia > 0.0))
        issues.push_back(tag + ": generator inertia must be > 0");
      if (!(bus.damping >= 0.0))
        issues.push_back(tag + ": damping must be >= 0");
      if (!(bus.governor_droop > 0.0))
        issues.push_back(tag + ": governor droop must be > 0");
    } else if (bus.inertia != 0.0 || bus.damping != 0.0 ||
               bus.governor_droop != 0.0) {
      issues.push_back(tag + ": load bus must not carry dynamics parameters");
    }
  }
  auto topo = topology_issues(network);
  issues.insert(issues.end(), topo.begin(), topo.end());
  return issues;
}

LaplacianMatrix build_laplacian(const PowerNetwork& network) {
  auto issues = topology_issues(network);
  if (!issues.empty()) throw ValidationError(issues.front());
  const int n = network.size();
  LaplacianMatrix laplacian = LaplacianMatrix::Zero(n, n);
  for (const auto& line : network.lines) {
    laplacian(line.from, line.to) -= line.susceptance;
    laplacian(line.to, line.from) -= line.susceptance;
    laplacian(line.from, line.from) += line.susceptance;
    laplacian(line.to, line.to) += line.susceptance;
  }
  return laplacian;
}

std::vector<std::string> laplacian_violations(const LaplacianMatrix& laplacian) {
  std::vector<std::string> out;
  if (laplacian.rows() != laplacian.cols()) {
    out.push_back("not square");
    return out;
  }
  const auto n = laplacian.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_sum = laplacian.row(i).sum();
    if (std::abs(row_sum) > kRowSumTolerance)
      out.push_back("row " + std::to_string(i) + " sums to " +
                    std::to_string(row_sum));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (laplacian(i, j) != laplacian(j, i))
        out.push_back("asymmetric at (" + std::to_string(i) + "," +
                      std::to_string(j) + ")");
      if (i != j && laplacian(i, j) > 0.0)
        out.push_back("positive off-diagonal at (" + std::to_string(i) + "," +
                      std::to_string(j) + ")");
    }
  }
  return out;
}

LaplacianMatrix kron_reduce(const LaplacianMatrix& laplacian,
                            const std::vector<int>& retained) {
  check_retained(laplacian, retained);
  const int n = static_cast<int>(laplacian.rows());
  const auto eliminated = complement(n, retained);
  LaplacianMatrix reduced = pick(laplacian, retained, retained);
  if (eliminated.empty()) return reduced;
  const Eigen::MatrixXd l_re = pick(laplacian, retained, eliminated);
  reduced -= l_re * eliminated_solve(laplacian, retained, eliminated);
  // Restore exact symmetry and zero row sums lost to roundoff.
  reduced = (0.5 * (reduced + reduced.transpose())).eval();
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < reduced.cols(); ++j) {
      if (i == j) continue;
      reduced(i, j) = std::min(reduced(i, j), 0.0);
      off += reduced(i, j);
    }
    reduced(i, i) = -off;
  }
  return reduced;
}

Eigen::MatrixXd kron_injection_map(const LaplacianMatrix& laplacian,
                                   const std::vector<int>& retained) {
  check_retained(laplacian, retained);
  const int n = static_cast<int>(laplacian.rows());
  const int r = static_cast<int>(retained.size());
  const auto eliminated = complement(n, retained);
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(r, n);
  for (int k = 0; k < r; ++k) map(k, retained[k]) = 1.0;
  if (eliminated.empty()) return map;
  // p_r' = p_r - L_re L_ee^-1 p_e  =  p_r + (L_ee^-1 L_er)^T (-p_e)
  const Eigen::MatrixXd gain = eliminated_solve(laplacian, retained, eliminated);
  for (std::size_t e = 0; e < eliminated.size(); ++e)
    map.col(eliminated[e]) = -gain.row(e).transpose();
  return map;
}

std::vector<Line> lines_from_laplacian(const LaplacianMatrix& laplacian,
                                       double drop_below) {
  double scale = 0.0;
  for (Eigen::Index i = 0; i < laplacian.rows(); ++i)
    for (Eigen::Index j = i + 1; j < laplacian.cols(); ++j)
      scale = std::max(scale, std::abs(laplacian(i, j)));
  std::vector<Line> lines;
  for (Eigen::Index i = 0; i < laplacian.rows(); ++i)
    for (Eigen::Index j = i + 1; j < laplacian.cols(); ++j)
      if (-laplacian(i, j) > drop_below * scale)
        lines.push_back({static_cast<int>(i), static_cast<int>(j), -laplacian(i, j)});
  return lines;
}

KronResult reduce_to_generators(const PowerNetwork& network) {
  auto issues = validate_network(network);
  if (!issues.empty()) throw ValidationError(issues.front());
  KronResult result;
  for (const auto& bus : network.buses)
    if (bus.kind == BusKind::Generator) result.retained.push_back(bus.id);
  if (result.retained.empty())
    throw ValidationError("network has no generator bus to retain");
  const LaplacianMatrix full = build_laplacian(network);
  const LaplacianMatrix reduced = kron_reduce(full, result.retained);
  result.injection_map = kron_injection_map(full, result.retained);

  Eigen::VectorXd injections(network.size());
  for (const auto& bus : network.buses) injections(bus.id) = bus.injection;
  const Eigen::VectorXd reduced_injection = result.injection_map * injections;

  for (std::size_t k = 0; k < result.retained.size(); ++k) {
    Bus bus = network.buses[result.retained[k]];
    bus.id = static_cast<int>(k);
    bus.injection = reduced_injection(k);
    if (bus.name.empty()) bus.name = "bus " + std::to_string(result.retained[k]);
    result.reduced.buses.push_back(bus);
  }
  result.reduced.lines = lines_from_laplacian(reduced);
  return result;
}

}  // namespace gridfreq
