#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfreq/document.hpp"
#include "gridfreq/sim.hpp"

namespace gridfreq {

struct SweepAxis {
  std::string name;  // delta | nu | r_r | m_v
  double min = 0.0;
  double max = 0.0;
  int count = 2;
  bool log_spacing = false;

  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<SweepAxis> axes;
  std::string metric = "h2";  // h2 | nadir
  std::optional<InverterMode> mode;
};

SweepSpec parse_sweep_spec(const nlohmann::json& spec);
SweepSpec read_sweep_spec(const std::string& path);

struct SweepRow {
  std::vector<double> point;  // one value per axis
  double value = 0.0;         // +inf for an infinite norm
};

/// Evaluates the metric at every grid point (first axis varies slowest).
/// Points are spread over `threads` workers; rows come back in grid order.
std::vector<SweepRow> run_sweep(const Study& study, const SweepSpec& spec,
                                double dt = 0.01, double horizon = 30.0,
                                unsigned threads = 0);

/// Applies one sweep axis value to every inverter.
void set_inverter_parameter(InverterConfig& config, const std::string& name, double value);

/// Fixed-precision text for CSV/console output; "inf", "-inf", "nan" for
/// non-finite values.
std::string format_number(double value);

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 success, 1 validation or usage error, 2 numerical
/// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridfreq
