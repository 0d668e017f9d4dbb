#include "gridfreq/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "gridfreq/allocation.hpp"
#include "gridfreq/errors.hpp"
#include "gridfreq/h2_norm.hpp"
#include "gridfreq/modal.hpp"

namespace gridfreq {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

namespace {

json number_json(double value) {
  if (std::isfinite(value)) return value;
  return format_number(value);
}

}  // namespace

std::vector<double> SweepAxis::values() const {
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) / (count - 1);
    out[k] = log_spacing ? std::exp(std::log(min) + s * (std::log(max) - std::log(min)))
                         : min + s * (max - min);
  }
  out.front() = min;
  out.back() = max;
  return out;
}

SweepSpec parse_sweep_spec(const json& spec) {
  if (!spec.is_object() || !spec.contains("axes") || !spec.at("axes").is_array())
    throw ValidationError("sweep spec: expected an object with an 'axes' array");
  SweepSpec out;
  const json& axes = spec.at("axes");
  if (axes.empty() || axes.size() > 2)
    throw ValidationError("sweep spec: between one and two axes are supported");
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const json& a = axes[k];
    const std::string where = "sweep spec axes[" + std::to_string(k) + "]";
    SweepAxis axis;
    try {
      axis.name = a.at("name").get<std::string>();
      axis.min = a.at("min").get<double>();
      axis.max = a.at("max").get<double>();
      axis.count = a.at("count").get<int>();
      const std::string spacing = a.value("spacing", std::string("linear"));
      if (spacing != "linear" && spacing != "log")
        throw ValidationError(where + ": spacing must be 'linear' or 'log'");
      axis.log_spacing = spacing == "log";
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (axis.name != "delta" && axis.name != "nu" && axis.name != "r_r" &&
        axis.name != "m_v")
      throw ValidationError(where + ": name must be one of delta, nu, r_r, m_v");
    if (axis.count < 2) throw ValidationError(where + ": count must be >= 2");
    if (!(axis.max > axis.min))
      throw ValidationError(where + ": max must exceed min");
    if (axis.log_spacing && axis.min <= 0.0)
      throw ValidationError(where + ": log spacing needs min > 0");
    for (const auto& prev : out.axes)
      if (prev.name == axis.name) throw ValidationError(where + ": duplicate axis");
    out.axes.push_back(axis);
  }
  out.metric = spec.value("metric", std::string("h2"));
  if (out.metric != "h2" && out.metric != "nadir")
    throw ValidationError("sweep spec: metric must be 'h2' or 'nadir'");
  if (spec.contains("mode"))
    out.mode = parse_inverter_mode(spec.at("mode").get<std::string>());
  return out;
}

SweepSpec read_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open sweep spec '" + path + "'");
  json spec;
  try {
    in >> spec;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_sweep_spec(spec);
}

void set_inverter_parameter(InverterConfig& config, const std::string& name, double value) {
  if (name == "delta")
    config.delta = value;
  else if (name == "nu")
    config.nu = value;
  else if (name == "r_r")
    config.droop = value;
  else if (name == "m_v")
    config.virtual_inertia = value;
  else
    throw ValidationError("unknown inverter parameter '" + name + "'");
}

std::vector<SweepRow> run_sweep(const Study& study, const SweepSpec& spec, double dt,
                                double horizon, unsigned threads) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : spec.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points)
      for (double v : axis.values()) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  if (spec.metric == "nadir" && study.disturbances.empty())
    throw ValidationError("sweep: metric 'nadir' needs at least one disturbance");

  std::vector<SweepRow> rows(points.size());
  auto evaluate = [&](std::size_t k) {
    std::vector<InverterConfig> configs = study.configs;
    for (auto& c : configs) {
      if (spec.mode) c.mode = *spec.mode;
      for (std::size_t a = 0; a < spec.axes.size(); ++a)
        set_inverter_parameter(c, spec.axes[a].name, points[k][a]);
    }
    rows[k].point = points[k];
    try {
      for (const auto& c : configs) {
        auto issues = validate_inverter(c);
        if (!issues.empty()) throw ValidationError(issues.front());
      }
      if (spec.metric == "h2") {
        StateSpaceModel model = assemble_closed_loop(study.network(), configs, study.noise);
        H2Result r = h2_norm(model);
        rows[k].value = r.finite() ? r.value : std::numeric_limits<double>::infinity();
      } else {
        StateSpaceModel model = assemble_closed_loop(study.network(), configs);
        SimConfig sim;
        sim.dt = dt;
        sim.horizon = horizon;
        sim.disturbances = study.disturbances;
        Trajectory traj = simulate_deterministic(model, sim);
        SteadyState ref = disturbance_shift(study.network(), configs, study.disturbances);
        rows[k].value = compute_metrics(traj, ref).nadir;
      }
    } catch (const std::runtime_error&) {
      rows[k].value = std::numeric_limits<double>::quiet_NaN();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(points.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) evaluate(k);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

namespace {

struct Options {
  std::string network;
  std::string out_dir;
  std::string sweep;
  std::string mode;
  double dt = 0.01;
  double horizon = 30.0;
  std::uint64_t seed = 0;
  bool stochastic = false;
  bool closed_form = false;
};

std::filesystem::path output_path(const Options& opt, const std::string& file) {
  std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  return dir / file;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
  f << text;
}

void write_json(const Options& opt, const std::string& file, const json& doc) {
  write_file(output_path(opt, file), doc.dump(2) + "\n");
}

Study load_study(const Options& opt, NetworkDocument* document = nullptr) {
  if (opt.network.empty()) throw ValidationError("--network is required");
  NetworkDocument doc = read_network_document(opt.network);
  std::optional<InverterMode> mode;
  if (!opt.mode.empty()) mode = parse_inverter_mode(opt.mode);
  Study study = resolve_study(doc, mode);
  if (document) *document = std::move(doc);
  return study;
}

std::string bus_label(const Study& study, int k) { return std::to_string(study.bus_ids[k]); }

json per_bus(const Study& study, const Eigen::VectorXd& v) {
  json out = json::object();
  for (int k = 0; k < v.size(); ++k) out[bus_label(study, k)] = number_json(v(k));
  return out;
}

int cmd_steady_state(const Options& opt, std::ostream& out) {
  Study study = load_study(opt);
  const PowerNetwork& net = study.network();
  SteadyState ss = steady_state(net, study.configs);

  Eigen::VectorXd alpha_g(net.size()), alpha_r(net.size());
  for (int k = 0; k < net.size(); ++k) {
    alpha_g(k) = net.buses[k].governor_droop;
    alpha_r(k) = study.configs[k].droop_active() ? study.configs[k].droop : 0.0;
  }
  OptimalityReport report = verify_steady_state_optimality(net, study.configs, alpha_g, alpha_r);

  out << "omega0 " << format_number(ss.omega0) << "\n";
  out << "bus theta q_r x\n";
  std::vector<double> x_by_bus(net.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < ss.idroop_buses.size(); ++j) x_by_bus[ss.idroop_buses[j]] = ss.x(j);
  for (int k = 0; k < net.size(); ++k)
    out << bus_label(study, k) << " " << format_number(ss.theta(k)) << " "
        << format_number(ss.q_r(k)) << " "
        << (std::isnan(x_by_bus[k]) ? std::string("-") : format_number(x_by_bus[k])) << "\n";
  out << "optimality (alpha = R): " << (report.pass ? "pass" : "fail")
      << " lambda* " << format_number(report.lambda_star) << " max_gap "
      << format_number(report.max_gap) << "\n";
  if (!report.message.empty()) out << "  " << report.message << "\n";

  if (!opt.out_dir.empty()) {
    json x = json::object();
    for (std::size_t j = 0; j < ss.idroop_buses.size(); ++j)
      x[bus_label(study, ss.idroop_buses[j])] = ss.x(j);
    write_json(opt, "steady_state.json",
               {{"omega0", ss.omega0},
                {"theta", per_bus(study, ss.theta)},
                {"q_r", per_bus(study, ss.q_r)},
                {"x", x},
                {"imbalance", ss.imbalance},
                {"optimality",
                 {{"pass", report.pass},
                  {"lambda_star", report.lambda_star},
                  {"max_gap", report.max_gap},
                  {"message", report.message}}}});
  }
  return 0;
}

std::string trajectory_csv(const Study& study, const Trajectory& traj) {
  const int n = study.network().size();
  std::string text = "t";
  for (const char* prefix : {"theta_dev_", "omega_dev_", "q_r_dev_"})
    for (int k = 0; k < n; ++k) text += "," + std::string(prefix) + bus_label(study, k);
  for (int bus : traj.idroop_buses) text += ",x_" + bus_label(study, bus);
  text += "\n";
  for (int s = 0; s < traj.samples(); ++s) {
    text += format_number(traj.times[s]);
    for (int k = 0; k < n; ++k)
      text += "," + format_number(traj.theta(s, k) - traj.theta(s, 0));
    for (int k = 0; k < n; ++k) text += "," + format_number(traj.omega(s, k));
    for (int k = 0; k < n; ++k) text += "," + format_number(traj.q_r(s, k));
    for (int j = 0; j < traj.x.cols(); ++j) text += "," + format_number(traj.x(s, j));
    text += "\n";
  }
  return text;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  if (opt.out_dir.empty()) throw ValidationError("simulate needs --out <dir>");
  if (!(opt.dt > 0.0) || !(opt.horizon > 0.0))
    throw ValidationError("--dt and --horizon must be positive");
  Study study = load_study(opt);
  StateSpaceModel model = opt.stochastic
                              ? assemble_closed_loop(study.network(), study.configs, study.noise)
                              : assemble_closed_loop(study.network(), study.configs);
  SimConfig sim;
  sim.dt = opt.dt;
  sim.horizon = opt.horizon;
  sim.disturbances = study.disturbances;
  sim.seed = opt.seed;
  sim.noise_enabled = opt.stochastic;
  Trajectory traj = opt.stochastic ? simulate_stochastic(model, sim)
                                   : simulate_deterministic(model, sim);
  SteadyState ref = disturbance_shift(study.network(), study.configs, study.disturbances);
  Metrics m = compute_metrics(traj, ref);

  write_file(output_path(opt, "trajectory.csv"), trajectory_csv(study, traj));
  write_json(opt, "metrics.json",
             {{"stochastic", opt.stochastic},
              {"seed", opt.seed},
              {"dt", opt.dt},
              {"horizon", opt.horizon},
              {"expected_omega0", ref.omega0},
              {"nadir", m.nadir},
              {"settling_frequency", m.settling_frequency},
              {"peak_inverter_power", m.peak_inverter_power},
              {"peak_inverter_power_per_bus", per_bus(study, m.peak_inverter_power_per_bus)},
              {"empirical_output_variance", m.empirical_output_variance}});
  out << "nadir " << format_number(m.nadir) << "\n"
      << "settling_frequency " << format_number(m.settling_frequency) << "\n"
      << "expected_omega0 " << format_number(ref.omega0) << "\n"
      << "peak_inverter_power " << format_number(m.peak_inverter_power) << "\n"
      << "empirical_output_variance " << format_number(m.empirical_output_variance) << "\n";
  return 0;
}

/// Closed-form applicability: identical buses, lines ignored, and every
/// inverter DC (droop form) or CP (swing form).
std::optional<std::pair<ClosedFormKind, HomogeneousParams>> homogeneous_closed_form(
    const Study& study, std::string& why_not) {
  const PowerNetwork& net = study.network();
  const Bus& b0 = net.buses.front();
  const InverterConfig& c0 = study.configs.front();
  const NoiseGains& g0 = study.noise.front();
  for (int k = 1; k < net.size(); ++k) {
    const Bus& b = net.buses[k];
    const InverterConfig& c = study.configs[k];
    const NoiseGains& g = study.noise[k];
    if (b.inertia != b0.inertia || b.damping != b0.damping ||
        b.governor_droop != b0.governor_droop || c.mode != c0.mode ||
        (c.droop_active() && c.droop != c0.droop) || g.k1 != g0.k1 || g.k2 != g0.k2) {
      why_not = "buses are not homogeneous";
      return std::nullopt;
    }
  }
  HomogeneousParams p{net.size(), b0.inertia, b0.damping, b0.governor_droop,
                      c0.droop, g0.k1, g0.k2};
  if (c0.mode == InverterMode::Droop) return std::make_pair(ClosedFormKind::Droop, p);
  if (c0.mode == InverterMode::ConstantPower) return std::make_pair(ClosedFormKind::Swing, p);
  why_not = "no closed form for " + to_string(c0.mode) + " fleets";
  return std::nullopt;
}

int cmd_h2(const Options& opt, std::ostream& out) {
  Study study = load_study(opt);
  StateSpaceModel model = assemble_closed_loop(study.network(), study.configs, study.noise);
  H2Result r = h2_norm(model);
  json summary;
  if (r.finite()) {
    out << "h2_squared " << format_number(r.value) << "\n"
        << "method " << r.method << "\n";
    summary = {{"kind", "finite"}, {"h2_squared", r.value}, {"method", r.method}};
  } else {
    out << "h2 infinite\n"
        << "feedthrough_gain " << format_number(r.feedthrough_gain) << "\n"
        << "gain_at_1mhz " << format_number(r.gain_at_1mhz) << "\n";
    summary = {{"kind", "infinite"},
               {"feedthrough_gain", r.feedthrough_gain},
               {"gain_at_1mhz", r.gain_at_1mhz}};
  }
  if (opt.closed_form) {
    std::string why_not;
    auto form = homogeneous_closed_form(study, why_not);
    if (form) {
      const double cf = h2_closed_form(form->first, form->second);
      const double rel = r.finite() ? std::abs(r.value - cf) / std::abs(cf) : INFINITY;
      out << "closed_form " << format_number(cf) << " ("
          << (form->first == ClosedFormKind::Droop ? "droop" : "swing")
          << ") relative_difference " << format_number(rel) << "\n";
      summary["closed_form"] = cf;
      summary["closed_form_relative_difference"] = number_json(rel);
    } else {
      out << "closed_form unavailable: " << why_not << "\n";
      summary["closed_form"] = nullptr;
    }
  }
  if (!opt.out_dir.empty()) write_json(opt, "h2.json", summary);
  return 0;
}

int cmd_stability(const Options& opt, std::ostream& out) {
  Study study = load_study(opt);
  StabilityCertificate cert =
      check_decentralized_stability(study.configs, study.network().buses);
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-7s %14s %14s %14s %s\n", "bus", "mode",
                "condition1", "condition2", "t_weight", "result");
  out << line;
  json rows = json::array();
  for (const auto& b : cert.buses) {
    const std::string mode = to_string(study.configs[b.bus].mode);
    std::snprintf(line, sizeof line, "%-6s %-7s %14s %14s %14s %s", bus_label(study, b.bus).c_str(),
                  mode.c_str(), b.idroop ? format_number(b.condition1).c_str() : "-",
                  b.idroop ? format_number(b.condition2).c_str() : "-",
                  b.idroop ? format_number(b.t_weight).c_str() : "-", b.pass ? "pass" : "FAIL");
    out << line;
    if (!b.note.empty()) out << "  (" << b.note << ")";
    out << "\n";
    rows.push_back({{"bus", study.bus_ids[b.bus]},
                    {"mode", mode},
                    {"condition1", b.condition1},
                    {"condition2", b.condition2},
                    {"t_weight", b.t_weight},
                    {"pass", b.pass},
                    {"note", b.note}});
  }
  out << "certificate " << (cert.pass ? "pass" : "FAIL") << " (" << cert.idroop_buses
      << " iDroop, " << cert.other_buses << " other)\n";
  if (!opt.out_dir.empty())
    write_json(opt, "stability.json", {{"pass", cert.pass}, {"buses", rows}});
  return 0;
}

int cmd_modal(const Options& opt, std::ostream& out) {
  Study study = load_study(opt);
  ModalDecomposition modal = modal_decompose(study.network(), study.configs, study.noise);
  std::vector<H2Result> norms = modal_norms(modal);
  std::string csv = "mode,eigenvalue,h2_squared,feedthrough_gain\n";
  double total = 0.0;
  bool infinite = false;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    const H2Result& r = norms[k];
    const double v = r.finite() ? r.value : INFINITY;
    infinite = infinite || !r.finite();
    if (r.finite()) total += r.value;
    const std::string row = std::to_string(k) + "," + format_number(modal.eigenvalues(k)) +
                            "," + format_number(v) + "," + format_number(r.feedthrough_gain);
    out << row << "\n";
    csv += row + "\n";
  }
  out << "sum " << (infinite ? std::string("inf") : format_number(total)) << "\n";
  if (!opt.out_dir.empty()) write_file(output_path(opt, "modal.csv"), csv);
  return 0;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  if (opt.sweep.empty()) throw ValidationError("sweep needs --sweep <spec path>");
  if (opt.out_dir.empty()) throw ValidationError("sweep needs --out <dir>");
  Study study = load_study(opt);
  SweepSpec spec = read_sweep_spec(opt.sweep);
  std::vector<SweepRow> rows = run_sweep(study, spec, opt.dt, opt.horizon);
  std::string csv;
  for (const auto& axis : spec.axes) csv += axis.name + ",";
  csv += spec.metric + "\n";
  for (const auto& row : rows) {
    for (double v : row.point) csv += format_number(v) + ",";
    csv += format_number(row.value) + "\n";
  }
  write_file(output_path(opt, "sweep.csv"), csv);
  out << "wrote " << rows.size() << " points to " << output_path(opt, "sweep.csv").string()
      << "\n";
  return 0;
}

int cmd_reduce(const Options& opt, std::ostream& out) {
  NetworkDocument doc;
  Study study = load_study(opt, &doc);
  json reduced = to_json(reduced_document(study, doc));
  reduced["original_bus_ids"] = study.bus_ids;
  if (opt.out_dir.empty())
    out << reduced.dump(2) << "\n";
  else
    write_json(opt, "reduced.json", reduced);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency dynamics of inverter-based power networks"};
  app.name("gridfreq");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Options opt;
  auto add_network = [&](CLI::App* sub) {
    sub->add_option("--network", opt.network, "NetworkDocument JSON")->required();
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--mode", opt.mode, "Override every inverter mode (CP, DC, VI, IDROOP)");
  };
  CLI::App* steady = app.add_subcommand("steady-state", "Synchronous frequency and setpoints");
  add_network(steady);
  CLI::App* simulate = app.add_subcommand("simulate", "Time-domain response to disturbances");
  add_network(simulate);
  simulate->add_option("--dt", opt.dt, "Step size [s]");
  simulate->add_option("--horizon", opt.horizon, "End time [s]");
  simulate->add_flag("--stochastic", opt.stochastic, "Drive the loop with the noise model");
  simulate->add_option("--seed", opt.seed, "Random seed for --stochastic");
  CLI::App* h2 = app.add_subcommand("h2", "H2 norm of the frequency output");
  add_network(h2);
  h2->add_flag("--closed-form", opt.closed_form, "Compare with the homogeneous closed form");
  CLI::App* stability = app.add_subcommand("stability", "Decentralized iDroop certificate");
  add_network(stability);
  CLI::App* modal = app.add_subcommand("modal", "Per-mode H2 norms of a homogeneous fleet");
  add_network(modal);
  CLI::App* sweep = app.add_subcommand("sweep", "Metric over a parameter grid");
  add_network(sweep);
  sweep->add_option("--sweep", opt.sweep, "SweepSpec JSON")->required();
  sweep->add_option("--dt", opt.dt, "Step size for the nadir metric [s]");
  sweep->add_option("--horizon", opt.horizon, "End time for the nadir metric [s]");
  CLI::App* reduce = app.add_subcommand("reduce", "Kron-reduced network document");
  add_network(reduce);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*steady) return cmd_steady_state(opt, out);
    if (*simulate) return cmd_simulate(opt, out);
    if (*h2) return cmd_h2(opt, out);
    if (*stability) return cmd_stability(opt, out);
    if (*modal) return cmd_modal(opt, out);
    if (*sweep) return cmd_sweep(opt, out);
    if (*reduce) return cmd_reduce(opt, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    err << "numerical error: " << e.what() << " (t = " << format_number(e.time) << ")\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace gridfreq
