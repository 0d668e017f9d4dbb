#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridfreq/cli.hpp"
#include "gridfreq/document.hpp"
#include "gridfreq/errors.hpp"

using namespace gridfreq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kExample = std::string(GRIDFREQ_DATA_DIR) + "/example-10bus.json";

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gridfreq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json small_document() {
  return json::parse(R"({
    "schema_version": "1.0",
    "buses": [
      {"id": 0, "kind": "generator", "inertia": 1.0, "damping": 0.1, "governor_droop": 15.0},
      {"id": 1, "kind": "load", "injection": 0.0},
      {"id": 2, "kind": "generator", "inertia": 1.0, "damping": 0.1, "governor_droop": 15.0}
    ],
    "lines": [{"from": 0, "to": 1, "susceptance": 2.0}, {"from": 1, "to": 2, "susceptance": 2.0}],
    "inverters": [{"bus": 0, "mode": "DC", "r_r": 15.0}],
    "noise": [{"bus": 0, "k1": 0.1, "k2": 5.0}]
  })");
}

}  // namespace

TEST(Document, RoundTripIsIdentical) {
  NetworkDocument a = read_network_document(kExample);
  json emitted = to_json(a);
  NetworkDocument b = parse_network_document(emitted);
  EXPECT_EQ(to_json(b).dump(), emitted.dump());
  ASSERT_EQ(a.network.size(), b.network.size());
  for (int i = 0; i < a.network.size(); ++i) {
    EXPECT_EQ(a.network.buses[i].inertia, b.network.buses[i].inertia);
    EXPECT_EQ(a.network.buses[i].kind, b.network.buses[i].kind);
    EXPECT_EQ(a.network.buses[i].name, b.network.buses[i].name);
  }
  ASSERT_EQ(a.inverters.size(), b.inverters.size());
  for (std::size_t k = 0; k < a.inverters.size(); ++k) {
    EXPECT_EQ(a.inverters[k].config.mode, b.inverters[k].config.mode);
    EXPECT_EQ(a.inverters[k].config.delta, b.inverters[k].config.delta);
  }
}

TEST(Document, ExampleReducesToTenGenerators) {
  Study s = resolve_study(read_network_document(kExample));
  EXPECT_EQ(s.network().size(), 10);
  EXPECT_EQ(s.bus_ids.front(), 29);
  ASSERT_EQ(s.disturbances.size(), 1u);
  EXPECT_EQ(s.disturbances[0].bus, 0);
  EXPECT_EQ(s.disturbances[0].delta_p, -0.5);
  for (const auto& c : s.configs) EXPECT_EQ(c.mode, InverterMode::IDroop);
}

TEST(Document, AbsentEntriesDefaultToConstantPowerAndNoNoise) {
  Study s = resolve_study(parse_network_document(small_document()));
  ASSERT_EQ(s.configs.size(), 2u);
  EXPECT_EQ(s.configs[0].mode, InverterMode::Droop);
  EXPECT_EQ(s.configs[1].mode, InverterMode::ConstantPower);
  EXPECT_EQ(s.configs[1].q0, 0.0);
  EXPECT_EQ(s.noise[1].k1, 0.0);
  EXPECT_EQ(s.noise[0].k2, 5.0);
}

TEST(Document, LoadDisturbanceIsSpreadOverGenerators) {
  json doc = small_document();
  doc["disturbances"] = json::array({{{"time", 1.0}, {"bus", 1}, {"delta_p", -0.4}}});
  Study s = resolve_study(parse_network_document(doc));
  ASSERT_EQ(s.disturbances.size(), 2u);
  EXPECT_NEAR(s.disturbances[0].delta_p, -0.2, 1e-15);
  EXPECT_NEAR(s.disturbances[1].delta_p, -0.2, 1e-15);
}

TEST(Document, SchemaViolationsAreRejected) {
  auto rejects = [](json doc) {
    EXPECT_THROW(resolve_study(parse_network_document(doc)), ValidationError) << doc.dump();
  };
  json d = small_document();
  d["schema_version"] = "9";
  rejects(d);
  d = small_document();
  d["buses"][0].erase("inertia");
  rejects(d);
  d = small_document();
  d["inverters"][0].erase("r_r");
  rejects(d);
  d = small_document();
  d["inverters"].push_back({{"bus", 0}, {"mode", "CP"}});
  rejects(d);
  d = small_document();
  d["inverters"].push_back({{"bus", 1}, {"mode", "CP"}});
  rejects(d);
  d = small_document();
  d["inverters"].push_back({{"bus", 5}, {"mode", "CP"}});
  rejects(d);
  d = small_document();
  d["inverters"][0]["mode"] = "IDROOP";
  rejects(d);  // delta and nu missing
  d = small_document();
  d["lines"].push_back({{"from", 2}, {"to", 1}, {"susceptance", 1.0}});
  rejects(d);
  d = small_document();
  d["noise"][0]["k1"] = -1.0;
  rejects(d);
}

TEST(Sweep, SpecValidation) {
  json spec = json::parse(R"({"axes": [{"name": "delta", "min": 1, "max": 2, "count": 3}], "metric": "h2"})");
  EXPECT_NO_THROW(parse_sweep_spec(spec));
  json bad = spec;
  bad["axes"][0]["count"] = 1;
  EXPECT_THROW(parse_sweep_spec(bad), ValidationError);
  bad = spec;
  bad["axes"][0]["name"] = "m";
  EXPECT_THROW(parse_sweep_spec(bad), ValidationError);
  bad = spec;
  bad["metric"] = "hinf";
  EXPECT_THROW(parse_sweep_spec(bad), ValidationError);
  bad = spec;
  bad["axes"] = json::array({spec["axes"][0], spec["axes"][0], spec["axes"][0]});
  EXPECT_THROW(parse_sweep_spec(bad), ValidationError);
}

TEST(Sweep, AxisValues) {
  SweepAxis lin{"nu", 0.0, 1.0, 5, false};
  EXPECT_EQ(lin.values(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  SweepAxis lg{"delta", 0.1, 10.0, 3, true};
  auto v = lg.values();
  EXPECT_NEAR(v[1], 1.0, 1e-15);
  EXPECT_EQ(v.back(), 10.0);
}

TEST(Cli, UnknownCommandOrFlagPrintsUsage) {
  CliRun r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
  r = run({"h2", "--network", kExample, "--bogus"});
  EXPECT_EQ(r.code, 1);
  r = run({});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, MissingFileIsValidationFailure) {
  CliRun r = run({"h2", "--network", "/nonexistent/file.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(Cli, VirtualInertiaNormIsInfinite) {
  CliRun r = run({"h2", "--network", kExample, "--mode", "VI"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("infinite"), std::string::npos);
  EXPECT_NE(r.out.find("feedthrough_gain 0.6521739"), std::string::npos) << r.out;
}

TEST(Cli, DroopNormWithClosedForm) {
  CliRun r = run({"h2", "--network", kExample, "--mode", "DC", "--closed-form"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("h2_squared 2.5952380"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("closed_form 2.5952380"), std::string::npos) << r.out;
}

TEST(Cli, StabilityTableAllPass) {
  CliRun r = run({"stability", "--network", kExample});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("certificate pass"), std::string::npos);
}

TEST(Cli, SteadyStateOnZeroInjectionNetwork) {
  CliRun r = run({"steady-state", "--network", kExample});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("omega0 0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("29 0 0 0\n"), std::string::npos) << r.out;
}

TEST(Cli, SimulateWritesHeaderAndIsDeterministic) {
  fs::path a = scratch("sim_a"), b = scratch("sim_b");
  for (const auto& dir : {a, b}) {
    CliRun r = run({"simulate", "--network", kExample, "--horizon", "3", "--stochastic",
                    "--seed", "4", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string csv = slurp(a / "trajectory.csv");
  EXPECT_EQ(csv, slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "metrics.json"), slurp(b / "metrics.json"));
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header.rfind("t,theta_dev_29,theta_dev_30,", 0), 0u) << header;
  EXPECT_NE(header.find(",omega_dev_29,"), std::string::npos);
  EXPECT_NE(header.find(",q_r_dev_38,x_29,"), std::string::npos);
  EXPECT_EQ(header.substr(header.size() - 5), ",x_38");
  json metrics = json::parse(slurp(a / "metrics.json"));
  EXPECT_TRUE(metrics.contains("nadir"));
  EXPECT_TRUE(metrics.contains("empirical_output_variance"));
}

TEST(Cli, DivergenceIsNumericalFailure) {
  CliRun r = run({"simulate", "--network", kExample, "--dt", "5", "--horizon", "2000",
                  "--out", scratch("diverge").string()});
  EXPECT_EQ(r.code, 2) << r.out << r.err;
}

TEST(Cli, SweepCsvIsOrderedAndComplete) {
  fs::path dir = scratch("sweep");
  fs::path spec = dir / "spec.json";
  std::ofstream(spec) << R"({"axes": [{"name": "delta", "min": 2, "max": 6, "count": 2},
                                      {"name": "nu", "min": 0.01, "max": 1, "count": 3, "spacing": "log"}],
                             "metric": "h2"})";
  CliRun r = run({"sweep", "--network", kExample, "--sweep", spec.string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "delta,nu,h2");
  std::vector<std::string> rows;
  while (std::getline(csv, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].rfind("2,0.01,", 0), 0u);
  EXPECT_EQ(rows[1].rfind("2,0.1,", 0), 0u);
  EXPECT_EQ(rows[5].rfind("6,1,", 0), 0u);
}

TEST(Cli, ModalOnHomogeneousFleet) {
  CliRun r = run({"modal", "--network", kExample, "--mode", "DC"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sum 2.5952380"), std::string::npos) << r.out;
}

TEST(Cli, ReduceEmitsParsableDocument) {
  fs::path dir = scratch("reduce");
  CliRun r = run({"reduce", "--network", kExample, "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  NetworkDocument doc = parse_network_document(json::parse(slurp(dir / "reduced.json")));
  EXPECT_EQ(doc.network.size(), 10);
  EXPECT_TRUE(doc.network.all_generators());
}
