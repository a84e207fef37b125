#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wsrm/errors.hpp"
#include "wsrm/harness.hpp"

using namespace wsrm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wsrm_unit_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmall = R"({
  "format": "wsrm-experiment",
  "version": 1,
  "network": {"cells": 2, "users_per_cell": 1, "subcarriers": 2, "antennas": 1, "p_max_dbw": 20},
  "spca": {"epsilon": 1e-4, "tol": 1e-4},
  "trials": 4,
  "seed": 99
})";

std::string field_of(const std::string& text) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_experiment_config(kSmall);
  CHECK(c.network.cells == 2);
  CHECK(c.network.p_max == std::vector<double>{100.0, 100.0});
  CHECK(c.trials == 4);
  CHECK(c.seed == 99);
  CHECK(!c.sweep);

  const ExperimentConfig back = parse_experiment_config(to_json(c).dump());
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("config errors name the field") {
  CHECK(field_of(R"({"trials": 0})") == "trials");
  CHECK(field_of(R"({"bogus": 1})") == "bogus");
  CHECK(field_of(R"({"spca": {"method": "lp"}})") == "spca.method");
  CHECK(field_of(R"({"spca": {"epsilon": "small"}})") == "spca.epsilon");
  CHECK(field_of(R"({"network": {"cells": 0}})").rfind("network", 0) == 0);
  CHECK(field_of(R"({"seed": -3})") == "seed");
  CHECK(field_of(R"({"version": 7})") == "version");
  CHECK(field_of(R"({"sweep": {"key": "antennas", "values": [1, 2]}})") == "sweep.key");
  CHECK(field_of("{\n  \"trials\": 3,\n  oops\n}") == "line 3, column 3");
}

TEST_CASE("sweep axis") {
  ExperimentConfig c = parse_experiment_config(R"({"sweep": {"key": "p_max_dbw", "values": [0, 10]}})");
  REQUIRE(c.sweep);
  CHECK(c.at_axis("10").network.p_max[0] == doctest::Approx(10.0));
  c = parse_experiment_config(R"({"sweep": {"key": "method", "values": ["gm", "tree"]}})");
  CHECK(c.at_axis("tree").spca.method == ObjectiveMethod::product_tree);
}

TEST_CASE("monte carlo is independent of thread count") {
  const ExperimentConfig c = parse_experiment_config(kSmall);
  const auto one = monte_carlo(c.network, c.spca, c.trials, c.seed, 1);
  const auto many = monte_carlo(c.network, c.spca, c.trials, c.seed, 3);
  REQUIRE(one.size() == 4);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].trial == static_cast<int>(i));
    CHECK(one[i].seed == trial_seed(99, static_cast<std::uint32_t>(i)));
    CHECK(one[i].run.final_wsr() == many[i].run.final_wsr());
  }
  const Aggregate a = aggregate(one);
  CHECK(a.trials == 4);
  CHECK(a.completed == 4);
  double sum = 0.0;
  for (const auto& t : one) sum += t.run.final_wsr();
  CHECK(a.mean_wsr == doctest::Approx(sum / 4.0));
}

TEST_CASE("artifacts are byte-identical across runs") {
  const ExperimentConfig c = parse_experiment_config(kSmall);
  const fs::path a = scratch("a"), b = scratch("b");
  const RunArtifacts ra = run_experiment(c, a, {false, false, "run"});
  run_experiment(c, b, {false, false, "run"});
  for (const std::string& f : ra.files) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "trials.csv").rfind("axis,trial,seed,status,termination,iterations,initial_wsr,final_wsr,error\n", 0) == 0);
  CHECK(std::find(ra.files.begin(), ra.files.end(), "trajectories/trial_0003.csv") != ra.files.end());

  // The manifest replays the run.
  const ExperimentConfig again = load_experiment_config(a / "manifest.json");
  const fs::path d = scratch("replay");
  run_experiment(again, d, {false, false, "run"});
  CHECK(slurp(a / "trials.csv") == slurp(d / "trials.csv"));
  for (const fs::path& p : {a, b, d}) fs::remove_all(p);
}

TEST_CASE("sweep artifacts") {
  ExperimentConfig c = parse_experiment_config(kSmall);
  c.trials = 2;
  c.sweep = SweepSpec{"epsilon", {"0.0001", "0.1"}};
  const fs::path out = scratch("sweep");
  CHECK_THROWS_AS(run_experiment(c, out), ConfigError);
  const RunArtifacts art = run_sweep(c, out, {false, false, "sweep"});
  CHECK(art.aggregates.size() == 2);
  const std::string agg = slurp(out / "aggregate.csv");
  CHECK(agg.find("epsilon,0.1,2,average_sum_rate,") != std::string::npos);
  CHECK(fs::exists(out / "trajectories/epsilon_0.1/trial_0001.csv"));
  fs::remove_all(out);
}

TEST_CASE("water-filling oracle") {
  // Closed form when every channel is active: p_n = mu - 1/g_n with sum p_n = P.
  const std::vector<double> g{1.0, 2.0, 4.0};
  const WaterFilling wf = oracle_waterfilling(g, 10.0);
  const double mu = (10.0 + 1.0 + 0.5 + 0.25) / 3.0;
  CHECK(wf.level == doctest::Approx(mu).epsilon(1e-9));
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(wf.power[n] == doctest::Approx(mu - 1.0 / g[n]).epsilon(1e-9));

  // A weak channel stays dry.
  const WaterFilling dry = oracle_waterfilling(std::vector<double>{1.0, 1e-3}, 1.0);
  CHECK(dry.power[1] == 0.0);
  CHECK(dry.power[0] == doctest::Approx(1.0));
  CHECK(dry.rate == doctest::Approx(1.0));
}

TEST_CASE("grid oracle on decoupled and symmetric instances") {
  const NetworkConfig net = gridsearch_network();
  Scenario sc = drop_network(net, 1);
  ChannelSet ch = generate_channels(sc, 1);
  // No cross gains: both cells at full power.
  ch.h(0, 1, 0)[0] = 0.0;
  ch.h(1, 0, 0)[0] = 0.0;
  const GridSearch g = oracle_gridsearch(sc, ch, 201);
  const double full = std::log2(1.0 + 100.0 * std::norm(ch.h(0, 0, 0)[0])) + std::log2(1.0 + 100.0 * std::norm(ch.h(1, 1, 0)[0]));
  CHECK(g.wsr == doctest::Approx(full).epsilon(1e-12));
  CHECK(g.evaluated == 201 * 201);

  // Swapping the cells' channels gives the same best value.
  ChannelSet sym = generate_channels(sc, 2), swapped = sym;
  swapped.h(0, 0, 0)[0] = sym.h(1, 1, 0)[0];
  swapped.h(1, 1, 0)[0] = sym.h(0, 0, 0)[0];
  swapped.h(0, 1, 0)[0] = sym.h(1, 0, 0)[0];
  swapped.h(1, 0, 0)[0] = sym.h(0, 1, 0)[0];
  CHECK(oracle_gridsearch(sc, sym, 101).wsr == doctest::Approx(oracle_gridsearch(sc, swapped, 101).wsr).epsilon(1e-12));

  NetworkConfig big = NetworkConfig::desk();
  big.antennas = 1;
  const Scenario bs = drop_network(big, 0);
  CHECK_THROWS_AS(oracle_gridsearch(bs, generate_channels(bs, 0), 201), ConfigError);
}

TEST_CASE("fnv1a") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"desk.json", "paper.json", "pmax_sweep.json", "epsilon_compare.json"}) {
    INFO(name);
    CHECK_NOTHROW(load_experiment_config(fs::path(WSRM_CONFIG_DIR) / name));
  }
}
