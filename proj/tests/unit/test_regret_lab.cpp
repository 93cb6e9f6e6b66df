#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "banditscape/commands.hpp"
#include "banditscape/regret_lab.hpp"
#include "doctest.h"

using namespace banditscape;

namespace {

StrategySpec spec(const std::string& kind) {
  StrategySpec s;
  s.kind = kind;
  return s;
}

ExperimentConfig config(int k, std::vector<int> horizons, const std::string& forecaster,
                        const std::string& adversary, std::size_t episodes) {
  ExperimentConfig c;
  c.num_actions = k;
  c.horizons = std::move(horizons);
  c.forecaster = spec(forecaster);
  c.adversary = spec(adversary);
  c.n_episodes = episodes;
  c.seed = 11;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("full subset adversary gives zero regret") {
  for (int k : {2, 3}) {
    auto c = config(k, {8, 32}, "pde_forecaster", "vertex_adversary", 100);
    c.adversary.subset = full_subset(k);
    const auto report = run_experiment(c);
    for (const auto& row : report.rows) {
      CHECK(row.estimate.mean == 0.0);
      CHECK(row.estimate.stderr_ == 0.0);
    }
  }
}

TEST_CASE("doubling episodes halves the squared stderr") {
  const auto small = run_experiment(config(2, {64}, "pde_forecaster",
                                           "balanced_uniform_adversary", 1000));
  const auto large = run_experiment(config(2, {64}, "pde_forecaster",
                                           "balanced_uniform_adversary", 2000));
  const double s1 = small.rows[0].estimate.stderr_;
  const double s2 = large.rows[0].estimate.stderr_;
  CHECK(s1 > 0.0);
  CHECK(std::abs(s2 * s2 / (s1 * s1) - 0.5) <= 0.5 * 0.2);
}

TEST_CASE("balanced adversary regret is invariant under coordinate permutation of m0") {
  auto a = config(2, {64}, "pde_forecaster", "balanced_uniform_adversary", 2000);
  auto b = a;
  a.m0 = DiscreteMeasure(2, 1.0, {3, 0, 1, -2}, {0.25, 0.75});
  b.m0 = DiscreteMeasure(2, 1.0, {0, 3, -2, 1}, {0.25, 0.75});
  b.seed = 12;
  const auto ra = run_experiment(a).rows[0].estimate;
  const auto rb = run_experiment(b).rows[0].estimate;
  CHECK(std::abs(ra.mean - rb.mean) <= 3.0 * std::hypot(ra.stderr_, rb.stderr_));
}

TEST_CASE("bound references for two actions") {
  const auto report =
      run_experiment(config(2, {16}, "pde_forecaster", "balanced_uniform_adversary", 100));
  const auto& row = report.rows[0];
  CHECK(row.upper_reference == doctest::Approx(1.1774).epsilon(1e-4));
  CHECK(row.lower_reference == doctest::Approx(0.5 / std::sqrt(M_PI)).epsilon(1e-9));
  CHECK(row.lower_reference == doctest::Approx(0.2821).epsilon(1e-4));
  CHECK(row.analytic_floor == doctest::Approx(-0.2959).epsilon(1e-4));
  CHECK(row.upper_limit ==
        doctest::Approx(row.upper_reference * 1.15 + 3.0 * row.normalized_stderr));
  CHECK(row.lower_limit ==
        doctest::Approx(row.lower_reference * 0.85 - 3.0 * row.normalized_stderr));
  CHECK(row.lower_pass.has_value());
}

TEST_CASE("lower reference follows the rescaled initial measure") {
  auto c = config(2, {16}, "uniform_forecaster", "balanced_uniform_adversary", 100);
  c.m0 = DiscreteMeasure::point_mass(std::vector<std::int64_t>{4, 0});
  const auto row = run_experiment(c).rows[0];
  const double d = 4.0 / std::sqrt(16.0);
  // E max(x1 + Z1 / 2, x2 + Z2 / 2) with x1 - x2 = d: d Phi(d / c) + c n(d / c), c = 1 / sqrt(2).
  const double s = 1.0 / std::sqrt(2.0);
  const double z = d / s;
  const double expected =
      d * 0.5 * std::erfc(-z / std::sqrt(2.0)) + s * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  CHECK(row.lower_reference == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("bound_check flags") {
  BoundReport report;
  report.config = config(2, {16}, "pde_forecaster", "vertex_adversary", 50);
  BoundRow row;
  row.estimate.episodes = 50;
  row.upper_reference = 1.0;
  row.lower_reference = 0.3;
  row.normalized_mean = 0.5;
  report.rows.push_back(row);
  bound_check(report);
  CHECK_FALSE(report.rows[0].applicable);
  CHECK_FALSE(report.pass);
  CHECK_FALSE(report.rows[0].lower_pass.has_value());

  report.rows[0].estimate.episodes = 100;
  bound_check(report);
  CHECK(report.pass);

  report.config.adversary = spec("balanced_uniform_adversary");
  report.rows[0].normalized_mean = 0.2;
  bound_check(report);
  REQUIRE(report.rows[0].lower_pass.has_value());
  CHECK_FALSE(*report.rows[0].lower_pass);
  CHECK_FALSE(report.pass);
  report.rows[0].normalized_stderr = 0.02;
  bound_check(report);
  CHECK(report.pass);

  report.rows[0].normalized_mean = 1.3;
  bound_check(report);
  CHECK_FALSE(report.rows[0].upper_pass);
}

TEST_CASE("config validation") {
  const nlohmann::json good = {{"k", 2},
                               {"t", {16}},
                               {"forecaster", {{"kind", "pde_forecaster"}}},
                               {"adversary", {{"kind", "balanced_uniform_adversary"}}},
                               {"episodes", 100}};
  CHECK_NOTHROW(experiment_from_json(good));
  auto bad = good;
  bad["horizon"] = 4;
  CHECK_THROWS_AS(experiment_from_json(bad), std::invalid_argument);
  bad = good;
  bad["adversary"] = {{"kind", "mw_forecaster"}};
  try {
    experiment_from_json(bad);
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("grid_best_response_adversary") != std::string::npos);
  }
  bad = good;
  bad["k"] = 17;
  CHECK_THROWS_AS(experiment_from_json(bad), std::invalid_argument);
  bad = good;
  bad["t"] = {64, 16};
  CHECK_THROWS_AS(experiment_from_json(bad), std::invalid_argument);
  bad = good;
  bad["belief_mode"] = "dense";
  CHECK_THROWS_AS(experiment_from_json(bad), std::invalid_argument);
  bad = good;
  bad["m0"] = {{"k", 3}, {"atoms", {{0, 0, 0, 1.0}}}};
  CHECK_THROWS_AS(experiment_from_json(bad), std::invalid_argument);

  const auto c = experiment_from_json(good);
  const auto round_trip = experiment_from_json(to_json(c));
  CHECK(round_trip.horizons == c.horizons);
  CHECK(round_trip.forecaster.id() == c.forecaster.id());
}

TEST_CASE("experiment output is reproducible and written to disk") {
  const auto dir = std::filesystem::temp_directory_path() / "banditscape_regret_lab_test";
  std::filesystem::create_directories(dir);
  auto c = config(2, {32, 64}, "mw_forecaster", "balanced_uniform_adversary", 120);
  c.output = (dir / "run").string();
  const auto first = run_experiment(c);
  const std::string csv = slurp(c.output + ".csv");
  const std::string json = slurp(c.output + ".json");
  run_experiment(c);
  CHECK(slurp(c.output + ".csv") == csv);
  CHECK(slurp(c.output + ".json") == json);
  CHECK(csv == bound_csv(first));
  CHECK(csv.find("K,T,forecaster_id") == 0);
  CHECK(nlohmann::json::parse(json).at("rows").size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep fits and comparisons") {
  SweepConfig c;
  c.base = config(2, {}, "pde_forecaster", "balanced_uniform_adversary", 200);
  c.horizons = {16, 64, 256};
  c.forecasters = {spec("pde_forecaster"), spec("uniform_forecaster")};
  StrategySpec vertex = spec("vertex_adversary");
  vertex.subset = 1;
  c.adversaries = {spec("balanced_uniform_adversary"), vertex};
  const auto result = sweep(c);
  CHECK(result.cells.size() == 12);
  REQUIRE(result.fits.size() == 4);
  CHECK(result.fits[0].in_expected_range.has_value());
  CHECK_FALSE(result.fits[1].in_expected_range.has_value());
  // Uniform play against a fixed single-action reward set loses linearly.
  CHECK(result.fits[3].slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(result.fits[3].anomalous);
  CHECK_FALSE(result.fits[0].anomalous);
  REQUIRE(result.comparisons.size() == 2);
  CHECK(result.comparisons[1].holds);
  CHECK(result.comparisons[0].horizon == 256);

  c.horizons = {16, 64};
  CHECK_THROWS_AS(sweep(c), std::invalid_argument);
}

TEST_CASE("sweep config parsing") {
  const nlohmann::json j = {{"k", 2},
                            {"t", {16, 64, 256}},
                            {"episodes", 100},
                            {"seed", 3},
                            {"forecasters", {{{"kind", "pde_forecaster"}}}},
                            {"adversaries", {{{"kind", "balanced_uniform_adversary"}}}}};
  const auto c = sweep_from_json(j);
  CHECK(c.horizons == std::vector<int>{16, 64, 256});
  CHECK(c.base.seed == 3);
  auto bad = j;
  bad["epsilon"] = 0.1;
  CHECK_THROWS_AS(sweep_from_json(bad), std::invalid_argument);
}

TEST_CASE("dp-value command") {
  const auto out = dp_value_command({{"k", 2}, {"t", 1}});
  CHECK(out.summary.at("value").get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  for (const char* key : {"value", "gap", "b0", "a0", "nodes"}) CHECK(out.summary.contains(key));
  CHECK_THROWS_AS(dp_value_command({{"k", 2}, {"t", 1}, {"grid", 3}}), std::invalid_argument);
}

TEST_CASE("expansion-check command") {
  const nlohmann::json j = {{"functional", {{"kind", "linear"}, {"w", {1.0, -2.0}}}},
                            {"a", {0.1, 0.2, 0.3, 0.4}},
                            {"signal", -2},
                            {"order", 1},
                            {"t", {4, 16, 64}}};
  const auto out = expansion_check_command(j);
  CHECK(out.summary.at("exact").get<bool>());
  CHECK(out.summary.at("pass").get<bool>());
  REQUIRE(out.files.size() == 2);
  CHECK(out.files[0].second.find("T,measured,predicted,error\n4,") == 0);
  auto bad = j;
  bad["signal"] = 3;
  CHECK_THROWS_AS(expansion_check_command(bad), std::invalid_argument);
}

TEST_CASE("potential-probe command") {
  const auto out = potential_probe_command(
      {{"k", 2}, {"sigma", 1.0}, {"t", {0.0}}, {"points", {{0.0, 0.0}}}});
  const std::string& csv = out.files[0].second;
  CHECK(csv.find("t,x1,x2,phi,grad1,grad2,supersolution_residual,subsolution_residual\n") == 0);
  const auto line = csv.substr(csv.find('\n') + 1);
  std::stringstream s(line);
  std::string cell;
  std::vector<double> cells;
  while (std::getline(s, cell, ',')) cells.push_back(std::stod(cell));
  REQUIRE(cells.size() == 8);
  CHECK(cells[3] == doctest::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-9));
  CHECK(cells[4] == doctest::Approx(0.5));
  CHECK(out.summary.at("max_supersolution_residual").get<double>() <= 1e-7);
  CHECK_THROWS_AS(potential_probe_command({{"k", 2}, {"t", {1.0}}}), std::invalid_argument);
}

TEST_CASE("simulate command writes traces") {
  const nlohmann::json j = {{"k", 2},
                            {"t", {8}},
                            {"forecaster", {{"kind", "uniform_forecaster"}}},
                            {"adversary", {{"kind", "balanced_uniform_adversary"}}},
                            {"episodes", 100},
                            {"traces", 3}};
  const auto out = simulate_command(j);
  REQUIRE(out.files.size() == 3);
  const std::string& jsonl = out.files[2].second;
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 3);
  const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first.at("signals").size() == 8);
  CHECK(simulate_command(j).files == out.files);
}
