#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "banditscape/commands.hpp"
#include "banditscape/dp.hpp"
#include "json.hpp"

namespace {

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return nlohmann::json::parse(in);
}

void write_outputs(const banditscape::CommandOutput& out, const std::string& dir) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : out.files) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream file(path, std::ios::binary);
    file << contents;
    if (!file) throw std::runtime_error("failed writing '" + path.string() + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation laboratory for the K-action partial-information prediction game"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::string output_dir;
  };
  using Command = std::function<banditscape::CommandOutput(const nlohmann::json&)>;
  std::optional<Command> selected;
  nlohmann::json config = nlohmann::json::object();
  Common common;

  const auto add = [&](const std::string& name, const std::string& help, Command command,
                       bool config_required) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", common.config, "JSON config file");
    if (config_required) opt->required();
    sub->add_option("--output-dir", common.output_dir, "directory for CSV and JSON artifacts");
    sub->callback([&selected, command] { selected = command; });
    return sub;
  };

  add("simulate", "Monte-Carlo regret with bound checks", banditscape::simulate_command, true);
  CLI::App* dp = add("dp-value", "minimax value by backward induction",
                     banditscape::dp_value_command, false);
  std::optional<int> k, t, grid_b, grid_a;
  dp->add_option("--k", k, "number of actions (2 or 3)");
  dp->add_option("--t", t, "horizon (1 to 4)");
  dp->add_option("--grid-b", grid_b, "forecaster grid resolution");
  dp->add_option("--grid-a", grid_a, "adversary grid resolution");
  add("expansion-check", "first and second order expansion checks",
      banditscape::expansion_check_command, true);
  add("potential-probe", "heat potential values, gradients and residuals",
      banditscape::potential_probe_command, true);
  add("regret-sweep", "regret over forecasters, adversaries and horizons",
      banditscape::regret_sweep_command, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!common.config.empty()) config = read_config(common.config);
    if (k) config["k"] = *k;
    if (t) config["t"] = *t;
    if (grid_b) config["grid_b"] = *grid_b;
    if (grid_a) config["grid_a"] = *grid_a;
    const banditscape::CommandOutput out = (*selected)(config);
    write_outputs(out, common.output_dir);
    std::cout << out.summary.dump(2) << '\n';
  } catch (const banditscape::DpBudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n'
              << nlohmann::json{{"nodes", e.nodes},
                                {"round", e.round},
                                {"cache_entries", e.cache_entries},
                                {"largest_support", e.largest_support}}
                     .dump()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
