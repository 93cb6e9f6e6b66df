#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace banditscape {

// Result of one CLI command: the JSON printed on stdout and the artifacts
// written to the output directory, as (file name, contents).
struct CommandOutput {
  nlohmann::json summary;
  std::vector<std::pair<std::string, std::string>> files;
};

// Experiment config plus optional "traces": n, the number of leading episodes
// per T written as JSON lines. Files: simulate.csv, simulate.json and
// simulate_traces.jsonl.
CommandOutput simulate_command(const nlohmann::json& config);

// {"k", "t", "grid_b", "grid_a", "m0", "refine": {"rounds", "shrink",
// "multiples"}, "prune_eps", "node_cap", "use_cache"}. File: dp_value.json.
CommandOutput dp_value_command(const nlohmann::json& config);

// {"functional", "a": [2^K weights], "m0", "signal": +-i (1-based), "order":
// 1 | 2, "t": [..]}. Files: expansion.csv, expansion.json.
CommandOutput expansion_check_command(const nlohmann::json& config);

// {"k", "sigma", "t": [..], "points": [[..]] or "samples" + "seed" + "box",
// "a": balanced mix for the subsolution residual}. Files: potential.csv,
// potential.json.
CommandOutput potential_probe_command(const nlohmann::json& config);

// Sweep config. Files: sweep.csv, sweep.json.
CommandOutput regret_sweep_command(const nlohmann::json& config);

}  // namespace banditscape
