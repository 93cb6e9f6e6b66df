#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "banditscape/game.hpp"
#include "banditscape/strategies.hpp"
#include "json.hpp"

namespace banditscape {

struct ExperimentConfig {
  int num_actions = 2;
  std::vector<int> horizons{1024};
  std::optional<DiscreteMeasure> m0;  // default: point mass at the origin
  StrategySpec forecaster;
  StrategySpec adversary;
  std::size_t n_episodes = 1000;
  std::uint64_t seed = 1;
  double epsilon = 0.15;  // finite-T allowance of the bound checks
  Belief::Mode belief_mode = Belief::Mode::kReduced;
  std::string output;  // file prefix for CSV + JSON; empty: no files

  DiscreteMeasure initial() const;
  // Throws std::invalid_argument listing the valid kinds on a bad combination.
  void validate() const;
};

// {"k", "t": [..], "m0", "forecaster", "adversary", "episodes", "seed",
//  "epsilon", "belief_mode": "reduced" | "exact", "output"}. Unknown fields
// are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

// Episodes needed before the bound checks are applied.
constexpr std::size_t kMinBoundEpisodes = 100;

struct BoundRow {
  int num_actions = 0;
  int horizon = 0;
  std::string forecaster_id;
  std::string adversary_id;
  RegretEstimate estimate;
  double normalized_mean = 0.0;    // mean / sqrt(T)
  double normalized_stderr = 0.0;  // stderr / sqrt(T)
  double upper_reference = 0.0;    // sqrt(2 log K)
  double lower_reference = 0.0;    // integral of phi_{1/2}(0, x / sqrt(T)) dm0
  double analytic_floor = 0.0;     // 0.065 sqrt(log K) - 0.35, reported only
  // Filled by bound_check.
  double upper_limit = 0.0;
  double lower_limit = 0.0;
  bool upper_pass = false;
  std::optional<bool> lower_pass;  // balanced uniform adversary only
  bool applicable = false;         // n_episodes >= kMinBoundEpisodes
};

struct BoundReport {
  ExperimentConfig config;
  std::vector<BoundRow> rows;
  bool pass = false;
};

// upper: normalized mean <= sqrt(2 log K) (1 + eps) + 3 stderr / sqrt(T);
// lower (balanced uniform adversary): normalized mean >= phi_{1/2}(0, [m0~])
// (1 - eps) - 3 stderr / sqrt(T). Rows with too few episodes are marked not
// applicable and do not pass.
void bound_check(BoundReport& report);

// Monte-Carlo estimates for every T, then bound_check. Writes
// <output>.csv and <output>.json when config.output is set.
BoundReport run_experiment(const ExperimentConfig& config);

std::string bound_csv(const BoundReport& report);
nlohmann::json to_json(const BoundReport& report);

struct SweepCell {
  int horizon;
  std::string forecaster_id;
  std::string adversary_id;
  RegretEstimate estimate;
};

struct SweepFit {
  std::string forecaster_id;
  std::string adversary_id;
  double slope = 0.0;       // least squares of log mean regret on log T
  bool anomalous = false;   // slope > 0.75: regret close to linear
  std::optional<bool> in_expected_range;  // pde_forecaster vs balanced uniform
};

// Forecaster minus pde_forecaster mean regret at the largest T, per adversary.
struct SweepComparison {
  std::string adversary_id;
  std::string forecaster_id;
  int horizon = 0;
  double difference = 0.0;
  double joint_stderr = 0.0;
  bool holds = false;  // difference >= -3 joint stderr
};

struct SweepResult {
  int num_actions = 2;
  std::uint64_t seed = 0;
  std::size_t n_episodes = 0;
  std::vector<SweepCell> cells;
  std::vector<SweepFit> fits;
  std::vector<SweepComparison> comparisons;
};

struct SweepConfig {
  ExperimentConfig base;  // K, m0, episodes, seed, belief mode
  std::vector<int> horizons{256, 1024, 4096};
  std::vector<StrategySpec> forecasters;
  std::vector<StrategySpec> adversaries;
};

// {"k", "t", "m0", "episodes", "seed", "belief_mode", "forecasters": [..],
//  "adversaries": [..], "output"}
SweepConfig sweep_from_json(const nlohmann::json& j);

// Every forecaster against every adversary at every T; needs >= 3 horizons.
// Cells share the master seed.
SweepResult sweep(const SweepConfig& config);

std::string sweep_csv(const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

}  // namespace banditscape
