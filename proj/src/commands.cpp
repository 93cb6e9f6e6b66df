#include "banditscape/commands.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "banditscape/calculus.hpp"
#include "banditscape/dp.hpp"
#include "banditscape/potentials.hpp"
#include "banditscape/regret_lab.hpp"
#include "banditscape/strategies.hpp"

namespace banditscape {

namespace {

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                    const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + " config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown " + what + " field '" + key + "'");
}

std::string pretty(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<int> int_list(const nlohmann::json& j) {
  if (j.is_number_integer()) return {j.get<int>()};
  return j.get<std::vector<int>>();
}

std::vector<double> double_list(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

Signal signal_from_int(int y, int num_actions) {
  if (y == 0 || std::abs(y) > num_actions)
    throw std::invalid_argument("signal must be +-i with 1 <= i <= K");
  return Signal{std::abs(y) - 1, y > 0};
}

}  // namespace

CommandOutput simulate_command(const nlohmann::json& config) {
  nlohmann::json experiment = config;
  std::size_t traces = 0;
  if (experiment.is_object() && experiment.contains("traces")) {
    traces = experiment.at("traces").get<std::size_t>();
    experiment.erase("traces");
  }
  ExperimentConfig c = experiment_from_json(experiment);
  c.output.clear();
  const BoundReport report = run_experiment(c);

  CommandOutput out;
  out.summary = to_json(report);
  out.files.emplace_back("simulate.csv", bound_csv(report));
  out.files.emplace_back("simulate.json", pretty(out.summary));
  if (traces > 0) {
    const ForecasterFn f = make_forecaster(c.forecaster, c.num_actions);
    const AdversaryFn a = make_adversary(c.adversary, c.num_actions, f);
    const DiscreteMeasure m0 = c.initial();
    EpisodeOptions options;
    options.belief_mode = c.belief_mode;
    options.record_beliefs = false;
    std::string lines;
    for (int horizon : c.horizons)
      for (std::size_t e = 0; e < std::min(traces, c.n_episodes); ++e)
        lines += to_json(play_episode(c.num_actions, horizon, m0, f, a, c.seed, e, options))
                     .dump() +
                 "\n";
    out.files.emplace_back("simulate_traces.jsonl", std::move(lines));
  }
  return out;
}

CommandOutput dp_value_command(const nlohmann::json& config) {
  reject_unknown(config,
                 {"k", "t", "grid_b", "grid_a", "m0", "refine", "prune_eps", "node_cap",
                  "use_cache"},
                 "dp-value");
  const int k = config.at("k").get<int>();
  const int horizon = config.at("t").get<int>();
  DpOptions options;
  options.grid_b = config.value("grid_b", options.grid_b);
  options.grid_a = config.value("grid_a", options.grid_a);
  if (config.contains("refine")) {
    const auto& r = config.at("refine");
    reject_unknown(r, {"rounds", "shrink", "multiples"}, "refine");
    options.refine.rounds = r.value("rounds", options.refine.rounds);
    options.refine.shrink = r.value("shrink", options.refine.shrink);
    options.refine.multiples = r.value("multiples", options.refine.multiples);
  }
  options.prune_eps = config.value("prune_eps", options.prune_eps);
  options.node_cap = config.value("node_cap", options.node_cap);
  options.use_cache = config.value("use_cache", options.use_cache);
  const DiscreteMeasure m0 = config.contains("m0") && !config.at("m0").is_null()
                                 ? measure_from_json(config.at("m0"))
                                 : DiscreteMeasure::point_mass_at_origin(k);

  const DpResult r = solve_dpp(k, horizon, m0, options);
  CommandOutput out;
  out.summary = to_json(r);
  out.summary["k"] = k;
  out.summary["t"] = horizon;
  out.files.emplace_back("dp_value.json", pretty(out.summary));
  return out;
}

CommandOutput expansion_check_command(const nlohmann::json& config) {
  reject_unknown(config, {"functional", "a", "m0", "signal", "order", "t"}, "expansion-check");
  const FunctionalSpec spec = functional_from_json(config.at("functional"));
  const int k = spec.dim();
  const SubsetMix a(k, config.at("a").get<std::vector<double>>());
  const DiscreteMeasure m = config.contains("m0") && !config.at("m0").is_null()
                                ? measure_from_json(config.at("m0"))
                                : DiscreteMeasure::point_mass_at_origin(k);
  const Signal y = signal_from_int(config.at("signal").get<int>(), k);
  const int order = config.value("order", 1);
  const std::vector<int> horizons =
      config.contains("t") ? int_list(config.at("t")) : std::vector<int>{16, 64, 256, 1024, 4096};

  ExpansionReport report;
  if (order == 1)
    report = first_order_check(spec, a, m, y, horizons);
  else if (order == 2)
    report = second_order_check(spec, a, m, y, horizons);
  else
    throw std::invalid_argument("order must be 1 or 2");

  constexpr double kSlopeLow = -0.6, kSlopeHigh = -0.4;
  const bool slope_ok = report.slope && *report.slope >= kSlopeLow && *report.slope <= kSlopeHigh;
  CommandOutput out;
  std::ostringstream csv;
  csv << "T,measured,predicted,error\n";
  for (const auto& row : report.rows)
    csv << row.horizon << ',' << format_double(row.measured) << ','
        << format_double(row.predicted) << ',' << format_double(row.error) << '\n';
  out.summary = {{"order", order},
                 {"t", horizons},
                 {"max_error", report.max_error},
                 {"exact", report.exact},
                 {"slope", report.slope ? nlohmann::json(*report.slope) : nlohmann::json(nullptr)},
                 {"slope_window", {kSlopeLow, kSlopeHigh}},
                 {"pass", report.exact || slope_ok}};
  out.files.emplace_back("expansion.csv", csv.str());
  out.files.emplace_back("expansion.json", pretty(out.summary));
  return out;
}

CommandOutput potential_probe_command(const nlohmann::json& config) {
  reject_unknown(config, {"k", "sigma", "t", "points", "samples", "seed", "box", "a"},
                 "potential-probe");
  const int k = config.at("k").get<int>();
  const double sigma = config.value("sigma", 1.0);
  const std::vector<double> times =
      config.contains("t") ? double_list(config.at("t")) : std::vector<double>{0.0, 0.5, 0.9};
  for (double t : times)
    if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("probe times must lie in [0, 1)");
  const SubsetMix a = config.contains("a")
                          ? SubsetMix(k, config.at("a").get<std::vector<double>>())
                          : balanced_uniform_adversary(k);

  std::vector<std::vector<double>> points;
  if (config.contains("points")) {
    points = config.at("points").get<std::vector<std::vector<double>>>();
    for (const auto& p : points)
      if (static_cast<int>(p.size()) != k)
        throw std::invalid_argument("every probe point needs K coordinates");
  } else {
    const int samples = config.value("samples", 10);
    const double box = config.value("box", 2.0);
    std::mt19937_64 g(config.value("seed", std::uint64_t{1}));
    for (int s = 0; s < samples; ++s) {
      std::vector<double> p(k);
      for (double& v : p) v = box * (2.0 * unit_uniform(g) - 1.0);
      points.push_back(std::move(p));
    }
  }

  std::ostringstream csv;
  csv << 't';
  for (int i = 1; i <= k; ++i) csv << ",x" << i;
  csv << ",phi";
  for (int i = 1; i <= k; ++i) csv << ",grad" << i;
  csv << ",supersolution_residual,subsolution_residual\n";
  double max_super = -INFINITY, min_sub = INFINITY;
  for (double t : times)
    for (const auto& p : points) {
      const double phi = heat_phi(t, p, sigma);
      const ActionMix grad = heat_grad(t, p, sigma);
      const double sup = supersolution_residual(t, p, sigma);
      const double sub = subsolution_residual(t, p, a, sigma);
      max_super = std::max(max_super, sup);
      min_sub = std::min(min_sub, sub);
      csv << format_double(t);
      for (double v : p) csv << ',' << format_double(v);
      csv << ',' << format_double(phi);
      for (double v : grad.probs()) csv << ',' << format_double(v);
      csv << ',' << format_double(sup) << ',' << format_double(sub) << '\n';
    }

  CommandOutput out;
  out.summary = {{"k", k},
                 {"sigma", sigma},
                 {"t", times},
                 {"points", points.size()},
                 {"max_supersolution_residual", max_super},
                 {"min_subsolution_residual", min_sub}};
  out.files.emplace_back("potential.csv", csv.str());
  out.files.emplace_back("potential.json", pretty(out.summary));
  return out;
}

CommandOutput regret_sweep_command(const nlohmann::json& config) {
  SweepConfig c = sweep_from_json(config);
  c.base.output.clear();
  const SweepResult result = sweep(c);
  CommandOutput out;
  out.summary = to_json(result);
  out.files.emplace_back("sweep.csv", sweep_csv(result));
  out.files.emplace_back("sweep.json", pretty(out.summary));
  return out;
}

}  // namespace banditscape
