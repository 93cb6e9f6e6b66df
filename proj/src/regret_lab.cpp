#include "banditscape/regret_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "banditscape/fit.hpp"
#include "banditscape/potentials.hpp"

namespace banditscape {

namespace {

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                    const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown " + what + " field '" + key + "'");
}

std::vector<int> horizons_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return {j.get<int>()};
  return j.get<std::vector<int>>();
}

Belief::Mode mode_from_json(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  if (s == "reduced") return Belief::Mode::kReduced;
  if (s == "exact") return Belief::Mode::kExact;
  throw std::invalid_argument("belief_mode must be 'reduced' or 'exact'");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

bool is_balanced_uniform(const StrategySpec& s) {
  return s.kind == "balanced_uniform_adversary";
}

bool is_pde(const StrategySpec& s) { return s.kind == "pde_forecaster"; }

// Integral of phi_sigma(0, x / sqrt(T)) against m0.
double scaled_potential(const DiscreteMeasure& m0, int horizon, double sigma) {
  const double root = std::sqrt(static_cast<double>(horizon));
  return integrate(m0, [&](std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    for (double& v : y) v /= root;
    return heat_phi(0.0, y, sigma);
  });
}

}  // namespace

DiscreteMeasure ExperimentConfig::initial() const {
  return m0 ? *m0 : DiscreteMeasure::point_mass_at_origin(num_actions);
}

void ExperimentConfig::validate() const {
  if (num_actions < 2 || num_actions > kMaxActions)
    throw std::invalid_argument("K must lie in [2, 16]");
  if (horizons.empty()) throw std::invalid_argument("need at least one T");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw std::invalid_argument("T must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw std::invalid_argument("T list must be strictly increasing");
  }
  if (n_episodes < 1) throw std::invalid_argument("need at least one episode");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  if (m0 && (m0->dim() != num_actions || m0->scale() != 1.0))
    throw std::invalid_argument("m0 must be a K-dimensional unit-lattice measure");
  if (!forecaster.is_forecaster())
    throw std::invalid_argument("'" + forecaster.kind + "' is not a forecaster; valid kinds: " +
                                [] {
                                  std::string s;
                                  for (const auto& k : forecaster_kinds())
                                    s += (s.empty() ? "" : ", ") + k;
                                  return s;
                                }());
  if (!adversary.is_adversary())
    throw std::invalid_argument("'" + adversary.kind + "' is not an adversary; valid kinds: " +
                                [] {
                                  std::string s;
                                  for (const auto& k : adversary_kinds())
                                    s += (s.empty() ? "" : ", ") + k;
                                  return s;
                                }());
  forecaster.validate(num_actions);
  adversary.validate(num_actions);
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"k", "t", "m0", "forecaster", "adversary", "episodes", "seed", "epsilon",
                  "belief_mode", "output"},
                 "experiment");
  ExperimentConfig c;
  c.num_actions = j.at("k").get<int>();
  if (j.contains("t")) c.horizons = horizons_from_json(j.at("t"));
  if (j.contains("m0") && !j.at("m0").is_null()) c.m0 = measure_from_json(j.at("m0"));
  c.forecaster = strategy_from_json(j.at("forecaster"));
  c.adversary = strategy_from_json(j.at("adversary"));
  if (j.contains("episodes")) c.n_episodes = j.at("episodes").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  if (j.contains("belief_mode")) c.belief_mode = mode_from_json(j.at("belief_mode"));
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["k"] = c.num_actions;
  j["t"] = c.horizons;
  j["m0"] = to_json(c.initial());
  j["forecaster"] = to_json(c.forecaster);
  j["adversary"] = to_json(c.adversary);
  j["episodes"] = c.n_episodes;
  j["seed"] = c.seed;
  j["epsilon"] = c.epsilon;
  j["belief_mode"] = c.belief_mode == Belief::Mode::kExact ? "exact" : "reduced";
  j["output"] = c.output;
  return j;
}

void bound_check(BoundReport& report) {
  const double eps = report.config.epsilon;
  const bool lower_applies = is_balanced_uniform(report.config.adversary);
  report.pass = !report.rows.empty();
  for (auto& row : report.rows) {
    row.applicable = row.estimate.episodes >= kMinBoundEpisodes;
    row.upper_limit = row.upper_reference * (1.0 + eps) + 3.0 * row.normalized_stderr;
    row.lower_limit = row.lower_reference * (1.0 - eps) - 3.0 * row.normalized_stderr;
    row.upper_pass = row.applicable && row.normalized_mean <= row.upper_limit;
    if (lower_applies)
      row.lower_pass = row.applicable && row.normalized_mean >= row.lower_limit;
    else
      row.lower_pass.reset();
    report.pass = report.pass && row.upper_pass && row.lower_pass.value_or(true);
  }
}

BoundReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int k = config.num_actions;
  const ForecasterFn f = make_forecaster(config.forecaster, k);
  const AdversaryFn a = make_adversary(config.adversary, k, f);
  const DiscreteMeasure m0 = config.initial();
  BoundReport report;
  report.config = config;
  for (int horizon : config.horizons) {
    BoundRow row;
    row.num_actions = k;
    row.horizon = horizon;
    row.forecaster_id = config.forecaster.id();
    row.adversary_id = config.adversary.id();
    row.estimate =
        estimate_regret(k, horizon, m0, f, a, config.n_episodes, config.seed, config.belief_mode);
    const double root = std::sqrt(static_cast<double>(horizon));
    row.normalized_mean = row.estimate.mean / root;
    row.normalized_stderr = row.estimate.stderr_ / root;
    row.upper_reference = std::sqrt(2.0 * std::log(static_cast<double>(k)));
    row.lower_reference = scaled_potential(m0, horizon, 0.5);
    row.analytic_floor = 0.065 * std::sqrt(std::log(static_cast<double>(k))) - 0.35;
    report.rows.push_back(std::move(row));
  }
  bound_check(report);
  if (!config.output.empty()) {
    write_file(config.output + ".csv", bound_csv(report));
    write_file(config.output + ".json", to_json(report).dump(2) + "\n");
  }
  return report;
}

std::string bound_csv(const BoundReport& report) {
  std::ostringstream out;
  out << "K,T,forecaster_id,adversary_id,n,mean,stderr,normalized_mean,normalized_stderr,"
         "upper_reference,upper_limit,upper_pass,lower_reference,lower_limit,lower_pass,"
         "analytic_floor,seed\n";
  const auto flag = [](bool b) { return b ? "true" : "false"; };
  for (const auto& r : report.rows) {
    out << r.num_actions << ',' << r.horizon << ',' << r.forecaster_id << ',' << r.adversary_id
        << ',' << r.estimate.episodes << ',' << format_double(r.estimate.mean) << ','
        << format_double(r.estimate.stderr_) << ',' << format_double(r.normalized_mean) << ','
        << format_double(r.normalized_stderr) << ',' << format_double(r.upper_reference) << ','
        << format_double(r.upper_limit) << ',' << flag(r.upper_pass) << ','
        << format_double(r.lower_reference) << ',' << format_double(r.lower_limit) << ','
        << (r.lower_pass ? flag(*r.lower_pass) : "n/a") << ','
        << format_double(r.analytic_floor) << ',' << report.config.seed << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json j;
    j["k"] = r.num_actions;
    j["t"] = r.horizon;
    j["forecaster"] = r.forecaster_id;
    j["adversary"] = r.adversary_id;
    j["episodes"] = r.estimate.episodes;
    j["mean"] = r.estimate.mean;
    j["stderr"] = r.estimate.stderr_;
    j["normalized_mean"] = r.normalized_mean;
    j["normalized_stderr"] = r.normalized_stderr;
    j["upper_reference"] = r.upper_reference;
    j["upper_limit"] = r.upper_limit;
    j["upper_pass"] = r.upper_pass;
    j["lower_reference"] = r.lower_reference;
    j["lower_limit"] = r.lower_limit;
    j["lower_pass"] = r.lower_pass ? nlohmann::json(*r.lower_pass) : nlohmann::json(nullptr);
    j["analytic_floor"] = r.analytic_floor;
    j["applicable"] = r.applicable;
    rows.push_back(std::move(j));
  }
  return {{"config", to_json(report.config)}, {"rows", rows}, {"pass", report.pass}};
}

SweepConfig sweep_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"k", "t", "m0", "episodes", "seed", "belief_mode", "forecasters",
                  "adversaries", "output"},
                 "sweep");
  SweepConfig c;
  c.base.num_actions = j.at("k").get<int>();
  if (j.contains("t")) c.horizons = horizons_from_json(j.at("t"));
  if (j.contains("m0") && !j.at("m0").is_null()) c.base.m0 = measure_from_json(j.at("m0"));
  if (j.contains("episodes")) c.base.n_episodes = j.at("episodes").get<std::size_t>();
  if (j.contains("seed")) c.base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("belief_mode")) c.base.belief_mode = mode_from_json(j.at("belief_mode"));
  if (j.contains("output")) c.base.output = j.at("output").get<std::string>();
  for (const auto& s : j.at("forecasters")) c.forecasters.push_back(strategy_from_json(s));
  for (const auto& s : j.at("adversaries")) c.adversaries.push_back(strategy_from_json(s));
  return c;
}

SweepResult sweep(const SweepConfig& config) {
  if (config.horizons.size() < 3) throw std::invalid_argument("a sweep needs at least 3 T values");
  if (config.forecasters.empty() || config.adversaries.empty())
    throw std::invalid_argument("a sweep needs forecasters and adversaries");
  SweepResult result;
  result.num_actions = config.base.num_actions;
  result.seed = config.base.seed;
  result.n_episodes = config.base.n_episodes;
  for (const auto& f : config.forecasters)
    for (const auto& a : config.adversaries) {
      ExperimentConfig cell = config.base;
      cell.horizons = config.horizons;
      cell.forecaster = f;
      cell.adversary = a;
      cell.output.clear();
      cell.validate();
    }

  const int k = config.base.num_actions;
  const DiscreteMeasure m0 = config.base.initial();
  for (const auto& fs : config.forecasters)
    for (const auto& as : config.adversaries) {
      const ForecasterFn f = make_forecaster(fs, k);
      const AdversaryFn a = make_adversary(as, k, f);
      std::vector<double> ts, means;
      for (int horizon : config.horizons) {
        const auto est = estimate_regret(k, horizon, m0, f, a, config.base.n_episodes,
                                         config.base.seed, config.base.belief_mode);
        result.cells.push_back({horizon, fs.id(), as.id(), est});
        ts.push_back(horizon);
        means.push_back(est.mean);
      }
      SweepFit fit;
      fit.forecaster_id = fs.id();
      fit.adversary_id = as.id();
      fit.slope = loglog_slope(ts, means);
      fit.anomalous = fit.slope > 0.75;
      if (is_pde(fs) && is_balanced_uniform(as))
        fit.in_expected_range = fit.slope >= 0.45 && fit.slope <= 0.55;
      result.fits.push_back(fit);
    }

  const int top = config.horizons.back();
  const auto cell_at = [&](const std::string& f, const std::string& a) -> const SweepCell* {
    for (const auto& c : result.cells)
      if (c.horizon == top && c.forecaster_id == f && c.adversary_id == a) return &c;
    return nullptr;
  };
  for (const auto& base : config.forecasters) {
    if (!is_pde(base)) continue;
    for (const auto& as : config.adversaries)
      for (const auto& fs : config.forecasters) {
        if (is_pde(fs)) continue;
        const SweepCell* ref = cell_at(base.id(), as.id());
        const SweepCell* other = cell_at(fs.id(), as.id());
        SweepComparison cmp;
        cmp.adversary_id = as.id();
        cmp.forecaster_id = fs.id();
        cmp.horizon = top;
        cmp.difference = other->estimate.mean - ref->estimate.mean;
        cmp.joint_stderr = std::hypot(other->estimate.stderr_, ref->estimate.stderr_);
        cmp.holds = cmp.difference >= -3.0 * cmp.joint_stderr;
        result.comparisons.push_back(cmp);
      }
    break;
  }

  if (!config.base.output.empty()) {
    write_file(config.base.output + ".csv", sweep_csv(result));
    write_file(config.base.output + ".json", to_json(result).dump(2) + "\n");
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = regret_csv_header() + "\n";
  for (const auto& c : result.cells)
    out += regret_csv_row(result.num_actions, c.horizon, c.forecaster_id, c.adversary_id,
                          c.estimate, result.seed) +
           "\n";
  return out;
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells)
    cells.push_back({{"t", c.horizon},
                     {"forecaster", c.forecaster_id},
                     {"adversary", c.adversary_id},
                     {"mean", c.estimate.mean},
                     {"stderr", c.estimate.stderr_},
                     {"normalized_mean", c.estimate.mean / std::sqrt(c.horizon)}});
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : result.fits)
    fits.push_back({{"forecaster", f.forecaster_id},
                    {"adversary", f.adversary_id},
                    {"slope", f.slope},
                    {"anomalous", f.anomalous},
                    {"in_expected_range", f.in_expected_range
                                              ? nlohmann::json(*f.in_expected_range)
                                              : nlohmann::json(nullptr)}});
  nlohmann::json cmps = nlohmann::json::array();
  for (const auto& c : result.comparisons)
    cmps.push_back({{"adversary", c.adversary_id},
                    {"forecaster", c.forecaster_id},
                    {"t", c.horizon},
                    {"difference_vs_pde", c.difference},
                    {"joint_stderr", c.joint_stderr},
                    {"holds", c.holds}});
  return {{"k", result.num_actions},
          {"seed", result.seed},
          {"episodes", result.n_episodes},
          {"cells", cells},
          {"fits", fits},
          {"comparisons", cmps}};
}

}  // namespace banditscape
