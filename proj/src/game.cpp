#include "banditscape/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace banditscape {

namespace {

void check_simplex(const std::vector<double>& p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(what) +
                                  ": entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": entries must sum to 1");
}

void check_actions(int num_actions) {
  if (num_actions < 2 || num_actions > kMaxActions)
    throw std::invalid_argument("number of actions must lie in [2, 16]");
}

}  // namespace

ActionMix::ActionMix(std::vector<double> probs) : probs_(std::move(probs)) {
  check_actions(static_cast<int>(probs_.size()));
  check_simplex(probs_, "ActionMix");
}

ActionMix ActionMix::uniform(int num_actions) {
  return ActionMix(std::vector<double>(num_actions, 1.0 / num_actions));
}

ActionMix ActionMix::pure(int num_actions, int action) {
  std::vector<double> p(num_actions, 0.0);
  p.at(action) = 1.0;
  return ActionMix(std::move(p));
}

SubsetMix::SubsetMix(int num_actions, std::vector<double> probs)
    : num_actions_(num_actions), probs_(std::move(probs)) {
  check_actions(num_actions);
  if (probs_.size() != (std::size_t{1} << num_actions))
    throw std::invalid_argument("SubsetMix needs 2^K entries");
  check_simplex(probs_, "SubsetMix");
}

SubsetMix SubsetMix::uniform(int num_actions) {
  check_actions(num_actions);
  const std::size_t n = std::size_t{1} << num_actions;
  return SubsetMix(num_actions, std::vector<double>(n, 1.0 / n));
}

SubsetMix SubsetMix::vertex(int num_actions, Subset j) {
  check_actions(num_actions);
  std::vector<double> p(std::size_t{1} << num_actions, 0.0);
  p.at(j) = 1.0;
  return SubsetMix(num_actions, std::move(p));
}

Signal Signal::from_int(int value) {
  if (value == 0) throw std::invalid_argument("signal must be nonzero");
  return value > 0 ? Signal{value - 1, true} : Signal{-value - 1, false};
}

std::vector<Signal> all_signals(int num_actions) {
  std::vector<Signal> out;
  for (int i = 0; i < num_actions; ++i) {
    out.push_back({i, true});
    out.push_back({i, false});
  }
  return out;
}

LatticePoint increment(int num_actions, int action, Subset j) {
  LatticePoint d(num_actions, 0);
  const std::int64_t hit = contains(j, action) ? 1 : 0;
  for (int k = 0; k < num_actions; ++k) d[k] = (contains(j, k) ? 1 : 0) - hit;
  return d;
}

LatticePoint step_state(std::span<const std::int64_t> x, int action, Subset j) {
  const int num_actions = static_cast<int>(x.size());
  if (action < 0 || action >= num_actions)
    throw std::invalid_argument("action out of range");
  if (j > full_subset(num_actions))
    throw std::invalid_argument("subset out of range");
  LatticePoint next(x.begin(), x.end());
  const LatticePoint d = increment(num_actions, action, j);
  for (int k = 0; k < num_actions; ++k) next[k] += d[k];
  return next;
}

Signal signal(int action, Subset j) { return {action, contains(j, action)}; }

double hat_a(const SubsetMix& a, Signal y) {
  double acc = 0.0;
  const Subset n = full_subset(a.num_actions());
  for (Subset j = 0; j <= n; ++j)
    if (contains(j, y.action) == y.rewarded) acc += a[j];
  return acc;
}

bool is_balanced(const SubsetMix& a, double tol) {
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < a.num_actions(); ++i) {
    const double h = hat_a(a, {i, true});
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  return hi - lo <= tol;
}

std::vector<ShiftComponent> conditional_shifts(const SubsetMix& a, Signal y) {
  const double total = hat_a(a, y);
  std::vector<ShiftComponent> out;
  if (!(total > 0.0)) return out;
  const Subset n = full_subset(a.num_actions());
  for (Subset j = 0; j <= n; ++j) {
    if (contains(j, y.action) != y.rewarded || a[j] == 0.0) continue;
    out.push_back({j, a[j] / total, increment(a.num_actions(), y.action, j)});
  }
  return out;
}

DiscreteMeasure belief_update(const DiscreteMeasure& m, const SubsetMix& a,
                              Signal y) {
  if (a.num_actions() != m.dim())
    throw std::invalid_argument("adversary mix does not match belief dimension");
  const auto parts = conditional_shifts(a, y);
  if (parts.empty()) return DiscreteMeasure::point_mass_at_origin(m.dim(), m.scale());
  std::vector<std::pair<double, DiscreteMeasure>> shifted;
  shifted.reserve(parts.size());
  for (const auto& c : parts)
    shifted.emplace_back(c.weight, pushforward_shift(m, c.shift));
  return mix(shifted);
}

DiscreteMeasure bayes_oracle(const DiscreteMeasure& m, const SubsetMix& a,
                             const ActionMix& b, Signal y) {
  const int dim = m.dim();
  if (a.num_actions() != dim || b.num_actions() != dim)
    throw std::invalid_argument("strategy sizes do not match belief dimension");
  // Joint table P(X = x, J = j, I = i) = m(x) a(j) b(i); keep Y = y rows.
  std::map<LatticePoint, double> joint;
  double evidence = 0.0;
  const Subset n = full_subset(dim);
  for (std::size_t atom = 0; atom < m.size(); ++atom) {
    const auto x = m.key(atom);
    for (Subset j = 0; j <= n; ++j) {
      for (int i = 0; i < dim; ++i) {
        const double p = m.weight(atom) * a[j] * b[i];
        if (p == 0.0) continue;
        const Signal observed = signal(i, j);
        if (!(observed == y)) continue;
        LatticePoint next(x.begin(), x.end());
        for (int k = 0; k < dim; ++k)
          next[k] += (contains(j, k) ? 1 : 0) - (contains(j, i) ? 1 : 0);
        joint[next] += p;
        evidence += p;
      }
    }
  }
  if (!(evidence > 0.0))
    throw std::domain_error("conditioning on a zero-probability signal");
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  for (const auto& [z, p] : joint) {
    keys.insert(keys.end(), z.begin(), z.end());
    weights.push_back(p / evidence);
  }
  return DiscreteMeasure(dim, m.scale(), std::move(keys), std::move(weights));
}

DiscreteMeasure one_step_law(const DiscreteMeasure& m, const SubsetMix& a,
                             const ActionMix& b) {
  const int dim = m.dim();
  std::map<LatticePoint, double> law;
  const Subset n = full_subset(dim);
  for (std::size_t atom = 0; atom < m.size(); ++atom) {
    const auto x = m.key(atom);
    for (Subset j = 0; j <= n; ++j)
      for (int i = 0; i < dim; ++i) {
        const double p = m.weight(atom) * a[j] * b[i];
        if (p == 0.0) continue;
        law[step_state(x, i, j)] += p;
      }
  }
  std::vector<std::int64_t> keys;
  std::vector<double> weights;
  for (const auto& [z, p] : law) {
    keys.insert(keys.end(), z.begin(), z.end());
    weights.push_back(p);
  }
  return DiscreteMeasure(dim, m.scale(), std::move(keys), std::move(weights));
}

// -- Rng ----------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

EpisodeRng::EpisodeRng(std::uint64_t master_seed, std::uint64_t episode) {
  std::uint64_t state = master_seed;
  const std::uint64_t base = splitmix64(state) ^ (episode * 0xD1B54A32D192ED03ull);
  state = base;
  forecaster_.seed(splitmix64(state));
  adversary_.seed(splitmix64(state));
  initial_.seed(splitmix64(state));
}

double EpisodeRng::forecaster_uniform() { return unit_uniform(forecaster_); }
double EpisodeRng::adversary_uniform() { return unit_uniform(adversary_); }
double EpisodeRng::initial_uniform() { return unit_uniform(initial_); }

// -- Episodes -----------------------------------------------------------------

namespace {

std::size_t sample_index(std::span<const double> probs, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_positive = k;
    cum += probs[k];
    if (u < cum) return k;
  }
  return last_positive;
}

}  // namespace

EpisodeTrace play_episode(int num_actions, int horizon,
                          const DiscreteMeasure& m0,
                          const ForecasterFn& forecaster,
                          const AdversaryFn& adversary, std::uint64_t seed,
                          std::uint64_t episode,
                          const EpisodeOptions& options) {
  check_actions(num_actions);
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (m0.dim() != num_actions)
    throw std::invalid_argument("initial belief dimension differs from K");
  if (std::abs(m0.scale() - 1.0) > 1e-12)
    throw std::invalid_argument("initial belief must live on the unit lattice");

  EpisodeRng rng(seed, episode);
  EpisodeTrace trace;
  trace.num_actions = num_actions;
  trace.horizon = horizon;
  trace.seed = seed;
  trace.episode = episode;

  const std::size_t start = sample_index(m0.weights(), rng.initial_uniform());
  LatticePoint x(m0.key(start).begin(), m0.key(start).end());

  Belief belief = options.belief_mode == Belief::Mode::kExact
                      ? Belief::exact(m0)
                      : Belief::reduced(m0);
  const bool keep_beliefs = options.record_beliefs && belief.is_exact();
  if (options.record_path) trace.states.push_back(x);
  if (keep_beliefs) trace.beliefs.push_back(belief.measure());

  for (int n = 0; n < horizon; ++n) {
    const ActionMix b = forecaster(n, belief, horizon);
    const SubsetMix a = adversary(n, belief, horizon);
    if (b.num_actions() != num_actions || a.num_actions() != num_actions)
      throw std::invalid_argument("strategy returned a mix of the wrong size");
    const int action =
        static_cast<int>(sample_index(b.probs(), rng.forecaster_uniform()));
    const Subset j =
        static_cast<Subset>(sample_index(a.probs(), rng.adversary_uniform()));
    const Signal y = signal(action, j);
    x = step_state(x, action, j);
    belief = belief.updated(a, y);

    trace.signals.push_back(y);
    if (options.record_path) {
      trace.actions.push_back(action);
      trace.subsets.push_back(j);
      trace.forecaster.push_back(b);
      trace.adversary.push_back(a);
      trace.states.push_back(x);
    }
    if (keep_beliefs) trace.beliefs.push_back(belief.measure());
  }
  trace.final_state = x;
  trace.regret = static_cast<double>(*std::max_element(x.begin(), x.end()));
  return trace;
}

int worker_count_from_env() {
  const char* env = std::getenv("BANDITSCAPE_WORKERS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 256);
}

std::vector<double> sample_regrets(int num_actions, int horizon,
                                   const DiscreteMeasure& m0,
                                   const ForecasterFn& forecaster,
                                   const AdversaryFn& adversary,
                                   std::size_t n_episodes, std::uint64_t seed,
                                   Belief::Mode mode) {
  if (n_episodes == 0) throw std::invalid_argument("need at least one episode");
  std::vector<double> regrets(n_episodes, 0.0);
  EpisodeOptions options;
  options.belief_mode = mode;
  options.record_beliefs = false;
  options.record_path = false;

  const int workers =
      std::min<int>(worker_count_from_env(), static_cast<int>(n_episodes));
  auto run = [&](int worker) {
    for (std::size_t e = worker; e < n_episodes; e += workers)
      regrets[e] = play_episode(num_actions, horizon, m0, forecaster, adversary,
                                seed, e, options)
                       .regret;
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  return regrets;
}

RegretEstimate estimate_regret(int num_actions, int horizon,
                               const DiscreteMeasure& m0,
                               const ForecasterFn& forecaster,
                               const AdversaryFn& adversary,
                               std::size_t n_episodes, std::uint64_t seed,
                               Belief::Mode mode) {
  const auto regrets = sample_regrets(num_actions, horizon, m0, forecaster,
                                      adversary, n_episodes, seed, mode);
  RegretEstimate est;
  est.episodes = regrets.size();
  const double n = static_cast<double>(regrets.size());
  est.mean = std::accumulate(regrets.begin(), regrets.end(), 0.0) / n;
  if (regrets.size() > 1) {
    double ss = 0.0;
    for (double r : regrets) ss += (r - est.mean) * (r - est.mean);
    est.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

// -- Serialization ------------------------------------------------------------

nlohmann::json to_json(const ActionMix& b) { return b.probs(); }
nlohmann::json to_json(const SubsetMix& a) { return a.probs(); }

nlohmann::json to_json(const EpisodeTrace& trace) {
  nlohmann::json j;
  j["k"] = trace.num_actions;
  j["t"] = trace.horizon;
  j["seed"] = trace.seed;
  j["episode"] = trace.episode;
  j["states"] = trace.states;
  nlohmann::json signals = nlohmann::json::array();
  for (const Signal& y : trace.signals) signals.push_back(y.to_int());
  j["signals"] = std::move(signals);
  j["actions"] = trace.actions;
  j["subsets"] = trace.subsets;
  nlohmann::json bs = nlohmann::json::array();
  for (const auto& b : trace.forecaster) bs.push_back(to_json(b));
  j["forecaster"] = std::move(bs);
  nlohmann::json as = nlohmann::json::array();
  for (const auto& a : trace.adversary) as.push_back(to_json(a));
  j["adversary"] = std::move(as);
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : trace.beliefs) ms.push_back(to_json(m));
  j["beliefs"] = std::move(ms);
  j["final_state"] = trace.final_state;
  j["regret"] = trace.regret;
  return j;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string regret_csv_header() {
  return "K,T,forecaster_id,adversary_id,n,mean,stderr,seed";
}

std::string regret_csv_row(int num_actions, int horizon,
                           const std::string& forecaster_id,
                           const std::string& adversary_id,
                           const RegretEstimate& est, std::uint64_t seed) {
  return std::to_string(num_actions) + "," + std::to_string(horizon) + "," +
         forecaster_id + "," + adversary_id + "," +
         std::to_string(est.episodes) + "," + format_double(est.mean) + "," +
         format_double(est.stderr_) + "," + std::to_string(seed);
}

}  // namespace banditscape
