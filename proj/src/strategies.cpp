#include "banditscape/strategies.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "banditscape/quadrature.hpp"
#include "banditscape/simplex_grid.hpp"

namespace banditscape {

std::vector<double> v_vector(const SubsetMix& a, Signal y) {
  const int k_dim = a.num_actions();
  if (y.action < 0 || y.action >= k_dim)
    throw std::invalid_argument("signal action out of range");
  const double total = hat_a(a, y);
  if (!(total > 0.0))
    throw std::domain_error("drift vector undefined when hat_a(y) = 0");
  std::vector<double> v(k_dim, 0.0);
  const Subset full = full_subset(k_dim);
  for (Subset j = 0; j <= full; ++j) {
    if (a[j] == 0.0 || contains(j, y.action) != y.rewarded) continue;
    const Subset dir = y.rewarded ? (full & ~j) : j;
    for (int k = 0; k < k_dim; ++k)
      if (contains(dir, k)) v[k] += a[j] / total;
  }
  return v;
}

namespace {

// Tables in lattice units for K = 2 with r = T - n rounds left, c = sigma
// sqrt(2r):  cdf(d) = Phi(d / c),  psi(d) = d Phi(d / c) + c n(d / c).
// Outside [-radius, radius] = 12c both sit within c n(12) < 1e-31 c of their
// limits.
struct PairTable {
  std::int64_t radius = 0;
  std::vector<double> cdf;
  std::vector<double> psi;

  double cdf_at(std::int64_t d) const {
    if (d < -radius) return 0.0;
    if (d > radius) return 1.0;
    return cdf[static_cast<std::size_t>(d + radius)];
  }
  double psi_at(std::int64_t d) const {
    if (d < -radius) return 0.0;
    if (d > radius) return static_cast<double>(d);
    return psi[static_cast<std::size_t>(d + radius)];
  }
};

const PairTable& pair_table(double sigma, int remaining) {
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, int>, std::unique_ptr<PairTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{std::bit_cast<std::uint64_t>(sigma), remaining}];
  if (slot) return *slot;
  auto table = std::make_unique<PairTable>();
  if (remaining == 0) {
    table->radius = 0;
    table->cdf = {0.5};
    table->psi = {0.0};
  } else {
    const double c = sigma * std::sqrt(2.0 * remaining);
    table->radius = static_cast<std::int64_t>(std::ceil(12.0 * c)) + 1;
    const std::size_t n = static_cast<std::size_t>(2 * table->radius + 1);
    table->cdf.resize(n);
    table->psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(static_cast<std::int64_t>(i) - table->radius);
      table->cdf[i] = normal_cdf(d / c);
      table->psi[i] = d * table->cdf[i] + c * normal_pdf(d / c);
    }
  }
  slot = std::move(table);
  return *slot;
}

bool unit_lattice(const Belief& belief) { return belief.scale() == 1.0; }

// Splits cells origin + c, c in [0, n), into the part below the table, the
// part inside it and the part above it.
struct Segments {
  std::size_t below_end, inside_end;
  std::int64_t table_start;
};

Segments segments(std::int64_t origin, std::size_t n, const PairTable& table) {
  const auto clip = [n](std::int64_t v) {
    return static_cast<std::size_t>(std::clamp<std::int64_t>(v, 0, static_cast<std::int64_t>(n)));
  };
  const std::size_t below_end = clip(-table.radius - origin);
  const std::size_t inside_end = std::max(below_end, clip(table.radius + 1 - origin));
  return {below_end, inside_end, origin + static_cast<std::int64_t>(below_end) + table.radius};
}

// sum_w Phi(d / c) over the belief, d = z1 - z2 in lattice units.
double integrated_pair_cdf(const Belief& belief, const PairTable& table) {
  const auto w = belief.weights();
  double acc = 0.0;
  if (!belief.is_exact()) {
    const auto seg = segments(belief.reduced_origin(), w.size(), table);
    const double* cdf = table.cdf.data() + seg.table_start;
    for (std::size_t c = seg.below_end; c < seg.inside_end; ++c)
      acc += w[c] * cdf[c - seg.below_end];
    for (std::size_t c = seg.inside_end; c < w.size(); ++c) acc += w[c];
    return acc;
  }
  const auto keys = belief.keys();
  for (std::size_t a = 0; a < w.size(); ++a)
    acc += w[a] * table.cdf_at(keys[2 * a] - keys[2 * a + 1]);
  return acc;
}

// sum_w psi(d + shift) over the belief.
double integrated_pair_psi(const Belief& belief, const PairTable& table,
                           std::int64_t shift) {
  const auto w = belief.weights();
  double acc = 0.0;
  if (!belief.is_exact()) {
    const std::int64_t origin = belief.reduced_origin() + shift;
    const auto seg = segments(origin, w.size(), table);
    const double* psi = table.psi.data() + seg.table_start;
    for (std::size_t c = seg.below_end; c < seg.inside_end; ++c)
      acc += w[c] * psi[c - seg.below_end];
    for (std::size_t c = seg.inside_end; c < w.size(); ++c)
      acc += w[c] * static_cast<double>(origin + static_cast<std::int64_t>(c));
    return acc;
  }
  const auto keys = belief.keys();
  for (std::size_t a = 0; a < w.size(); ++a)
    acc += w[a] * table.psi_at(keys[2 * a] - keys[2 * a + 1] + shift);
  return acc;
}

void check_round(int round, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (round < 0 || round >= horizon)
    throw std::invalid_argument("round must satisfy 0 <= n < T");
}

}  // namespace

ActionMix pde_forecaster(int round, const Belief& belief, int horizon,
                         double sigma, GradientMode mode,
                         const QuadratureSpec& quadrature) {
  check_round(round, horizon);
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const int k_dim = belief.dim();
  const double t = static_cast<double>(round) / horizon;
  const double lambda = belief.scale() / std::sqrt(static_cast<double>(horizon));

  if (mode == GradientMode::kAtMean) {
    std::vector<double> x = belief.mean();
    for (double& v : x) v /= std::sqrt(static_cast<double>(horizon));
    return heat_grad(t, x, sigma, quadrature);
  }

  if (k_dim == 2 && unit_lattice(belief) &&
      quadrature.kind == QuadratureKind::kGaussHermite) {
    const double p1 = integrated_pair_cdf(belief, pair_table(sigma, horizon - round));
    const double clamped = std::clamp(p1, 0.0, 1.0);
    return ActionMix({clamped, 1.0 - clamped});
  }

  const auto keys = belief.keys();
  const auto w = belief.weights();
  std::vector<double> p(k_dim, 0.0), x(k_dim);
  for (std::size_t a = 0; a < w.size(); ++a) {
    if (w[a] == 0.0) continue;
    for (int k = 0; k < k_dim; ++k)
      x[k] = lambda * static_cast<double>(keys[a * k_dim + k]);
    const auto g = heat_grad(t, x, sigma, quadrature);
    for (int k = 0; k < k_dim; ++k) p[k] += w[a] * g[k];
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return ActionMix(std::move(p));
}

ActionMix mw_forecaster(const Belief& belief, double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("learning rate must be finite and >= 0");
  const auto& mu = belief.mean();
  const double top = *std::max_element(mu.begin(), mu.end());
  std::vector<double> p(mu.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += (p[i] = std::exp(eta * (mu[i] - top)));
  for (double& v : p) v /= total;
  return ActionMix(std::move(p));
}

double default_mw_rate(int num_actions, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  return std::sqrt(8.0 * std::log(static_cast<double>(num_actions)) / horizon);
}

SubsetMix balanced_uniform_adversary(int num_actions) {
  return SubsetMix::uniform(num_actions);
}

SubsetMix vertex_adversary(int num_actions, Subset j) {
  if (j > full_subset(num_actions))
    throw std::invalid_argument("subset out of range");
  return SubsetMix::vertex(num_actions, j);
}

namespace {

const SimplexGrid& cached_grid(int dim, int resolution) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<SimplexGrid>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{dim, resolution}];
  if (!slot) slot = std::make_unique<SimplexGrid>(dim, resolution);
  return *slot;
}

// sqrt(T) E phi(t_{target}, (X + shift) / sqrt(T)) under the belief.
double expected_proxy(const Belief& belief, int target_round, int horizon,
                      std::span<const std::int64_t> shift, double sigma,
                      const QuadratureSpec& quadrature) {
  const int k_dim = belief.dim();
  const double root_t = std::sqrt(static_cast<double>(horizon));
  const double level = belief.mean()[k_dim - 1] + belief.scale() * shift[k_dim - 1];
  if (k_dim == 2 && unit_lattice(belief)) {
    // sqrt(T) phi = x2 + psi(x1 - x2) in lattice units.
    const auto& table = pair_table(sigma, horizon - target_round);
    return level + integrated_pair_psi(belief, table, shift[0] - shift[1]);
  }
  const double t = static_cast<double>(target_round) / horizon;
  const double lambda = belief.scale() / root_t;
  const auto keys = belief.keys();
  const auto w = belief.weights();
  std::vector<double> x(k_dim);
  double acc = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    if (w[a] == 0.0) continue;
    // Evaluate with the last coordinate pinned at 0 and add it back through
    // the level; phi(x + c1) = phi(x) + c.
    const double last = static_cast<double>(keys[a * k_dim + k_dim - 1] + shift[k_dim - 1]);
    for (int k = 0; k < k_dim; ++k)
      x[k] = lambda * (static_cast<double>(keys[a * k_dim + k] + shift[k]) - last);
    acc += w[a] * root_t * heat_phi(t, x, sigma, quadrature);
  }
  return level + acc;
}

// Payoff of each vertex delta_j for a one-round lookahead against b.
std::vector<double> vertex_payoffs(const Belief& belief, int round, int horizon,
                                   const ActionMix& b, double sigma,
                                   const QuadratureSpec& quadrature) {
  const int k_dim = belief.dim();
  const Subset full = full_subset(k_dim);
  std::vector<double> payoff(std::size_t{full} + 1, 0.0);
  std::map<LatticePoint, double> memo;
  for (Subset j = 0; j <= full; ++j)
    for (int i = 0; i < k_dim; ++i) {
      if (b[i] == 0.0) continue;
      const LatticePoint shift = increment(k_dim, i, j);
      auto it = memo.find(shift);
      if (it == memo.end())
        it = memo.emplace(shift, expected_proxy(belief, round + 1, horizon, shift,
                                                sigma, quadrature)).first;
      payoff[j] += b[i] * it->second;
    }
  return payoff;
}

// The objective is linear in the mix, so over a grid that contains every
// vertex the maximum is a vertex payoff. The first maximizer in grid order
// (first coordinate descending) is the vertex of the smallest maximizing
// subset, since any grid point with weight on a lower-payoff subset is
// strictly worse.
LookaheadChoice argmax_linear(int num_actions, const std::vector<double>& payoff) {
  const double best = *std::max_element(payoff.begin(), payoff.end());
  const double tol = 1e-12 * (1.0 + std::abs(best));
  for (std::size_t j = 0; j < payoff.size(); ++j)
    if (payoff[j] >= best - tol)
      return {SubsetMix::vertex(num_actions, static_cast<Subset>(j)), payoff[j]};
  throw std::logic_error("empty payoff table");
}

LookaheadChoice one_round(int round, const Belief& belief, int horizon,
                          const ForecasterFn& forecaster,
                          const LookaheadAdversaryOptions& options) {
  const ActionMix b = forecaster(round, belief, horizon);
  const auto payoff =
      vertex_payoffs(belief, round, horizon, b, options.sigma, options.quadrature);
  return argmax_linear(belief.dim(), payoff);
}

}  // namespace

LookaheadChoice grid_best_response(int round, const Belief& belief, int horizon,
                                   const ForecasterFn& forecaster,
                                   const LookaheadAdversaryOptions& options) {
  check_round(round, horizon);
  if (options.horizon < 1 || options.horizon > 2)
    throw std::invalid_argument("lookahead horizon must be 1 or 2");
  if (options.grid_resolution < 1)
    throw std::invalid_argument("grid resolution must be >= 1");
  if (!(options.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (options.horizon == 1 || round + 1 >= horizon)
    return one_round(round, belief, horizon, forecaster, options);

  const int k_dim = belief.dim();
  const ActionMix b = forecaster(round, belief, horizon);
  const SimplexGrid& grid =
      cached_grid(static_cast<int>(full_subset(k_dim)) + 1, options.grid_resolution);
  const auto signals = all_signals(k_dim);
  std::optional<LookaheadChoice> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto p = grid.point(g);
    const SubsetMix a(k_dim, std::vector<double>(p.begin(), p.end()));
    double value = 0.0;
    for (const Signal& y : signals) {
      const double prob = b[y.action] * hat_a(a, y);
      if (prob == 0.0) continue;
      value += prob * one_round(round + 1, belief.updated(a, y), horizon, forecaster,
                                options).value;
    }
    if (!best || value > best->value + 1e-12 * (1.0 + std::abs(best->value)))
      best = LookaheadChoice{a, value};
  }
  return *best;
}

// -- Specs --------------------------------------------------------------------

const std::vector<std::string>& forecaster_kinds() {
  static const std::vector<std::string> kinds{"pde_forecaster", "mw_forecaster",
                                              "uniform_forecaster"};
  return kinds;
}

const std::vector<std::string>& adversary_kinds() {
  static const std::vector<std::string> kinds{
      "balanced_uniform_adversary", "vertex_adversary", "grid_best_response_adversary"};
  return kinds;
}

namespace {

std::string valid_kinds() {
  std::string out;
  for (const auto* list : {&forecaster_kinds(), &adversary_kinds()})
    for (const auto& k : *list) out += (out.empty() ? "" : ", ") + k;
  return out;
}

std::string subset_label(Subset j) {
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < kMaxActions; ++i)
    if (contains(j, i)) {
      out += (first ? "" : " ") + std::to_string(i + 1);
      first = false;
    }
  return out + "}";
}

}  // namespace

bool StrategySpec::is_forecaster() const {
  const auto& k = forecaster_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

bool StrategySpec::is_adversary() const {
  const auto& k = adversary_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

std::string StrategySpec::id() const {
  if (kind == "pde_forecaster")
    return kind + "[sigma=" + format_double(sigma) +
           (gradient == GradientMode::kAtMean ? ";mean" : "") +
           (quadrature == QuadratureKind::kQuasiMonteCarlo ? ";qmc" : "") + "]";
  if (kind == "mw_forecaster")
    return kind + "[eta=" + (eta ? format_double(*eta) : std::string("auto")) + "]";
  if (kind == "vertex_adversary") return kind + "[" + subset_label(subset) + "]";
  if (kind == "grid_best_response_adversary")
    return kind + "[r=" + std::to_string(grid_resolution) + ";h=" + std::to_string(horizon) +
           ";sigma=" + format_double(sigma) + "]";
  return kind;
}

void StrategySpec::validate(int num_actions) const {
  if (!is_forecaster() && !is_adversary())
    throw std::invalid_argument("unknown strategy kind '" + kind +
                                "'; valid kinds: " + valid_kinds());
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("sigma must be positive");
  if (eta && (!(*eta >= 0.0) || !std::isfinite(*eta)))
    throw std::invalid_argument("eta must be finite and >= 0");
  if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be >= 1");
  if (horizon < 1 || horizon > 2) throw std::invalid_argument("horizon must be 1 or 2");
  if (kind == "vertex_adversary" && subset > full_subset(num_actions))
    throw std::invalid_argument("vertex subset mentions an action beyond K");
}

StrategySpec strategy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("strategy spec must be an object");
  static const std::vector<std::string> known{
      "kind", "sigma", "eta", "grid_resolution", "horizon", "gradient",
      "quadrature", "seed", "subset"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown strategy field '" + key + "'");
  StrategySpec s;
  if (!j.contains("kind")) throw std::invalid_argument("strategy spec needs a kind");
  s.kind = j.at("kind").get<std::string>();
  if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
  if (j.contains("eta") && !j.at("eta").is_null()) s.eta = j.at("eta").get<double>();
  if (j.contains("grid_resolution")) s.grid_resolution = j.at("grid_resolution").get<int>();
  if (j.contains("horizon")) s.horizon = j.at("horizon").get<int>();
  if (j.contains("gradient")) {
    const auto g = j.at("gradient").get<std::string>();
    if (g == "integrated") s.gradient = GradientMode::kIntegrated;
    else if (g == "mean") s.gradient = GradientMode::kAtMean;
    else throw std::invalid_argument("gradient must be 'integrated' or 'mean'");
  }
  if (j.contains("quadrature")) {
    const auto q = j.at("quadrature").get<std::string>();
    if (q == "gauss_hermite") s.quadrature = QuadratureKind::kGaussHermite;
    else if (q == "qmc") s.quadrature = QuadratureKind::kQuasiMonteCarlo;
    else throw std::invalid_argument("quadrature must be 'gauss_hermite' or 'qmc'");
  }
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("subset")) {
    s.subset = 0;
    for (int i : j.at("subset").get<std::vector<int>>()) {
      if (i < 1 || i > kMaxActions) throw std::invalid_argument("subset actions are 1-based");
      s.subset |= Subset{1} << (i - 1);
    }
  }
  return s;
}

nlohmann::json to_json(const StrategySpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind;
  j["sigma"] = spec.sigma;
  j["eta"] = spec.eta ? nlohmann::json(*spec.eta) : nlohmann::json(nullptr);
  j["grid_resolution"] = spec.grid_resolution;
  j["horizon"] = spec.horizon;
  j["gradient"] = spec.gradient == GradientMode::kAtMean ? "mean" : "integrated";
  j["quadrature"] =
      spec.quadrature == QuadratureKind::kQuasiMonteCarlo ? "qmc" : "gauss_hermite";
  j["seed"] = spec.seed;
  std::vector<int> members;
  for (int i = 0; i < kMaxActions; ++i)
    if (contains(spec.subset, i)) members.push_back(i + 1);
  j["subset"] = members;
  return j;
}

ForecasterFn make_forecaster(const StrategySpec& spec, int num_actions) {
  spec.validate(num_actions);
  if (!spec.is_forecaster())
    throw std::invalid_argument("'" + spec.kind + "' is not a forecaster; valid kinds: " +
                                valid_kinds());
  QuadratureSpec q;
  q.kind = spec.quadrature;
  q.seed = spec.seed;
  if (spec.kind == "pde_forecaster")
    return [sigma = spec.sigma, mode = spec.gradient, q](int n, const Belief& m, int horizon) {
      return pde_forecaster(n, m, horizon, sigma, mode, q);
    };
  if (spec.kind == "mw_forecaster")
    return [eta = spec.eta, num_actions](int, const Belief& m, int horizon) {
      return mw_forecaster(m, eta ? *eta : default_mw_rate(num_actions, horizon));
    };
  return [num_actions](int, const Belief&, int) { return ActionMix::uniform(num_actions); };
}

AdversaryFn make_adversary(const StrategySpec& spec, int num_actions,
                           const ForecasterFn& opponent) {
  spec.validate(num_actions);
  if (!spec.is_adversary())
    throw std::invalid_argument("'" + spec.kind + "' is not an adversary; valid kinds: " +
                                valid_kinds());
  if (spec.kind == "balanced_uniform_adversary") {
    const SubsetMix a = balanced_uniform_adversary(num_actions);
    return [a](int, const Belief&, int) { return a; };
  }
  if (spec.kind == "vertex_adversary") {
    const SubsetMix a = vertex_adversary(num_actions, spec.subset);
    return [a](int, const Belief&, int) { return a; };
  }
  if (!opponent)
    throw std::invalid_argument("grid_best_response_adversary needs the forecaster");
  LookaheadAdversaryOptions opt;
  opt.sigma = spec.sigma;
  opt.grid_resolution = spec.grid_resolution;
  opt.horizon = spec.horizon;
  opt.quadrature.kind = spec.quadrature;
  opt.quadrature.seed = spec.seed;
  return [opt, opponent](int n, const Belief& m, int horizon) {
    return grid_best_response(n, m, horizon, opponent, opt).mix;
  };
}

}  // namespace banditscape
