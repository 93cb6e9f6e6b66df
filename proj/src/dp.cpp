#include "banditscape/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <unordered_map>

namespace banditscape {

double terminal_value(const DiscreteMeasure& m) {
  const int k = m.dim();
  const auto keys = m.keys();
  double acc = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    std::int64_t top = keys[a * k];
    for (int i = 1; i < k; ++i) top = std::max(top, keys[a * k + i]);
    acc += m.weight(a) * static_cast<double>(top);
  }
  return m.scale() * acc;
}

double stage_objective(int round, const DiscreteMeasure& m, const ActionMix& b,
                       const SubsetMix& a, const Continuation& continuation) {
  if (b.num_actions() != m.dim() || a.num_actions() != m.dim())
    throw std::invalid_argument("strategy size does not match the belief");
  double acc = 0.0;
  for (const Signal& y : all_signals(m.dim())) {
    const double p = b[y.action] * hat_a(a, y);
    if (p == 0.0) continue;
    acc += p * continuation(round + 1, belief_update(m, a, y));
  }
  return acc;
}

namespace {

void check_refine(const RefineOptions& r) {
  if (r.rounds < 0 || r.shrink < 2 || r.multiples < 1)
    throw std::invalid_argument("refinement needs rounds >= 0, shrink >= 2, multiples >= 1");
}

std::vector<double> to_vector(std::span<const double> p) {
  return std::vector<double>(p.begin(), p.end());
}

double dot(const std::vector<double>& b, const std::vector<double>& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) acc += b[i] * g[i];
  return acc;
}

// Candidate adversary mixes with their branch vectors g(a).
struct Candidates {
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> g;

  void add(std::vector<double> point, std::vector<double> branch) {
    a.push_back(std::move(point));
    g.push_back(std::move(branch));
  }
  std::size_t argmax(const std::vector<double>& b) const {
    std::size_t best = 0;
    double value = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double v = dot(b, g[c]);
      if (v > value) {
        value = v;
        best = c;
      }
    }
    return best;
  }
  double max_value(const std::vector<double>& b) const { return dot(b, g[argmax(b)]); }
};

// g_i(a) = sum over the two signals on action i of hat_a(y) v(n+1, l(m,a,y)).
std::vector<double> branch_vector(int round, const DiscreteMeasure& m, const SubsetMix& a,
                                  const Continuation& continuation) {
  std::vector<double> g(m.dim(), 0.0);
  for (const Signal& y : all_signals(m.dim())) {
    const double p = hat_a(a, y);
    if (p == 0.0) continue;
    g[y.action] += p * continuation(round + 1, belief_update(m, a, y));
  }
  return g;
}

// P[j][i] = integral of max(x + increment(i, j)) against m.
std::vector<std::vector<double>> terminal_payoffs(const DiscreteMeasure& m) {
  const int k = m.dim();
  const Subset full = full_subset(k);
  std::vector<std::vector<double>> p(std::size_t{full} + 1, std::vector<double>(k));
  for (Subset j = 0; j <= full; ++j)
    for (int i = 0; i < k; ++i) p[j][i] = terminal_value(pushforward_shift(m, increment(k, i, j)));
  return p;
}

std::vector<double> linear_branch(const std::vector<std::vector<double>>& payoff,
                                  std::span<const double> a) {
  std::vector<double> g(payoff.front().size(), 0.0);
  for (std::size_t j = 0; j < payoff.size(); ++j) {
    if (a[j] == 0.0) continue;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += a[j] * payoff[j][i];
  }
  return g;
}

// Grid minimizer of the pointwise max; first minimizer in grid order.
std::pair<std::vector<double>, double> grid_min(const SimplexGrid& grid_b,
                                                const Candidates& cands) {
  std::vector<double> best_b;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> b(grid_b.dim());
  for (std::size_t s = 0; s < grid_b.size(); ++s) {
    const auto p = grid_b.point(s);
    std::copy(p.begin(), p.end(), b.begin());
    const double v = cands.max_value(b);
    if (v < best) {
      best = v;
      best_b = b;
    }
  }
  return {best_b, best};
}

}  // namespace

BestResponse best_response_a(int round, const DiscreteMeasure& m, const ActionMix& b,
                             const SimplexGrid& grid_a, const Continuation& continuation,
                             const RefineOptions& refine) {
  check_refine(refine);
  const int k = m.dim();
  if (grid_a.dim() != (1 << k)) throw std::invalid_argument("grid_a must live on 2^K subsets");
  std::optional<BestResponse> best;
  const auto consider = [&](std::vector<double> point) {
    SubsetMix a(k, std::move(point));
    const double v = stage_objective(round, m, b, a, continuation);
    if (!best || v > best->value) best = BestResponse{std::move(a), v};
  };
  for (std::size_t s = 0; s < grid_a.size(); ++s) consider(to_vector(grid_a.point(s)));
  double step = grid_a.spacing();
  for (int r = 0; r < refine.rounds; ++r) {
    step /= refine.shrink;
    const auto incumbent = best->a.probs();
    for (auto& q : refinement_candidates(incumbent, step, refine.multiples))
      consider(std::move(q));
  }
  return *best;
}

MinimaxResult minimax_step(int round, const DiscreteMeasure& m, const SimplexGrid& grid_b,
                           const SimplexGrid& grid_a, const Continuation& continuation,
                           const MinimaxOptions& options) {
  check_refine(options.refine);
  const int k = m.dim();
  if (grid_b.dim() != k) throw std::invalid_argument("grid_b must live on K actions");
  if (grid_a.dim() != (1 << k)) throw std::invalid_argument("grid_a must live on 2^K subsets");

  Candidates cands;
  std::vector<std::vector<double>> payoff;
  if (options.terminal_next) {
    // Bilinear stage: the max over any candidate set containing the vertices
    // is attained at a vertex, so the vertices stand in for the whole grid.
    payoff = terminal_payoffs(m);
    for (std::size_t j = 0; j < payoff.size(); ++j) {
      std::vector<double> e(payoff.size(), 0.0);
      e[j] = 1.0;
      cands.add(std::move(e), payoff[j]);
    }
  } else {
    for (std::size_t s = 0; s < grid_a.size(); ++s) {
      auto point = to_vector(grid_a.point(s));
      auto g = branch_vector(round, m, SubsetMix(k, point), continuation);
      cands.add(std::move(point), std::move(g));
    }
  }

  auto [b_best, value] = grid_min(grid_b, cands);

  if (!options.terminal_next && options.refine.rounds > 0) {
    double step = grid_a.spacing();
    for (int r = 0; r < options.refine.rounds; ++r) {
      step /= options.refine.shrink;
      const auto incumbent = cands.a[cands.argmax(b_best)];
      for (auto& q : refinement_candidates(incumbent, step, options.refine.multiples)) {
        auto g = branch_vector(round, m, SubsetMix(k, q), continuation);
        cands.add(std::move(q), std::move(g));
      }
    }
    std::tie(b_best, value) = grid_min(grid_b, cands);
  }

  double step_b = grid_b.spacing();
  for (int r = 0; r < options.refine.rounds; ++r) {
    step_b /= options.refine.shrink;
    const auto incumbent = b_best;
    for (auto& q : refinement_candidates(incumbent, step_b, options.refine.multiples)) {
      const double v = cands.max_value(q);
      if (v < value) {
        value = v;
        b_best = std::move(q);
      }
    }
  }

  double maxmin = -std::numeric_limits<double>::infinity();
  if (options.report_gap) {
    const auto worst = [](const std::vector<double>& g) {
      return *std::min_element(g.begin(), g.end());
    };
    if (options.terminal_next)
      for (std::size_t s = 0; s < grid_a.size(); ++s)
        maxmin = std::max(maxmin, worst(linear_branch(payoff, grid_a.point(s))));
    for (const auto& g : cands.g) maxmin = std::max(maxmin, worst(g));
  }

  const std::size_t best_a = cands.argmax(b_best);
  MinimaxResult result{ActionMix(b_best), SubsetMix(k, cands.a[best_a]), value, maxmin,
                       options.report_gap ? std::max(0.0, value - maxmin) : 0.0};
  return result;
}

int DpOptions::resolved_grid_a(int num_actions) const {
  if (grid_a > 0) return grid_a;
  return num_actions == 2 ? 20 : 8;
}

DpBudgetExceeded::DpBudgetExceeded(std::size_t nodes_, int round_, std::size_t cache_entries_,
                                   std::size_t largest_support_)
    : std::runtime_error("DP node budget exceeded: " + std::to_string(nodes_) +
                         " nodes solved, stopped at round " + std::to_string(round_) + ", " +
                         std::to_string(cache_entries_) + " cached values, largest belief " +
                         std::to_string(largest_support_) + " atoms"),
      nodes(nodes_),
      round(round_),
      cache_entries(cache_entries_),
      largest_support(largest_support_) {}

namespace {

class Solver {
 public:
  Solver(int num_actions, int horizon, const DpOptions& options)
      : horizon_(horizon),
        options_(options),
        grid_b_(num_actions, options.grid_b),
        grid_a_(1 << num_actions, options.resolved_grid_a(num_actions)) {}

  MinimaxResult root(const DiscreteMeasure& m0) {
    ++nodes_;
    return minimax_step(0, prepared(m0), grid_b_, grid_a_, continuation(),
                        step_options(0, true));
  }

  double value(int round, const DiscreteMeasure& m) {
    if (round == horizon_) return terminal_value(m);
    const DiscreteMeasure mm = prepared(m);
    std::string key;
    if (options_.use_cache) {
      key = cache_key(round, mm);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    if (++nodes_ > options_.node_cap)
      throw DpBudgetExceeded(nodes_ - 1, round, cache_.size(), largest_support_);
    largest_support_ = std::max(largest_support_, mm.size());
    const double v = minimax_step(round, mm, grid_b_, grid_a_, continuation(),
                                  step_options(round, false))
                         .value;
    if (options_.use_cache) cache_.emplace(std::move(key), v);
    return v;
  }

  std::size_t nodes() const { return nodes_; }
  const SimplexGrid& grid_b() const { return grid_b_; }
  const SimplexGrid& grid_a() const { return grid_a_; }

 private:
  Continuation continuation() {
    return [this](int round, const DiscreteMeasure& m) { return value(round, m); };
  }

  MinimaxOptions step_options(int round, bool report_gap) const {
    MinimaxOptions o;
    o.refine = options_.refine;
    o.terminal_next = round + 1 == horizon_;
    o.report_gap = report_gap;
    return o;
  }

  DiscreteMeasure prepared(const DiscreteMeasure& m) const {
    if (options_.prune_eps > 0.0) return prune(m, options_.prune_eps).measure;
    return m;
  }

  // Round, scale and atoms with weights rounded to 12 decimals.
  static std::string cache_key(int round, const DiscreteMeasure& m) {
    std::string key;
    const auto append = [&key](const auto& v) {
      key.append(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    append(round);
    append(m.scale());
    const auto keys = m.keys();
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (int i = 0; i < m.dim(); ++i) append(keys[a * m.dim() + i]);
      append(static_cast<std::int64_t>(std::llround(m.weight(a) * 1e12)));
    }
    return key;
  }

  int horizon_;
  DpOptions options_;
  SimplexGrid grid_b_;
  SimplexGrid grid_a_;
  std::unordered_map<std::string, double> cache_;
  std::size_t nodes_ = 0;
  std::size_t largest_support_ = 0;
};

}  // namespace

DpResult solve_dpp(int num_actions, int horizon, const DiscreteMeasure& m0,
                   const DpOptions& options) {
  if (num_actions < 2 || num_actions > 3)
    throw std::invalid_argument("exact DP supports K in {2, 3}");
  if (horizon < 1 || horizon > 4) throw std::invalid_argument("exact DP supports 1 <= T <= 4");
  if (m0.dim() != num_actions) throw std::invalid_argument("m0 dimension must equal K");
  if (m0.scale() != 1.0) throw std::invalid_argument("m0 must live on the unit lattice");
  if (options.grid_b < 1 || options.resolved_grid_a(num_actions) < 1)
    throw std::invalid_argument("grid resolutions must be >= 1");
  check_refine(options.refine);
  Solver solver(num_actions, horizon, options);
  const auto root = solver.root(m0);
  DpResult r;
  r.value = root.value;
  r.gap = root.gap;
  r.b0 = root.b.probs();
  r.a0 = root.a.probs();
  r.nodes = solver.nodes();
  r.grid_b_spacing = solver.grid_b().spacing();
  r.grid_a_spacing = solver.grid_a().spacing();
  return r;
}

nlohmann::json to_json(const DpResult& r) {
  return {{"value", r.value},   {"gap", r.gap},
          {"b0", r.b0},         {"a0", r.a0},
          {"nodes", r.nodes},   {"grid_b_spacing", r.grid_b_spacing},
          {"grid_a_spacing", r.grid_a_spacing}};
}

}  // namespace banditscape
