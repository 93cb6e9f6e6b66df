#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "banditscape/game.hpp"
#include "banditscape/simplex_grid.hpp"
#include "json.hpp"

namespace banditscape {

// v(n + 1, m') for beliefs reached after one more round.
using Continuation = std::function<double(int round, const DiscreteMeasure& m)>;

// integral of max_i x^i against m.
double terminal_value(const DiscreteMeasure& m);

// sum_i b(i) hat_a(+i) v(n+1, l(m,a,+i)) + b(i) hat_a(-i) v(n+1, l(m,a,-i)).
// Terms with b(i) hat_a(+-i) = 0 are skipped without evaluating the branch.
double stage_objective(int round, const DiscreteMeasure& m, const ActionMix& b,
                       const SubsetMix& a, const Continuation& continuation);

struct RefineOptions {
  int rounds = 2;     // shrink passes around the incumbent
  int shrink = 4;     // step divisor per pass
  int multiples = 4;  // moves of 1..multiples steps along each pair direction
};

struct BestResponse {
  SubsetMix a;
  double value;
};

// Grid argmax of stage_objective over a, followed by local refinement. Ties go
// to the first point in grid order.
BestResponse best_response_a(int round, const DiscreteMeasure& m, const ActionMix& b,
                             const SimplexGrid& grid_a, const Continuation& continuation,
                             const RefineOptions& refine = {});

struct MinimaxOptions {
  RefineOptions refine;
  // The continuation at round n + 1 is the terminal payoff. The stage
  // objective is then bilinear in (b, a) and is evaluated from the 2^K x K
  // payoff table without calling the continuation.
  bool terminal_next = false;
  // Also compute max_a min_b over the candidate set (needed for the gap).
  bool report_gap = true;
};

struct MinimaxResult {
  ActionMix b;
  SubsetMix a;
  double value;   // min over tested b of max over candidate a
  double maxmin;  // max over candidate a of min over the whole b-simplex
  double gap;     // value - maxmin, >= 0
};

// Outer minimization over b of the pointwise max over a of b . g(a), where
// g_i(a) = hat_a(+i) v(n+1, l(m,a,+i)) + hat_a(-i) v(n+1, l(m,a,-i)).
MinimaxResult minimax_step(int round, const DiscreteMeasure& m, const SimplexGrid& grid_b,
                           const SimplexGrid& grid_a, const Continuation& continuation,
                           const MinimaxOptions& options = {});

struct DpOptions {
  int grid_b = 100;
  int grid_a = 0;  // 0: 20 for K = 2, 8 for K = 3
  RefineOptions refine;
  double prune_eps = 0.0;  // drop belief atoms below this weight (0: keep all)
  std::size_t node_cap = 2'000'000;
  bool use_cache = true;

  int resolved_grid_a(int num_actions) const;
};

struct DpResult {
  double value = 0.0;
  double gap = 0.0;  // root refinement gap
  std::vector<double> b0;
  std::vector<double> a0;
  std::size_t nodes = 0;  // value nodes solved (root included)
  double grid_b_spacing = 0.0;
  double grid_a_spacing = 0.0;
};

// Thrown when the node count passes DpOptions::node_cap.
class DpBudgetExceeded : public std::runtime_error {
 public:
  DpBudgetExceeded(std::size_t nodes, int round, std::size_t cache_entries,
                   std::size_t largest_support);
  std::size_t nodes;
  int round;
  std::size_t cache_entries;
  std::size_t largest_support;
};

// v_T(0, m0) by backward induction over beliefs. K in {2, 3}, 1 <= T <= 4,
// m0 on the unit lattice.
DpResult solve_dpp(int num_actions, int horizon, const DiscreteMeasure& m0,
                   const DpOptions& options = {});

nlohmann::json to_json(const DpResult& r);

}  // namespace banditscape
