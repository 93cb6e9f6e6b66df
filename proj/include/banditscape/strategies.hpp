#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "banditscape/game.hpp"
#include "banditscape/potentials.hpp"
#include "json.hpp"

namespace banditscape {

// Conditional mean drift of the state given signal y:
//   V_{a,+i} = sum_{j ∋ i} a(j)/hat_a(+i) e_{j^c},
//   V_{a,-i} = sum_{j ∌ i} a(j)/hat_a(-i) e_j.
// Throws std::domain_error when hat_a(y) = 0.
std::vector<double> v_vector(const SubsetMix& a, Signal y);

enum class GradientMode {
  kIntegrated,  // integral of grad phi(t_n, .) against the scaled belief
  kAtMean,      // grad phi(t_n, .) at the scaled belief mean
};

// b_n = D_x phi(t_n, .) paired with the belief scaled by 1/sqrt(T), t_n = n/T.
// Requires 0 <= n < horizon. Reduced beliefs give the same output as exact
// ones because the gradient is invariant along the diagonal.
ActionMix pde_forecaster(int round, const Belief& belief, int horizon,
                         double sigma, GradientMode mode = GradientMode::kIntegrated,
                         const QuadratureSpec& quadrature = {});

// b(i) proportional to exp(eta * E_m[X^i]). eta = 0 gives uniform.
ActionMix mw_forecaster(const Belief& belief, double eta);

// sqrt(8 log K / T).
double default_mw_rate(int num_actions, int horizon);

SubsetMix balanced_uniform_adversary(int num_actions);
SubsetMix vertex_adversary(int num_actions, Subset j);

struct LookaheadAdversaryOptions {
  double sigma = 1.0;
  int grid_resolution = 20;
  int horizon = 1;  // 1 or 2
  QuadratureSpec quadrature;
};

struct LookaheadChoice {
  SubsetMix mix;
  double value;  // expected proxy, in the unscaled units of the game
};

// Searches the subset-simplex grid for the mix maximizing the expected
// potential sqrt(T) E phi(t_{n+h}, X_{n+h} / sqrt(T)) after h rounds against
// `forecaster`; phi(1, .) is the max, so a one-round lookahead at the last
// round is the exact best response. With h = 1 the objective is linear in the
// mix, so the grid search reduces to ranking the 2^K vertex payoffs; ties go
// to the first grid point in enumeration order. With h = 2 the second round
// plays the one-round best response and the first is searched by enumeration.
LookaheadChoice grid_best_response(int round, const Belief& belief, int horizon,
                                   const ForecasterFn& forecaster,
                                   const LookaheadAdversaryOptions& options);

// Strategy description used by configs and the CLI.
struct StrategySpec {
  std::string kind;
  double sigma = 1.0;
  std::optional<double> eta;  // mw_forecaster; default sqrt(8 log K / T)
  int grid_resolution = 20;
  int horizon = 1;
  GradientMode gradient = GradientMode::kIntegrated;
  QuadratureKind quadrature = QuadratureKind::kGaussHermite;
  std::uint64_t seed = 0x5eedULL;  // quasi-MC scrambling seed
  Subset subset = 0;               // vertex_adversary

  bool is_forecaster() const;
  bool is_adversary() const;
  // Stable identifier used in CSV rows, e.g. "pde_forecaster(sigma=1)".
  std::string id() const;
  // Throws std::invalid_argument for unknown kinds or invalid parameters.
  void validate(int num_actions) const;
};

const std::vector<std::string>& forecaster_kinds();
const std::vector<std::string>& adversary_kinds();

StrategySpec strategy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StrategySpec& spec);

ForecasterFn make_forecaster(const StrategySpec& spec, int num_actions);
// `opponent` is needed by the best-response adversary only.
AdversaryFn make_adversary(const StrategySpec& spec, int num_actions,
                           const ForecasterFn& opponent);

}  // namespace banditscape
