#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "banditscape/measure.hpp"
#include "json.hpp"

namespace banditscape {

// Actions are 0-based internally; Signal::to_int() reports the 1-based +/-i
// convention used in traces. A subset J of [K] is a bitmask with bit i set
// when action i is rewarded.
using Subset = std::uint32_t;

constexpr int kMaxActions = 16;

inline Subset full_subset(int num_actions) {
  return (Subset{1} << num_actions) - 1;
}
inline bool contains(Subset j, int action) { return (j >> action) & 1u; }

// Probability vector over [K].
class ActionMix {
 public:
  // Throws std::invalid_argument unless entries are >= 0 and sum to 1 within
  // 1e-9.
  explicit ActionMix(std::vector<double> probs);
  static ActionMix uniform(int num_actions);
  static ActionMix pure(int num_actions, int action);

  int num_actions() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Probability vector over the 2^K subsets of [K], indexed by bitmask.
class SubsetMix {
 public:
  SubsetMix(int num_actions, std::vector<double> probs);
  static SubsetMix uniform(int num_actions);
  static SubsetMix vertex(int num_actions, Subset j);

  int num_actions() const { return num_actions_; }
  double operator[](Subset j) const { return probs_[j]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  int num_actions_;
  std::vector<double> probs_;
};

struct Signal {
  int action = 0;         // 0-based index i
  bool rewarded = false;  // +i when the played action was in J

  int to_int() const { return rewarded ? action + 1 : -(action + 1); }
  static Signal from_int(int value);
  friend bool operator==(const Signal&, const Signal&) = default;
};

// All 2K signals in the order +1, -1, +2, -2, ...
std::vector<Signal> all_signals(int num_actions);

// x + e_J - 1{I in J} e.
LatticePoint step_state(std::span<const std::int64_t> x, int action, Subset j);

Signal signal(int action, Subset j);

// Probability that the rewarded set is consistent with y: sum of a(j) over
// j containing (rewarded) or excluding (not rewarded) y.action.
double hat_a(const SubsetMix& a, Signal y);

// max_i hat_a(+i) - min_i hat_a(+i) <= tol.
bool is_balanced(const SubsetMix& a, double tol = 1e-12);

// State increment e_J - 1{I in J} e as a lattice vector.
LatticePoint increment(int num_actions, int action, Subset j);

// Subsets consistent with signal y, with conditional weights a(j) / hat_a(y).
struct ShiftComponent {
  Subset subset;
  double weight;
  LatticePoint shift;
};
std::vector<ShiftComponent> conditional_shifts(const SubsetMix& a, Signal y);

// Bayesian belief update l(m, a, y): mixture of copies of m shifted by the
// lattice increments consistent with y. Shifts act in lattice units, which is
// the game update for unit-scale beliefs. Returns the point mass at the origin
// when hat_a(y) = 0.
DiscreteMeasure belief_update(const DiscreteMeasure& m, const SubsetMix& a,
                              Signal y);

// Brute-force Bayes: enumerates the joint law of (X, J, I), conditions on
// Y = y and returns the law of X + dX. Independent of belief_update.
// Throws std::domain_error when P(Y = y) = 0.
DiscreteMeasure bayes_oracle(const DiscreteMeasure& m, const SubsetMix& a,
                             const ActionMix& b, Signal y);

// Unconditional one-step law of X + dX by direct enumeration over (I, J).
DiscreteMeasure one_step_law(const DiscreteMeasure& m, const SubsetMix& a,
                             const ActionMix& b);

// Belief carried through an episode.
//
// Exact mode holds the full DiscreteMeasure. Reduced mode keeps the belief
// modulo translations along the all-ones direction: a dense array over the
// differences z^k - z^K (k < K) together with the exact mean. Reduced mode is
// sufficient for strategies whose output is invariant under x -> x + c*1 and
// for potentials with phi(x + c*1) = phi(x) + c, which covers every strategy
// in this library.
class Belief {
 public:
  enum class Mode { kExact, kReduced };

  static Belief exact(DiscreteMeasure m0);
  static Belief reduced(const DiscreteMeasure& m0);

  Mode mode() const { return mode_; }
  bool is_exact() const { return mode_ == Mode::kExact; }
  int dim() const { return dim_; }
  double scale() const { return scale_; }

  // Representative atoms. Exact mode: the belief itself. Reduced mode: atoms
  // projected onto {z^K = 0}; may contain zero-weight cells.
  std::span<const std::int64_t> keys() const;
  std::span<const double> weights() const;
  std::size_t size() const { return weights().size(); }

  // Exact mean in real coordinates.
  const std::vector<double>& mean() const { return mean_; }

  // Add to the representative integral of an equivariant potential
  // (phi(x + c*1) = phi(x) + c) to obtain its integral against the belief.
  double level() const;

  // Reduced mode only: lowest difference key along axis 0 (K = 2 fast paths).
  std::int64_t reduced_origin() const { return lo_.empty() ? 0 : lo_[0]; }

  Belief updated(const SubsetMix& a, Signal y) const;

  // Exact mode: the belief. Reduced mode: the representative measure.
  DiscreteMeasure measure() const;

 private:
  Belief() = default;
  // Builds the reduced-mode key array on first use. A Belief is owned by one
  // episode, so the lazy cache needs no locking.
  void ensure_reduced_keys() const;

  Mode mode_ = Mode::kExact;
  int dim_ = 0;
  double scale_ = 1.0;
  std::vector<double> mean_;
  std::optional<DiscreteMeasure> exact_;
  // Reduced storage: dense box over differences, row-major with the last
  // difference axis fastest.
  std::vector<std::int64_t> lo_;
  std::vector<std::int64_t> extent_;
  std::vector<double> dense_;
  mutable std::vector<std::int64_t> dense_keys_;
  mutable bool keys_ready_ = false;
};

using ForecasterFn =
    std::function<ActionMix(int round, const Belief& belief, int horizon)>;
using AdversaryFn =
    std::function<SubsetMix(int round, const Belief& belief, int horizon)>;

// Deterministic stream derivation: one generator per episode, split into
// independent forecaster, adversary and initial-state streams.
class EpisodeRng {
 public:
  EpisodeRng(std::uint64_t master_seed, std::uint64_t episode);
  double forecaster_uniform();
  double adversary_uniform();
  double initial_uniform();

 private:
  std::mt19937_64 forecaster_;
  std::mt19937_64 adversary_;
  std::mt19937_64 initial_;
};

std::uint64_t splitmix64(std::uint64_t& state);
// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& g);

struct EpisodeOptions {
  Belief::Mode belief_mode = Belief::Mode::kExact;
  bool record_beliefs = true;
  bool record_path = true;
};

struct EpisodeTrace {
  int num_actions = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;
  std::vector<LatticePoint> states;       // x_0..x_T (when recorded)
  std::vector<Signal> signals;            // y_0..y_{T-1}
  std::vector<int> actions;               // realized I_n
  std::vector<Subset> subsets;            // realized J_n
  std::vector<ActionMix> forecaster;      // b_n
  std::vector<SubsetMix> adversary;       // a_n
  std::vector<DiscreteMeasure> beliefs;   // m_0..m_T (exact mode only)
  LatticePoint final_state;
  double regret = 0.0;                    // max_i x_T^i
};

// Plays one T-round episode. x_0 is drawn from m0 (unit scale required).
// Throws std::invalid_argument when a strategy returns a mix of the wrong size.
EpisodeTrace play_episode(int num_actions, int horizon,
                          const DiscreteMeasure& m0,
                          const ForecasterFn& forecaster,
                          const AdversaryFn& adversary, std::uint64_t seed,
                          std::uint64_t episode = 0,
                          const EpisodeOptions& options = {});

struct RegretEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t episodes = 0;
};

// Sample mean and standard error of the terminal regret over n episodes.
// Episode e uses stream (seed, e); worker count comes from BANDITSCAPE_WORKERS
// (default 1) and never changes the result.
RegretEstimate estimate_regret(int num_actions, int horizon,
                               const DiscreteMeasure& m0,
                               const ForecasterFn& forecaster,
                               const AdversaryFn& adversary,
                               std::size_t n_episodes, std::uint64_t seed,
                               Belief::Mode mode = Belief::Mode::kReduced);

// Raw per-episode regrets in episode order.
std::vector<double> sample_regrets(int num_actions, int horizon,
                                   const DiscreteMeasure& m0,
                                   const ForecasterFn& forecaster,
                                   const AdversaryFn& adversary,
                                   std::size_t n_episodes, std::uint64_t seed,
                                   Belief::Mode mode = Belief::Mode::kReduced);

int worker_count_from_env();

nlohmann::json to_json(const EpisodeTrace& trace);
nlohmann::json to_json(const ActionMix& b);
nlohmann::json to_json(const SubsetMix& a);

// "K,T,forecaster_id,adversary_id,n,mean,stderr,seed"
std::string regret_csv_header();
std::string regret_csv_row(int num_actions, int horizon,
                           const std::string& forecaster_id,
                           const std::string& adversary_id,
                           const RegretEstimate& est, std::uint64_t seed);

// %.17g formatting used for every float written by the CLI.
std::string format_double(double v);

}  // namespace banditscape
