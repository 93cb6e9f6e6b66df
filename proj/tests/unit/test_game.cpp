#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "banditscape/game.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace banditscape;

namespace {

using Z = std::vector<std::int64_t>;

DiscreteMeasure delta(Z z) { return DiscreteMeasure::point_mass(z); }

double max_diff(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return max_weight_difference(a, b);
}

Subset set_of(std::initializer_list<int> one_based) {
  Subset j = 0;
  for (int i : one_based) j |= Subset{1} << (i - 1);
  return j;
}

ForecasterFn constant_forecaster(ActionMix b) {
  return [b](int, const Belief&, int) { return b; };
}
AdversaryFn constant_adversary(SubsetMix a) {
  return [a](int, const Belief&, int) { return a; };
}

}  // namespace

TEST_CASE("mix validation") {
  CHECK_THROWS_AS(ActionMix({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ActionMix({1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(SubsetMix(2, {0.5, 0.5}), std::invalid_argument);
  CHECK_NOTHROW(ActionMix({0.5, 0.5 + 1e-10}));
}

TEST_CASE("step_state") {
  const Z origin{0, 0};
  CHECK(step_state(origin, 1, set_of({1})) == Z{1, 0});
  CHECK(step_state(origin, 0, set_of({1})) == Z{0, -1});
  for (int i = 0; i < 3; ++i)
    CHECK(step_state(Z{4, -2, 7}, i, full_subset(3)) == Z{4, -2, 7});
  CHECK_THROWS_AS(step_state(origin, 2, 0), std::invalid_argument);
}

TEST_CASE("signal") {
  CHECK(signal(0, set_of({1, 2})).to_int() == 1);
  CHECK(signal(1, set_of({1})).to_int() == -2);
  CHECK(signal(0, 0).to_int() == -1);
  CHECK(Signal::from_int(-3) == Signal{2, false});
  CHECK(all_signals(3).size() == 6);
}

TEST_CASE("hat_a") {
  for (int k = 2; k <= 6; ++k)
    for (int i = 0; i < k; ++i) {
      CHECK(hat_a(SubsetMix::uniform(k), {i, true}) == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(hat_a(SubsetMix::uniform(k), {i, false}) == doctest::Approx(0.5).epsilon(1e-15));
    }
  CHECK(hat_a(SubsetMix::vertex(2, set_of({1})), {0, true}) == 1.0);
  CHECK(hat_a(SubsetMix::vertex(2, set_of({1})), {1, true}) == 0.0);
  std::mt19937_64 g(11);
  for (int rep = 0; rep < 100; ++rep) {
    const auto a = testgen::random_subset_mix(g, 3);
    for (int i = 0; i < 3; ++i)
      CHECK(hat_a(a, {i, true}) + hat_a(a, {i, false}) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("is_balanced") {
  for (int k = 2; k <= 6; ++k) CHECK(is_balanced(SubsetMix::uniform(k)));
  CHECK_FALSE(is_balanced(SubsetMix::vertex(2, set_of({1}))));
  std::vector<double> p(4, 0.0);
  p[0] = p[3] = 0.5;
  CHECK(is_balanced(SubsetMix(2, p)));
}

TEST_CASE("belief_update examples") {
  std::mt19937_64 g(12);
  const auto m = testgen::random_measure(g, 2, 10);
  // delta_{1}, +1: J = {1} contains 1, shift -e_{J^c} = -e_2.
  CHECK(max_diff(belief_update(m, SubsetMix::vertex(2, set_of({1})), Signal::from_int(1)),
                 pushforward_shift(m, Z{0, -1})) == 0.0);
  // a(empty) = a({2}) = 1/2, -1.
  std::vector<double> p(4, 0.0);
  p[0] = p[set_of({2})] = 0.5;
  const auto expected = mix(std::vector<std::pair<double, DiscreteMeasure>>{
      {0.5, m}, {0.5, pushforward_shift(m, Z{0, 1})}});
  CHECK(max_diff(belief_update(m, SubsetMix(2, p), Signal::from_int(-1)), expected) <= 1e-15);
  // Zero evidence convention.
  const auto conv = belief_update(m, SubsetMix::vertex(2, set_of({2})), Signal::from_int(1));
  CHECK(conv.size() == 1);
  CHECK(conv.weight_at(Z{0, 0}) == 1.0);
}

TEST_CASE("bayes_oracle examples") {
  const auto r = bayes_oracle(delta({0, 0}), SubsetMix::vertex(2, set_of({1})),
                              ActionMix::uniform(2), Signal::from_int(1));
  CHECK(r.weight_at(Z{0, -1}) == 1.0);
  CHECK_THROWS_AS(bayes_oracle(delta({0, 0}), SubsetMix::vertex(2, set_of({2})),
                               ActionMix::uniform(2), Signal::from_int(1)),
                  std::domain_error);
  CHECK_THROWS_AS(bayes_oracle(delta({0, 0}), SubsetMix::uniform(2),
                               ActionMix::pure(2, 1), Signal::from_int(1)),
                  std::domain_error);
}

TEST_CASE("belief_update equals the Bayes oracle, independent of b") {
  std::mt19937_64 g(13);
  std::uniform_int_distribution<int> kd(2, 3);
  int compared = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const int k = kd(g);
    const auto m = testgen::random_measure(g, k, 20);
    const auto a = testgen::random_subset_mix(g, k);
    const auto b1 = testgen::random_action_mix(g, k);
    const auto b2 = testgen::random_action_mix(g, k);
    for (const Signal& y : all_signals(k)) {
      if (hat_a(a, y) == 0.0) continue;
      const auto fast = belief_update(m, a, y);
      CHECK(max_diff(fast, bayes_oracle(m, a, b1, y)) <= 1e-12);
      CHECK(max_diff(bayes_oracle(m, a, b1, y), bayes_oracle(m, a, b2, y)) <= 1e-12);
      ++compared;
    }
  }
  CHECK(compared > 500);
}

TEST_CASE("mixture consistency") {
  std::mt19937_64 g(14);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + rep % 2;
    const auto m = testgen::random_measure(g, k, 15);
    const auto a = testgen::random_subset_mix(g, k);
    const auto b = testgen::random_action_mix(g, k);
    std::vector<std::pair<double, DiscreteMeasure>> parts;
    for (const Signal& y : all_signals(k)) {
      const double p = b[y.action] * hat_a(a, y);
      if (p > 0.0) parts.emplace_back(p, belief_update(m, a, y));
    }
    CHECK(max_diff(mix(parts), one_step_law(m, a, b)) <= 1e-12);
  }
}

TEST_CASE("belief_update commutes with translation") {
  std::mt19937_64 g(15);
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = testgen::random_measure(g, 3, 10);
    const auto a = testgen::random_subset_mix(g, 3);
    const Z v{2, -1, 3};
    for (const Signal& y : all_signals(3)) {
      if (hat_a(a, y) == 0.0) continue;
      CHECK(max_diff(belief_update(pushforward_shift(m, v), a, y),
                     pushforward_shift(belief_update(m, a, y), v)) <= 1e-15);
    }
  }
}

TEST_CASE("reduced belief tracks the exact belief modulo the diagonal") {
  std::mt19937_64 g(16);
  for (int k = 2; k <= 3; ++k)
    for (int rep = 0; rep < 40; ++rep) {
      const auto m0 = testgen::random_measure(g, k, 6);
      Belief exact = Belief::exact(m0);
      Belief reduced = Belief::reduced(m0);
      for (int n = 0; n < 8; ++n) {
        const auto a = testgen::random_subset_mix(g, k);
        std::vector<Signal> live;
        for (const Signal& y : all_signals(k))
          if (hat_a(a, y) > 0.0) live.push_back(y);
        const Signal y = live[g() % live.size()];
        exact = exact.updated(a, y);
        reduced = reduced.updated(a, y);
      }
      const auto me = exact.measure();
      // Project the exact belief onto differences and compare.
      std::vector<std::int64_t> keys;
      std::vector<double> w;
      for (std::size_t atom = 0; atom < me.size(); ++atom) {
        const auto z = me.key(atom);
        for (int i = 0; i < k; ++i) keys.push_back(z[i] - z[k - 1]);
        w.push_back(me.weight(atom));
      }
      const DiscreteMeasure projected(k, 1.0, keys, w);
      CHECK(max_diff(projected, reduced.measure()) <= 1e-12);
      for (int i = 0; i < k; ++i)
        CHECK(reduced.mean()[i] == doctest::Approx(exact.mean()[i]).epsilon(1e-12));
      CHECK(reduced.level() == doctest::Approx(exact.mean()[k - 1]).epsilon(1e-12));
    }
}

TEST_CASE("play_episode trace invariants and determinism") {
  std::mt19937_64 g(17);
  const auto m0 = testgen::random_measure(g, 3, 5);
  auto forecaster = [](int n, const Belief&, int) {
    return ActionMix({0.2, 0.3 + 0.01 * (n % 3), 0.5 - 0.01 * (n % 3)});
  };
  auto adversary = [](int n, const Belief&, int) {
    std::vector<double> p(8, 0.0);
    p[n % 8] = 0.6;
    p[(n + 3) % 8] += 0.4;
    return SubsetMix(3, p);
  };
  const auto t1 = play_episode(3, 12, m0, forecaster, adversary, 99, 4);
  const auto t2 = play_episode(3, 12, m0, forecaster, adversary, 99, 4);
  CHECK(to_json(t1).dump() == to_json(t2).dump());
  REQUIRE(t1.states.size() == 13);
  REQUIRE(t1.beliefs.size() == 13);
  CHECK(m0.weight_at(t1.states[0]) > 0.0);
  for (int n = 0; n < 12; ++n) {
    CHECK(step_state(t1.states[n], t1.actions[n], t1.subsets[n]) == t1.states[n + 1]);
    CHECK(signal(t1.actions[n], t1.subsets[n]) == t1.signals[n]);
    CHECK(max_diff(belief_update(t1.beliefs[n], t1.adversary[n], t1.signals[n]),
                   t1.beliefs[n + 1]) == 0.0);
  }
  // Offline replay from (m0, a, y).
  DiscreteMeasure replay = m0;
  for (int n = 0; n < 12; ++n) replay = belief_update(replay, t1.adversary[n], t1.signals[n]);
  CHECK(max_diff(replay, t1.beliefs.back()) == 0.0);
  CHECK(t1.regret == static_cast<double>(*std::max_element(t1.final_state.begin(),
                                                          t1.final_state.end())));
}

TEST_CASE("play_episode degenerate adversaries") {
  std::mt19937_64 g(18);
  const auto m0 = testgen::random_measure(g, 2, 5);
  const auto uniform = constant_forecaster(ActionMix::uniform(2));
  const auto t0 = play_episode(2, 0, m0, uniform, constant_adversary(SubsetMix::uniform(2)), 5);
  CHECK(t0.regret == static_cast<double>(std::max(t0.states[0][0], t0.states[0][1])));

  const auto full = play_episode(2, 20, m0, uniform,
                                 constant_adversary(SubsetMix::vertex(2, full_subset(2))), 5);
  CHECK(full.final_state == full.states[0]);
  const auto empty = play_episode(2, 20, m0, uniform,
                                  constant_adversary(SubsetMix::vertex(2, 0)), 5);
  CHECK(empty.final_state == empty.states[0]);
  for (const Signal& y : empty.signals) CHECK_FALSE(y.rewarded);

  auto bad = [](int, const Belief&, int) { return ActionMix::uniform(3); };
  CHECK_THROWS_AS(play_episode(2, 3, m0, bad, constant_adversary(SubsetMix::uniform(2)), 5),
                  std::invalid_argument);
}

TEST_CASE("estimate_regret examples") {
  const auto origin = DiscreteMeasure::point_mass_at_origin(2);
  const auto zero = estimate_regret(2, 10, origin, constant_forecaster(ActionMix::uniform(2)),
                                    constant_adversary(SubsetMix::vertex(2, 3)), 200, 1);
  CHECK(zero.mean == 0.0);
  CHECK(zero.stderr_ == 0.0);

  std::vector<double> p(4, 0.0);
  p[set_of({1})] = p[set_of({2})] = 0.5;
  const auto half = estimate_regret(2, 1, origin, constant_forecaster(ActionMix::uniform(2)),
                                    constant_adversary(SubsetMix(2, p)), 4000, 2);
  CHECK(std::abs(half.mean - 0.5) <= 3.0 * half.stderr_);

  const auto one = estimate_regret(2, 1, origin, constant_forecaster(ActionMix::pure(2, 0)),
                                   constant_adversary(SubsetMix::vertex(2, set_of({2}))), 50, 3);
  CHECK(one.mean == 1.0);
}

TEST_CASE("worker count does not change results") {
  const auto origin = DiscreteMeasure::point_mass_at_origin(2);
  const auto f = constant_forecaster(ActionMix({0.3, 0.7}));
  const auto a = constant_adversary(SubsetMix::uniform(2));
  setenv("BANDITSCAPE_WORKERS", "1", 1);
  const auto r1 = sample_regrets(2, 30, origin, f, a, 97, 7);
  setenv("BANDITSCAPE_WORKERS", "4", 1);
  const auto r4 = sample_regrets(2, 30, origin, f, a, 97, 7);
  unsetenv("BANDITSCAPE_WORKERS");
  CHECK(r1 == r4);
}

TEST_CASE("signal frequencies follow b(i) hat_a(+-i)") {
  const ActionMix b({0.2, 0.5, 0.3});
  std::vector<double> p{0.05, 0.1, 0.2, 0.05, 0.25, 0.1, 0.15, 0.1};
  const SubsetMix a(3, p);
  const int n = 100000;
  const auto origin = DiscreteMeasure::point_mass_at_origin(3);
  std::vector<double> counts(6, 0.0);
  for (int e = 0; e < n; ++e) {
    const auto trace = play_episode(3, 1, origin, constant_forecaster(b),
                                    constant_adversary(a), 2024, e,
                                    {Belief::Mode::kReduced, false, false});
    const Signal y = trace.signals[0];
    counts[2 * y.action + (y.rewarded ? 0 : 1)] += 1.0;
  }
  double chi2 = 0.0;
  const auto signals = all_signals(3);
  for (std::size_t s = 0; s < signals.size(); ++s) {
    const double expected = n * b[signals[s].action] * hat_a(a, signals[s]);
    chi2 += (counts[s] - expected) * (counts[s] - expected) / expected;
  }
  const boost::math::chi_squared dist(5);
  const double p_value = 1.0 - boost::math::cdf(dist, chi2);
  CHECK(p_value > 0.001);
}
