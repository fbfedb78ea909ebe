#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "beliefmap/envs/chain.hpp"
#include "beliefmap/tabular.hpp"
#include "beliefmap/train.hpp"
#include "oracles.hpp"

using namespace beliefmap;

TEST_CASE("q_update: single step on a zero table") {
  QTable q(4, 2);
  const Transition t{0, 1, 1.0, 2, false};
  const UpdateEvent ev = q_update(q, t, 0.5, 0.9);
  // 0 + 0.5 * (1 + 0.9 * 0 - 0)
  REQUIRE(q.at(0, 1) == 0.5);
  REQUIRE(ev.greedy_next_action == 0);  // zero row, ties to lowest index
  REQUIRE(ev.alpha == 0.5);
}

TEST_CASE("q_update: alpha = 0 leaves the table unchanged") {
  QTable q(3, 2);
  q.at(1, 0) = 7.0;
  q_update(q, {1, 0, 5.0, 2, false}, 0.0, 1.0);
  REQUIRE(q.at(1, 0) == 7.0);
}

TEST_CASE("q_update: terminal transitions drop the bootstrap") {
  QTable q(3, 2);
  q.at(2, 0) = 100.0;  // must not leak into the target
  const UpdateEvent ev = q_update(q, {0, 0, 3.0, 2, true}, 1.0, 1.0);
  REQUIRE(q.at(0, 0) == 3.0);
  REQUIRE(ev.greedy_next_action == -1);
}

TEST_CASE("q_update: greedy_next_action is the pre-update argmax") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    QTable q(5, 3);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a) q.at(s, a) = rng.uniform_range(-1, 1);
    const Transition t{0, 1, rng.uniform_range(-1, 1), 1 + rng.uniform_int(4), false};
    QTable before = q;
    const UpdateEvent ev = q_update(q, t, 0.3, 0.9);
    double best = before.at(t.next_state, 0);
    for (int a = 1; a < 3; ++a) best = std::max(best, before.at(t.next_state, a));
    REQUIRE(before.at(t.next_state, ev.greedy_next_action) == best);
  }
}

TEST_CASE("q_update: contraction toward the sampled target") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    QTable q(4, 2);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 2; ++a) q.at(s, a) = rng.uniform_range(-5, 5);
    const double alpha = rng.uniform_range(0.05, 1.0);
    const Transition t{0, 0, rng.uniform_range(-2, 2), 3, false};
    double best = std::max(q.at(3, 0), q.at(3, 1));
    const double target = t.reward + 0.9 * best;
    const double before = q.at(0, 0);
    q_update(q, t, alpha, 0.9);
    REQUIRE(std::abs(q.at(0, 0) - target)
            == Catch::Approx((1 - alpha) * std::abs(before - target)).margin(1e-12));
  }
}

TEST_CASE("q_update: non-finite target is rejected") {
  QTable q(2, 2);
  REQUIRE_THROWS_AS(
      q_update(q, {0, 0, std::numeric_limits<double>::infinity(), 1, false}, 0.5, 1.0),
      std::runtime_error);
}

TEST_CASE("mc_update: hand-evaluated returns") {
  SECTION("single transition, full step") {
    QTable q(3, 2);
    Trajectory traj;
    traj.transitions.push_back({0, 0, 2.0, 2, true});
    mc_update(q, traj, 1.0, 1.0);
    REQUIRE(q.at(0, 0) == 2.0);
  }
  SECTION("chain trajectory: returns 2 then 2") {
    QTable q(4, 2);
    Trajectory traj;
    traj.transitions.push_back({0, 0, 0.0, 1, false});
    traj.transitions.push_back({1, 0, 2.0, 3, true});
    mc_update(q, traj, 1.0, 1.0);
    REQUIRE(q.at(0, 0) == 2.0);
    REQUIRE(q.at(1, 0) == 2.0);
  }
  SECTION("gamma = 0 reduces to immediate rewards") {
    QTable q(4, 2);
    Trajectory traj;
    traj.transitions.push_back({0, 0, 0.5, 1, false});
    traj.transitions.push_back({1, 0, 2.0, 3, true});
    mc_update(q, traj, 1.0, 0.0);
    REQUIRE(q.at(0, 0) == 0.5);
    REQUIRE(q.at(1, 0) == 2.0);
  }
  SECTION("empty trajectory is an error") {
    QTable q(2, 2);
    Trajectory traj;
    REQUIRE_THROWS_AS(mc_update(q, traj, 0.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("double_q_update: alpha = 0 is a no-op, equal tables collapse to vanilla") {
  TwinQTables tw(4, 2);
  Rng sel(3);
  double_q_update(tw, {0, 0, 5.0, 1, false}, 0.0, 1.0, sel);
  REQUIRE(tw.a.at(0, 0) == 0.0);
  REQUIRE(tw.b.at(0, 0) == 0.0);

  // identical tables: the update value equals vanilla q_update's
  TwinQTables tw2(4, 2);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) tw2.a.at(s, a) = tw2.b.at(s, a) = 0.25 * s - 0.5 * a;
  QTable vanilla = tw2.a;
  const Transition t{1, 1, 0.7, 2, false};
  q_update(vanilla, t, 0.3, 0.9);
  Rng sel2(1);
  const UpdateEvent ev = double_q_update(tw2, t, 0.3, 0.9, sel2);
  const QTable& updated = ev.algo == Algo::DoubleQA ? tw2.a : tw2.b;
  REQUIRE(updated.at(1, 1) == Catch::Approx(vanilla.at(1, 1)).margin(1e-15));
}

TEST_CASE("double_q_update: forced selector sequence is replayable") {
  auto run = [](std::uint64_t seed) {
    TwinQTables tw(4, 2);
    Rng sel(seed);
    Rng data(7);
    for (int i = 0; i < 200; ++i) {
      const Transition t{data.uniform_int(4), data.uniform_int(2), data.uniform_range(-1, 1),
                         data.uniform_int(4), false};
      double_q_update(tw, t, 0.2, 0.9, sel);
    }
    return tw;
  };
  const TwinQTables x = run(5);
  const TwinQTables y = run(5);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      REQUIRE(x.a.at(s, a) == y.a.at(s, a));
      REQUIRE(x.b.at(s, a) == y.b.at(s, a));
    }
}

TEST_CASE("epsilon_greedy: pure exploration is uniform within 3 sigma") {
  Rng rng(31);
  const std::vector<double> row = {0.0, 10.0, -1.0};
  const int n = 12000;
  int counts[3] = {};
  for (int i = 0; i < n; ++i) ++counts[epsilon_greedy(row, 1.0, rng)];
  const double expected = n / 3.0;
  const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  for (int k = 0; k < 3; ++k) REQUIRE(std::abs(counts[k] - expected) < 3 * sigma);
}

TEST_CASE("epsilon_greedy: greedy with a unique maximum is deterministic") {
  Rng rng(1);
  const std::vector<double> row = {0.1, 0.9, 0.3};
  for (int i = 0; i < 1000; ++i) REQUIRE(epsilon_greedy(row, 0.0, rng) == 1);
}

TEST_CASE("epsilon_greedy: two-way ties split about 50/50") {
  // Oracle bound fixed up front: Binomial(10000, 0.5) stays within 4 sigma
  // = 200 of 5000 with probability > 0.9999.
  Rng rng(77);
  const std::vector<double> row = {0.5, 0.5, -1.0};
  const int n = 10000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    const int a = epsilon_greedy(row, 0.0, rng);
    REQUIRE(a != 2);
    first += a == 0;
  }
  REQUIRE(std::abs(first - 5000) < 200);
}

TEST_CASE("epsilon_greedy: legal-action mask restricts both branches") {
  Rng rng(13);
  const std::vector<double> row = {-5.0, 100.0};
  for (int i = 0; i < 500; ++i) REQUIRE(epsilon_greedy(row, 1, 0.7, rng) == 0);
}

TEST_CASE("epsilon schedules are monotone non-increasing and clamp at end") {
  const auto expo = EpsilonSchedule::exponential(1.0, 0.05, 0.9999);
  const auto lin = EpsilonSchedule::linear(1.0, 0.1, 500);
  double prev_e = 2.0, prev_l = 2.0;
  for (int ep = 0; ep < 60000; ep += 7) {
    const double e = expo.value(ep);
    const double l = lin.value(ep);
    REQUIRE(e <= prev_e);
    REQUIRE(l <= prev_l);
    REQUIRE(e >= 0.05);
    REQUIRE(l >= 0.1);
    prev_e = e;
    prev_l = l;
  }
  REQUIRE(expo.value(60000) == 0.05);
  REQUIRE(lin.value(500) == 0.1);
  REQUIRE(lin.value(10000) == 0.1);
}

TEST_CASE("chain Q-learning converges to the published optimum") {
  ChainEnv env;
  TabularConfig cfg = TabularConfig::from_preset("chain", TrainAlgo::QLearning, 7);
  TabularTrainer trainer(env, cfg);
  trainer.run();
  REQUIRE(trainer.q().at(0, 0) == Catch::Approx(2.0).margin(1e-3));
  REQUIRE(trainer.q().at(0, 1) == Catch::Approx(2.0).margin(1e-3));
}

TEST_CASE("chain Monte Carlo agrees with Q-learning on the greedy optimum") {
  ChainEnv env;
  TabularConfig cfg = TabularConfig::from_preset("chain", TrainAlgo::MonteCarlo, 11);
  TabularTrainer trainer(env, cfg);
  trainer.run();
  // greedy return equals 2 under both learners
  Rng rng(0);
  const PolicyFn greedy = [&](StateId s) { return trainer.greedy_action(s); };
  const Trajectory traj = rollout(env, greedy, 10, rng);
  REQUIRE(traj.episode_return == Catch::Approx(2.0).margin(1e-3));
}

TEST_CASE("chain double-Q converges on both tables") {
  ChainEnv env;
  TabularConfig cfg = TabularConfig::from_preset("chain", TrainAlgo::DoubleQ, 3);
  cfg.episodes = 20000;
  TabularTrainer trainer(env, cfg);
  trainer.run();
  for (int a = 0; a < 2; ++a) {
    REQUIRE(trainer.twin_q().a.at(0, a) == Catch::Approx(2.0).margin(1e-2));
    REQUIRE(trainer.twin_q().b.at(0, a) == Catch::Approx(2.0).margin(1e-2));
  }
}
