#include <catch2/catch_amalgamated.hpp>

#include "beliefmap/deep.hpp"
#include "beliefmap/envs/cartpole.hpp"
#include "beliefmap/envs/taxi.hpp"
#include "beliefmap/presets.hpp"
#include "beliefmap/train.hpp"

using namespace beliefmap;

namespace {

DeepTransition make_t(int dim, int s, int a, double r, int sn, bool terminal) {
  DeepTransition t;
  t.obs = one_hot(dim, s);
  t.next_obs = one_hot(dim, sn);
  t.state_id = s;
  t.next_state_id = sn;
  t.action = a;
  t.reward = r;
  t.terminal = terminal;
  return t;
}

}  // namespace

TEST_CASE("replay buffer: ring semantics and batch guard") {
  ReplayBuffer buf(4);
  Rng rng(0);
  REQUIRE_THROWS_AS(buf.sample_indices(1, rng), std::logic_error);
  for (int i = 0; i < 6; ++i) buf.push(make_t(3, i % 3, 0, i, (i + 1) % 3, false));
  REQUIRE(buf.size() == 4);
  // oldest two were overwritten: rewards now {4, 5, 2, 3}
  std::vector<double> rewards;
  for (std::size_t i = 0; i < buf.size(); ++i) rewards.push_back(buf.at(i).reward);
  REQUIRE(rewards == std::vector<double>{4.0, 5.0, 2.0, 3.0});
  for (auto i : buf.sample_indices(3, rng)) REQUIRE(i < 4);
}

TEST_CASE("dqn_train_step: finite nonnegative loss, all-terminal targets equal rewards") {
  Rng rng(2);
  MlpFunction q = MlpFunction::he_init({3, 8, 2}, rng);
  MlpFunction target = q;
  AdamState opt(q, 1e-3);
  ReplayBuffer buf(64);
  for (int i = 0; i < 32; ++i) buf.push(make_t(3, i % 3, i % 2, 0.5, (i + 1) % 3, true));
  DqnOptions o;
  o.batch = 16;
  Rng sample(1);
  const double loss = dqn_train_step(q, target, buf, opt, o, sample);
  REQUIRE(std::isfinite(loss));
  REQUIRE(loss >= 0.0);
  // all-terminal fit with gamma irrelevant: repeated steps drive Q(s,a) -> 0.5
  for (int i = 0; i < 3000; ++i) dqn_train_step(q, target, buf, opt, o, sample);
  for (int s = 0; s < 3; ++s) {
    const Vector v = q.forward(one_hot(3, s));
    for (int a = 0; a < 2; ++a) REQUIRE(v[a] == Catch::Approx(0.5).margin(0.02));
  }
}

TEST_CASE("dqn_train_step: gamma = 0 drives predictions toward rewards") {
  Rng rng(4);
  MlpFunction q = MlpFunction::he_init({2, 16, 2}, rng);
  MlpFunction target = q;
  AdamState opt(q, 1e-3);
  ReplayBuffer buf(8);
  for (int i = 0; i < 4; ++i) {
    buf.push(make_t(2, 0, 0, 1.0, 1, false));
    buf.push(make_t(2, 1, 1, -1.0, 0, false));
  }
  DqnOptions o;
  o.gamma = 0.0;
  o.batch = 8;
  Rng sample(9);
  for (int i = 0; i < 4000; ++i) dqn_train_step(q, target, buf, opt, o, sample);
  REQUIRE(q.forward(one_hot(2, 0))[0] == Catch::Approx(1.0).margin(0.05));
  REQUIRE(q.forward(one_hot(2, 1))[1] == Catch::Approx(-1.0).margin(0.05));
}

TEST_CASE("dqn_train_step: literal printed loss form runs and stays finite") {
  Rng rng(6);
  MlpFunction q = MlpFunction::he_init({3, 8, 2}, rng);
  MlpFunction target = q;
  AdamState opt(q, 1e-4);
  ReplayBuffer buf(32);
  for (int i = 0; i < 32; ++i) buf.push(make_t(3, i % 3, i % 2, 1.0, (i + 1) % 3, i % 5 == 0));
  DqnOptions o;
  o.literal_loss_form = true;
  Rng sample(3);
  for (int i = 0; i < 50; ++i) {
    const double loss = dqn_train_step(q, target, buf, opt, o, sample);
    REQUIRE(std::isfinite(loss));
  }
}

TEST_CASE("dqn_train_step: underfilled buffer is an error") {
  Rng rng(0);
  MlpFunction q = MlpFunction::he_init({2, 4, 2}, rng);
  MlpFunction target = q;
  AdamState opt(q);
  ReplayBuffer buf(32);
  buf.push(make_t(2, 0, 0, 0.0, 1, false));
  DqnOptions o;
  Rng sample(0);
  REQUIRE_THROWS_AS(dqn_train_step(q, target, buf, opt, o, sample), std::logic_error);
}

TEST_CASE("dbn_train_step: all-terminal batch fits the pure one-hot") {
  // tiny joint head: 3 states, 2 actions, output 2*3*2
  Rng rng(8);
  MlpFunction h = MlpFunction::he_init({3, 32, 12}, rng);
  MlpFunction h_target = h;
  MlpFunction q = MlpFunction::he_init({3, 4, 2}, rng);
  AdamState opt(h, 3e-3);
  ReplayBuffer buf(16);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) buf.push(make_t(3, s, a, 0.0, (s + 1) % 3, true));
  DbnOptions o;
  o.batch = 6;
  Rng sample(5);
  for (int i = 0; i < 6000; ++i) dbn_train_step(h, h_target, q, buf, opt, o, sample);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) {
      const Vector out = h.forward(one_hot(3, s));
      for (int k = 0; k < 6; ++k) {
        const double expected = k == s * 2 + a ? 1.0 : 0.0;
        REQUIRE(out[a * 6 + k] == Catch::Approx(expected).margin(0.05));
      }
    }
}

TEST_CASE("dbn_train_step: gamma = 0 converges to indicators with a frozen random Q") {
  Rng rng(10);
  MlpFunction h = MlpFunction::he_init({2, 24, 8}, rng);
  MlpFunction h_target = h;
  const MlpFunction q = MlpFunction::he_init({2, 4, 2}, rng);
  AdamState opt(h, 3e-3);
  ReplayBuffer buf(8);
  for (int i = 0; i < 2; ++i) {
    buf.push(make_t(2, 0, 1, 0.0, 1, false));
    buf.push(make_t(2, 1, 0, 0.0, 0, false));
  }
  DbnOptions o;
  o.gamma = 0.0;
  o.batch = 4;
  Rng sample(2);
  for (int i = 0; i < 5000; ++i) dbn_train_step(h, h_target, q, buf, opt, o, sample);
  const Vector out = h.forward(one_hot(2, 0));  // block for action 1 fits 1_{s=0,a=1}
  for (int k = 0; k < 4; ++k)
    REQUIRE(out[1 * 4 + k] == Catch::Approx(k == 1 ? 1.0 : 0.0).margin(0.05));
}

TEST_CASE("two-stream net: forward composes streams and trunk, gradcheck passes") {
  Rng rng(20);
  TwoStreamMlp net(MlpFunction::he_init({6, 10}, rng), MlpFunction::he_init({3, 5}, rng),
                   MlpFunction::he_init({15, 12, 4}, rng));
  const Vector xs = one_hot(6, 2), xa = one_hot(3, 1);
  const Vector y = net.forward(xs, xa);
  REQUIRE(y.size() == 4);

  // gradient check through the composition
  Vector u(4);
  for (Eigen::Index i = 0; i < 4; ++i) u[i] = rng.uniform_range(-1, 1);
  TwoStreamMlp::Cache cache;
  net.forward_batch(xs, xa, &cache);
  const TwoStreamMlp::Gradients g = net.backward_batch(cache, u);
  ParamGradView view;
  view.add(net.state_stream(), g.state);
  view.add(net.action_stream(), g.action);
  view.add(net.trunk(), g.trunk);
  const auto loss = [&]() { return u.dot(net.forward(xs, xa)); };
  const GradCheckResult r = finite_difference_check(view, loss, 100, 1e-5, rng);
  REQUIRE(r.max_rel_err <= 1e-4);
}

TEST_CASE("dbn_train_step_marginal: runs on the taxi architecture and stays finite") {
  Rng rng(30);
  TwoStreamMlp h(MlpFunction::he_init({10, 16}, rng), MlpFunction::he_init({4, 8}, rng),
                 MlpFunction::he_init({24, 20, 10}, rng));
  TwoStreamMlp h_target = h;
  const MlpFunction q = MlpFunction::he_init({10, 8, 4}, rng);
  TwoStreamAdam opt(h, 1e-3);
  ReplayBuffer buf(32);
  for (int i = 0; i < 20; ++i) buf.push(make_t(10, i % 10, i % 4, -1.0, (i + 3) % 10, i % 7 == 0));
  DbnOptions o;
  o.gamma = 0.9;
  o.batch = 8;
  Rng sample(7);
  double last = 0.0;
  for (int i = 0; i < 200; ++i) {
    last = dbn_train_step_marginal(h, h_target, q, buf, opt, o, sample);
    REQUIRE(std::isfinite(last));
  }
  REQUIRE(last >= 0.0);
}

TEST_CASE("deep training is deterministic per seed (loss sequences bitwise equal)") {
  auto run = [](std::uint64_t seed) {
    CartpoleEnv env;
    CartpoleObsAdapter obs(env);
    DeepConfig cfg = DeepConfig::from_preset("cartpole", false, seed);
    cfg.episodes = 12;
    cfg.learn_start = 64;
    DeepTrainer trainer(env, obs, cfg);
    trainer.run();
    return std::pair{trainer.episode_returns(), trainer.episode_dqn_loss()};
  };
  const auto a = run(77);
  const auto b = run(77);
  REQUIRE(a.first == b.first);
  for (std::size_t i = 0; i < a.second.size(); ++i) {
    if (std::isnan(a.second[i]))
      REQUIRE(std::isnan(b.second[i]));
    else
      REQUIRE(a.second[i] == b.second[i]);
  }
}

TEST_CASE("recover_q_deep: zero belief net recovers zero, report shape sane") {
  MlpFunction h({4, 6, 8});  // zero-initialised
  Rng rng(1);
  MlpFunction q = MlpFunction::he_init({4, 6, 2}, rng);
  RewardMap r(4, 2, RewardMap::Source::EnvGroundTruth);
  for (auto& v : r.mutable_data()) v = 1.0;
  std::vector<VisitedSample> samples;
  for (int s = 0; s < 4; ++s) samples.push_back({one_hot(4, s), s});
  const DeepRecoveryReport rep = recover_q_deep(h, r, samples, q);
  REQUIRE(rep.pairs == 8);
  // recovered series is identically zero -> correlation defined as 0
  REQUIRE(rep.pearson == 0.0);
  REQUIRE(rep.max_abs_dev > 0.0);
}

TEST_CASE("pearson correlation: exact on affine series") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{3, 5, 7, 9, 11};
  REQUIRE(pearson_correlation(x, y) == Catch::Approx(1.0).margin(1e-12));
  std::vector<double> z{-1, -2, -3, -4, -5};
  REQUIRE(pearson_correlation(x, z) == Catch::Approx(-1.0).margin(1e-12));
}
