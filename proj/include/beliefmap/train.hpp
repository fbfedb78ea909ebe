#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "beliefmap/belief.hpp"
#include "beliefmap/deep.hpp"
#include "beliefmap/env.hpp"
#include "beliefmap/envs/cartpole.hpp"
#include "beliefmap/presets.hpp"
#include "beliefmap/tabular.hpp"

namespace beliefmap {

struct TabularConfig {
  std::string env_name;
  TrainAlgo algo = TrainAlgo::QLearning;
  double alpha = 0.1;
  double gamma = 1.0;
  int episodes = 1000;
  EpsilonSchedule epsilon;
  std::uint64_t seed = 0;
  InitMode q_init;
  InitMode h_init;
  RewardMap::Source reward_source = RewardMap::Source::EnvGroundTruth;
  int horizon_override = 0;  // 0 = environment default

  static TabularConfig from_preset(const std::string& env_name, TrainAlgo algo,
                                   std::uint64_t seed) {
    const TabularPreset p = tabular_preset(env_name);
    TabularConfig c;
    c.env_name = env_name;
    c.algo = algo;
    c.alpha = p.alpha;
    c.gamma = p.gamma;
    c.episodes = p.episodes;
    c.epsilon = p.epsilon;
    c.seed = seed;
    return c;
  }
};

// Runs a tabular learner with its belief map updated in lockstep: every value
// update publishes an UpdateEvent whose argmax the belief update reuses
// verbatim. Single Q/H pair for Q-learning and Monte Carlo, twin pairs for
// double Q-learning.
class TabularTrainer {
 public:
  TabularTrainer(Environment& env, TabularConfig config)
      : env_(env), config_(std::move(config)), rngs_(RunRngs::from_seed(config_.seed)) {
    const int s = env.num_states();
    const int a = env.num_actions();
    if (config_.algo == TrainAlgo::DoubleQ) {
      twin_q_ = TwinQTables(s, a, config_.q_init, config_.q_init);
      twin_h_ = TwinBeliefTensors(s, a, config_.gamma, config_.h_init, config_.h_init);
    } else {
      q_ = QTable(s, a, config_.q_init);
      h_ = BeliefTensor(s, a, config_.gamma, config_.h_init);
    }
    if (config_.reward_source == RewardMap::Source::EnvGroundTruth) {
      rewards_ = ground_truth_rewards(env);
    } else {
      rewards_ = RewardMap(s, a, RewardMap::Source::EmpiricalProxy);
    }
  }

  const TabularConfig& config() const { return config_; }
  bool is_twin() const { return config_.algo == TrainAlgo::DoubleQ; }
  const QTable& q() const { return q_; }
  const BeliefTensor& h() const { return h_; }
  const TwinQTables& twin_q() const { return twin_q_; }
  const TwinBeliefTensors& twin_h() const { return twin_h_; }
  const RewardMap& rewards() const { return rewards_; }
  const std::vector<double>& episode_returns() const { return episode_returns_; }
  int episodes_run() const { return static_cast<int>(episode_returns_.size()); }

  int max_steps() const {
    if (config_.horizon_override > 0) return config_.horizon_override;
    if (env_.horizon() > 0) return env_.horizon();
    return 100000;  // safety cap for naturally terminating episodes
  }

  // Trains for config.episodes more episodes; `checkpoint` (if given) fires
  // after every episode with the 1-based episode index.
  void run(const std::function<void(int)>& checkpoint = {}) {
    for (int ep = 0; ep < config_.episodes; ++ep) {
      const double eps = config_.epsilon.value(ep);
      switch (config_.algo) {
        case TrainAlgo::QLearning: run_q_episode(eps); break;
        case TrainAlgo::MonteCarlo: run_mc_episode(eps); break;
        case TrainAlgo::DoubleQ: run_double_episode(eps); break;
        default: throw std::invalid_argument("TabularTrainer: not a tabular algorithm");
      }
      if (checkpoint) checkpoint(ep + 1);
    }
  }

  // Consistency of the learned pair(s) against the run's reward map; twin
  // runs report the worse of the two pairs.
  ConsistencyReport consistency() const {
    if (!is_twin()) return verify_consistency(h_, q_, rewards_);
    ConsistencyReport ra = verify_consistency(twin_h_.a, twin_q_.a, rewards_);
    ConsistencyReport rb = verify_consistency(twin_h_.b, twin_q_.b, rewards_);
    return rb.max_abs_err > ra.max_abs_err ? rb : ra;
  }

  // Greedy action under the learned values (twin runs use the table sum).
  ActionId greedy_action(StateId s) const {
    const int legal = env_.num_legal_actions(s);
    if (!is_twin()) return argmax_lowest(q_.row(s), legal);
    std::vector<double> sum(legal);
    for (int a = 0; a < legal; ++a) sum[a] = twin_q_.a.at(s, a) + twin_q_.b.at(s, a);
    return argmax_lowest(sum, legal);
  }

 private:
  ActionId behavior_action(StateId s, double eps) {
    const int legal = env_.num_legal_actions(s);
    if (!is_twin()) return epsilon_greedy(q_.row(s), legal, eps, rngs_.policy);
    std::vector<double> sum(static_cast<std::size_t>(legal));
    for (int a = 0; a < legal; ++a) sum[a] = twin_q_.a.at(s, a) + twin_q_.b.at(s, a);
    return epsilon_greedy(sum, legal, eps, rngs_.policy);
  }

  void observe_reward(const Transition& t) {
    if (config_.reward_source == RewardMap::Source::EmpiricalProxy)
      record_proxy_reward(rewards_, t);
  }

  void run_q_episode(double eps) {
    StateId s = env_.reset(rngs_.env);
    double ret = 0.0, discount = 1.0;
    const int cap = max_steps();
    for (int i = 0; i < cap; ++i) {
      const Transition t = env_.step(behavior_action(s, eps), rngs_.env);
      observe_reward(t);
      const UpdateEvent ev =
          q_update(q_, t, config_.alpha, config_.gamma, env_.num_legal_actions(t.next_state));
      h_update_q(h_, ev);
      ret += discount * t.reward;
      discount *= config_.gamma;
      s = t.next_state;
      if (t.terminal) break;
    }
    episode_returns_.push_back(ret);
  }

  void run_double_episode(double eps) {
    StateId s = env_.reset(rngs_.env);
    double ret = 0.0, discount = 1.0;
    const int cap = max_steps();
    for (int i = 0; i < cap; ++i) {
      const Transition t = env_.step(behavior_action(s, eps), rngs_.env);
      observe_reward(t);
      const UpdateEvent ev = double_q_update(twin_q_, t, config_.alpha, config_.gamma,
                                             rngs_.selector, env_.num_legal_actions(t.next_state));
      h_update_double(twin_h_, ev);
      ret += discount * t.reward;
      discount *= config_.gamma;
      s = t.next_state;
      if (t.terminal) break;
    }
    episode_returns_.push_back(ret);
  }

  void run_mc_episode(double eps) {
    const PolicyFn policy = [&](StateId s) { return behavior_action(s, eps); };
    const Trajectory traj = rollout(env_, policy, max_steps(), rngs_.env, config_.gamma);
    for (const Transition& t : traj.transitions) observe_reward(t);
    mc_update(q_, traj, config_.alpha, config_.gamma);
    h_update_mc(h_, traj, config_.alpha, config_.gamma);
    episode_returns_.push_back(traj.episode_return);
  }

  Environment& env_;
  TabularConfig config_;
  RunRngs rngs_;
  QTable q_;
  BeliefTensor h_;
  TwinQTables twin_q_;
  TwinBeliefTensors twin_h_;
  RewardMap rewards_;
  std::vector<double> episode_returns_;
};

// Evaluates a fixed greedy policy: mean return and episode length.
struct EvalReport {
  double mean_return = 0.0;
  double mean_length = 0.0;
  int episodes = 0;
};

inline EvalReport evaluate_policy(Environment& env, const PolicyFn& policy, int episodes,
                                  double gamma, Rng& env_rng) {
  EvalReport rep;
  rep.episodes = episodes;
  const int cap = env.horizon() > 0 ? env.horizon() : 100000;
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = rollout(env, policy, cap, env_rng, gamma);
    rep.mean_return += traj.episode_return;
    rep.mean_length += static_cast<double>(traj.size());
  }
  rep.mean_return /= episodes;
  rep.mean_length /= episodes;
  return rep;
}

// ---- deep variant -------------------------------------------------------

struct DeepConfig {
  std::string env_name;
  bool with_dbn = false;
  double learning_rate = 1e-4;
  double gamma = 1.0;
  int episodes = 2000;
  int batch = 16;
  EpsilonSchedule epsilon;
  std::uint64_t seed = 0;
  int replay_capacity = 10000;
  int target_sync_every = 100;
  int learn_start = 500;
  int dbn_every = 8;
  bool literal_loss_form = false;

  static DeepConfig from_preset(const std::string& env_name, bool with_dbn, std::uint64_t seed) {
    const DeepPreset p = deep_preset(env_name);
    DeepConfig c;
    c.env_name = env_name;
    c.with_dbn = with_dbn;
    c.learning_rate = p.learning_rate;
    c.gamma = p.gamma;
    c.episodes = p.episodes;
    c.batch = p.batch;
    c.epsilon = p.epsilon;
    c.seed = seed;
    c.replay_capacity = p.replay_capacity;
    c.target_sync_every = p.target_sync_every;
    c.learn_start = p.learn_start;
    c.dbn_every = p.dbn_every;
    return c;
  }
};

// Bridges an Environment to the deep learners: produces the network input
// for the current state alongside its discrete id.
class DeepObsAdapter {
 public:
  virtual ~DeepObsAdapter() = default;
  virtual int obs_dim() const = 0;
  virtual Vector observe() const = 0;  // current state of the wrapped env
};

class OneHotObsAdapter final : public DeepObsAdapter {
 public:
  explicit OneHotObsAdapter(const Environment& env) : env_(env) {}
  int obs_dim() const override { return env_.num_states(); }
  Vector observe() const override { return one_hot(env_.num_states(), env_.current_state()); }

 private:
  const Environment& env_;
};

class CartpoleObsAdapter final : public DeepObsAdapter {
 public:
  explicit CartpoleObsAdapter(const CartpoleEnv& env) : env_(env) {}
  int obs_dim() const override { return 4; }
  Vector observe() const override {
    Vector v(4);
    for (int i = 0; i < 4; ++i) v[i] = env_.physical_state()[i];
    return v;
  }

 private:
  const CartpoleEnv& env_;
};

struct DeepRunResult {
  MlpFunction qnet;
  MlpFunction q_target;
  MlpFunction hnet;         // joint head (cartpole); empty when unused
  MlpFunction h_target;
  TwoStreamMlp hnet_taxi;   // marginal head (taxi); empty when unused
  std::vector<double> episode_returns;
  std::vector<double> episode_dqn_loss;  // mean loss per episode (nan until training starts)
  std::vector<double> episode_dbn_loss;
};

// DQN (optionally with a belief network trained alongside) on cartpole or
// taxi. One optimiser step per environment step once the buffer warms up; the
// belief net trains every `dbn_every` environment steps with the argmax taken
// from the live Q network.
class DeepTrainer {
 public:
  DeepTrainer(Environment& env, DeepObsAdapter& obs, DeepConfig config)
      : env_(env), obs_(obs), config_(std::move(config)),
        rngs_(RunRngs::from_seed(config_.seed)), buffer_(config_.replay_capacity) {
    const DeepPreset preset = deep_preset(config_.env_name);
    qnet_ = MlpFunction::he_init(preset.dqn_layers, rngs_.init);
    q_target_ = qnet_;
    if (config_.with_dbn) {
      if (config_.env_name == "cartpole") {
        hnet_ = MlpFunction::he_init(cartpole_dbn_layers(), rngs_.init);
        h_target_ = hnet_;
        h_opt_ = AdamState(hnet_, config_.learning_rate);
      } else if (config_.env_name == "taxi") {
        hnet_taxi_ = TwoStreamMlp::taxi_architecture(rngs_.init);
        h_target_taxi_ = hnet_taxi_;
        h_opt_taxi_ = TwoStreamAdam(hnet_taxi_, config_.learning_rate);
      } else {
        throw std::invalid_argument("DeepTrainer: no belief-net head for " + config_.env_name);
      }
    }
    q_opt_ = AdamState(qnet_, config_.learning_rate);
  }

  const MlpFunction& qnet() const { return qnet_; }
  const MlpFunction& hnet() const { return hnet_; }
  const TwoStreamMlp& hnet_taxi() const { return hnet_taxi_; }
  const std::vector<double>& episode_returns() const { return episode_returns_; }
  const std::vector<double>& episode_dqn_loss() const { return episode_dqn_loss_; }
  const std::vector<double>& episode_dbn_loss() const { return episode_dbn_loss_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  ActionId greedy_action(const Vector& obs) const {
    return argmax_lowest(Vector(qnet_.forward(obs)));
  }

  void run(const std::function<void(int)>& checkpoint = {}) {
    const int cap = env_.horizon() > 0 ? env_.horizon() : 1000;
    DqnOptions dqn_opts{config_.gamma, config_.batch, 1.0, 1.0, config_.literal_loss_form};
    DbnOptions dbn_opts{config_.gamma, config_.batch, 1.0};
    for (int ep = 0; ep < config_.episodes; ++ep) {
      const double eps = config_.epsilon.value(ep);
      env_.reset(rngs_.env);
      double ret = 0.0, discount = 1.0;
      double dqn_loss_sum = 0.0, dbn_loss_sum = 0.0;
      int dqn_steps = 0, dbn_steps = 0;
      for (int i = 0; i < cap; ++i) {
        DeepTransition t;
        t.obs = obs_.observe();
        t.state_id = env_.current_state();
        ActionId a;
        if (rngs_.policy.bernoulli(eps)) {
          a = rngs_.policy.uniform_int(env_.num_legal_actions(t.state_id));
        } else {
          a = argmax_lowest(Vector(qnet_.forward(t.obs)));
        }
        const Transition step = env_.step(a, rngs_.env);
        t.next_obs = obs_.observe();
        t.next_state_id = step.next_state;
        t.action = a;
        t.reward = step.reward;
        t.terminal = step.terminal;
        buffer_.push(std::move(t));
        ret += discount * step.reward;
        discount *= config_.gamma;
        ++global_step_;

        if (buffer_.size() >= static_cast<std::size_t>(config_.learn_start)) {
          dqn_loss_sum += dqn_train_step(qnet_, q_target_, buffer_, q_opt_, dqn_opts,
                                         rngs_.replay);
          ++dqn_steps;
          if (q_opt_.step_count() % config_.target_sync_every == 0)
            sync_target(qnet_, q_target_);
          if (config_.with_dbn && global_step_ % config_.dbn_every == 0) {
            if (config_.env_name == "cartpole") {
              dbn_loss_sum += dbn_train_step(hnet_, h_target_, qnet_, buffer_, h_opt_, dbn_opts,
                                             rngs_.replay);
              ++dbn_steps;
              if (h_opt_.step_count() % config_.target_sync_every == 0)
                sync_target(hnet_, h_target_);
            } else {
              dbn_loss_sum += dbn_train_step_marginal(hnet_taxi_, h_target_taxi_, qnet_, buffer_,
                                                      h_opt_taxi_, dbn_opts, rngs_.replay);
              ++dbn_steps;
              if (h_opt_taxi_.trunk.step_count() % config_.target_sync_every == 0)
                sync_target(hnet_taxi_, h_target_taxi_);
            }
          }
        }
        if (step.terminal) break;
      }
      episode_returns_.push_back(ret);
      episode_dqn_loss_.push_back(dqn_steps > 0 ? dqn_loss_sum / dqn_steps
                                                : std::numeric_limits<double>::quiet_NaN());
      episode_dbn_loss_.push_back(dbn_steps > 0 ? dbn_loss_sum / dbn_steps
                                                : std::numeric_limits<double>::quiet_NaN());
      if (checkpoint) checkpoint(ep + 1);
    }
  }

  // Greedy evaluation with visited-state collection for the recovery report.
  EvalReport evaluate(int episodes, Rng& env_rng, std::vector<VisitedSample>* visited = nullptr,
                      int visit_stride = 1) const {
    EvalReport rep;
    rep.episodes = episodes;
    const int cap = env_.horizon() > 0 ? env_.horizon() : 1000;
    long step_counter = 0;
    for (int e = 0; e < episodes; ++e) {
      env_.reset(env_rng);
      double ret = 0.0, discount = 1.0;
      for (int i = 0; i < cap; ++i) {
        const Vector obs = obs_.observe();
        const StateId sid = env_.current_state();
        if (visited && step_counter % visit_stride == 0) visited->push_back({obs, sid});
        ++step_counter;
        const Transition t = env_.step(greedy_action(obs), env_rng);
        ret += discount * t.reward;
        discount *= config_.gamma;
        rep.mean_length += 1.0;
        if (t.terminal) break;
      }
      rep.mean_return += ret;
    }
    rep.mean_return /= episodes;
    rep.mean_length /= episodes;
    return rep;
  }

  DeepRunResult result() const {
    return {qnet_, q_target_, hnet_, h_target_, hnet_taxi_, episode_returns_, episode_dqn_loss_,
            episode_dbn_loss_};
  }

 private:
  Environment& env_;
  DeepObsAdapter& obs_;
  DeepConfig config_;
  RunRngs rngs_;
  ReplayBuffer buffer_;
  MlpFunction qnet_, q_target_;
  MlpFunction hnet_, h_target_;
  TwoStreamMlp hnet_taxi_, h_target_taxi_;
  AdamState q_opt_, h_opt_;
  TwoStreamAdam h_opt_taxi_;
  long global_step_ = 0;
  std::vector<double> episode_returns_;
  std::vector<double> episode_dqn_loss_;
  std::vector<double> episode_dbn_loss_;
};

}  // namespace beliefmap
