#pragma once

#include <span>
#include <string>
#include <vector>

#include "beliefmap/core.hpp"
#include "beliefmap/tabular.hpp"

namespace beliefmap {

// Belief map H: for each (s, a), the alpha-averaged discounted expected count
// of every future (s', a') execution, learned in lockstep with a Q-table.
// Dense row-major (s, a, s', a') doubles; the (s, a) slice is contiguous.
class BeliefTensor {
 public:
  BeliefTensor() = default;
  BeliefTensor(int num_states, int num_actions, double gamma, InitMode init = {})
      : num_states_(num_states), num_actions_(num_actions), gamma_(gamma),
        values_(static_cast<std::size_t>(num_states) * num_actions * num_states * num_actions) {
    fill_init(values_, init);
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  std::size_t slice_size() const { return static_cast<std::size_t>(num_states_) * num_actions_; }

  std::span<double> slice(StateId s, ActionId a) {
    return {values_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * slice_size(),
            slice_size()};
  }
  std::span<const double> slice(StateId s, ActionId a) const {
    return {values_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * slice_size(),
            slice_size()};
  }

  std::span<const double> data() const { return values_; }
  std::span<double> mutable_data() { return values_; }

  double slice_mass(StateId s, ActionId a) const {
    double total = 0.0;
    for (double v : slice(s, a)) total += v;
    return total;
  }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  double gamma_ = 1.0;
  std::vector<double> values_;
};

// Deterministic reward per (state, action), either taken from the
// environment's declared reward function or recorded empirically from the
// experience stream. Unobserved proxy entries stay 0 and are flagged.
class RewardMap {
 public:
  enum class Source { EnvGroundTruth, EmpiricalProxy };

  RewardMap() = default;
  RewardMap(int num_states, int num_actions, Source source)
      : num_states_(num_states), num_actions_(num_actions), source_(source),
        values_(static_cast<std::size_t>(num_states) * num_actions),
        observed_(values_.size(), source == Source::EnvGroundTruth ? 1 : 0) {}

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  Source source() const { return source_; }

  double& at(StateId s, ActionId a) { return values_[index(s, a)]; }
  double at(StateId s, ActionId a) const { return values_[index(s, a)]; }
  bool observed(StateId s, ActionId a) const { return observed_[index(s, a)] != 0; }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (auto o : observed_) n += o;
    return n;
  }

  // Stores r on first observation of (s, a); rejects re-observation with a
  // different value.
  void record(StateId s, ActionId a, double reward) {
    check_finite(reward, "RewardMap::record");
    const std::size_t i = index(s, a);
    if (!observed_[i]) {
      values_[i] = reward;
      observed_[i] = 1;
    } else if (values_[i] != reward) {
      throw std::runtime_error("reward determinism violation at (s=" + std::to_string(s)
                               + ", a=" + std::to_string(a) + "): stored "
                               + std::to_string(values_[i]) + ", observed "
                               + std::to_string(reward));
    }
  }

  std::span<const double> data() const { return values_; }
  std::span<double> mutable_data() { return values_; }

 private:
  std::size_t index(StateId s, ActionId a) const {
    return static_cast<std::size_t>(s) * num_actions_ + a;
  }

  int num_states_ = 0;
  int num_actions_ = 0;
  Source source_ = Source::EnvGroundTruth;
  std::vector<double> values_;
  std::vector<std::uint8_t> observed_;
};

inline void record_proxy_reward(RewardMap& r, const Transition& t) {
  if (r.source() != RewardMap::Source::EmpiricalProxy)
    throw std::logic_error("record_proxy_reward: reward map is not a proxy");
  r.record(t.state, t.action, t.reward);
}

template <class Env>
RewardMap ground_truth_rewards(const Env& env) {
  RewardMap r(env.num_states(), env.num_actions(), RewardMap::Source::EnvGroundTruth);
  for (StateId s = 0; s < env.num_states(); ++s)
    for (ActionId a = 0; a < env.num_actions(); ++a) r.at(s, a) = env.reward(s, a);
  return r;
}

namespace detail {
// slice <- slice + alpha * (indicator + gamma * bootstrap - slice), where the
// indicator is one-hot at `one_hot` and the bootstrap slice may be empty
// (terminal transitions) or alias the updated slice (self-loops): the update
// is elementwise-local, so aliasing is harmless. The one-hot element uses the
// same target-minus-value form as the Q update.
inline void blend_slice(std::span<double> slice, std::size_t one_hot, double alpha, double gamma,
                        std::span<const double> bootstrap) {
  const std::size_t n = slice.size();
  const double old_hot = slice[one_hot];
  const double boot_hot = bootstrap.empty() ? 0.0 : bootstrap[one_hot];
  if (bootstrap.empty()) {
    for (std::size_t i = 0; i < n; ++i) slice[i] -= alpha * slice[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) slice[i] += alpha * (gamma * bootstrap[i] - slice[i]);
  }
  slice[one_hot] = old_hot + alpha * ((1.0 + gamma * boot_hot) - old_hot);
}
}  // namespace detail

// Mirrors q_update: H(s,a) <- H(s,a) + alpha * (1_{s,a} + gamma * H(s', m) - H(s,a)),
// with m the exact argmax the Q update used. Terminal transitions replace the
// bootstrap slice with zeros, mirroring the dropped Q bootstrap.
inline void h_update_q(BeliefTensor& h, const UpdateEvent& ev) {
  if (ev.algo != Algo::QLearning) throw std::invalid_argument("h_update_q: wrong event kind");
  const Transition& t = ev.transition;
  if (t.state >= h.num_states() || t.action >= h.num_actions()
      || t.next_state >= h.num_states())
    throw std::invalid_argument("h_update_q: event does not fit tensor shape");
  std::span<const double> bootstrap;
  if (!t.terminal) bootstrap = h.slice(t.next_state, ev.greedy_next_action);
  const std::size_t one_hot = static_cast<std::size_t>(t.state) * h.num_actions() + t.action;
  detail::blend_slice(h.slice(t.state, t.action), one_hot, ev.alpha, ev.gamma, bootstrap);
}

// Monte Carlo variant: the target for step t is the discounted indicator sum
// of the trajectory tail. Tail sums are precomputed backward, then updates
// run in time order to match mc_update's indexing.
inline void h_update_mc(BeliefTensor& h, const Trajectory& traj, double alpha, double gamma) {
  if (traj.transitions.empty()) throw std::invalid_argument("h_update_mc: empty trajectory");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("h_update_mc: alpha outside [0,1]");
  const std::size_t n = traj.transitions.size();
  const std::size_t m = h.slice_size();
  std::vector<double> targets(n * m, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const Transition& t = traj.transitions[i];
    if (t.state >= h.num_states() || t.action >= h.num_actions())
      throw std::invalid_argument("h_update_mc: trajectory does not fit tensor shape");
    double* target = targets.data() + i * m;
    if (i + 1 < n) {
      const double* next = targets.data() + (i + 1) * m;
      for (std::size_t k = 0; k < m; ++k) target[k] = gamma * next[k];
    }
    target[static_cast<std::size_t>(t.state) * h.num_actions() + t.action] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = traj.transitions[i];
    std::span<double> slice = h.slice(t.state, t.action);
    const double* target = targets.data() + i * m;
    for (std::size_t k = 0; k < m; ++k) slice[k] += alpha * (target[k] - slice[k]);
  }
}

struct TwinBeliefTensors {
  BeliefTensor a;
  BeliefTensor b;

  TwinBeliefTensors() = default;
  TwinBeliefTensors(int num_states, int num_actions, double gamma, InitMode init_a = {},
                    InitMode init_b = {})
      : a(num_states, num_actions, gamma, init_a), b(num_states, num_actions, gamma, init_b) {}
};

// Double-Q variant: the belief map paired with the updated Q-table is
// blended toward the twin belief map's slice at the recorded argmax.
inline void h_update_double(TwinBeliefTensors& h, const UpdateEvent& ev) {
  if (ev.algo != Algo::DoubleQA && ev.algo != Algo::DoubleQB)
    throw std::invalid_argument("h_update_double: wrong event kind");
  BeliefTensor& own = ev.algo == Algo::DoubleQA ? h.a : h.b;
  const BeliefTensor& other = ev.algo == Algo::DoubleQA ? h.b : h.a;
  const Transition& t = ev.transition;
  if (t.state >= own.num_states() || t.action >= own.num_actions()
      || t.next_state >= own.num_states())
    throw std::invalid_argument("h_update_double: event does not fit tensor shape");
  std::span<const double> bootstrap;
  if (!t.terminal) bootstrap = other.slice(t.next_state, ev.greedy_next_action);
  const std::size_t one_hot = static_cast<std::size_t>(t.state) * own.num_actions() + t.action;
  detail::blend_slice(own.slice(t.state, t.action), one_hot, ev.alpha, ev.gamma, bootstrap);
}

// Q-hat(s,a) = vec(H(s,a)) . vec(R).
inline double recover_q_entry(const BeliefTensor& h, const RewardMap& r, StateId s, ActionId a) {
  std::span<const double> slice = h.slice(s, a);
  std::span<const double> rewards = r.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < slice.size(); ++i) acc += slice[i] * rewards[i];
  return acc;
}

inline QTable recover_q(const BeliefTensor& h, const RewardMap& r) {
  if (h.num_states() != r.num_states() || h.num_actions() != r.num_actions())
    throw std::invalid_argument("recover_q: shape mismatch");
  QTable q(h.num_states(), h.num_actions());
  for (StateId s = 0; s < h.num_states(); ++s)
    for (ActionId a = 0; a < h.num_actions(); ++a) q.at(s, a) = recover_q_entry(h, r, s, a);
  return q;
}

struct ConsistencyReport {
  double max_abs_err = 0.0;
  StateId state = 0;
  ActionId action = 0;
  std::vector<double> per_state_err;  // max over actions, per state

  bool within(double tolerance) const { return max_abs_err <= tolerance; }
};

// Checks vec(H(s,a)) . vec(R) == Q(s,a) over every pair. Pure read.
inline ConsistencyReport verify_consistency(const BeliefTensor& h, const QTable& q,
                                            const RewardMap& r) {
  if (h.num_states() != q.num_states() || h.num_actions() != q.num_actions()
      || h.num_states() != r.num_states() || h.num_actions() != r.num_actions())
    throw std::invalid_argument("verify_consistency: shape mismatch");
  ConsistencyReport report;
  report.per_state_err.assign(h.num_states(), 0.0);
  for (StateId s = 0; s < h.num_states(); ++s) {
    for (ActionId a = 0; a < h.num_actions(); ++a) {
      const double err = std::abs(recover_q_entry(h, r, s, a) - q.at(s, a));
      if (err > report.per_state_err[s]) report.per_state_err[s] = err;
      if (err > report.max_abs_err) {
        report.max_abs_err = err;
        report.state = s;
        report.action = a;
      }
    }
  }
  return report;
}

// v[s'] = sum_a' H[s,a,s',a'].
inline std::vector<double> marginal_state_visitation(const BeliefTensor& h, StateId s,
                                                     ActionId a) {
  std::span<const double> slice = h.slice(s, a);
  std::vector<double> v(h.num_states(), 0.0);
  for (StateId sp = 0; sp < h.num_states(); ++sp) {
    double acc = 0.0;
    for (ActionId ap = 0; ap < h.num_actions(); ++ap)
      acc += slice[static_cast<std::size_t>(sp) * h.num_actions() + ap];
    v[sp] = acc;
  }
  return v;
}

}  // namespace beliefmap
