#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "beliefmap/core.hpp"
#include "beliefmap/rng.hpp"

namespace beliefmap {

enum class InitKind { Zero, Random };

// Random init draws uniformly from [-scale, scale] with its own seed, so a
// table's starting point is independent of the training streams.
struct InitMode {
  InitKind kind = InitKind::Zero;
  std::uint64_t seed = 0;
  double scale = 0.01;
};

inline void fill_init(std::vector<double>& v, const InitMode& mode) {
  if (mode.kind == InitKind::Zero) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  Rng rng(mode.seed);
  for (auto& x : v) x = rng.uniform_range(-mode.scale, mode.scale);
}

class QTable {
 public:
  QTable() = default;
  QTable(int num_states, int num_actions, InitMode init = {})
      : num_states_(num_states), num_actions_(num_actions),
        values_(static_cast<std::size_t>(num_states) * num_actions) {
    fill_init(values_, init);
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double& at(StateId s, ActionId a) { return values_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  double at(StateId s, ActionId a) const {
    return values_[static_cast<std::size_t>(s) * num_actions_ + a];
  }

  std::span<const double> row(StateId s) const {
    return {values_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }

  std::span<const double> data() const { return values_; }
  std::span<double> mutable_data() { return values_; }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

// Deterministic argmax over the first `count` entries, ties to the lowest
// index. This is the tie rule used inside update targets; the behaviour
// policy breaks ties randomly instead (see epsilon_greedy).
inline ActionId argmax_lowest(std::span<const double> row, int count) {
  ActionId best = 0;
  for (int a = 1; a < count; ++a)
    if (row[a] > row[best]) best = a;
  return best;
}

inline ActionId argmax_lowest(std::span<const double> row) {
  return argmax_lowest(row, static_cast<int>(row.size()));
}

// epsilon-greedy over the first `legal` actions: explore uniformly with
// probability epsilon, otherwise pick an argmax with ties broken uniformly.
inline ActionId epsilon_greedy(std::span<const double> q_row, int legal, double epsilon, Rng& rng) {
  if (legal < 1 || legal > static_cast<int>(q_row.size()))
    throw std::invalid_argument("epsilon_greedy: bad legal action count");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("epsilon_greedy: epsilon outside [0,1]");
  if (rng.bernoulli(epsilon)) return rng.uniform_int(legal);
  double best = q_row[0];
  int ties = 1;
  for (int a = 1; a < legal; ++a) {
    if (q_row[a] > best) {
      best = q_row[a];
      ties = 1;
    } else if (q_row[a] == best) {
      ++ties;
    }
  }
  if (ties == 1) {
    for (int a = 0; a < legal; ++a)
      if (q_row[a] == best) return a;
  }
  int pick = rng.uniform_int(ties);
  for (int a = 0; a < legal; ++a) {
    if (q_row[a] == best && pick-- == 0) return a;
  }
  return legal - 1;  // unreachable
}

inline ActionId epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
  return epsilon_greedy(q_row, static_cast<int>(q_row.size()), epsilon, rng);
}

// Exploration schedules advance per episode and never increase.
struct EpsilonSchedule {
  enum class Kind { ExponentialDecay, LinearDecay, Constant };
  Kind kind = Kind::Constant;
  double start = 1.0;
  double end = 0.1;
  double decay_rate = 0.999;  // exponential: eps(ep) = max(end, start * rate^ep)
  int over_episodes = 500;    // linear: reaches `end` after this many episodes

  double value(int episode) const {
    switch (kind) {
      case Kind::ExponentialDecay:
        return std::max(end, start * std::pow(decay_rate, episode));
      case Kind::LinearDecay: {
        if (episode >= over_episodes) return end;
        return start + (end - start) * static_cast<double>(episode) / over_episodes;
      }
      case Kind::Constant:
      default:
        return start;
    }
  }

  static EpsilonSchedule exponential(double start, double end, double rate) {
    return {Kind::ExponentialDecay, start, end, rate, 0};
  }
  static EpsilonSchedule linear(double start, double end, int over_episodes) {
    return {Kind::LinearDecay, start, end, 0.0, over_episodes};
  }
  static EpsilonSchedule constant(double eps) { return {Kind::Constant, eps, eps, 0.0, 0}; }
};

enum class Algo { QLearning, MonteCarlo, DoubleQA, DoubleQB };

// One value update, published so the belief map can replay it in lockstep.
// greedy_next_action is the exact argmax used in the bootstrap target,
// taken on the pre-update table; reusing it verbatim on the belief side is
// what keeps the two learners consistent.
struct UpdateEvent {
  Algo algo = Algo::QLearning;
  Transition transition;
  ActionId greedy_next_action = -1;  // -1 when the target has no bootstrap
  double alpha = 0.0;
  double gamma = 0.0;
  double mc_return = 0.0;  // Monte Carlo only
};

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); the bootstrap is
// dropped on terminal transitions. `legal_next` restricts the argmax to the
// legal actions of next_state.
inline UpdateEvent q_update(QTable& q, const Transition& t, double alpha, double gamma,
                            int legal_next) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("q_update: alpha outside [0,1]");
  UpdateEvent ev{Algo::QLearning, t, -1, alpha, gamma, 0.0};
  double target = t.reward;
  if (!t.terminal) {
    ev.greedy_next_action = argmax_lowest(q.row(t.next_state), legal_next);
    target += gamma * q.at(t.next_state, ev.greedy_next_action);
  }
  check_finite(target, "q_update target");
  double& cell = q.at(t.state, t.action);
  cell += alpha * (target - cell);
  return ev;
}

inline UpdateEvent q_update(QTable& q, const Transition& t, double alpha, double gamma) {
  return q_update(q, t, alpha, gamma, q.num_actions());
}

// Every-visit Monte Carlo control: returns are accumulated from the tail,
// then updates are applied in time order.
inline std::vector<UpdateEvent> mc_update(QTable& q, const Trajectory& traj, double alpha,
                                          double gamma) {
  if (traj.transitions.empty()) throw std::invalid_argument("mc_update: empty trajectory");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("mc_update: alpha outside [0,1]");
  const std::size_t n = traj.transitions.size();
  std::vector<double> returns(n);
  double g = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    g = traj.transitions[i].reward + gamma * g;
    returns[i] = g;
  }
  std::vector<UpdateEvent> events;
  events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = traj.transitions[i];
    check_finite(returns[i], "mc_update return");
    double& cell = q.at(t.state, t.action);
    cell += alpha * (returns[i] - cell);
    events.push_back({Algo::MonteCarlo, t, -1, alpha, gamma, returns[i]});
  }
  return events;
}

struct TwinQTables {
  QTable a;
  QTable b;

  TwinQTables() = default;
  TwinQTables(int num_states, int num_actions, InitMode init_a = {}, InitMode init_b = {})
      : a(num_states, num_actions, init_a), b(num_states, num_actions, init_b) {}
};

// Double Q-learning: a fair coin picks the table to update; the argmax comes
// from the updated table, the bootstrap value from its twin.
inline UpdateEvent double_q_update(TwinQTables& tables, const Transition& t, double alpha,
                                   double gamma, Rng& selector, int legal_next) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("double_q_update: alpha outside [0,1]");
  const bool update_a = selector.bernoulli(0.5);
  QTable& own = update_a ? tables.a : tables.b;
  const QTable& other = update_a ? tables.b : tables.a;
  UpdateEvent ev{update_a ? Algo::DoubleQA : Algo::DoubleQB, t, -1, alpha, gamma, 0.0};
  double target = t.reward;
  if (!t.terminal) {
    ev.greedy_next_action = argmax_lowest(own.row(t.next_state), legal_next);
    target += gamma * other.at(t.next_state, ev.greedy_next_action);
  }
  check_finite(target, "double_q_update target");
  double& cell = own.at(t.state, t.action);
  cell += alpha * (target - cell);
  return ev;
}

inline UpdateEvent double_q_update(TwinQTables& tables, const Transition& t, double alpha,
                                   double gamma, Rng& selector) {
  return double_q_update(tables, t, alpha, gamma, selector, tables.a.num_actions());
}

}  // namespace beliefmap
