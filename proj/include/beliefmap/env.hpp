#pragma once

#include <functional>
#include <string>
#include <vector>

#include "beliefmap/core.hpp"
#include "beliefmap/rng.hpp"

namespace beliefmap {

// How a renderer should lay the state space out on a grid. `cell_of_state`
// maps each state id to a cell index (row * cols + col), -1 to omit it;
// several states may share a cell (their masses are summed).
struct GridGeometry {
  int rows = 0;
  int cols = 0;
  std::vector<int> cell_of_state;
  std::string description;
};

// Discrete-state, discrete-action environment. An instance owns only its
// per-episode bookkeeping (current state, step counter); everything else is
// fixed at construction. reset() starts an episode, step() advances it.
//
// Environments whose state id fully determines the dynamics (chain,
// blackjack, taxi) also implement step_from(), which steps from an arbitrary
// state without touching episode bookkeeping. Cartpole cannot: its discrete
// id is a quantised view of hidden continuous state.
class Environment {
 public:
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  int num_states() const { return spec_.num_states; }
  int num_actions() const { return spec_.num_actions; }

  // Actions 0..num_legal_actions(s)-1 are legal in s. Blackjack outcome
  // states expose a single resolve action; everything else is unrestricted.
  virtual int num_legal_actions(StateId) const { return spec_.num_actions; }

  // Ground-truth deterministic reward R(s, a), defined for every pair.
  virtual double reward(StateId state, ActionId action) const = 0;

  // Recommended per-episode step cap; 0 means episodes end on their own.
  virtual int horizon() const { return 0; }

  // States carrying episode outcomes (blackjack's four), if any.
  virtual std::vector<StateId> outcome_states() const { return {}; }

  virtual GridGeometry render_geometry() const = 0;

  // Short name of the state-id codec, recorded in artifacts.
  virtual std::string codec_name() const = 0;

  StateId reset(Rng& rng) {
    current_ = do_reset(rng);
    done_ = false;
    steps_ = 0;
    return current_;
  }

  Transition step(ActionId action, Rng& rng) {
    if (done_) throw std::logic_error(spec_.env_name + ": step() called on a terminal episode");
    if (action < 0 || action >= num_legal_actions(current_))
      throw std::invalid_argument(spec_.env_name + ": illegal action " + std::to_string(action)
                                  + " in state " + std::to_string(current_));
    Transition t = do_step(current_, action, rng);
    current_ = t.next_state;
    done_ = t.terminal;
    ++steps_;
    return t;
  }

  // Step from an explicit state, ignoring episode bookkeeping. Only
  // supported where the id determines the dynamics.
  virtual Transition step_from(StateId state, ActionId action, Rng& rng) {
    (void)state;
    (void)action;
    (void)rng;
    throw std::logic_error(spec_.env_name + ": step_from() not supported");
  }

  StateId current_state() const { return current_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }

 protected:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  virtual StateId do_reset(Rng& rng) = 0;
  virtual Transition do_step(StateId state, ActionId action, Rng& rng) = 0;

 private:
  EnvSpec spec_;
  StateId current_ = 0;
  bool done_ = true;
  int steps_ = 0;
};

using PolicyFn = std::function<ActionId(StateId)>;

// Runs `policy` until termination or `max_steps`, whichever first. The
// trajectory's return is discounted by `gamma` from the episode start.
inline Trajectory rollout(Environment& env, const PolicyFn& policy, int max_steps, Rng& env_rng,
                          double gamma = 1.0) {
  if (max_steps < 1) throw std::invalid_argument("rollout: max_steps must be >= 1");
  Trajectory traj;
  StateId s = env.reset(env_rng);
  double discount = 1.0;
  for (int i = 0; i < max_steps; ++i) {
    Transition t = env.step(policy(s), env_rng);
    traj.transitions.push_back(t);
    traj.episode_return += discount * t.reward;
    discount *= gamma;
    s = t.next_state;
    if (t.terminal) return traj;
  }
  traj.truncated = true;
  return traj;
}

}  // namespace beliefmap
