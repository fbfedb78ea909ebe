#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace beliefmap {

// Dense integer identifiers. States live in [0, num_states), actions in
// [0, num_actions); every environment documents its own id codec.
using StateId = int;
using ActionId = int;

struct EnvSpec {
  int num_states = 0;
  int num_actions = 0;
  std::string env_name;

  void validate() const {
    if (num_states < 2) throw std::invalid_argument("EnvSpec: num_states must be >= 2");
    if (num_actions < 1) throw std::invalid_argument("EnvSpec: num_actions must be >= 1");
  }
};

// One experience record (s, a, r, s'). `terminal` marks true MDP termination
// at next_state; step-cap truncation is tracked on the Trajectory instead so
// learners can bootstrap through it.
struct Transition {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool terminal = false;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double episode_return = 0.0;  // discounted sum under the run's gamma
  bool truncated = false;       // step cap fired before termination

  std::size_t size() const { return transitions.size(); }

  // Consecutive transitions must chain and only the final one may terminate.
  void validate() const {
    for (std::size_t i = 0; i + 1 < transitions.size(); ++i) {
      if (transitions[i].next_state != transitions[i + 1].state)
        throw std::logic_error("Trajectory: transitions do not chain");
      if (transitions[i].terminal)
        throw std::logic_error("Trajectory: non-final terminal transition");
    }
    if (truncated && !transitions.empty() && transitions.back().terminal)
      throw std::logic_error("Trajectory: cannot be both terminal and truncated");
  }
};

inline void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::runtime_error(std::string(what) + ": non-finite value");
}

}  // namespace beliefmap
