#pragma once

#include <memory>

#include "beliefmap/env.hpp"

namespace beliefmap {

// Deterministic branching chain. depth = 2 is the two-step instance with
// states s0, s1 (upper), s2 (lower); the extended variant deepens the tree.
struct ChainMdpConfig {
  int depth = 2;
  bool extended = false;

  void validate() const {
    if (depth < 2) throw std::invalid_argument("ChainMdpConfig: depth must be >= 2");
    if (depth > 2 && !extended)
      throw std::invalid_argument("ChainMdpConfig: depth > 2 requires the extended variant");
    if (depth > 16) throw std::invalid_argument("ChainMdpConfig: depth too large");
  }
};

// Nodes are numbered heap-style: node i branches to 2i+1 (action 0, upper)
// and 2i+2 (action 1, lower), so s0 -> s1/s2, s1 -> s3/s4, s2 -> s5/s6.
// All rewards are 0 except at the deepest layer, where upper nodes pay
// (2, 1) for (a0, a1) and lower nodes pay (1, 2); both branches are worth 2.
// Every deepest-layer action lands in one shared absorbing terminal state,
// the last state id.
class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(ChainMdpConfig config = {})
      : Environment(make_spec(config)), config_(config) {
    first_leaf_ = (1 << (config.depth - 1)) - 1;
    terminal_ = (1 << config.depth) - 1;
  }

  const ChainMdpConfig& config() const { return config_; }
  StateId terminal_state() const { return terminal_; }

  double reward(StateId state, ActionId action) const override {
    if (state < first_leaf_ || state >= terminal_) return 0.0;
    const bool upper = (state % 2) == 1;
    if (upper) return action == 0 ? 2.0 : 1.0;
    return action == 0 ? 1.0 : 2.0;
  }

  Transition step_from(StateId state, ActionId action, Rng&) override {
    if (state < 0 || state >= terminal_)
      throw std::invalid_argument("chain: cannot step state " + std::to_string(state));
    Transition t;
    t.state = state;
    t.action = action;
    t.reward = reward(state, action);
    if (state >= first_leaf_) {
      t.next_state = terminal_;
      t.terminal = true;
    } else {
      t.next_state = 2 * state + 1 + action;
      t.terminal = false;
    }
    return t;
  }

  GridGeometry render_geometry() const override {
    GridGeometry g;
    g.rows = 1;
    g.cols = num_states();
    g.cell_of_state.resize(num_states());
    for (int s = 0; s < num_states(); ++s) g.cell_of_state[s] = s;
    g.description = "single row, one cell per state in heap order, terminal last";
    return g;
  }

  std::string codec_name() const override { return "chain-heap-v1"; }

 protected:
  StateId do_reset(Rng&) override { return 0; }
  Transition do_step(StateId state, ActionId action, Rng& rng) override {
    return step_from(state, action, rng);
  }

 private:
  static EnvSpec make_spec(const ChainMdpConfig& config) {
    config.validate();
    return EnvSpec{1 << config.depth, 2, "chain"};
  }

  ChainMdpConfig config_;
  StateId first_leaf_ = 0;
  StateId terminal_ = 0;
};

inline std::unique_ptr<Environment> make_chain(ChainMdpConfig config = {}) {
  return std::make_unique<ChainEnv>(config);
}

}  // namespace beliefmap
