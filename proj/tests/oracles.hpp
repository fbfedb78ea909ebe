// Independent test oracles. Everything here recomputes expectations from
// first principles (dynamic programming, graph search, direct summation,
// plain scalar loops) without touching the implementation paths under test.
#pragma once

#include <array>
#include <queue>
#include <vector>

#include "beliefmap/env.hpp"
#include "beliefmap/envs/taxi.hpp"
#include "beliefmap/mlp.hpp"
#include "beliefmap/tabular.hpp"

namespace oracles {

using beliefmap::Environment;
using beliefmap::Rng;
using beliefmap::Trajectory;
using beliefmap::Transition;

// Exact Q* by value iteration over a deterministic environment (every
// (s, a) has a single successor, observable through step_from).
inline beliefmap::QTable value_iteration(Environment& env, double gamma, int sweeps = 100000,
                                         double tol = 1e-13) {
  const int S = env.num_states();
  const int A = env.num_actions();
  Rng dummy(0);
  std::vector<Transition> model(static_cast<std::size_t>(S) * A);
  std::vector<bool> steppable(S, true);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < env.num_legal_actions(s); ++a) {
      try {
        model[static_cast<std::size_t>(s) * A + a] = env.step_from(s, a, dummy);
      } catch (const std::logic_error&) {
        steppable[s] = false;  // absorbing bookkeeping state
        break;
      }
    }
  }
  beliefmap::QTable q(S, A);
  for (int it = 0; it < sweeps; ++it) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      if (!steppable[s]) continue;
      for (int a = 0; a < env.num_legal_actions(s); ++a) {
        const Transition& t = model[static_cast<std::size_t>(s) * A + a];
        double target = t.reward;
        if (!t.terminal && steppable[t.next_state]) {
          double best = -1e300;
          for (int ap = 0; ap < env.num_legal_actions(t.next_state); ++ap)
            best = std::max(best, q.at(t.next_state, ap));
          target += gamma * best;
        }
        delta = std::max(delta, std::abs(target - q.at(s, a)));
        q.at(s, a) = target;
      }
    }
    if (delta < tol) break;
  }
  return q;
}

// Discounted (s', a') visitation counts of a trajectory suffix, flattened
// like a belief slice: sum_{k >= t} gamma^(k-t) (indicator of (s_k, a_k)).
inline std::vector<double> suffix_visitation(const Trajectory& traj, std::size_t t, double gamma,
                                             int num_states, int num_actions) {
  std::vector<double> v(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  double discount = 1.0;
  for (std::size_t k = t; k < traj.transitions.size(); ++k) {
    const Transition& x = traj.transitions[k];
    v[static_cast<std::size_t>(x.state) * num_actions + x.action] += discount;
    discount *= gamma;
  }
  return v;
}

// Shortest taxi driving distance between two cells, honouring the wall
// layout, by breadth-first search.
inline int taxi_bfs_distance(int from_row, int from_col, int to_row, int to_col) {
  using beliefmap::TaxiEnv;
  std::vector<int> dist(25, -1);
  std::queue<int> frontier;
  dist[from_row * 5 + from_col] = 0;
  frontier.push(from_row * 5 + from_col);
  while (!frontier.empty()) {
    const int cell = frontier.front();
    frontier.pop();
    const int r = cell / 5, c = cell % 5;
    if (r == to_row && c == to_col) return dist[cell];
    const auto try_move = [&](int nr, int nc) {
      if (nr < 0 || nr >= 5 || nc < 0 || nc >= 5) return;
      if (dist[nr * 5 + nc] != -1) return;
      dist[nr * 5 + nc] = dist[cell] + 1;
      frontier.push(nr * 5 + nc);
    };
    try_move(r + 1, c);
    try_move(r - 1, c);
    if (!TaxiEnv::wall_east_of(r, c)) try_move(r, c + 1);
    if (c > 0 && !TaxiEnv::wall_east_of(r, c - 1)) try_move(r, c - 1);
  }
  return -1;
}

// MLP forward with plain scalar loops; duplicates only the definition
// (affine + ReLU on hidden layers), not the Eigen implementation.
inline std::vector<double> mlp_forward_loops(const beliefmap::MlpFunction& f,
                                             const std::vector<double>& input) {
  std::vector<double> a = input;
  for (std::size_t l = 0; l < f.num_layers(); ++l) {
    const auto& w = f.weights()[l];
    const auto& b = f.biases()[l];
    std::vector<double> z(static_cast<std::size_t>(w.rows()), 0.0);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double acc = b[i];
      for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * a[j];
      z[i] = acc;
    }
    if (l + 1 < f.num_layers())
      for (auto& x : z) x = x > 0.0 ? x : 0.0;
    a = std::move(z);
  }
  return a;
}

}  // namespace oracles
