#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "beliefmap/belief.hpp"

namespace beliefmap {

// Contrastive explanation G(s, a0, a1) = H(s, a0) - H(s, a1): the signed
// change in expected future (s', a') executions when preferring a0 over a1.
// When (H, Q) are consistent, vec(G) . vec(R) equals the Q-advantage
// Q(s,a0) - Q(s,a1); advantage_check carries that inner product.
struct ContrastiveExplanation {
  StateId state = 0;
  ActionId best_action = 0;   // a0
  ActionId alt_action = 0;    // a1
  std::vector<double> g;      // (s', a') tensor, flattened like an H slice
  double q0 = 0.0;
  double q1 = 0.0;
  double advantage_check = 0.0;
};

inline ContrastiveExplanation contrastive(const BeliefTensor& h, const QTable& q,
                                          const RewardMap& r, StateId s, ActionId a0,
                                          ActionId a1) {
  if (a0 == a1) throw std::invalid_argument("contrastive: actions must differ");
  ContrastiveExplanation e;
  e.state = s;
  e.best_action = a0;
  e.alt_action = a1;
  std::span<const double> h0 = h.slice(s, a0);
  std::span<const double> h1 = h.slice(s, a1);
  std::span<const double> rewards = r.data();
  e.g.resize(h0.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < h0.size(); ++i) {
    e.g[i] = h0[i] - h1[i];
    dot += e.g[i] * rewards[i];
  }
  e.q0 = q.at(s, a0);
  e.q1 = q.at(s, a1);
  e.advantage_check = dot;
  return e;
}

// Splits g into nonnegative magnitude tensors: only_a0 holds where a0
// expects more visitation, only_a1 where a1 does. only_a0 - only_a1
// reconstructs g exactly.
struct SignedParts {
  std::vector<double> only_a0;
  std::vector<double> only_a1;
};

inline SignedParts signed_parts(std::span<const double> g) {
  SignedParts p;
  p.only_a0.resize(g.size());
  p.only_a1.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    p.only_a0[i] = g[i] > 0.0 ? g[i] : 0.0;
    p.only_a1[i] = g[i] < 0.0 ? -g[i] : 0.0;
  }
  return p;
}

// Elementwise min of the two belief slices: the expected outcomes shared by
// both actions. Raw values, no clamping; learning can leave small negatives.
inline std::vector<double> intersection(const BeliefTensor& h, StateId s, ActionId a0,
                                        ActionId a1) {
  if (a0 == a1) throw std::invalid_argument("intersection: actions must differ");
  std::span<const double> h0 = h.slice(s, a0);
  std::span<const double> h1 = h.slice(s, a1);
  std::vector<double> out(h0.size());
  for (std::size_t i = 0; i < h0.size(); ++i) out[i] = std::min(h0[i], h1[i]);
  return out;
}

// Restriction of the state-marginal visitation to a set of outcome states.
inline std::vector<double> outcome_projection(const BeliefTensor& h, StateId s, ActionId a,
                                              std::span<const StateId> outcome_states) {
  const std::vector<double> marginal = marginal_state_visitation(h, s, a);
  std::vector<double> out;
  out.reserve(outcome_states.size());
  for (StateId o : outcome_states) {
    if (o < 0 || o >= h.num_states())
      throw std::invalid_argument("outcome_projection: outcome state out of range");
    out.push_back(marginal[o]);
  }
  return out;
}

// Affine min-max scaling to [0, 1] for display. Constant tensors map to
// zeros. The original extremes are reported so exporters can annotate them.
inline std::vector<double> normalize_for_display(std::span<const double> t, double* out_min,
                                                 double* out_max) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : t) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (t.empty()) lo = hi = 0.0;
  if (out_min) *out_min = lo;
  if (out_max) *out_max = hi;
  std::vector<double> out(t.size(), 0.0);
  if (hi > lo) {
    const double span = hi - lo;
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = (t[i] - lo) / span;
  }
  return out;
}

}  // namespace beliefmap
