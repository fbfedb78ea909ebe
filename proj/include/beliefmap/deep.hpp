#pragma once

#include <span>
#include <vector>

#include "beliefmap/belief.hpp"
#include "beliefmap/mlp.hpp"

namespace beliefmap {

// Experience record for the deep learners: `obs` is the network input
// (continuous 4-tuple for cartpole, one-hot elsewhere), the ids index
// indicator targets and belief slices.
struct DeepTransition {
  Vector obs;
  Vector next_obs;
  StateId state_id = 0;
  StateId next_state_id = 0;
  ActionId action = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Fixed-capacity ring with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }

  void push(DeepTransition t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[write_] = std::move(t);
    }
    write_ = (write_ + 1) % capacity_;
  }

  const DeepTransition& at(std::size_t i) const { return ring_[i]; }

  std::vector<std::size_t> sample_indices(int batch, Rng& rng) const {
    if (static_cast<std::size_t>(batch) > ring_.size())
      throw std::logic_error("ReplayBuffer: not enough experience for a batch");
    std::vector<std::size_t> out(batch);
    for (auto& i : out) i = rng.uniform_int(static_cast<int>(ring_.size()));
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<DeepTransition> ring_;
};

inline Vector one_hot(int dim, int index) {
  Vector v = Vector::Zero(dim);
  v[index] = 1.0;
  return v;
}

inline ActionId argmax_lowest(const Vector& v) {
  ActionId best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<ActionId>(i);
  return best;
}

struct DqnOptions {
  double gamma = 1.0;
  int batch = 16;
  double huber_delta = 1.0;
  double grad_clip = 1.0;
  // The printed loss form with the target net on the prediction side and the
  // behaviour net inside the bootstrap max; off = conventional placement.
  bool literal_loss_form = false;
};

// One DQN optimisation step: uniform batch, Huber loss against the bootstrap
// target, elementwise gradient clip, Adam. Terminal transitions drop the
// bootstrap. Returns the mean batch loss.
inline double dqn_train_step(MlpFunction& qnet, const MlpFunction& target,
                             const ReplayBuffer& buffer, AdamState& opt, const DqnOptions& o,
                             Rng& sample_rng) {
  const auto idx = buffer.sample_indices(o.batch, sample_rng);
  const int in = qnet.input_size();
  const int out = qnet.output_size();
  Matrix x(in, o.batch), xn(in, o.batch);
  for (int b = 0; b < o.batch; ++b) {
    x.col(b) = buffer.at(idx[b]).obs;
    xn.col(b) = buffer.at(idx[b]).next_obs;
  }

  double loss = 0.0;
  MlpFunction::Cache cache;
  MlpFunction::Gradients grads;
  if (!o.literal_loss_form) {
    const Matrix boot = target.forward_batch(xn);
    const Matrix pred = qnet.forward_batch(x, &cache);
    Matrix upstream = Matrix::Zero(out, o.batch);
    for (int b = 0; b < o.batch; ++b) {
      const DeepTransition& t = buffer.at(idx[b]);
      double y = t.reward;
      if (!t.terminal) y += o.gamma * boot.col(b).maxCoeff();
      const double residual = pred(t.action, b) - y;
      check_finite(residual, "dqn_train_step residual");
      loss += huber_loss(residual, o.huber_delta);
      upstream(t.action, b) = huber_grad(residual, o.huber_delta) / o.batch;
    }
    grads = qnet.backward_batch(cache, upstream);
  } else {
    // Literal form: gradient flows through the bootstrap max instead.
    const Matrix pred = target.forward_batch(x);
    const Matrix boot = qnet.forward_batch(xn, &cache);
    Matrix upstream = Matrix::Zero(out, o.batch);
    for (int b = 0; b < o.batch; ++b) {
      const DeepTransition& t = buffer.at(idx[b]);
      double y = t.reward;
      if (!t.terminal) {
        const ActionId m = argmax_lowest(Vector(boot.col(b)));
        y += o.gamma * boot(m, b);
        const double residual = y - pred(t.action, b);
        loss += huber_loss(residual, o.huber_delta);
        upstream(m, b) = o.gamma * huber_grad(residual, o.huber_delta) / o.batch;
      } else {
        loss += huber_loss(y - pred(t.action, b), o.huber_delta);
      }
    }
    grads = qnet.backward_batch(cache, upstream);
  }
  grads.clip(o.grad_clip);
  opt.apply(qnet, grads);
  return loss / o.batch;
}

struct DbnOptions {
  double gamma = 1.0;
  int batch = 16;
  double grad_clip = 1.0;
};

// Belief-network step for the joint head (cartpole): the net maps a one-hot
// state to an (A, S, A) tensor, flattened action-major so block a is laid out
// like a BeliefTensor slice. Squared-error loss between the executed action's
// block and 1_{s,a} + gamma * H(s', m; target), m = argmax of the live Q net.
inline double dbn_train_step(MlpFunction& hnet, const MlpFunction& h_target,
                             const MlpFunction& qnet, const ReplayBuffer& buffer, AdamState& opt,
                             const DbnOptions& o, Rng& sample_rng) {
  const auto idx = buffer.sample_indices(o.batch, sample_rng);
  const int num_states = hnet.input_size();
  const int block = hnet.output_size();  // A * (S * A)
  const int num_actions = qnet.output_size();
  const int slice = block / num_actions;
  if (slice * num_actions != block)
    throw std::logic_error("dbn_train_step: output not divisible into action blocks");

  Matrix x(num_states, o.batch), xn(num_states, o.batch), qin(qnet.input_size(), o.batch);
  for (int b = 0; b < o.batch; ++b) {
    const DeepTransition& t = buffer.at(idx[b]);
    x.col(b) = one_hot(num_states, t.state_id);
    xn.col(b) = one_hot(num_states, t.next_state_id);
    qin.col(b) = t.next_obs;
  }
  const Matrix qn = qnet.forward_batch(qin);
  const Matrix boot = h_target.forward_batch(xn);
  MlpFunction::Cache cache;
  const Matrix pred = hnet.forward_batch(x, &cache);

  Matrix upstream = Matrix::Zero(block, o.batch);
  double loss = 0.0;
  for (int b = 0; b < o.batch; ++b) {
    const DeepTransition& t = buffer.at(idx[b]);
    const ActionId m = argmax_lowest(Vector(qn.col(b)));
    const int off = t.action * slice;
    const int boot_off = m * slice;
    const int hot = t.state_id * num_actions + t.action;
    for (int k = 0; k < slice; ++k) {
      double target = k == hot ? 1.0 : 0.0;
      if (!t.terminal) target += o.gamma * boot(boot_off + k, b);
      const double residual = pred(off + k, b) - target;
      loss += residual * residual;
      upstream(off + k, b) = 2.0 * residual / o.batch;
    }
  }
  check_finite(loss, "dbn_train_step loss");
  MlpFunction::Gradients grads = hnet.backward_batch(cache, upstream);
  grads.clip(o.grad_clip);
  opt.apply(hnet, grads);
  return loss / o.batch;
}

// Two-stream belief head (taxi): a one-hot state stream and a one-hot action
// stream feed a shared trunk that emits a state-marginal belief vector.
class TwoStreamMlp {
 public:
  TwoStreamMlp() = default;
  TwoStreamMlp(MlpFunction state_stream, MlpFunction action_stream, MlpFunction trunk)
      : state_stream_(std::move(state_stream)), action_stream_(std::move(action_stream)),
        trunk_(std::move(trunk)) {
    if (trunk_.input_size() != state_stream_.output_size() + action_stream_.output_size())
      throw std::invalid_argument("TwoStreamMlp: trunk input must equal concatenated streams");
  }

  static TwoStreamMlp taxi_architecture(Rng& rng) {
    return TwoStreamMlp(MlpFunction::he_init({500, 1024}, rng),
                        MlpFunction::he_init({6, 128}, rng),
                        MlpFunction::he_init({1152, 2048, 500}, rng));
  }

  MlpFunction& state_stream() { return state_stream_; }
  MlpFunction& action_stream() { return action_stream_; }
  MlpFunction& trunk() { return trunk_; }
  const MlpFunction& state_stream() const { return state_stream_; }
  const MlpFunction& action_stream() const { return action_stream_; }
  const MlpFunction& trunk() const { return trunk_; }

  int state_input_size() const { return state_stream_.input_size(); }
  int action_input_size() const { return action_stream_.input_size(); }
  int output_size() const { return trunk_.output_size(); }

  struct Cache {
    MlpFunction::Cache state, action, trunk;
    Matrix state_hidden, action_hidden;  // post-ReLU stream outputs
  };

  // Stream tails act as hidden layers: their affine outputs pass through
  // ReLU before concatenation.
  Matrix forward_batch(const Matrix& xs, const Matrix& xa, Cache* cache = nullptr) const {
    Matrix hs = state_stream_.forward_batch(xs, cache ? &cache->state : nullptr).cwiseMax(0.0);
    Matrix ha = action_stream_.forward_batch(xa, cache ? &cache->action : nullptr).cwiseMax(0.0);
    Matrix concat(hs.rows() + ha.rows(), hs.cols());
    concat.topRows(hs.rows()) = hs;
    concat.bottomRows(ha.rows()) = ha;
    if (cache) {
      cache->state_hidden = hs;
      cache->action_hidden = ha;
    }
    return trunk_.forward_batch(concat, cache ? &cache->trunk : nullptr);
  }

  Vector forward(const Vector& xs, const Vector& xa) const {
    return forward_batch(Matrix(xs), Matrix(xa));
  }

  struct Gradients {
    MlpFunction::Gradients state, action, trunk;

    void clip(double limit) {
      state.clip(limit);
      action.clip(limit);
      trunk.clip(limit);
    }
  };

  Gradients backward_batch(const Cache& cache, const Matrix& upstream) const {
    Gradients g;
    Matrix concat_grad;
    g.trunk = trunk_.backward_batch_input(cache.trunk, upstream, concat_grad);
    const Eigen::Index ns = cache.state_hidden.rows();
    Matrix ds = concat_grad.topRows(ns)
                    .cwiseProduct((cache.state_hidden.array() > 0.0).cast<double>().matrix());
    Matrix da = concat_grad.bottomRows(concat_grad.rows() - ns)
                    .cwiseProduct((cache.action_hidden.array() > 0.0).cast<double>().matrix());
    g.state = state_stream_.backward_batch(cache.state, ds);
    g.action = action_stream_.backward_batch(cache.action, da);
    return g;
  }

 private:
  MlpFunction state_stream_;
  MlpFunction action_stream_;
  MlpFunction trunk_;
};

inline void sync_target(const TwoStreamMlp& net, TwoStreamMlp& target) {
  sync_target(net.state_stream(), target.state_stream());
  sync_target(net.action_stream(), target.action_stream());
  sync_target(net.trunk(), target.trunk());
}

struct TwoStreamAdam {
  AdamState state, action, trunk;

  TwoStreamAdam() = default;
  explicit TwoStreamAdam(const TwoStreamMlp& f, double lr = 1e-4)
      : state(f.state_stream(), lr), action(f.action_stream(), lr), trunk(f.trunk(), lr) {}

  void apply(TwoStreamMlp& f, const TwoStreamMlp::Gradients& g) {
    state.apply(f.state_stream(), g.state);
    action.apply(f.action_stream(), g.action);
    trunk.apply(f.trunk(), g.trunk);
  }
};

// Marginal-head belief step (taxi): target is the one-hot state indicator
// plus the discounted target-net belief at (s', argmax_a Q(s', a)).
inline double dbn_train_step_marginal(TwoStreamMlp& hnet, const TwoStreamMlp& h_target,
                                      const MlpFunction& qnet, const ReplayBuffer& buffer,
                                      TwoStreamAdam& opt, const DbnOptions& o, Rng& sample_rng) {
  const auto idx = buffer.sample_indices(o.batch, sample_rng);
  const int ns = hnet.state_input_size();
  const int na = hnet.action_input_size();
  Matrix xs(ns, o.batch), xa(na, o.batch), xns(ns, o.batch), xna(na, o.batch),
      qin(qnet.input_size(), o.batch);
  for (int b = 0; b < o.batch; ++b) {
    const DeepTransition& t = buffer.at(idx[b]);
    xs.col(b) = one_hot(ns, t.state_id);
    xa.col(b) = one_hot(na, t.action);
    xns.col(b) = one_hot(ns, t.next_state_id);
    qin.col(b) = t.next_obs;
  }
  const Matrix qn = qnet.forward_batch(qin);
  for (int b = 0; b < o.batch; ++b)
    xna.col(b) = one_hot(na, argmax_lowest(Vector(qn.col(b))));
  const Matrix boot = h_target.forward_batch(xns, xna);

  TwoStreamMlp::Cache cache;
  const Matrix pred = hnet.forward_batch(xs, xa, &cache);
  Matrix upstream(pred.rows(), pred.cols());
  double loss = 0.0;
  for (int b = 0; b < o.batch; ++b) {
    const DeepTransition& t = buffer.at(idx[b]);
    for (int k = 0; k < ns; ++k) {
      double target = k == t.state_id ? 1.0 : 0.0;
      if (!t.terminal) target += o.gamma * boot(k, b);
      const double residual = pred(k, b) - target;
      loss += residual * residual;
      upstream(k, b) = 2.0 * residual / o.batch;
    }
  }
  check_finite(loss, "dbn_train_step_marginal loss");
  TwoStreamMlp::Gradients grads = hnet.backward_batch(cache, upstream);
  grads.clip(o.grad_clip);
  opt.apply(hnet, grads);
  return loss / o.batch;
}

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_correlation: need two equal series");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// A visited sample for the deep consistency report: the Q-net input and the
// discrete id the belief net sees.
struct VisitedSample {
  Vector obs;
  StateId state_id;
};

struct DeepRecoveryReport {
  double pearson = 0.0;
  double max_abs_dev = 0.0;
  int pairs = 0;
};

// Compares Q-hat(s,a) = vec(H(s,a; hnet)) . vec(R) against Q(s,a; qnet) over
// visited samples, for every action.
inline DeepRecoveryReport recover_q_deep(const MlpFunction& hnet, const RewardMap& r,
                                         std::span<const VisitedSample> samples,
                                         const MlpFunction& qnet) {
  const int num_actions = qnet.output_size();
  const int slice = hnet.output_size() / num_actions;
  std::vector<double> recovered, learned;
  for (const VisitedSample& s : samples) {
    const Vector h = hnet.forward(one_hot(hnet.input_size(), s.state_id));
    const Vector q = qnet.forward(s.obs);
    for (int a = 0; a < num_actions; ++a) {
      double dot = 0.0;
      for (int k = 0; k < slice; ++k) dot += h[a * slice + k] * r.data()[k];
      recovered.push_back(dot);
      learned.push_back(q[a]);
    }
  }
  DeepRecoveryReport rep;
  rep.pairs = static_cast<int>(recovered.size());
  if (rep.pairs >= 2) rep.pearson = pearson_correlation(recovered, learned);
  for (int i = 0; i < rep.pairs; ++i)
    rep.max_abs_dev = std::max(rep.max_abs_dev, std::abs(recovered[i] - learned[i]));
  return rep;
}

}  // namespace beliefmap
