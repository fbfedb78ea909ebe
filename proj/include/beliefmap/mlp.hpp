#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "beliefmap/core.hpp"
#include "beliefmap/rng.hpp"

namespace beliefmap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully connected net, ReLU on hidden layers, identity output. Batches are
// stored one sample per column. Backward passes are hand-derived
// reverse-mode; Eigen only supplies the matrix arithmetic.
class MlpFunction {
 public:
  MlpFunction() = default;

  explicit MlpFunction(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpFunction: need at least two layers");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.emplace_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.emplace_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  // He-style uniform init over [-sqrt(6/fan_in), +sqrt(6/fan_in)], biases 0.
  static MlpFunction he_init(std::vector<int> layer_sizes, Rng& rng) {
    MlpFunction f(std::move(layer_sizes));
    for (std::size_t l = 0; l < f.weights_.size(); ++l) {
      const double bound = std::sqrt(6.0 / f.sizes_[l]);
      double* data = f.weights_[l].data();
      for (Eigen::Index i = 0; i < f.weights_[l].size(); ++i)
        data[i] = rng.uniform_range(-bound, bound);
    }
    return f;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return weights_.size(); }

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

  // Post-activation values per layer; activations[0] is the input batch.
  // ReLU outputs are their own derivative mask (a > 0 iff pre-activation > 0),
  // so no pre-activations need caching.
  struct Cache {
    std::vector<Matrix> activations;
  };

  Matrix forward_batch(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() != sizes_.front())
      throw std::invalid_argument("MlpFunction: input size mismatch");
    if (cache) {
      cache->activations.clear();
      cache->activations.reserve(weights_.size() + 1);
      cache->activations.push_back(x);
    }
    Matrix a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (weights_[l] * a).colwise() + biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  Vector forward(const Vector& x) const { return forward_batch(x); }

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static Gradients zeros_like(const MlpFunction& f) {
      Gradients g;
      for (std::size_t l = 0; l < f.weights_.size(); ++l) {
        g.weights.emplace_back(Matrix::Zero(f.weights_[l].rows(), f.weights_[l].cols()));
        g.biases.emplace_back(Vector::Zero(f.biases_[l].size()));
      }
      return g;
    }

    void clip(double limit) {
      for (auto& w : weights) w = w.cwiseMax(-limit).cwiseMin(limit);
      for (auto& b : biases) b = b.cwiseMax(-limit).cwiseMin(limit);
    }

    double max_abs() const {
      double m = 0.0;
      for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
      for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
      return m;
    }
  };

  // Exact reverse-mode gradients of sum_batch(upstream . output) w.r.t. every
  // parameter, given the cache of the forward pass that produced `upstream`'s
  // inputs. Also returns nothing for the input gradient; callers that need it
  // (stream composition) use backward_batch_input.
  Gradients backward_batch(const Cache& cache, const Matrix& upstream) const {
    return backward_impl(cache, upstream, nullptr);
  }

  Gradients backward_batch_input(const Cache& cache, const Matrix& upstream,
                                 Matrix& input_grad) const {
    return backward_impl(cache, upstream, &input_grad);
  }

 private:
  Gradients backward_impl(const Cache& cache, const Matrix& upstream, Matrix* input_grad) const {
    if (cache.activations.size() != weights_.size() + 1)
      throw std::logic_error("MlpFunction: stale or missing forward cache");
    if (upstream.rows() != sizes_.back() || upstream.cols() != cache.activations[0].cols())
      throw std::invalid_argument("MlpFunction: upstream shape mismatch");
    Gradients g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());
    Matrix delta = upstream;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      g.weights[l].noalias() = delta * cache.activations[l].transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix mask = (cache.activations[l].array() > 0.0).cast<double>();
        delta = (weights_[l].transpose() * delta).cwiseProduct(mask);
      } else if (input_grad) {
        input_grad->noalias() = weights_[0].transpose() * delta;
      }
    }
    return g;
  }

  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

// Copies behaviour parameters into the target network.
inline void sync_target(const MlpFunction& net, MlpFunction& target) {
  if (net.layer_sizes() != target.layer_sizes())
    throw std::invalid_argument("sync_target: architecture mismatch");
  target.weights() = net.weights();
  target.biases() = net.biases();
}

// Adam with bias correction; moments mirror the parameter shapes.
class AdamState {
 public:
  AdamState() = default;

  explicit AdamState(const MlpFunction& f, double learning_rate = 1e-4)
      : lr_(learning_rate) {
    for (std::size_t l = 0; l < f.weights().size(); ++l) {
      m_w_.emplace_back(Matrix::Zero(f.weights()[l].rows(), f.weights()[l].cols()));
      v_w_.emplace_back(Matrix::Zero(f.weights()[l].rows(), f.weights()[l].cols()));
      m_b_.emplace_back(Vector::Zero(f.biases()[l].size()));
      v_b_.emplace_back(Vector::Zero(f.biases()[l].size()));
    }
  }

  double learning_rate() const { return lr_; }
  long step_count() const { return step_; }
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void apply(MlpFunction& f, const MlpFunction::Gradients& g) {
    ++step_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (std::size_t l = 0; l < m_w_.size(); ++l) {
      step_param(f.weights()[l], g.weights[l], m_w_[l], v_w_[l], bc1, bc2);
      step_param(f.biases()[l], g.biases[l], m_b_[l], v_b_[l], bc1, bc2);
    }
  }

 private:
  template <class P, class G>
  void step_param(P& p, const G& g, P& m, P& v, double bc1, double bc2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kEps);
  }

  double lr_ = 1e-4;
  long step_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
};

// Huber loss with knee delta and its derivative in the residual.
inline double huber_loss(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
}

inline double huber_grad(double residual, double delta) {
  if (residual > delta) return delta;
  if (residual < -delta) return -delta;
  return residual;
}

// ---- finite-difference gradient checking ------------------------------

// A flattened (parameter location, analytic gradient) view of a network,
// architecture-agnostic so composed nets can be checked too.
struct ParamGradView {
  std::vector<double*> params;
  std::vector<double> grads;

  void add(Matrix& p, const Matrix& g) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      params.push_back(p.data() + i);
      grads.push_back(g.data()[i]);
    }
  }
  void add(Vector& p, const Vector& g) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      params.push_back(p.data() + i);
      grads.push_back(g.data()[i]);
    }
  }
  void add(MlpFunction& f, const MlpFunction::Gradients& g) {
    for (std::size_t l = 0; l < f.weights().size(); ++l) {
      add(f.weights()[l], g.weights[l]);
      add(f.biases()[l], g.biases[l]);
    }
  }
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes = 0;
};

// Central differences at `probes` random parameters. Relative error uses a
// floor of 1e-2 on the denominator so near-zero gradients are compared
// absolutely instead of amplifying finite-difference noise.
template <class LossFn>
GradCheckResult finite_difference_check(ParamGradView& view, const LossFn& loss, int probes,
                                        double h, Rng& rng) {
  GradCheckResult res;
  res.probes = probes;
  for (int i = 0; i < probes; ++i) {
    const int k = rng.uniform_int(static_cast<int>(view.params.size()));
    double* p = view.params[k];
    const double saved = *p;
    *p = saved + h;
    const double lp = loss();
    *p = saved - h;
    const double lm = loss();
    *p = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = view.grads[k];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-2});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - analytic) / denom);
  }
  return res;
}

}  // namespace beliefmap
