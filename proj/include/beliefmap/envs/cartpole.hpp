#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "beliefmap/env.hpp"

namespace beliefmap {

// Total quantiser for the 4-tuple (x, x_dot, theta, theta_dot). Values are
// clipped into the per-dimension ranges, so every physical state maps to
// exactly one of prod(bins) ids.
struct CartpoleQuantizer {
  std::array<int, 4> bins{3, 3, 6, 3};
  std::array<double, 4> lo{-2.4, -3.0, -12.0 * std::numbers::pi / 180.0, -3.5};
  std::array<double, 4> hi{2.4, 3.0, 12.0 * std::numbers::pi / 180.0, 3.5};

  int num_states() const { return bins[0] * bins[1] * bins[2] * bins[3]; }

  int bin_of(int dim, double v) const {
    if (v <= lo[dim]) return 0;
    if (v >= hi[dim]) return bins[dim] - 1;
    const int b = static_cast<int>((v - lo[dim]) / (hi[dim] - lo[dim]) * bins[dim]);
    return b >= bins[dim] ? bins[dim] - 1 : b;
  }

  StateId quantize(const std::array<double, 4>& phys) const {
    int id = 0;
    for (int d = 0; d < 4; ++d) id = id * bins[d] + bin_of(d, phys[d]);
    return id;
  }

  void validate() const {
    for (int d = 0; d < 4; ++d) {
      if (bins[d] < 1) throw std::invalid_argument("CartpoleQuantizer: bins must be >= 1");
      if (!(lo[d] < hi[d])) throw std::invalid_argument("CartpoleQuantizer: empty range");
    }
  }
};

// Classic cart-pole with Euler integration at 0.02s, failure at |theta| > 12
// degrees or |x| > 2.4, reward +1 every step, 200-step horizon. Discrete
// observations come from the quantiser; the continuous state stays internal
// (step_from is unsupported for that reason).
class CartpoleEnv final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * std::numbers::pi / 180.0;
  static constexpr double kXThreshold = 2.4;
  static constexpr int kHorizon = 200;

  explicit CartpoleEnv(CartpoleQuantizer quantizer = {})
      : Environment(make_spec(quantizer)), quantizer_(quantizer) {}

  const CartpoleQuantizer& quantizer() const { return quantizer_; }
  const std::array<double, 4>& physical_state() const { return phys_; }

  // Test hook: start an episode from an explicit physical state.
  StateId set_physical_state(const std::array<double, 4>& phys) {
    phys_ = phys;
    return quantizer_.quantize(phys_);
  }

  double reward(StateId, ActionId) const override { return 1.0; }

  int horizon() const override { return kHorizon; }

  GridGeometry render_geometry() const override {
    GridGeometry g;
    g.rows = quantizer_.bins[0] * quantizer_.bins[1];
    g.cols = quantizer_.bins[2] * quantizer_.bins[3];
    g.cell_of_state.resize(num_states());
    for (int s = 0; s < num_states(); ++s) {
      int rem = s;
      const int b3 = rem % quantizer_.bins[3];
      rem /= quantizer_.bins[3];
      const int b2 = rem % quantizer_.bins[2];
      rem /= quantizer_.bins[2];
      const int b1 = rem % quantizer_.bins[1];
      const int b0 = rem / quantizer_.bins[1];
      g.cell_of_state[s] = (b0 * quantizer_.bins[1] + b1) * g.cols + (b2 * quantizer_.bins[3] + b3);
    }
    g.description = "rows = (x bin, x_dot bin), cols = (theta bin, theta_dot bin)";
    return g;
  }

  std::string codec_name() const override { return "cartpole162-v1"; }

 protected:
  StateId do_reset(Rng& rng) override {
    for (auto& v : phys_) v = rng.uniform_range(-0.05, 0.05);
    return quantizer_.quantize(phys_);
  }

  Transition do_step(StateId state, ActionId action, Rng&) override {
    auto [x, x_dot, theta, theta_dot] = phys_;
    const double force = action == 1 ? kForceMag : -kForceMag;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp)
        / (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

    phys_ = {x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot,
             theta_dot + kTau * theta_acc};

    Transition t;
    t.state = state;
    t.action = action;
    t.reward = 1.0;
    t.next_state = quantizer_.quantize(phys_);
    t.terminal = std::abs(phys_[0]) > kXThreshold || std::abs(phys_[2]) > kThetaThreshold;
    return t;
  }

 private:
  static EnvSpec make_spec(const CartpoleQuantizer& q) {
    q.validate();
    return EnvSpec{q.num_states(), 2, "cartpole"};
  }

  CartpoleQuantizer quantizer_;
  std::array<double, 4> phys_{};
};

inline std::unique_ptr<Environment> make_cartpole(CartpoleQuantizer quantizer = {}) {
  return std::make_unique<CartpoleEnv>(quantizer);
}

}  // namespace beliefmap
