#pragma once

#include <memory>

#include "beliefmap/env.hpp"

namespace beliefmap {

// Simplified blackjack: infinite shoe, hit/stick only, no naturals. The
// dealer stands on 17. Rewards are deterministic per (state, action): game
// results are routed through four outcome states whose single resolve action
// pays out and ends the episode in an absorbing End state.
//
// State codec "blackjack285-v1":
//   0..179    playing, no usable ace: (player_sum - 4) * 10 + (dealer - 1),
//             player_sum in [4, 21], dealer card in [1, 10]
//   180..279  playing, usable ace:    180 + (player_sum - 12) * 10 + (dealer - 1),
//             player_sum in [12, 21]
//   280 HitBust   281 StuckWon   282 StuckDrew   283 StuckLost   284 End
// Actions: 0 = stick, 1 = hit; outcome states expose only action 0 (resolve).
class BlackjackEnv final : public Environment {
 public:
  static constexpr StateId kHitBust = 280;
  static constexpr StateId kStuckWon = 281;
  static constexpr StateId kStuckDrew = 282;
  static constexpr StateId kStuckLost = 283;
  static constexpr StateId kEnd = 284;
  static constexpr ActionId kStick = 0;
  static constexpr ActionId kHit = 1;

  BlackjackEnv() : Environment(EnvSpec{285, 2, "blackjack"}) {}

  static bool is_playing(StateId s) { return s < kHitBust; }
  static bool is_outcome(StateId s) { return s >= kHitBust && s < kEnd; }

  static StateId encode(int player_sum, int dealer_card, bool usable_ace) {
    if (dealer_card < 1 || dealer_card > 10)
      throw std::invalid_argument("blackjack: dealer card out of range");
    if (usable_ace) {
      if (player_sum < 12 || player_sum > 21)
        throw std::invalid_argument("blackjack: usable-ace sum out of range");
      return 180 + (player_sum - 12) * 10 + (dealer_card - 1);
    }
    if (player_sum < 4 || player_sum > 21)
      throw std::invalid_argument("blackjack: player sum out of range");
    return (player_sum - 4) * 10 + (dealer_card - 1);
  }

  struct Hand {
    int player_sum;
    int dealer_card;
    bool usable_ace;
  };

  static Hand decode(StateId s) {
    if (!is_playing(s)) throw std::invalid_argument("blackjack: not a playing state");
    if (s >= 180) return {12 + (s - 180) / 10, 1 + (s - 180) % 10, true};
    return {4 + s / 10, 1 + s % 10, false};
  }

  int num_legal_actions(StateId s) const override { return is_playing(s) ? 2 : 1; }

  double reward(StateId s, ActionId) const override {
    switch (s) {
      case kHitBust: return -1.0;
      case kStuckWon: return 1.0;
      case kStuckDrew: return 0.0;
      case kStuckLost: return -1.0;
      default: return 0.0;  // playing states and End
    }
  }

  std::vector<StateId> outcome_states() const override {
    return {kHitBust, kStuckWon, kStuckDrew, kStuckLost};
  }

  Transition step_from(StateId state, ActionId action, Rng& rng) override {
    Transition t;
    t.state = state;
    t.action = action;
    if (is_outcome(state)) {
      t.reward = reward(state, action);
      t.next_state = kEnd;
      t.terminal = true;
      return t;
    }
    if (state == kEnd) throw std::logic_error("blackjack: cannot step the End state");
    const Hand h = decode(state);
    t.reward = 0.0;
    t.terminal = false;
    if (action == kHit) {
      int sum = h.player_sum;
      bool ace = h.usable_ace;
      add_card(sum, ace, draw_card(rng));
      t.next_state = sum > 21 ? kHitBust : encode(sum, h.dealer_card, ace);
    } else {
      t.next_state = play_dealer(h, rng);
    }
    return t;
  }

  GridGeometry render_geometry() const override {
    // 18 player-sum rows (4 at the top) x 10 dealer columns; ace and no-ace
    // states with equal (sum, dealer) share a cell. Row 18 holds the four
    // outcome states and End in columns 0..4.
    GridGeometry g;
    g.rows = 19;
    g.cols = 10;
    g.cell_of_state.assign(num_states(), -1);
    for (StateId s = 0; s < kHitBust; ++s) {
      const Hand h = decode(s);
      g.cell_of_state[s] = (h.player_sum - 4) * 10 + (h.dealer_card - 1);
    }
    for (StateId s = kHitBust; s <= kEnd; ++s) g.cell_of_state[s] = 18 * 10 + (s - kHitBust);
    g.description =
        "rows 0..17 = player sum 4..21, cols = dealer card 1..10 (usable-ace "
        "states merged); row 18 cols 0..4 = HitBust, StuckWon, StuckDrew, StuckLost, End";
    return g;
  }

  std::string codec_name() const override { return "blackjack285-v1"; }

  // Infinite shoe: ranks 1..9 at 1/13, value 10 at 4/13.
  static int draw_card(Rng& rng) {
    const int rank = 1 + rng.uniform_int(13);
    return rank > 10 ? 10 : rank;
  }

 protected:
  StateId do_reset(Rng& rng) override {
    int sum = 0;
    bool ace = false;
    add_card(sum, ace, draw_card(rng));
    add_card(sum, ace, draw_card(rng));
    const int dealer = draw_card(rng);
    return encode(sum, dealer, ace);
  }

  Transition do_step(StateId state, ActionId action, Rng& rng) override {
    return step_from(state, action, rng);
  }

 private:
  // An ace counts 11 while that does not bust; a usable ace demotes to 1
  // the moment the hand would otherwise bust.
  static void add_card(int& sum, bool& usable_ace, int card) {
    if (card == 1 && !usable_ace && sum + 11 <= 21) {
      sum += 11;
      usable_ace = true;
    } else {
      sum += card;
    }
    if (sum > 21 && usable_ace) {
      sum -= 10;
      usable_ace = false;
    }
  }

  // Dealer reveals a hole card at stick time and hits below 17.
  StateId play_dealer(const Hand& h, Rng& rng) const {
    int dealer_sum = 0;
    bool dealer_ace = false;
    add_card(dealer_sum, dealer_ace, h.dealer_card);
    while (dealer_sum < 17) add_card(dealer_sum, dealer_ace, draw_card(rng));
    if (dealer_sum > 21 || h.player_sum > dealer_sum) return kStuckWon;
    if (h.player_sum == dealer_sum) return kStuckDrew;
    return kStuckLost;
  }
};

inline std::unique_ptr<Environment> make_blackjack() { return std::make_unique<BlackjackEnv>(); }

}  // namespace beliefmap
