#pragma once

#include <memory>

#include "beliefmap/env.hpp"

namespace beliefmap {

// Classic 5x5 taxi. The agent drives to a passenger standing at one of four
// marked locations, picks them up and drops them at a destination location.
//
// State codec "taxi500-v1": ((row * 5 + col) * 5 + passenger) * 4 + destination
// with passenger in {0=R, 1=G, 2=Y, 3=B, 4=InTaxi} and destination in
// {0=R, 1=G, 2=Y, 3=B}. Actions: 0=south, 1=north, 2=east, 3=west,
// 4=pickup, 5=dropoff. Moves into walls or off the grid bounce back at the
// usual -1 step cost; illegal pickup/dropoff costs -10 and leaves the state
// unchanged; a successful dropoff pays +20 and terminates.
class TaxiEnv final : public Environment {
 public:
  static constexpr int kGrid = 5;
  static constexpr int kInTaxi = 4;
  static constexpr ActionId kSouth = 0, kNorth = 1, kEast = 2, kWest = 3, kPickup = 4,
                            kDropoff = 5;
  static constexpr int kLocRow[4] = {0, 0, 4, 4};
  static constexpr int kLocCol[4] = {0, 4, 0, 3};

  TaxiEnv() : Environment(EnvSpec{500, 6, "taxi"}) {}

  struct Cell {
    int row, col, passenger, destination;
  };

  static StateId encode(int row, int col, int passenger, int destination) {
    return ((row * kGrid + col) * 5 + passenger) * 4 + destination;
  }

  static Cell decode(StateId s) {
    Cell c;
    c.destination = s % 4;
    s /= 4;
    c.passenger = s % 5;
    s /= 5;
    c.col = s % kGrid;
    c.row = s / kGrid;
    return c;
  }

  // Vertical barriers, given as (row, column) pairs blocking east movement
  // out of that column: between cols 0|1 at rows 3-4, 1|2 at rows 0-1,
  // 2|3 at rows 3-4.
  static bool wall_east_of(int row, int col) {
    return (col == 0 && row >= 3) || (col == 1 && row <= 1) || (col == 2 && row >= 3);
  }

  double reward(StateId s, ActionId a) const override {
    const Cell c = decode(s);
    if (a == kPickup) return legal_pickup(c) ? -1.0 : -10.0;
    if (a == kDropoff) return legal_dropoff(c) ? 20.0 : -10.0;
    return -1.0;
  }

  int horizon() const override { return 200; }

  Transition step_from(StateId state, ActionId action, Rng&) override {
    Cell c = decode(state);
    Transition t;
    t.state = state;
    t.action = action;
    t.terminal = false;
    switch (action) {
      case kSouth:
        if (c.row < kGrid - 1) ++c.row;
        t.reward = -1.0;
        break;
      case kNorth:
        if (c.row > 0) --c.row;
        t.reward = -1.0;
        break;
      case kEast:
        if (c.col < kGrid - 1 && !wall_east_of(c.row, c.col)) ++c.col;
        t.reward = -1.0;
        break;
      case kWest:
        if (c.col > 0 && !wall_east_of(c.row, c.col - 1)) --c.col;
        t.reward = -1.0;
        break;
      case kPickup:
        if (legal_pickup(c)) {
          c.passenger = kInTaxi;
          t.reward = -1.0;
        } else {
          t.reward = -10.0;
        }
        break;
      case kDropoff:
        if (legal_dropoff(c)) {
          c.passenger = c.destination;
          t.reward = 20.0;
          t.terminal = true;
        } else {
          t.reward = -10.0;
        }
        break;
      default:
        throw std::invalid_argument("taxi: unknown action");
    }
    t.next_state = encode(c.row, c.col, c.passenger, c.destination);
    return t;
  }

  GridGeometry render_geometry() const override {
    GridGeometry g;
    g.rows = kGrid;
    g.cols = kGrid;
    g.cell_of_state.resize(num_states());
    for (int s = 0; s < num_states(); ++s) {
      const Cell c = decode(s);
      g.cell_of_state[s] = c.row * kGrid + c.col;
    }
    g.description = "5x5 taxi position; passenger/destination components summed per cell";
    return g;
  }

  std::string codec_name() const override { return "taxi500-v1"; }

 protected:
  StateId do_reset(Rng& rng) override {
    const int row = rng.uniform_int(kGrid);
    const int col = rng.uniform_int(kGrid);
    const int passenger = rng.uniform_int(4);
    int destination = rng.uniform_int(3);
    if (destination >= passenger) ++destination;
    return encode(row, col, passenger, destination);
  }

  Transition do_step(StateId state, ActionId action, Rng& rng) override {
    return step_from(state, action, rng);
  }

 private:
  static bool legal_pickup(const Cell& c) {
    return c.passenger < kInTaxi && c.row == kLocRow[c.passenger] && c.col == kLocCol[c.passenger];
  }
  static bool legal_dropoff(const Cell& c) {
    return c.passenger == kInTaxi && c.row == kLocRow[c.destination]
           && c.col == kLocCol[c.destination];
  }
};

inline std::unique_ptr<Environment> make_taxi() { return std::make_unique<TaxiEnv>(); }

}  // namespace beliefmap
