#pragma once

#include <memory>
#include <string>

#include "beliefmap/envs/blackjack.hpp"
#include "beliefmap/envs/cartpole.hpp"
#include "beliefmap/envs/chain.hpp"
#include "beliefmap/envs/taxi.hpp"

namespace beliefmap {

inline std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "chain") return make_chain();
  if (name == "blackjack") return make_blackjack();
  if (name == "cartpole") return make_cartpole();
  if (name == "taxi") return make_taxi();
  throw std::invalid_argument("unknown environment preset: " + name);
}

}  // namespace beliefmap
