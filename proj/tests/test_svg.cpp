#include <catch2/catch_amalgamated.hpp>

#include "beliefmap/envs/envs.hpp"
#include "beliefmap/svg.hpp"
#include "beliefmap/train.hpp"

using namespace beliefmap;

TEST_CASE("svg: zero tensor renders uniform background with min=max=0 legend") {
  ChainEnv env;
  const std::vector<double> zeros(env.num_states(), 0.0);
  const std::string svg = render_heatmap_svg(env.render_geometry(), zeros, {"hash", 1, "zero"});
  REQUIRE(svg.find("min=0 max=0") != std::string::npos);
  REQUIRE(svg.find("#ffffff") != std::string::npos);  // everything at the low end
  REQUIRE(svg.find("#2166ac") == std::string::npos);
}

TEST_CASE("svg: identical inputs give byte-identical output") {
  TaxiEnv env;
  std::vector<double> v(env.num_states(), 0.0);
  Rng rng(3);
  for (auto& x : v) x = rng.uniform();
  const SvgMetadata meta{"cafef00d", 42, "t"};
  REQUIRE(render_heatmap_svg(env.render_geometry(), v, meta)
          == render_heatmap_svg(env.render_geometry(), v, meta));
}

TEST_CASE("svg: embeds config hash and seed") {
  ChainEnv env;
  const std::vector<double> zeros(env.num_states(), 0.0);
  const std::string svg =
      render_heatmap_svg(env.render_geometry(), zeros, {"deadbeef01020304", 77, ""});
  REQUIRE(svg.find("config_hash=deadbeef01020304") != std::string::npos);
  REQUIRE(svg.find("seed=77") != std::string::npos);
}

TEST_CASE("svg: chain fixture highlights exactly the greedy path states") {
  ChainEnv env;
  TabularConfig cfg = TabularConfig::from_preset("chain", TrainAlgo::QLearning, 41);
  cfg.episodes = 20000;
  TabularTrainer trainer(env, cfg);
  trainer.run();
  const auto marginal = marginal_state_visitation(trainer.h(), 0, 0);
  const std::string svg =
      render_heatmap_svg(env.render_geometry(), marginal, {"h", 41, "chain"});
  // four cells in one row: s0 and s1 carry mass 1 (saturated), s2 and the
  // terminal stay at the white end
  REQUIRE(svg.find("fill=\"#2166ac\"") != std::string::npos);
  const auto count = [&](const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = svg.find(needle, pos)) != std::string::npos) {
      ++n;
      pos += needle.size();
    }
    return n;
  };
  REQUIRE(count("fill=\"#2166ac\"") == 2);  // the two visited states
  REQUIRE(count("fill=\"#ffffff\"") == 2);  // the unvisited branch and terminal
}

TEST_CASE("svg: value count must match geometry") {
  ChainEnv env;
  REQUIRE_THROWS_AS(render_heatmap_svg(env.render_geometry(), std::vector<double>{1.0}, {}),
                    std::invalid_argument);
}
