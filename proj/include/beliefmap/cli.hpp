#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "beliefmap/envs/envs.hpp"
#include "beliefmap/explain.hpp"
#include "beliefmap/io.hpp"
#include "beliefmap/svg.hpp"
#include "beliefmap/train.hpp"

namespace beliefmap {

// Exit codes: 0 success, 1 check failed, 2 usage or I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

struct TrainFlags {
  std::string env;
  std::string algo = "q";
  std::uint64_t seed = 0;
  std::string out;
  int episodes = -1;
  double alpha = -1.0;
  double gamma = -1.0;
  int horizon = 0;
  std::string reward_source = "ground-truth";
  std::string q_init = "zero", h_init = "zero";
  std::uint64_t q_init_seed = 1, h_init_seed = 2;
  double q_init_scale = 0.01, h_init_scale = 0.01;
  double eps_constant = -1.0;
  // deep-only knobs
  double lr = -1.0;
  int dbn_every = -1;
  int sync_every = -1;
  int learn_start = -1;
  int replay_capacity = -1;
  bool literal_loss = false;
};

inline InitMode parse_init(const std::string& kind, std::uint64_t seed, double scale) {
  if (kind == "zero") return {};
  if (kind == "random") return {InitKind::Random, seed, scale};
  throw CLI::ValidationError("--q-init/--h-init must be zero or random");
}

inline int run_train(const TrainFlags& f) {
  const TrainAlgo algo = algo_from_string(f.algo);
  const std::filesystem::path out(f.out);
  if (algo == TrainAlgo::Dqn || algo == TrainAlgo::Dbn) {
    DeepConfig cfg = DeepConfig::from_preset(f.env, algo == TrainAlgo::Dbn, f.seed);
    if (f.episodes > 0) cfg.episodes = f.episodes;
    if (f.gamma >= 0) cfg.gamma = f.gamma;
    if (f.lr > 0) cfg.learning_rate = f.lr;
    if (f.dbn_every > 0) cfg.dbn_every = f.dbn_every;
    if (f.sync_every > 0) cfg.target_sync_every = f.sync_every;
    if (f.learn_start > 0) cfg.learn_start = f.learn_start;
    if (f.replay_capacity > 0) cfg.replay_capacity = f.replay_capacity;
    if (f.eps_constant >= 0) cfg.epsilon = EpsilonSchedule::constant(f.eps_constant);
    cfg.literal_loss_form = f.literal_loss;

    auto env = make_env(f.env);
    std::optional<CartpoleObsAdapter> cart_obs;
    std::optional<OneHotObsAdapter> onehot_obs;
    DeepObsAdapter* obs = nullptr;
    if (f.env == "cartpole") {
      cart_obs.emplace(dynamic_cast<const CartpoleEnv&>(*env));
      obs = &*cart_obs;
    } else {
      onehot_obs.emplace(*env);
      obs = &*onehot_obs;
    }
    DeepTrainer trainer(*env, *obs, cfg);
    trainer.run();

    json reports = json::object();
    Rng eval_rng(f.seed + 1);
    std::vector<VisitedSample> visited;
    const EvalReport eval = trainer.evaluate(20, eval_rng, &visited, 4);
    reports["eval_20_episodes"] = {{"mean_return", eval.mean_return},
                                   {"mean_length", eval.mean_length}};
    if (cfg.with_dbn && f.env == "cartpole") {
      const RewardMap r = ground_truth_rewards(*env);
      const DeepRecoveryReport rec = recover_q_deep(trainer.hnet(), r, visited, trainer.qnet());
      reports["recovery"] = {{"pearson", rec.pearson},
                             {"max_abs_dev", rec.max_abs_dev},
                             {"pairs", rec.pairs}};
      std::cout << "[train] dbn recovery pearson=" << rec.pearson << " over " << rec.pairs
                << " pairs\n";
    }
    save_deep_artifact(out, trainer, cfg, *env, reports);
    std::cout << "[train] deep artifact written to " << out.string() << "\n";
    return kExitOk;
  }

  TabularConfig cfg = TabularConfig::from_preset(f.env, algo, f.seed);
  if (f.episodes > 0) cfg.episodes = f.episodes;
  if (f.alpha >= 0) cfg.alpha = f.alpha;
  if (f.gamma >= 0) cfg.gamma = f.gamma;
  if (f.horizon > 0) cfg.horizon_override = f.horizon;
  if (f.eps_constant >= 0) cfg.epsilon = EpsilonSchedule::constant(f.eps_constant);
  cfg.reward_source = f.reward_source == "proxy" ? RewardMap::Source::EmpiricalProxy
                                                 : RewardMap::Source::EnvGroundTruth;
  cfg.q_init = parse_init(f.q_init, f.q_init_seed, f.q_init_scale);
  cfg.h_init = parse_init(f.h_init, f.h_init_seed, f.h_init_scale);

  auto env = make_env(f.env);
  TabularTrainer trainer(*env, cfg);
  trainer.run();
  const ConsistencyReport rep = trainer.consistency();
  save_tabular_artifact(out, trainer, *env);
  std::cout << "[train] consistency max_abs_err=" << rep.max_abs_err << " at (s=" << rep.state
            << ", a=" << rep.action << ")\n"
            << "[train] artifact written to " << out.string() << "\n";
  return kExitOk;
}

// Pulls (q, h) pairs out of a tabular artifact; twin artifacts yield both.
struct LoadedTabular {
  RunArtifact artifact;
  TabularConfig config;
  std::unique_ptr<Environment> env;
  std::vector<std::pair<QTable, BeliefTensor>> pairs;  // (q, h) per table
  RewardMap rewards;

  const QTable& q(std::size_t i = 0) const { return pairs.at(i).first; }
  const BeliefTensor& h(std::size_t i = 0) const { return pairs.at(i).second; }
};

inline LoadedTabular load_tabular(const std::filesystem::path& dir) {
  LoadedTabular l{load_artifact(dir), {}, nullptr, {}, {}};
  if (l.artifact.manifest.at("kind") != "tabular")
    throw std::runtime_error("not a tabular artifact: " + dir.string());
  l.config = tabular_config_from_json(l.artifact.manifest.at("config"));
  l.env = make_env(l.config.env_name);
  const double gamma = l.config.gamma;
  if (l.artifact.has_tensor("q")) {
    l.pairs.emplace_back(qtable_from_tensor(l.artifact.tensor("q")),
                         belief_from_tensor(l.artifact.tensor("h"), gamma));
  } else {
    l.pairs.emplace_back(qtable_from_tensor(l.artifact.tensor("q_a")),
                         belief_from_tensor(l.artifact.tensor("h_a"), gamma));
    l.pairs.emplace_back(qtable_from_tensor(l.artifact.tensor("q_b")),
                         belief_from_tensor(l.artifact.tensor("h_b"), gamma));
  }
  l.rewards = rewards_from_tensor(l.artifact.tensor("r"), l.config.reward_source);
  for (const auto& [q, h] : l.pairs) {
    if (q.num_states() != l.env->num_states() || q.num_actions() != l.env->num_actions()
        || h.num_states() != l.env->num_states())
      throw std::runtime_error("artifact tensor shapes disagree with environment "
                               + l.config.env_name);
  }
  return l;
}

inline int run_verify(const std::string& run_dir, double tolerance) {
  const LoadedTabular l = load_tabular(run_dir);
  double worst = 0.0;
  json tables = json::array();
  for (std::size_t i = 0; i < l.pairs.size(); ++i) {
    const ConsistencyReport rep = verify_consistency(l.h(i), l.q(i), l.rewards);
    worst = std::max(worst, rep.max_abs_err);
    tables.push_back({{"max_abs_err", rep.max_abs_err},
                      {"state", rep.state},
                      {"action", rep.action}});
  }
  const bool pass = worst <= tolerance;
  const json report = {{"max_abs_err", worst},
                       {"tolerance", tolerance},
                       {"pass", pass},
                       {"tables", tables},
                       {"config_hash", l.artifact.manifest.at("config_hash")}};
  std::cout << report.dump(2) << "\n";
  return pass ? kExitOk : kExitCheckFailed;
}

// Blackjack figure crops drop the bookkeeping states (outcomes and End),
// keeping only playing states with sums in [4, 21].
inline std::vector<char> trim_mask(const Environment& env, bool trim) {
  std::vector<char> keep(env.num_states(), 1);
  if (!trim || env.spec().env_name != "blackjack") return keep;
  for (StateId s = BlackjackEnv::kHitBust; s <= BlackjackEnv::kEnd; ++s) keep[s] = 0;
  return keep;
}

inline json slice_to_json(std::span<const double> values, const std::vector<char>& keep,
                          int num_actions) {
  json entries = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int sn = static_cast<int>(i) / num_actions;
    if (!keep[sn] || std::abs(values[i]) <= 1e-12) continue;
    entries.push_back({{"s_next", sn}, {"a_next", static_cast<int>(i) % num_actions},
                       {"value", values[i]}});
  }
  return entries;
}

inline int run_explain(const std::string& run_dir, int state, int a0, int a1,
                       const std::string& out_dir, const std::string& formats, int table,
                       bool trim) {
  if (a0 == a1) throw CLI::ValidationError("--a0 and --a1 must differ");
  const LoadedTabular l = load_tabular(run_dir);
  if (state < 0 || state >= l.env->num_states() || a0 < 0 || a1 < 0
      || a0 >= l.env->num_actions() || a1 >= l.env->num_actions())
    throw CLI::ValidationError("state or action id out of range");
  const QTable& q = l.q(table);
  const BeliefTensor& h = l.h(table);

  const ContrastiveExplanation e = contrastive(h, q, l.rewards, state, a0, a1);
  const SignedParts parts = signed_parts(e.g);
  const std::vector<double> inter = intersection(h, state, a0, a1);
  const double residual = std::abs(e.advantage_check - (e.q0 - e.q1));
  const std::vector<char> keep = trim_mask(*l.env, trim);
  const int A = l.env->num_actions();

  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);
  const bool want_json = formats.find("json") != std::string::npos;
  const bool want_csv = formats.find("csv") != std::string::npos;
  if (!want_json && !want_csv) throw CLI::ValidationError("--formats must include csv or json");

  json summary = {{"state", state},
                  {"a0", a0},
                  {"a1", a1},
                  {"q0", e.q0},
                  {"q1", e.q1},
                  {"advantage_check", e.advantage_check},
                  {"advantage_residual", residual},
                  {"config_hash", l.artifact.manifest.at("config_hash")},
                  {"seed", l.config.seed},
                  {"table", table == 0 ? "a" : "b"},
                  {"trim_unreachable", trim}};
  const auto outcomes = l.env->outcome_states();
  if (!outcomes.empty()) {
    summary["outcome_states"] = outcomes;
    summary["outcome_projection_a0"] = outcome_projection(h, state, a0, outcomes);
    summary["outcome_projection_a1"] = outcome_projection(h, state, a1, outcomes);
  }
  if (want_json) {
    summary["g"] = slice_to_json(e.g, keep, A);
    summary["only_a0"] = slice_to_json(parts.only_a0, keep, A);
    summary["only_a1"] = slice_to_json(parts.only_a1, keep, A);
    summary["intersection"] = slice_to_json(inter, keep, A);
    std::ofstream f(out / "explain.json", std::ios::binary | std::ios::trunc);
    f << summary.dump(2) << '\n';
  }
  if (want_csv) {
    auto masked = [&](std::span<const double> v) {
      std::vector<double> m(v.begin(), v.end());
      for (std::size_t i = 0; i < m.size(); ++i)
        if (!keep[i / A]) m[i] = 0.0;
      return m;
    };
    write_slice_csv(out / "g.csv", state, a0, masked(e.g), A);
    write_slice_csv(out / "only_a0.csv", state, a0, masked(parts.only_a0), A);
    write_slice_csv(out / "only_a1.csv", state, a1, masked(parts.only_a1), A);
    write_slice_csv(out / "intersection.csv", state, a0, masked(inter), A);
  }
  std::cout << "[explain] advantage residual " << residual << "\n";
  return kExitOk;
}

inline int run_render(const std::string& run_dir, int state, int action,
                      const std::string& out_file, int table, bool trim) {
  const LoadedTabular l = load_tabular(run_dir);
  if (state < 0 || state >= l.env->num_states() || action < 0
      || action >= l.env->num_actions())
    throw CLI::ValidationError("state or action id out of range");
  const std::vector<double> marginal = marginal_state_visitation(l.h(table), state, action);
  GridGeometry geo = l.env->render_geometry();
  if (trim && l.config.env_name == "blackjack") {
    geo.rows = 18;  // drop the outcome/End row
    for (StateId s = BlackjackEnv::kHitBust; s <= BlackjackEnv::kEnd; ++s)
      geo.cell_of_state[s] = -1;
  }
  SvgMetadata meta;
  meta.config_hash = l.artifact.manifest.at("config_hash");
  meta.seed = l.config.seed;
  meta.title = l.config.env_name + " visitation from (s=" + std::to_string(state)
               + ", a=" + std::to_string(action) + ")";
  const std::string svg = render_heatmap_svg(geo, marginal, meta);
  std::ofstream f(out_file, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out_file);
  f << svg;
  std::cout << "[render] wrote " << out_file << "\n";
  return kExitOk;
}

inline int run_eval(const std::string& run_dir, int episodes, std::uint64_t seed) {
  const RunArtifact probe = load_artifact(run_dir);
  json report;
  if (probe.manifest.at("kind") == "tabular") {
    const LoadedTabular l = load_tabular(run_dir);
    Rng env_rng(seed);
    const PolicyFn greedy = [&](StateId s) {
      const int legal = l.env->num_legal_actions(s);
      if (l.pairs.size() == 1) return argmax_lowest(l.q(0).row(s), legal);
      std::vector<double> sum(legal);
      for (int a = 0; a < legal; ++a) sum[a] = l.q(0).at(s, a) + l.q(1).at(s, a);
      return argmax_lowest(std::span<const double>(sum), legal);
    };
    const EvalReport rep = evaluate_policy(*l.env, greedy, episodes, l.config.gamma, env_rng);
    report = {{"mean_return", rep.mean_return},
              {"mean_length", rep.mean_length},
              {"episodes", episodes},
              {"config_hash", probe.manifest.at("config_hash")}};
  } else {
    const DeepConfig cfg = deep_config_from_json(probe.manifest.at("config"));
    auto env = make_env(cfg.env_name);
    const MlpFunction qnet = detail::load_mlp(probe, "dqn", deep_preset(cfg.env_name).dqn_layers);
    std::optional<CartpoleObsAdapter> cart_obs;
    std::optional<OneHotObsAdapter> onehot_obs;
    const DeepObsAdapter* obs;
    if (cfg.env_name == "cartpole") {
      cart_obs.emplace(dynamic_cast<const CartpoleEnv&>(*env));
      obs = &*cart_obs;
    } else {
      onehot_obs.emplace(*env);
      obs = &*onehot_obs;
    }
    Rng env_rng(seed);
    const int cap = env->horizon() > 0 ? env->horizon() : 1000;
    double total_ret = 0.0, total_len = 0.0;
    for (int e = 0; e < episodes; ++e) {
      env->reset(env_rng);
      double ret = 0.0, discount = 1.0;
      for (int i = 0; i < cap; ++i) {
        const Transition t = env->step(argmax_lowest(Vector(qnet.forward(obs->observe()))),
                                       env_rng);
        ret += discount * t.reward;
        discount *= cfg.gamma;
        total_len += 1.0;
        if (t.terminal) break;
      }
      total_ret += ret;
    }
    report = {{"mean_return", total_ret / episodes},
              {"mean_length", total_len / episodes},
              {"episodes", episodes},
              {"config_hash", probe.manifest.at("config_hash")}};
  }
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace cli_detail

inline int run_cli(int argc, char** argv) {
  CLI::App app{"belief-map reinforcement learning toolkit"};
  app.require_subcommand(1);

  cli_detail::TrainFlags tf;
  CLI::App* train = app.add_subcommand("train", "train a learner with lockstep belief maps");
  train->add_option("--env", tf.env, "chain|blackjack|cartpole|taxi")->required();
  train->add_option("--algo", tf.algo, "q|mc|double-q|dqn|dbn");
  train->add_option("--seed", tf.seed, "master RNG seed")->required();
  train->add_option("--out", tf.out, "output artifact directory")->required();
  train->add_option("--episodes", tf.episodes);
  train->add_option("--alpha", tf.alpha);
  train->add_option("--gamma", tf.gamma);
  train->add_option("--horizon", tf.horizon, "per-episode step cap override");
  train->add_option("--reward-source", tf.reward_source, "ground-truth|proxy");
  train->add_option("--q-init", tf.q_init, "zero|random");
  train->add_option("--h-init", tf.h_init, "zero|random");
  train->add_option("--q-init-seed", tf.q_init_seed);
  train->add_option("--h-init-seed", tf.h_init_seed);
  train->add_option("--q-init-scale", tf.q_init_scale);
  train->add_option("--h-init-scale", tf.h_init_scale);
  train->add_option("--eps-constant", tf.eps_constant, "replace the schedule with a constant");
  train->add_option("--lr", tf.lr, "deep: Adam learning rate");
  train->add_option("--dbn-every", tf.dbn_every, "deep: env steps between belief-net updates");
  train->add_option("--sync-every", tf.sync_every, "deep: optimiser steps between target syncs");
  train->add_option("--learn-start", tf.learn_start, "deep: buffer size before training");
  train->add_option("--replay-capacity", tf.replay_capacity);
  train->add_flag("--literal-loss", tf.literal_loss,
                  "deep: use the literal printed loss form (see README)");

  std::string run_dir;
  double tolerance = 1e-6;
  CLI::App* verify = app.add_subcommand("verify", "recheck belief/Q consistency of an artifact");
  verify->add_option("--run", run_dir, "artifact directory")->required();
  verify->add_option("--tolerance", tolerance);

  std::string ex_run, ex_out, ex_formats = "csv,json";
  int ex_state = 0, ex_a0 = 0, ex_a1 = 1, ex_table = 0;
  bool ex_trim = false;
  CLI::App* explain = app.add_subcommand("explain", "contrastive explanation exports");
  explain->add_option("--run", ex_run)->required();
  explain->add_option("--state", ex_state)->required();
  explain->add_option("--a0", ex_a0)->required();
  explain->add_option("--a1", ex_a1)->required();
  explain->add_option("--out", ex_out, "output directory")->required();
  explain->add_option("--formats", ex_formats, "comma list of csv,json");
  explain->add_option("--table", ex_table, "twin runs: 0 = A, 1 = B")
      ->check(CLI::Range(0, 1));
  explain->add_flag("--trim-unreachable", ex_trim, "blackjack: crop bookkeeping states");

  std::string rd_run, rd_out;
  int rd_state = 0, rd_action = 0, rd_table = 0;
  bool rd_trim = false;
  CLI::App* render = app.add_subcommand("render", "SVG heatmap of marginal state visitation");
  render->add_option("--run", rd_run)->required();
  render->add_option("--state", rd_state)->required();
  render->add_option("--action", rd_action)->required();
  render->add_option("--out", rd_out, "output .svg path")->required();
  render->add_option("--table", rd_table)->check(CLI::Range(0, 1));
  render->add_flag("--trim-unreachable", rd_trim);

  std::string ev_run;
  int ev_episodes = 100;
  std::uint64_t ev_seed = 0;
  CLI::App* eval = app.add_subcommand("eval", "greedy-policy evaluation of an artifact");
  eval->add_option("--run", ev_run)->required();
  eval->add_option("--episodes", ev_episodes);
  eval->add_option("--seed", ev_seed);

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cli_detail::run_train(tf);
    if (verify->parsed()) return cli_detail::run_verify(run_dir, tolerance);
    if (explain->parsed())
      return cli_detail::run_explain(ex_run, ex_state, ex_a0, ex_a1, ex_out, ex_formats, ex_table,
                                     ex_trim);
    if (render->parsed())
      return cli_detail::run_render(rd_run, rd_state, rd_action, rd_out, rd_table, rd_trim);
    if (eval->parsed()) return cli_detail::run_eval(ev_run, ev_episodes, ev_seed);
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace beliefmap
