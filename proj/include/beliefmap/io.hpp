#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "beliefmap/belief.hpp"
#include "beliefmap/train.hpp"

namespace beliefmap {

using json = nlohmann::json;

inline constexpr int kArtifactFormatVersion = 1;
inline constexpr char kTensorMagic[8] = {'B', 'L', 'F', 'M', 'A', 'P', '0', '1'};

// FNV-1a, used for config provenance hashes embedded in exports.
inline std::uint64_t fnv1a_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

// Container layout: magic "BLFMAP01", format version u32, rank u32, dims as
// u64, then row-major IEEE-754 doubles; every integer and double is
// little-endian regardless of host.
inline void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  std::string out;
  out.reserve(16 + 8 * t.dims.size() + 8 * t.data.size());
  out.append(kTensorMagic, sizeof kTensorMagic);
  detail::put_u32(out, kArtifactFormatVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::put_u64(out, d);
  if (t.data.size() != t.element_count())
    throw std::invalid_argument("write_tensor_file: dims do not match data size");
  for (double v : t.data) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write: " + path.string());
}

inline Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open tensor container: " + path.string());
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 16 || std::memcmp(p, kTensorMagic, sizeof kTensorMagic) != 0)
    throw std::runtime_error("bad tensor container magic: " + path.string());
  const std::uint32_t version = detail::get_u32(p + 8);
  if (version != kArtifactFormatVersion)
    throw std::runtime_error("unsupported tensor container version in " + path.string());
  const std::uint32_t rank = detail::get_u32(p + 12);
  std::size_t off = 16;
  if (raw.size() < off + 8ULL * rank)
    throw std::runtime_error("truncated tensor header: " + path.string());
  Tensor t;
  for (std::uint32_t i = 0; i < rank; ++i, off += 8) t.dims.push_back(detail::get_u64(p + off));
  const std::size_t n = t.element_count();
  if (raw.size() != off + 8 * n)
    throw std::runtime_error("tensor payload size mismatch: " + path.string());
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i, off += 8)
    t.data[i] = std::bit_cast<double>(detail::get_u64(p + off));
  return t;
}

// CSV schema shared by all tensor exports: one row per entry above the 1e-12
// magnitude threshold. Rank-4 tensors iterate all four indices; (s', a')
// slices repeat their query pair in the first two columns.
inline void write_rank4_csv(const std::filesystem::path& path, const BeliefTensor& h) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "s,a,s_next,a_next,value\n";
  char buf[64];
  for (int s = 0; s < h.num_states(); ++s)
    for (int a = 0; a < h.num_actions(); ++a) {
      auto slice = h.slice(s, a);
      for (int sn = 0; sn < h.num_states(); ++sn)
        for (int an = 0; an < h.num_actions(); ++an) {
          const double v = slice[static_cast<std::size_t>(sn) * h.num_actions() + an];
          if (std::abs(v) <= 1e-12) continue;
          std::snprintf(buf, sizeof buf, "%.17g", v);
          f << s << ',' << a << ',' << sn << ',' << an << ',' << buf << '\n';
        }
    }
}

inline void write_slice_csv(const std::filesystem::path& path, int s, int a,
                            std::span<const double> values, int num_actions) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << "s,a,s_next,a_next,value\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) <= 1e-12) continue;
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    f << s << ',' << a << ',' << i / num_actions << ',' << i % num_actions << ',' << buf << '\n';
  }
}

// ---- config (de)serialisation ------------------------------------------

inline json to_json(const EpsilonSchedule& e) {
  switch (e.kind) {
    case EpsilonSchedule::Kind::ExponentialDecay:
      return {{"kind", "exponential"}, {"start", e.start}, {"end", e.end},
              {"decay_rate", e.decay_rate}};
    case EpsilonSchedule::Kind::LinearDecay:
      return {{"kind", "linear"}, {"start", e.start}, {"end", e.end},
              {"over_episodes", e.over_episodes}};
    case EpsilonSchedule::Kind::Constant:
    default:
      return {{"kind", "constant"}, {"start", e.start}};
  }
}

inline EpsilonSchedule epsilon_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "exponential")
    return EpsilonSchedule::exponential(j.at("start"), j.at("end"), j.at("decay_rate"));
  if (kind == "linear")
    return EpsilonSchedule::linear(j.at("start"), j.at("end"), j.at("over_episodes"));
  if (kind == "constant") return EpsilonSchedule::constant(j.at("start"));
  throw std::runtime_error("unknown epsilon schedule kind: " + kind);
}

inline json to_json(const InitMode& m) {
  if (m.kind == InitKind::Zero) return {{"kind", "zero"}};
  return {{"kind", "random"}, {"seed", m.seed}, {"scale", m.scale}};
}

inline InitMode init_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "zero") return {};
  if (kind == "random") return {InitKind::Random, j.at("seed"), j.at("scale")};
  throw std::runtime_error("unknown init kind: " + kind);
}

inline json to_json(const TabularConfig& c) {
  return {{"env", c.env_name},
          {"algo", to_string(c.algo)},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"episodes", c.episodes},
          {"epsilon", to_json(c.epsilon)},
          {"seed", c.seed},
          {"q_init", to_json(c.q_init)},
          {"h_init", to_json(c.h_init)},
          {"reward_source",
           c.reward_source == RewardMap::Source::EnvGroundTruth ? "ground-truth" : "proxy"},
          {"horizon_override", c.horizon_override}};
}

inline TabularConfig tabular_config_from_json(const json& j) {
  TabularConfig c;
  c.env_name = j.at("env");
  c.algo = algo_from_string(j.at("algo"));
  c.alpha = j.at("alpha");
  c.gamma = j.at("gamma");
  c.episodes = j.at("episodes");
  c.epsilon = epsilon_from_json(j.at("epsilon"));
  c.seed = j.at("seed");
  c.q_init = init_from_json(j.at("q_init"));
  c.h_init = init_from_json(j.at("h_init"));
  c.reward_source = j.at("reward_source") == "proxy" ? RewardMap::Source::EmpiricalProxy
                                                     : RewardMap::Source::EnvGroundTruth;
  c.horizon_override = j.at("horizon_override");
  return c;
}

inline json to_json(const DeepConfig& c) {
  return {{"env", c.env_name},
          {"algo", c.with_dbn ? "dbn" : "dqn"},
          {"learning_rate", c.learning_rate},
          {"gamma", c.gamma},
          {"episodes", c.episodes},
          {"batch", c.batch},
          {"epsilon", to_json(c.epsilon)},
          {"seed", c.seed},
          {"replay_capacity", c.replay_capacity},
          {"target_sync_every", c.target_sync_every},
          {"learn_start", c.learn_start},
          {"dbn_every", c.dbn_every},
          {"literal_loss_form", c.literal_loss_form}};
}

inline DeepConfig deep_config_from_json(const json& j) {
  DeepConfig c;
  c.env_name = j.at("env");
  c.with_dbn = j.at("algo") == "dbn";
  c.learning_rate = j.at("learning_rate");
  c.gamma = j.at("gamma");
  c.episodes = j.at("episodes");
  c.batch = j.at("batch");
  c.epsilon = epsilon_from_json(j.at("epsilon"));
  c.seed = j.at("seed");
  c.replay_capacity = j.at("replay_capacity");
  c.target_sync_every = j.at("target_sync_every");
  c.learn_start = j.at("learn_start");
  c.dbn_every = j.at("dbn_every");
  c.literal_loss_form = j.at("literal_loss_form");
  return c;
}

// ---- run artifacts -------------------------------------------------------

struct RunArtifact {
  json manifest;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("artifact has no tensor: " + name);
    return it->second;
  }
  bool has_tensor(const std::string& name) const { return tensors.count(name) != 0; }
};

namespace detail {

inline Tensor qtable_tensor(const QTable& q) {
  return {{static_cast<std::uint64_t>(q.num_states()), static_cast<std::uint64_t>(q.num_actions())},
          {q.data().begin(), q.data().end()}};
}

inline Tensor belief_tensor(const BeliefTensor& h) {
  const auto s = static_cast<std::uint64_t>(h.num_states());
  const auto a = static_cast<std::uint64_t>(h.num_actions());
  return {{s, a, s, a}, {h.data().begin(), h.data().end()}};
}

inline Tensor reward_tensor(const RewardMap& r) {
  return {{static_cast<std::uint64_t>(r.num_states()), static_cast<std::uint64_t>(r.num_actions())},
          {r.data().begin(), r.data().end()}};
}

inline Tensor vector_tensor(const std::vector<double>& v) {
  return {{v.size()}, v};
}

inline Tensor matrix_tensor(const Matrix& m) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

inline Matrix tensor_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw std::runtime_error("expected a rank-2 tensor for a weight matrix");
  Matrix m(t.dims[0], t.dims[1]);
  for (std::uint64_t r = 0; r < t.dims[0]; ++r)
    for (std::uint64_t c = 0; c < t.dims[1]; ++c) m(r, c) = t.data[r * t.dims[1] + c];
  return m;
}

inline void add_mlp_tensors(std::map<std::string, Tensor>& tensors, const std::string& prefix,
                            const MlpFunction& f) {
  for (std::size_t l = 0; l < f.num_layers(); ++l) {
    tensors[prefix + "_w" + std::to_string(l)] = matrix_tensor(f.weights()[l]);
    tensors[prefix + "_b" + std::to_string(l)] =
        vector_tensor({f.biases()[l].data(), f.biases()[l].data() + f.biases()[l].size()});
  }
}

inline MlpFunction load_mlp(const RunArtifact& art, const std::string& prefix,
                            const std::vector<int>& sizes) {
  MlpFunction f(sizes);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    f.weights()[l] = tensor_matrix(art.tensor(prefix + "_w" + std::to_string(l)));
    const Tensor& b = art.tensor(prefix + "_b" + std::to_string(l));
    f.biases()[l] = Eigen::Map<const Vector>(b.data.data(), static_cast<Eigen::Index>(b.data.size()));
  }
  return f;
}

}  // namespace detail

inline std::string config_hash(const json& config) {
  return hex64(fnv1a_hash(config.dump()));
}

inline void write_manifest(const std::filesystem::path& dir, json manifest) {
  std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write manifest in " + dir.string());
  f << manifest.dump(2) << '\n';
}

inline void write_artifact_tensors(const std::filesystem::path& dir, json manifest,
                                   const std::map<std::string, Tensor>& tensors) {
  json index = json::object();
  for (const auto& [name, tensor] : tensors) {
    const std::string file = name + ".blf";
    write_tensor_file(dir / file, tensor);
    index[name] = {{"file", file}, {"dims", tensor.dims}};
  }
  manifest["tensors"] = index;
  write_manifest(dir, std::move(manifest));
}

// Writes a finished tabular run: manifest + containers for the value
// table(s), belief tensor(s), reward map and training curve.
inline void save_tabular_artifact(const std::filesystem::path& dir, const TabularTrainer& trainer,
                                  const Environment& env) {
  std::filesystem::create_directories(dir);
  const json config = to_json(trainer.config());
  const ConsistencyReport rep = trainer.consistency();
  json manifest = {{"format_version", kArtifactFormatVersion},
                   {"kind", "tabular"},
                   {"config", config},
                   {"config_hash", config_hash(config)},
                   {"env_codec", env.codec_name()},
                   {"codec_doc", "README.md#state-id-codecs"},
                   {"rng_algorithm", kRngAlgorithm},
                   {"num_states", env.num_states()},
                   {"num_actions", env.num_actions()},
                   {"consistency", {{"max_abs_err", rep.max_abs_err},
                                    {"state", rep.state},
                                    {"action", rep.action}}}};
  std::map<std::string, Tensor> tensors;
  if (trainer.is_twin()) {
    tensors["q_a"] = detail::qtable_tensor(trainer.twin_q().a);
    tensors["q_b"] = detail::qtable_tensor(trainer.twin_q().b);
    tensors["h_a"] = detail::belief_tensor(trainer.twin_h().a);
    tensors["h_b"] = detail::belief_tensor(trainer.twin_h().b);
  } else {
    tensors["q"] = detail::qtable_tensor(trainer.q());
    tensors["h"] = detail::belief_tensor(trainer.h());
  }
  tensors["r"] = detail::reward_tensor(trainer.rewards());
  tensors["returns"] = detail::vector_tensor(trainer.episode_returns());
  write_artifact_tensors(dir, std::move(manifest), tensors);
}

inline void save_deep_artifact(const std::filesystem::path& dir, const DeepTrainer& trainer,
                               const DeepConfig& config, const Environment& env,
                               const json& extra_reports = json::object()) {
  std::filesystem::create_directories(dir);
  const json cj = to_json(config);
  json manifest = {{"format_version", kArtifactFormatVersion},
                   {"kind", "deep"},
                   {"config", cj},
                   {"config_hash", config_hash(cj)},
                   {"env_codec", env.codec_name()},
                   {"codec_doc", "README.md#state-id-codecs"},
                   {"rng_algorithm", kRngAlgorithm},
                   {"num_states", env.num_states()},
                   {"num_actions", env.num_actions()},
                   {"reports", extra_reports}};
  std::map<std::string, Tensor> tensors;
  detail::add_mlp_tensors(tensors, "dqn", trainer.qnet());
  if (config.with_dbn) {
    if (config.env_name == "cartpole") {
      detail::add_mlp_tensors(tensors, "dbn", trainer.hnet());
    } else {
      detail::add_mlp_tensors(tensors, "dbn_state", trainer.hnet_taxi().state_stream());
      detail::add_mlp_tensors(tensors, "dbn_action", trainer.hnet_taxi().action_stream());
      detail::add_mlp_tensors(tensors, "dbn_trunk", trainer.hnet_taxi().trunk());
    }
  }
  tensors["returns"] = detail::vector_tensor(trainer.episode_returns());
  tensors["dqn_loss"] = detail::vector_tensor(trainer.episode_dqn_loss());
  tensors["dbn_loss"] = detail::vector_tensor(trainer.episode_dbn_loss());
  write_artifact_tensors(dir, std::move(manifest), tensors);
}

inline RunArtifact load_artifact(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error("no manifest.json in " + dir.string());
  RunArtifact art;
  try {
    art.manifest = json::parse(f);
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt manifest in " + dir.string() + ": " + e.what());
  }
  if (!art.manifest.contains("format_version")
      || art.manifest["format_version"] != kArtifactFormatVersion)
    throw std::runtime_error("unsupported artifact format version in " + dir.string());
  for (const auto& [name, entry] : art.manifest.at("tensors").items()) {
    Tensor t = read_tensor_file(dir / entry.at("file").get<std::string>());
    if (t.dims != entry.at("dims").get<std::vector<std::uint64_t>>())
      throw std::runtime_error("tensor dims disagree with manifest for " + name);
    art.tensors[name] = std::move(t);
  }
  return art;
}

// Reconstructs typed views from a loaded tabular artifact.
inline QTable qtable_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) throw std::runtime_error("q tensor must be rank 2");
  QTable q(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  std::copy(t.data.begin(), t.data.end(), q.mutable_data().begin());
  return q;
}

inline BeliefTensor belief_from_tensor(const Tensor& t, double gamma) {
  if (t.dims.size() != 4 || t.dims[0] != t.dims[2] || t.dims[1] != t.dims[3])
    throw std::runtime_error("h tensor must be rank 4 with matching (s, a) pairs");
  BeliefTensor h(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), gamma);
  std::copy(t.data.begin(), t.data.end(), h.mutable_data().begin());
  return h;
}

inline RewardMap rewards_from_tensor(const Tensor& t, RewardMap::Source source) {
  if (t.dims.size() != 2) throw std::runtime_error("r tensor must be rank 2");
  RewardMap r(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), source);
  std::copy(t.data.begin(), t.data.end(), r.mutable_data().begin());
  return r;
}

}  // namespace beliefmap
