#include "genpol/checkpoint.hpp"

#include <sstream>

#include "binary_io.hpp"

namespace genpol {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoul(tok));
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void add_mlp(Checkpoint& ck, const std::string& prefix, const Mlp& net) {
  ck.metadata[prefix + ".input_dim"] = std::to_string(net.spec().input_dim);
  ck.metadata[prefix + ".hidden"] = join(net.spec().hidden);
  ck.metadata[prefix + ".output_dim"] = std::to_string(net.spec().output_dim);
  ck.metadata[prefix + ".activation"] = net.spec().activation == Activation::Tanh ? "tanh" : "linear";
  for (std::size_t i = 0; i < net.params().size(); ++i)
    ck.tensors.emplace_back(prefix + (i % 2 ? ".b" : ".W") + std::to_string(i / 2), net.params()[i]);
}

Mlp read_mlp(const Checkpoint& ck, const std::string& prefix) {
  MlpSpec spec;
  spec.input_dim = std::stoul(ck.meta(prefix + ".input_dim"));
  spec.hidden = split_sizes(ck.meta(prefix + ".hidden"));
  spec.output_dim = std::stoul(ck.meta(prefix + ".output_dim"));
  spec.activation = ck.meta(prefix + ".activation") == "linear" ? Activation::Linear : Activation::Tanh;
  std::vector<Tensor> params;
  for (std::size_t l = 0; l <= spec.hidden.size(); ++l) {
    params.push_back(ck.tensor(prefix + ".W" + std::to_string(l)));
    params.push_back(ck.tensor(prefix + ".b" + std::to_string(l)));
  }
  return Mlp::from_params(std::move(spec), std::move(params));
}

void expect_kind(const Checkpoint& ck, const std::string& kind) {
  if (ck.meta("kind") != kind) throw IoError("checkpoint holds a " + ck.meta("kind") + ", expected a " + kind);
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw IoError("checkpoint has no tensor '" + name + "'");
}

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw IoError("checkpoint has no metadata key '" + key + "'");
  return it->second;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  detail::BinaryWriter w(path);
  w.raw("GPCK", 4);
  w.u32(kCheckpointVersion);
  w.u64(ck.metadata.size());
  for (const auto& [k, v] : ck.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u64(ck.tensors.size());
  for (const auto& [name, t] : ck.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.u64(e);
    w.values(t);
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  detail::BinaryReader rd(path);
  rd.magic("GPCK");
  const std::uint32_t version = rd.u32();
  if (version != kCheckpointVersion)
    throw IoError("'" + path + "': unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  const std::uint64_t nmeta = rd.u64();
  if (nmeta > (1U << 20)) throw IoError("'" + path + "': corrupt header");
  for (std::uint64_t i = 0; i < nmeta; ++i) {
    std::string k = rd.str();
    ck.metadata[k] = rd.str();
  }
  const std::uint64_t ntensors = rd.u64();
  if (ntensors > (1U << 20)) throw IoError("'" + path + "': corrupt header");
  for (std::uint64_t i = 0; i < ntensors; ++i) {
    std::string name = rd.str();
    const std::uint32_t rank = rd.u32();
    if (rank > 2) throw IoError("'" + path + "': tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& e : shape) e = rd.u64();
    if (shape_numel(shape) > (1ULL << 32)) throw IoError("'" + path + "': tensor '" + name + "' is implausibly large");
    ck.tensors.emplace_back(std::move(name), rd.values(shape));
  }
  return ck;
}

Checkpoint to_checkpoint(const GenerativeModel& model) {
  Checkpoint ck;
  const ModelSpec& s = model.spec();
  ck.metadata = {{"kind", "generative_model"},
                 {"schedule", to_string(s.schedule.kind)},
                 {"beta_min", num(s.schedule.beta_min)},
                 {"beta_max", num(s.schedule.beta_max)},
                 {"icfm_sigma", num(s.schedule.icfm_sigma)},
                 {"t_eps", num(s.schedule.t_eps)},
                 {"parameterization", to_string(s.parameterization)},
                 {"action_dim", std::to_string(s.action_dim)},
                 {"cond_dim", std::to_string(s.cond_dim)},
                 {"time_embed_width", std::to_string(s.time_embed_width)},
                 {"time_embed_scale", num(s.time_embed_scale)}};
  ck.tensors.emplace_back("embed.freqs", model.embedding().frequencies());
  add_mlp(ck, "net", model.net());
  return ck;
}

GenerativeModel model_from_checkpoint(const Checkpoint& ck) {
  expect_kind(ck, "generative_model");
  ModelSpec s;
  try {
    s.schedule.kind = parse_path_kind(ck.meta("schedule"));
    s.parameterization = parse_parameterization(ck.meta("parameterization"));
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  s.schedule.beta_min = std::stod(ck.meta("beta_min"));
  s.schedule.beta_max = std::stod(ck.meta("beta_max"));
  s.schedule.icfm_sigma = std::stod(ck.meta("icfm_sigma"));
  s.schedule.t_eps = std::stod(ck.meta("t_eps"));
  s.action_dim = std::stoul(ck.meta("action_dim"));
  s.cond_dim = std::stoul(ck.meta("cond_dim"));
  s.time_embed_width = std::stoul(ck.meta("time_embed_width"));
  s.time_embed_scale = std::stod(ck.meta("time_embed_scale"));
  Mlp net = read_mlp(ck, "net");
  s.hidden = net.spec().hidden;
  try {
    return GenerativeModel(std::move(s), FourierTimeEmbedding(ck.tensor("embed.freqs")), std::move(net));
  } catch (const ShapeError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint to_checkpoint(const Critic& critic) {
  Checkpoint ck;
  ck.metadata = {{"kind", "critic"},
                 {"state_dim", std::to_string(critic.state_dim())},
                 {"action_dim", std::to_string(critic.action_dim())},
                 {"tau", num(critic.tau())},
                 {"gamma", num(critic.gamma())}};
  add_mlp(ck, "q", critic.q_net());
  add_mlp(ck, "v", critic.v_net());
  return ck;
}

Critic critic_from_checkpoint(const Checkpoint& ck) {
  expect_kind(ck, "critic");
  try {
    return Critic(std::stoul(ck.meta("state_dim")), std::stoul(ck.meta("action_dim")), std::stod(ck.meta("tau")),
                  std::stod(ck.meta("gamma")), read_mlp(ck, "q"), read_mlp(ck, "v"));
  } catch (const ShapeError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace genpol
