#include "genpol/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <sstream>

#include "genpol/error.hpp"

namespace genpol {

const std::vector<Config::Entry>& Config::schema() {
  static const std::vector<Entry> entries{
      {"task.kind", "tilted_bandit", "tilted_bandit | swiss_roll | chain | file"},
      {"task.path", "", "dataset file when kind = file (.csv or binary)"},
      {"task.n", "10000", "generated transitions"},
      {"task.seed", "0", ""},
      {"task.dims", "1", "tilted bandit action dims"},
      {"task.beta_target", "1.0", "tilted bandit temperature used for the reported target"},
      {"task.noise", "0.6", "swiss roll position noise"},
      {"task.states", "5", "chain length"},

      {"model.schedule", "icfm", "vpsde | gvp | icfm"},
      {"model.parameterization", "velocity", "velocity | noise | score"},
      {"model.beta_min", "0.1", ""},
      {"model.beta_max", "20", ""},
      {"model.icfm_sigma", "0", ""},
      {"model.t_eps", "0.001", "time clipping"},
      {"model.hidden", "256,256,256", ""},
      {"model.time_embed_width", "32", ""},
      {"model.time_embed_scale", "1.0", ""},
      {"model.seed", "0", "initialization seed"},

      {"matching.objective", "cfm", "cfm | dsm"},
      {"matching.lambda", "vanilla", "vanilla | mlsm | unit (dsm only)"},
      {"matching.time_samples", "1", ""},

      {"pretrain.steps", "1000", ""},
      {"pretrain.batch_size", "256", ""},
      {"pretrain.lr", "1e-4", ""},

      {"critic.tau", "0.7", ""},
      {"critic.gamma", "0.99", ""},
      {"critic.lr", "1e-4", ""},
      {"critic.steps", "1000", ""},
      {"critic.batch_size", "256", ""},
      {"critic.hidden", "256,256", ""},

      {"policy.beta", "1.0", ""},
      {"policy.weight_mode", "exponential", "exponential | softmax"},
      {"policy.w_max", "100", ""},
      {"policy.k", "16", "softmax candidates per state"},
      {"policy.steps", "1000", ""},
      {"policy.lr", "1e-4", ""},
      {"policy.gmpo_batch_size", "64", ""},
      {"policy.gmpg_batch_size", "512", ""},
      {"policy.gmpg_variant", "dynamic", "dynamic | static"},
      {"policy.t_train", "1000", "solver steps inside GMPG"},
      {"policy.train_scheme", "euler", "solver scheme inside GMPG"},
      {"policy.trace", "exact", "exact | hutchinson | hutchinson_rademacher"},
      {"policy.probes", "1", ""},

      {"solver.scheme", "euler", "euler | midpoint | rk4_38"},
      {"solver.steps", "32", "evaluation / sampling steps"},

      {"likelihood.trace", "exact", ""},
      {"likelihood.probes", "16", ""},
      {"likelihood.steps", "100", ""},
      {"likelihood.scheme", "rk4_38", ""},

      {"eval.samples", "1000", ""},
      {"eval.checkpoint", "gmpo", "behavior | gmpo | gmpg | path to a checkpoint"},

      {"output.dir", "run", "relative paths resolve under $GENPOL_OUTPUT_ROOT when set"},
      {"output.metric_every", "1", "write every n-th step to the metrics CSV"},
      {"output.eval_every", "0", "0 disables in-training evaluation"},
      {"output.threads", "1", ""},

      {"run.seed", "0", "training stream seed"},
  };
  return entries;
}

Config::Config() {
  for (const auto& e : schema()) values_[e.key] = e.value;
}

Config Config::load(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path + "' does not exist");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("'" + path + "': key '" + section + "' is outside any [section]");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.get_value<std::string>());
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::real(const std::string& key) const {
  const std::string& s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
}

std::int64_t Config::integer(const std::string& key) const {
  const std::string& s = str(key);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

std::size_t Config::count(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::seed(const std::string& key) const {
  const std::string& s = str(key);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + s + "'");
  return v;
}

std::vector<std::size_t> Config::sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  std::istringstream is(str(key));
  std::string tok;
  while (std::getline(is, tok, ',')) {
    std::size_t v = 0;
    const auto b = tok.find_first_not_of(' '), e = tok.find_last_not_of(' ');
    if (b == std::string::npos) throw ConfigError("config key '" + key + "' has an empty list entry");
    const auto [p, ec] = std::from_chars(tok.data() + b, tok.data() + e + 1, v);
    if (ec != std::errc() || p != tok.data() + e + 1 || v == 0)
      throw ConfigError("config key '" + key + "' expects a list of positive sizes, got '" + str(key) + "'");
    out.push_back(v);
  }
  return out;
}

std::string Config::render() const {
  std::ostringstream os;
  std::string section;
  for (const auto& e : schema()) {
    const auto dot = e.key.find('.');
    const std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    os << e.key.substr(dot + 1) << " = " << values_.at(e.key) << '\n';
  }
  return os.str();
}

}  // namespace genpol
