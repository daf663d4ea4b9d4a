#include "genpol/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "genpol/checkpoint.hpp"
#include "genpol/config.hpp"
#include "genpol/kernels.hpp"
#include "genpol/policy.hpp"

namespace genpol::cli {
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string out;
  std::string input;
  std::size_t n = 0;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Everything typed out of the config up front, so a bad value fails before
// anything is written.
struct Settings {
  Config cfg;
  fs::path dir;
  std::uint64_t seed = 0;
  ModelSpec model;  // dims filled from the dataset
  std::uint64_t model_seed = 0;
  TrainConfig pretrain;
  CriticConfig critic;
  std::size_t critic_steps = 0, critic_batch = 0;
  GmpoConfig gmpo;
  GmpgConfig gmpg;
  SolverSpec solver;
  SolverSpec lik_solver;
  TraceOptions lik_trace;
  std::size_t eval_samples = 0;
  std::size_t metric_every = 1, eval_every = 0;
};

int solver_steps(const Config& c, const std::string& key) {
  const auto v = c.count(key);
  if (v == 0) throw ConfigError(key + " must be at least 1");
  return static_cast<int>(v);
}

Settings resolve(const Flags& f) {
  Settings st;
  if (!f.config.empty()) st.cfg = Config::load(f.config);
  for (const auto& o : f.overrides) st.cfg.apply_override(o);
  const Config& c = st.cfg;

  st.dir = c.str("output.dir");
  if (st.dir.empty()) throw ConfigError("output.dir is empty");
  if (const char* root = std::getenv("GENPOL_OUTPUT_ROOT"); root && *root && st.dir.is_relative())
    st.dir = fs::path(root) / st.dir;
  st.seed = c.seed("run.seed");

  const PathKind kind = parse_path_kind(c.str("model.schedule"));
  PathSchedule sched = kind == PathKind::VPSDE ? PathSchedule::vpsde(c.real("model.beta_min"), c.real("model.beta_max"))
                       : kind == PathKind::GVP ? PathSchedule::gvp()
                                               : PathSchedule::icfm(c.real("model.icfm_sigma"));
  sched.t_eps = c.real("model.t_eps");
  if (!(sched.t_eps > 0.0 && sched.t_eps < 0.5)) throw ConfigError("model.t_eps must lie in (0, 0.5)");
  st.model.schedule = sched;
  st.model.parameterization = parse_parameterization(c.str("model.parameterization"));
  st.model.hidden = c.sizes("model.hidden");
  st.model.time_embed_width = c.count("model.time_embed_width");
  st.model.time_embed_scale = c.real("model.time_embed_scale");
  st.model_seed = c.seed("model.seed");

  MatchingConfig m;
  m.objective = parse_objective(c.str("matching.objective"));
  m.lambda = parse_lambda(c.str("matching.lambda"));
  m.time_samples = c.count("matching.time_samples");
  st.pretrain = {c.count("pretrain.steps"), c.count("pretrain.batch_size"), AdamConfig{c.real("pretrain.lr")}, m};

  st.critic.tau = c.real("critic.tau");
  st.critic.gamma = c.real("critic.gamma");
  st.critic.hidden = c.sizes("critic.hidden");
  st.critic.adam = AdamConfig{c.real("critic.lr")};
  st.critic_steps = c.count("critic.steps");
  st.critic_batch = c.count("critic.batch_size");

  st.solver = {parse_solver_scheme(c.str("solver.scheme")), solver_steps(c, "solver.steps")};

  const TrainConfig policy_train{c.count("policy.steps"), c.count("policy.gmpo_batch_size"),
                                 AdamConfig{c.real("policy.lr")}, m};
  st.gmpo.beta = c.real("policy.beta");
  st.gmpo.mode = parse_weight_mode(c.str("policy.weight_mode"));
  st.gmpo.w_max = c.real("policy.w_max");
  st.gmpo.k = c.count("policy.k");
  st.gmpo.behavior_solver = st.solver;
  st.gmpo.train = policy_train;

  st.gmpg.beta = st.gmpo.beta;
  st.gmpg.variant = parse_gmpg_variant(c.str("policy.gmpg_variant"));
  st.gmpg.solver = {parse_solver_scheme(c.str("policy.train_scheme")), solver_steps(c, "policy.t_train")};
  st.gmpg.trace = parse_trace_mode(c.str("policy.trace"), static_cast<int>(c.integer("policy.probes")));
  st.gmpg.weight_mode = st.gmpo.mode;
  st.gmpg.w_max = st.gmpo.w_max;
  st.gmpg.k = st.gmpo.k;
  st.gmpg.train = policy_train;
  st.gmpg.train.batch_size = c.count("policy.gmpg_batch_size");

  st.lik_solver = {parse_solver_scheme(c.str("likelihood.scheme")), solver_steps(c, "likelihood.steps")};
  st.lik_trace = parse_trace_mode(c.str("likelihood.trace"), static_cast<int>(c.integer("likelihood.probes")));
  st.eval_samples = c.count("eval.samples");
  st.metric_every = std::max<std::size_t>(1, c.count("output.metric_every"));
  st.eval_every = c.count("output.eval_every");

  const auto threads = c.integer("output.threads");
  if (threads < 1) throw ConfigError("output.threads must be at least 1");
  kernels::set_threads(static_cast<int>(threads));

  const std::string task = c.str("task.kind");
  if (task != "tilted_bandit" && task != "swiss_roll" && task != "chain" && task != "file")
    throw ConfigError("unknown task.kind '" + task + "'");
  if (task == "file" && c.str("task.path").empty()) throw ConfigError("task.kind = file needs task.path");
  return st;
}

void require_file(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) throw ConfigError("'" + p.string() + "' not found; run " + producer + " first");
}

fs::path dataset_path(const Settings& st) {
  if (st.cfg.str("task.kind") == "file") return st.cfg.str("task.path");
  return st.dir / "dataset.bin";
}

OfflineDataset run_dataset(const Settings& st) {
  const fs::path p = dataset_path(st);
  if (st.cfg.str("task.kind") != "file") require_file(p, "make-data");
  OfflineDataset d = load_dataset(p.string());
  d.validate();
  return d;
}

fs::path checkpoint_path(const Settings& st, const std::string& name) {
  if (name == "behavior" || name == "gmpo" || name == "gmpg" || name == "critic") return st.dir / (name + ".ckpt");
  return name;
}

std::string producer_of(const std::string& name) {
  if (name == "behavior") return "pretrain";
  if (name == "critic") return "train-critic";
  return "train-" + name;
}

GenerativeModel load_model(const Settings& st, const std::string& name) {
  const fs::path p = checkpoint_path(st, name);
  require_file(p, producer_of(name));
  return model_from_checkpoint(load_checkpoint(p.string()));
}

Critic load_critic(const Settings& st) {
  const fs::path p = st.dir / "critic.ckpt";
  require_file(p, "train-critic");
  return critic_from_checkpoint(load_checkpoint(p.string()));
}

void prepare_output(const Settings& st, const std::string& stage) {
  std::error_code ec;
  fs::create_directories(st.dir, ec);
  if (ec) throw IoError("cannot create '" + st.dir.string() + "': " + ec.message());
  const fs::path p = st.dir / (stage + ".resolved.ini");
  std::ofstream os(p);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  os << "# resolved config for " << stage << "\n" << st.cfg.render();
}

class CsvOut {
 public:
  CsvOut(const fs::path& path, const std::string& header) : path_(path), os_(path) {
    if (!os_) throw IoError("cannot write '" + path.string() + "'");
    os_ << header << '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    if (!os_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  fs::path path_;
  std::ofstream os_;
};

std::string columns(const std::string& prefix, std::size_t n) {
  std::string s;
  for (std::size_t j = 0; j < n; ++j) s += "," + prefix + std::to_string(j);
  return s;
}

// Task-specific value of generated actions; NaN when the task has no
// closed-form value.
std::optional<Tensor> task_values(const OfflineDataset& d, const Tensor& actions) {
  const auto it = d.metadata.find("task");
  if (it == d.metadata.end()) return std::nullopt;
  if (it->second == "swiss_roll") return swiss_roll_values(SwissRollTask{}, actions);
  if (it->second == "tilted_bandit") {
    Tensor v({actions.rows(), 1});
    for (std::size_t i = 0; i < actions.rows(); ++i)
      for (std::size_t j = 0; j < actions.cols(); ++j) v[i] += actions.at(i, j);
    return v;
  }
  return std::nullopt;
}

double nearest_distance(const Tensor& x, const Tensor& data) {
  if (x.rows() == 0 || data.rows() == 0) return std::nan("");
  const std::size_t d = x.cols();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = INFINITY;
    for (std::size_t j = 0; j < data.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x.at(i, k) - data.at(j, k);
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    acc += std::sqrt(best);
  }
  return acc / static_cast<double>(x.rows());
}

Tensor draw_states(const OfflineDataset& d, std::size_t n, Rng& rng) {
  return d.s.gather_rows(sample_rows(d.size(), n, rng));
}

// Training hooks: metrics CSV rows and optional periodic evaluation.
struct MetricsSink {
  CsvOut csv;
  std::size_t every;
  std::size_t steps;

  TrainHooks hooks(const Settings& st, const OfflineDataset& d) {
    TrainHooks h;
    h.on_step = [this](const StepMetrics& m) {
      if (m.step % every == 0 || m.step == steps)
        csv.row({std::to_string(m.step), num(m.loss), num(m.mean_weight), num(m.mean_advantage), num(m.eval_value)});
    };
    if (st.eval_every > 0) {
      h.eval_every = st.eval_every;
      h.eval = [&st, &d](const GenerativeModel& model) {
        Rng rng(st.seed ^ 0x5eedf00dULL);
        const Tensor a = act(model, draw_states(d, 256, rng), st.solver, rng);
        const auto v = task_values(d, a);
        return v ? static_cast<double>(v->mean()) : std::nan("");
      };
    }
    return h;
  }
};

constexpr const char* kMetricsHeader = "step,loss,mean_weight,mean_advantage,eval_value";

ModelSpec spec_for(const Settings& st, const OfflineDataset& d) {
  ModelSpec spec = st.model;
  spec.action_dim = d.action_dim();
  spec.cond_dim = d.state_dim();
  return spec;
}

int make_data(const Settings& st, const Flags& f, std::ostream& out) {
  const Config& c = st.cfg;
  const std::string kind = c.str("task.kind");
  OfflineDataset d;
  if (kind == "tilted_bandit") {
    const auto dims = c.count("task.dims");
    if (dims == 0) throw ConfigError("task.dims must be at least 1");
    d = make_tilted_gaussian_bandit(dims, c.real("task.beta_target"), c.count("task.n"), c.seed("task.seed")).data;
  } else if (kind == "swiss_roll") {
    SwissRollTask t;
    t.n = c.count("task.n");
    t.noise = c.real("task.noise");
    t.seed = c.seed("task.seed");
    d = make_swiss_roll(t);
  } else if (kind == "chain") {
    d = make_chain_mdp(c.count("task.states"));
  } else {
    d = load_dataset(c.str("task.path"));
    d.validate();
  }
  prepare_output(st, "make-data");
  save_dataset_binary(d, (st.dir / "dataset.bin").string());
  if (!f.out.empty()) save_dataset(d, f.out);
  out << "dataset: " << d.size() << " transitions, state dim " << d.state_dim() << ", action dim " << d.action_dim()
      << " -> " << (st.dir / "dataset.bin").string() << '\n';
  return kOk;
}

int pretrain(const Settings& st, std::ostream& out) {
  const OfflineDataset d = run_dataset(st);
  prepare_output(st, "pretrain");
  Rng init(st.model_seed);
  GenerativeModel mu(spec_for(st, d), init);
  Rng rng(st.seed);
  MetricsSink sink{CsvOut(st.dir / "metrics_pretrain.csv", kMetricsHeader), st.metric_every, st.pretrain.steps};
  const auto hist = pretrain_behavior(d, mu, st.pretrain, rng, sink.hooks(st, d));
  save_checkpoint(to_checkpoint(mu), (st.dir / "behavior.ckpt").string());
  out << "pretrain: " << hist.size() << " steps, final loss " << (hist.empty() ? NAN : hist.back().loss) << '\n';
  return kOk;
}

int train_critic(const Settings& st, std::ostream& out) {
  const OfflineDataset d = run_dataset(st);
  if (d.size() == 0) throw DomainError("training dataset is empty");
  prepare_output(st, "train-critic");
  Rng init(st.model_seed);
  Critic critic(d.state_dim(), d.action_dim(), st.critic, init);
  auto opt = CriticOptimizers::for_critic(critic, st.critic.adam);
  Rng rng(st.seed);
  CsvOut csv(st.dir / "metrics_critic.csv", "step,v_loss,q_loss");
  IqlLosses last{};
  for (std::size_t step = 1; step <= st.critic_steps; ++step) {
    last = iql_step(critic, d.batch(sample_rows(d.size(), st.critic_batch, rng)), opt);
    if (step % st.metric_every == 0 || step == st.critic_steps)
      csv.row({std::to_string(step), num(last.v_loss), num(last.q_loss)});
  }
  save_checkpoint(to_checkpoint(critic), (st.dir / "critic.ckpt").string());
  out << "train-critic: " << st.critic_steps << " steps, v_loss " << last.v_loss << ", q_loss " << last.q_loss << '\n';
  return kOk;
}

int train_gmpo_stage(const Settings& st, std::ostream& out) {
  const OfflineDataset d = run_dataset(st);
  const Critic critic = load_critic(st);
  std::optional<GenerativeModel> mu;
  if (st.gmpo.mode == WeightMode::Softmax) mu = load_model(st, "behavior");
  prepare_output(st, "train-gmpo");
  Rng init(st.model_seed);
  GenerativeModel pi(spec_for(st, d), init);
  Rng rng(st.seed);
  MetricsSink sink{CsvOut(st.dir / "metrics_gmpo.csv", kMetricsHeader), st.metric_every, st.gmpo.train.steps};
  const auto hist = train_gmpo(d, critic, pi, st.gmpo, rng, mu ? &*mu : nullptr, sink.hooks(st, d));
  save_checkpoint(to_checkpoint(pi), (st.dir / "gmpo.ckpt").string());
  out << "train-gmpo: " << hist.size() << " steps, final loss " << (hist.empty() ? NAN : hist.back().loss) << '\n';
  return kOk;
}

int train_gmpg_stage(const Settings& st, std::ostream& out) {
  const OfflineDataset d = run_dataset(st);
  const GenerativeModel mu = load_model(st, "behavior");
  const Critic critic = load_critic(st);
  prepare_output(st, "train-gmpg");
  GenerativeModel pi;
  Rng rng(st.seed);
  MetricsSink sink{CsvOut(st.dir / "metrics_gmpg.csv", kMetricsHeader), st.metric_every, st.gmpg.train.steps};
  const auto hist = train_gmpg(d, critic, mu, pi, st.gmpg, rng, sink.hooks(st, d));
  save_checkpoint(to_checkpoint(pi), (st.dir / "gmpg.ckpt").string());
  out << "train-gmpg: " << hist.size() << " steps, final loss " << (hist.empty() ? NAN : hist.back().loss) << '\n';
  return kOk;
}

std::string chosen_checkpoint(const Settings& st, const Flags& f) {
  return f.checkpoint.empty() ? st.cfg.str("eval.checkpoint") : f.checkpoint;
}

// States for generation: dataset rows when a dataset is available, else the
// zero condition (or none for unconditional models).
Tensor generation_states(const Settings& st, const GenerativeModel& model, std::size_t n, Rng& rng) {
  const fs::path p = dataset_path(st);
  if (fs::exists(p)) {
    const OfflineDataset d = load_dataset(p.string());
    if (d.size() > 0 && d.state_dim() == model.spec().cond_dim) return draw_states(d, n, rng);
  }
  return Tensor({n, model.spec().cond_dim});
}

int sample(const Settings& st, const Flags& f, std::ostream& out) {
  const GenerativeModel model = load_model(st, chosen_checkpoint(st, f));
  const std::size_t n = f.n ? f.n : st.eval_samples;
  prepare_output(st, "sample");
  Rng rng(st.seed);
  const Tensor s = generation_states(st, model, n, rng);
  const Tensor a = act(model, s, st.solver, rng);
  const fs::path path = f.out.empty() ? st.dir / "samples.csv" : fs::path(f.out);
  CsvOut csv(path, "sample_id" + columns("s", s.cols()) + columns("a", a.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    for (std::size_t j = 0; j < s.cols(); ++j) cells.push_back(num(s.at(i, j)));
    for (std::size_t j = 0; j < a.cols(); ++j) cells.push_back(num(a.at(i, j)));
    csv.row(cells);
  }
  out << "sample: " << n << " actions -> " << path.string() << '\n';
  return kOk;
}

int logprob(const Settings& st, const Flags& f, std::ostream& out) {
  const GenerativeModel model = load_model(st, chosen_checkpoint(st, f));
  OfflineDataset d;
  if (f.input.empty()) {
    d = run_dataset(st);
  } else {
    d = load_dataset(f.input);
    d.validate();
  }
  if (d.action_dim() != model.spec().action_dim || d.state_dim() != model.spec().cond_dim)
    throw ConfigError("dataset dims do not match the checkpoint");
  const std::size_t n = f.n ? std::min(f.n, d.size()) : d.size();
  prepare_output(st, "logprob");
  Rng rng(st.seed);
  const fs::path path = f.out.empty() ? st.dir / "logprob.csv" : fs::path(f.out);
  CsvOut csv(path, "point_id,logp,stderr");
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t e = std::min(n, b + kChunk);
    const auto r = log_prob(model, d.a.row_slice(b, e), d.s.row_slice(b, e), st.lik_solver, st.lik_trace, rng);
    for (std::size_t i = 0; i < e - b; ++i) {
      csv.row({std::to_string(b + i), num(r.log_density[i]), num(r.std_error[i])});
      total += r.log_density[i];
    }
  }
  out << "logprob: " << n << " points, mean log density " << (n ? total / static_cast<double>(n) : NAN) << " -> "
      << path.string() << '\n';
  return kOk;
}

int eval(const Settings& st, const Flags& f, std::ostream& out) {
  const std::string name = chosen_checkpoint(st, f);
  const GenerativeModel model = load_model(st, name);
  const OfflineDataset d = run_dataset(st);
  std::optional<Critic> critic;
  if (fs::exists(st.dir / "critic.ckpt")) critic = load_critic(st);
  const std::size_t n = f.n ? f.n : st.eval_samples;
  prepare_output(st, "eval");
  Rng rng(st.seed);
  const Tensor s = draw_states(d, n, rng);
  const Tensor a = act(model, s, st.solver, rng);

  std::vector<std::pair<std::string, double>> rows{{"samples", static_cast<double>(n)}};
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += a.at(i, j);
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) v += (a.at(i, j) - m) * (a.at(i, j) - m);
    rows.emplace_back("action_mean_" + std::to_string(j), m);
    rows.emplace_back("action_std_" + std::to_string(j), std::sqrt(v / static_cast<double>(n > 1 ? n - 1 : 1)));
  }
  const auto values = task_values(d, a);
  rows.emplace_back("task_value", values ? static_cast<double>(values->mean()) : NAN);
  rows.emplace_back("q_mean", critic ? static_cast<double>(critic->q_value(s, a).mean()) : NAN);
  rows.emplace_back("nearest_data_distance", nearest_distance(a, d.a));

  const fs::path path = f.out.empty() ? st.dir / ("eval_" + fs::path(name).stem().string() + ".csv") : fs::path(f.out);
  CsvOut csv(path, "metric,value");
  for (const auto& [k, v] : rows) {
    csv.row({k, num(v)});
    out << k << " = " << num(v) << '\n';
  }
  return kOk;
}

int export_trajectories(const Settings& st, const Flags& f, std::ostream& out) {
  const GenerativeModel model = load_model(st, chosen_checkpoint(st, f));
  const std::size_t n = f.n ? f.n : st.eval_samples;
  prepare_output(st, "export-trajectories");
  Rng rng(st.seed);
  const Tensor s = generation_states(st, model, n, rng);
  const auto res = generate(model, n, st.solver, s, rng, true);
  const fs::path path = f.out.empty() ? st.dir / "trajectories.csv" : fs::path(f.out);
  CsvOut csv(path, "sample_id,k,t" + columns("x", model.spec().action_dim));
  if (res.trajectory) {
    const Trajectory& tr = *res.trajectory;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::vector<std::string> cells{std::to_string(i), std::to_string(k), num(tr.t[k])};
        for (std::size_t j = 0; j < tr.x[k].cols(); ++j) cells.push_back(num(tr.x[k].at(i, j)));
        csv.row(cells);
      }
  }
  out << "export-trajectories: " << n << " samples x " << st.solver.steps + 1 << " points -> " << path.string()
      << '\n';
  return kOk;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::Numeric: return kNumeric;
    case ErrorKind::Config:
    case ErrorKind::Unsupported:
    case ErrorKind::Shape:
    case ErrorKind::Domain: return kConfig;
  }
  return kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion and flow policies for offline RL", "genpol"};
  app.require_subcommand(1, 1);
  Flags f;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"make-data", "generate or import the dataset into the run directory"},
      {"pretrain", "fit the behavior model"},
      {"train-critic", "fit Q and V by expectile regression"},
      {"train-gmpo", "advantage-weighted matching regression"},
      {"train-gmpg", "policy gradient through the differentiable solve"},
      {"sample", "draw actions from a checkpoint"},
      {"logprob", "log-density of dataset actions under a checkpoint"},
      {"eval", "sample statistics and task value of a checkpoint"},
      {"export-trajectories", "write full solver trajectories as CSV"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "INI config file");
    sub->add_option("--set", f.overrides, "section.key=value override")->take_all();
    if (name == "make-data") sub->add_option("--out", f.out, "also write the dataset here (.csv or binary)");
    if (name == "sample" || name == "logprob" || name == "eval" || name == "export-trajectories") {
      sub->add_option("--checkpoint", f.checkpoint, "behavior | gmpo | gmpg or a checkpoint path");
      sub->add_option("--out", f.out, "output CSV path");
      sub->add_option("--n", f.n, "number of samples / points");
    }
    if (name == "logprob") sub->add_option("--input", f.input, "dataset file to score");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const Settings st = resolve(f);
    if (cmd == "make-data") return make_data(st, f, out);
    if (cmd == "pretrain") return pretrain(st, out);
    if (cmd == "train-critic") return train_critic(st, out);
    if (cmd == "train-gmpo") return train_gmpo_stage(st, out);
    if (cmd == "train-gmpg") return train_gmpg_stage(st, out);
    if (cmd == "sample") return sample(st, f, out);
    if (cmd == "logprob") return logprob(st, f, out);
    if (cmd == "eval") return eval(st, f, out);
    return export_trajectories(st, f, out);
  } catch (const Error& e) {
    err << "genpol " << cmd << ": " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "genpol " << cmd << ": " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace genpol::cli
