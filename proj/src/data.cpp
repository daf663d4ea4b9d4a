#include "genpol/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"

namespace genpol {
namespace {

constexpr std::uint32_t kDatasetVersion = 1;

void check_rows(const Tensor& t, std::size_t n, const char* name) {
  if (t.rows() != n && !(n == 0 && t.numel() == 0))
    throw ShapeError(std::string("dataset column '") + name + "' has " + std::to_string(t.rows()) + " rows, expected " +
                     std::to_string(n));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::size_t count_prefixed(const std::map<std::string, std::size_t>& cols, const std::string& prefix) {
  std::size_t n = 0;
  while (cols.contains(prefix + std::to_string(n))) ++n;
  return n;
}

}  // namespace

void OfflineDataset::validate() const {
  const std::size_t n = size();
  check_rows(s, n, "s");
  check_rows(r, n, "r");
  check_rows(s_next, n, "s_next");
  check_rows(done, n, "done");
  if (r.cols() != 1 || done.cols() != 1) throw ShapeError("r and done must be single columns");
  if (s.cols() != s_next.cols()) throw ShapeError("s and s_next have different widths");
  const Tensor* cols[] = {&s, &a, &r, &s_next, &done};
  const char* names[] = {"s", "a", "r", "s_next", "done"};
  for (int c = 0; c < 5; ++c) {
    const Tensor& t = *cols[c];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      if (!std::isfinite(t[i]))
        throw DomainError(std::string("non-finite ") + names[c] + " at row " + std::to_string(i / t.cols()));
    }
  }
  for (std::size_t i = 0; i < done.numel(); ++i) {
    if (done[i] != 0 && done[i] != 1) throw DomainError("done flag at row " + std::to_string(i) + " is not 0/1");
  }
}

TransitionBatch OfflineDataset::batch(std::span<const std::size_t> rows) const {
  return {s.gather_rows(rows), a.gather_rows(rows), r.gather_rows(rows), s_next.gather_rows(rows),
          done.gather_rows(rows)};
}

OfflineDataset make_dataset(Tensor s, Tensor a, Tensor r, Tensor s_next, Tensor done) {
  OfflineDataset d{std::move(s), std::move(a), std::move(r), std::move(s_next), std::move(done), {}};
  d.validate();
  return d;
}

double swiss_roll_value(const SwissRollTask& task, double angle) {
  const double u = (angle - task.angle_min) / (task.angle_max - task.angle_min);
  return task.value_min + u * (task.value_max - task.value_min);
}

OfflineDataset make_swiss_roll(const SwissRollTask& task) {
  if (task.n < 1) throw DomainError("swiss roll needs at least one sample");
  Rng rng(task.seed);
  const std::size_t n = task.n;
  Tensor a({n, 2}), r({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = rng.uniform(task.angle_min, task.angle_max);
    const double ex = rng.normal(), ey = rng.normal();
    a.at(i, 0) = static_cast<Real>(theta * std::cos(theta) + task.noise * ex);
    a.at(i, 1) = static_cast<Real>(theta * std::sin(theta) + task.noise * ey);
    r[i] = static_cast<Real>(swiss_roll_value(task, theta));
  }
  OfflineDataset d = make_dataset(Tensor({n, 1}), std::move(a), std::move(r), Tensor({n, 1}), Tensor({n, 1}, 1.0));
  std::ostringstream angle;
  angle.precision(17);
  angle << task.angle_min << ',' << task.angle_max;
  d.metadata = {{"task", "swiss_roll"},
                {"seed", std::to_string(task.seed)},
                {"noise", std::to_string(task.noise)},
                {"value_map", "linear_in_angle"},
                {"angle_range", angle.str()},
                {"value_range", std::to_string(task.value_min) + "," + std::to_string(task.value_max)}};
  return d;
}

double swiss_roll_nearest_angle(const SwissRollTask& task, double x, double y) {
  auto dist2 = [&](double th) {
    const double dx = th * std::cos(th) - x, dy = th * std::sin(th) - y;
    return dx * dx + dy * dy;
  };
  constexpr int kGrid = 2048;
  const double step = (task.angle_max - task.angle_min) / kGrid;
  int best = 0;
  double best_d = dist2(task.angle_min);
  for (int k = 1; k <= kGrid; ++k) {
    const double d = dist2(task.angle_min + k * step);
    if (d < best_d) best_d = d, best = k;
  }
  // golden-section refinement inside the neighbouring grid cells
  double lo = std::max(task.angle_min, task.angle_min + (best - 1) * step);
  double hi = std::min(task.angle_max, task.angle_min + (best + 1) * step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (dist2(m1) < dist2(m2)) hi = m2;
    else lo = m1;
  }
  return 0.5 * (lo + hi);
}

Tensor swiss_roll_values(const SwissRollTask& task, const Tensor& actions) {
  if (actions.cols() != 2) throw ShapeError("swiss roll actions are 2-D");
  Tensor v({actions.rows(), 1});
  for (std::size_t i = 0; i < actions.rows(); ++i)
    v[i] = static_cast<Real>(swiss_roll_value(task, swiss_roll_nearest_angle(task, actions.at(i, 0), actions.at(i, 1))));
  return v;
}

TiltedBandit make_tilted_gaussian_bandit(std::size_t dims, double beta, std::size_t n, std::uint64_t seed) {
  if (dims < 1) throw DomainError("tilted bandit needs dims >= 1");
  Rng rng(seed);
  Tensor a = rng.normal_tensor(n, dims);
  Tensor r({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dims; ++j) acc += a.at(i, j);
    r[i] = static_cast<Real>(acc);
  }
  TiltedBandit out{make_dataset(Tensor({n, 1}), std::move(a), std::move(r), Tensor({n, 1}), Tensor({n, 1}, 1.0)),
                   Tensor({1, dims}, static_cast<Real>(beta)), Tensor({1, dims}, 1.0)};
  out.data.metadata = {{"task", "tilted_bandit"},
                       {"seed", std::to_string(seed)},
                       {"dims", std::to_string(dims)},
                       {"beta", std::to_string(beta)}};
  return out;
}

OfflineDataset make_chain_mdp(std::size_t n_states, std::size_t repeats) {
  if (n_states < 2) throw DomainError("chain needs at least two states");
  const std::size_t n = (n_states - 1) * 2 * repeats;
  Tensor s({n, n_states}), a({n, 1}), r({n, 1}), sn({n, n_states}), done({n, 1});
  std::size_t row = 0;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    for (std::size_t i = 0; i + 1 < n_states; ++i) {
      for (int dir : {-1, 1}) {
        const std::size_t next = dir < 0 ? (i == 0 ? 0 : i - 1) : i + 1;
        s.at(row, i) = 1;
        sn.at(row, next) = 1;
        a[row] = static_cast<Real>(dir);
        const bool terminal = next == n_states - 1;
        r[row] = terminal ? 1 : 0;
        done[row] = terminal ? 1 : 0;
        ++row;
      }
    }
  }
  OfflineDataset d = make_dataset(std::move(s), std::move(a), std::move(r), std::move(sn), std::move(done));
  d.metadata = {{"task", "chain"}, {"states", std::to_string(n_states)}};
  return d;
}

std::vector<std::size_t> sample_rows(std::size_t n, std::size_t batch, Rng& rng) {
  if (n == 0) throw DomainError("cannot sample a batch from an empty dataset");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.index(n);
  return idx;
}

void save_dataset_csv(const OfflineDataset& d, const std::string& path) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& [k, v] : d.metadata) out << "# " << k << '=' << v << '\n';
  const std::size_t ds = d.state_dim(), da = d.action_dim();
  std::vector<std::string> header;
  for (std::size_t j = 0; j < ds; ++j) header.push_back("s" + std::to_string(j));
  for (std::size_t j = 0; j < da; ++j) header.push_back("a" + std::to_string(j));
  header.emplace_back("r");
  for (std::size_t j = 0; j < ds; ++j) header.push_back("sp" + std::to_string(j));
  header.emplace_back("done");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  char buf[40];
  auto put = [&](double v, bool first) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out << ',';
    out << buf;
  };
  for (std::size_t i = 0; i < d.size(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < ds; ++j) put(d.s.at(i, j), std::exchange(first, false));
    for (std::size_t j = 0; j < da; ++j) put(d.a.at(i, j), std::exchange(first, false));
    put(d.r[i], false);
    for (std::size_t j = 0; j < ds; ++j) put(d.s_next.at(i, j), false);
    put(d.done[i], false);
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

OfflineDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::map<std::string, std::string> meta;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    if (trim(line).empty()) continue;
    for (auto& h : split(line, ',')) header.push_back(trim(h));
    break;
  }
  if (header.empty()) throw IoError("'" + path + "' has no header row");
  std::map<std::string, std::size_t> cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!cols.emplace(header[j], j).second) throw IoError("'" + path + "': duplicate column '" + header[j] + "'");
  }
  const std::size_t ds = count_prefixed(cols, "s");
  const std::size_t da = count_prefixed(cols, "a");
  std::vector<std::string> want;
  if (ds == 0) want.emplace_back("s0");
  if (da == 0) want.emplace_back("a0");
  want.emplace_back("r");
  for (std::size_t j = 0; j < std::max<std::size_t>(ds, 1); ++j) want.push_back("sp" + std::to_string(j));
  want.emplace_back("done");
  for (const auto& w : want) {
    if (!cols.contains(w)) throw IoError("'" + path + "': missing column '" + w + "'");
  }
  if (cols.size() != ds + da + 2 + ds) {
    for (const auto& h : header) {
      const bool known = h == "r" || h == "done" || (h.rfind("sp", 0) == 0) || h[0] == 's' || h[0] == 'a';
      if (!known) throw IoError("'" + path + "': unexpected column '" + h + "'");
    }
    throw IoError("'" + path + "': header columns are not contiguous s0.., a0.., sp0..");
  }
  std::vector<std::vector<double>> rows;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size())
      throw IoError("'" + path + "': row " + std::to_string(row_index) + " has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(header.size()));
    std::vector<double> vals(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string f = trim(fields[j]);
      char* end = nullptr;
      vals[j] = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size())
        throw IoError("'" + path + "': row " + std::to_string(row_index) + " column '" + header[j] +
                      "' is not a number");
      if (!std::isfinite(vals[j]))
        throw IoError("'" + path + "': non-finite value at row " + std::to_string(row_index) + " column '" +
                      header[j] + "'");
    }
    rows.push_back(std::move(vals));
    ++row_index;
  }
  const std::size_t n = rows.size();
  OfflineDataset d{Tensor({n, ds}), Tensor({n, da}), Tensor({n, 1}), Tensor({n, ds}), Tensor({n, 1}), std::move(meta)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ds; ++j) {
      d.s.at(i, j) = static_cast<Real>(rows[i][cols["s" + std::to_string(j)]]);
      d.s_next.at(i, j) = static_cast<Real>(rows[i][cols["sp" + std::to_string(j)]]);
    }
    for (std::size_t j = 0; j < da; ++j) d.a.at(i, j) = static_cast<Real>(rows[i][cols["a" + std::to_string(j)]]);
    d.r[i] = static_cast<Real>(rows[i][cols["r"]]);
    d.done[i] = static_cast<Real>(rows[i][cols["done"]]);
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return d;
}

void save_dataset_binary(const OfflineDataset& d, const std::string& path) {
  d.validate();
  detail::BinaryWriter w(path);
  w.raw("GPDS", 4);
  w.u32(kDatasetVersion);
  w.u64(d.state_dim());
  w.u64(d.action_dim());
  w.u64(d.size());
  w.u64(d.metadata.size());
  for (const auto& [k, v] : d.metadata) {
    w.str(k);
    w.str(v);
  }
  for (const Tensor* t : {&d.s, &d.a, &d.r, &d.s_next, &d.done}) w.values(*t);
  w.finish();
}

OfflineDataset load_dataset_binary(const std::string& path) {
  detail::BinaryReader rd(path);
  rd.magic("GPDS");
  const std::uint32_t version = rd.u32();
  if (version != kDatasetVersion) throw IoError("'" + path + "': unsupported dataset version " + std::to_string(version));
  const std::size_t ds = rd.u64(), da = rd.u64(), n = rd.u64(), nmeta = rd.u64();
  if (ds > (1U << 20) || da > (1U << 20) || nmeta > (1U << 20)) throw IoError("'" + path + "': corrupt header");
  OfflineDataset d;
  for (std::size_t i = 0; i < nmeta; ++i) {
    std::string k = rd.str();
    d.metadata[k] = rd.str();
  }
  d.s = rd.values({n, ds});
  d.a = rd.values({n, da});
  d.r = rd.values({n, 1});
  d.s_next = rd.values({n, ds});
  d.done = rd.values({n, 1});
  try {
    d.validate();
  } catch (const Error& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return d;
}

namespace {
bool is_csv(const std::string& path) { return path.size() >= 4 && path.substr(path.size() - 4) == ".csv"; }
}  // namespace

void save_dataset(const OfflineDataset& d, const std::string& path) {
  is_csv(path) ? save_dataset_csv(d, path) : save_dataset_binary(d, path);
}

OfflineDataset load_dataset(const std::string& path) {
  return is_csv(path) ? load_dataset_csv(path) : load_dataset_binary(path);
}

}  // namespace genpol
