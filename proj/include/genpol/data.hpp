#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <string>

#include "genpol/critic.hpp"
#include "genpol/tensor.hpp"

namespace genpol {

// Row-aligned transitions. Columns: s [N, ds], a [N, da], r [N, 1],
// s_next [N, ds], done [N, 1] with done in {0, 1}.
struct OfflineDataset {
  Tensor s, a, r, s_next, done;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return a.rows(); }
  std::size_t state_dim() const { return s.cols(); }
  std::size_t action_dim() const { return a.cols(); }

  // Throws ShapeError on misaligned columns and DomainError (naming the row)
  // on non-finite entries or done flags other than 0/1.
  void validate() const;
  TransitionBatch batch(std::span<const std::size_t> rows) const;
  TransitionBatch all() const { return {s, a, r, s_next, done}; }
};

OfflineDataset make_dataset(Tensor s, Tensor a, Tensor r, Tensor s_next, Tensor done);

// Spiral a(theta) = (theta cos theta, theta sin theta) with theta uniform on
// [angle_min, angle_max]; the value is linear in theta from value_min at the
// inner end to value_max at the outer end and is assigned before the
// Gaussian position noise.
struct SwissRollTask {
  std::size_t n = 10000;
  double noise = 0.6;
  double value_min = -3.5;
  double value_max = 1.5;
  double angle_min = 1.5 * std::numbers::pi;
  double angle_max = 4.5 * std::numbers::pi;
  std::uint64_t seed = 0;
};

// Single dummy state s = 0 (one column), s' = s, done = 1.
OfflineDataset make_swiss_roll(const SwissRollTask& task);
double swiss_roll_value(const SwissRollTask& task, double angle);
// Spiral angle of the point on the noiseless curve closest to (x, y).
double swiss_roll_nearest_angle(const SwissRollTask& task, double x, double y);
// Value of arbitrary 2-D actions through their nearest spiral point, [N, 1].
Tensor swiss_roll_values(const SwissRollTask& task, const Tensor& actions);
// Mean of the value under the uniform angle density: midpoint of the range.
inline double swiss_roll_mean_value(const SwissRollTask& t) { return 0.5 * (t.value_min + t.value_max); }

struct TiltedBandit {
  OfflineDataset data;
  Tensor target_mean;  // [1, dims], beta * 1
  Tensor target_var;   // [1, dims], ones
};

// Behavior a ~ N(0, I), reward sum(a), one dummy state. The KL-regularized
// optimum exp(beta a) N(a; 0, I) / Z is N(beta 1, I).
TiltedBandit make_tilted_gaussian_bandit(std::size_t dims, double beta, std::size_t n, std::uint64_t seed);

// Deterministic chain: states 0..n-1 one-hot, actions a in {-1, +1} move
// left/right (clamped at the ends). Reward 1 for any transition into the last
// state, which is terminal. Every (state, action) pair of the non-terminal
// states appears `repeats` times.
OfflineDataset make_chain_mdp(std::size_t n_states, std::size_t repeats = 1);

// Minibatch row indices drawn with replacement.
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t batch, Rng& rng);

// CSV: '#' key=value metadata lines, then the header
//   s0..s{ds-1},a0..a{da-1},r,sp0..sp{ds-1},done
// and one row per transition written with 17 significant digits.
// Binary: "GPDS", u32 version, u64 ds, u64 da, u64 rows, u64 metadata count,
// (u64 len, bytes) key/value pairs, then the five column blocks as raw f64.
void save_dataset_csv(const OfflineDataset& data, const std::string& path);
OfflineDataset load_dataset_csv(const std::string& path);
void save_dataset_binary(const OfflineDataset& data, const std::string& path);
OfflineDataset load_dataset_binary(const std::string& path);
// Chooses the format from the extension (.csv, otherwise binary).
void save_dataset(const OfflineDataset& data, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

}  // namespace genpol
