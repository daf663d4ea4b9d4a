#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "genpol/critic.hpp"
#include "genpol/data.hpp"
#include "genpol/likelihood.hpp"
#include "genpol/matching.hpp"
#include "genpol/sampler.hpp"

namespace genpol {

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 256;
  AdamConfig adam{1e-4};
  MatchingConfig matching;
};

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  double mean_weight = 1.0;
  double mean_advantage = std::numeric_limits<double>::quiet_NaN();
  double eval_value = std::numeric_limits<double>::quiet_NaN();
};

// Optional per-step callbacks. `eval` runs after steps that are multiples of
// eval_every (and after the last step) and fills StepMetrics::eval_value.
struct TrainHooks {
  std::function<void(const StepMetrics&)> on_step;
  std::function<double(const GenerativeModel&)> eval;
  std::size_t eval_every = 0;
};

// Fits the behavior model mu to the dataset's (s, a) pairs with the plain
// matching loss. Trains `model` in place; returns one record per step.
std::vector<StepMetrics> pretrain_behavior(const OfflineDataset& data, GenerativeModel& model,
                                           const TrainConfig& config, Rng& rng, const TrainHooks& hooks = {});

enum class WeightMode { Exponential, Softmax };
std::string to_string(WeightMode m);
WeightMode parse_weight_mode(const std::string& s);

// min(exp(beta * advantage), w_max) per row, Z(s) = 1.
Tensor exponential_weights(const Tensor& advantage, double beta, double w_max);
// q holds K consecutive candidates per state; returns exp(beta q_i) / sum_j exp(beta q_j)
// within each group of K, computed after subtracting the group maximum.
Tensor softmax_weights(const Tensor& q, std::size_t k, double beta);
// Exponential-mode weight of dataset pairs under a trained critic.
Tensor gmpo_weight(const Critic& critic, const Tensor& s, const Tensor& a, double beta, double w_max);

struct GmpoConfig {
  double beta = 1.0;
  WeightMode mode = WeightMode::Exponential;
  double w_max = 100.0;
  std::size_t k = 16;             // candidates per state, softmax mode
  SolverSpec behavior_solver{};   // draws the softmax candidates from mu
  TrainConfig train;
};

// Advantage-weighted matching regression. Exponential mode regresses on the
// dataset actions; softmax mode on K actions per state drawn from `behavior`,
// each weighted by K times its softmax weight so the mean weight stays 1.
// With beta = 0 every weight is exactly 1 and the run reproduces
// pretrain_behavior step for step.
std::vector<StepMetrics> train_gmpo(const OfflineDataset& data, const Critic& critic, GenerativeModel& policy,
                                    const GmpoConfig& config, Rng& rng, const GenerativeModel* behavior = nullptr,
                                    const TrainHooks& hooks = {});

enum class GmpgVariant { Dynamic, Static };
std::string to_string(GmpgVariant v);
GmpgVariant parse_gmpg_variant(const std::string& s);

struct GmpgConfig {
  double beta = 1.0;
  GmpgVariant variant = GmpgVariant::Dynamic;
  SolverSpec solver{SolverScheme::Euler, 1000};
  TraceOptions trace{};
  // static variant weights
  WeightMode weight_mode = WeightMode::Exponential;
  double w_max = 100.0;
  std::size_t k = 16;
  TrainConfig train{1000, 512, AdamConfig{1e-4}, MatchingConfig{}};
};

struct GmpgTerms {
  Var loss;
  Tensor actions;  // [B, da]
  Tensor q;        // [B, 1]
  Tensor log_pi;   // [B, 1]
  Tensor log_mu;   // [B, 1]
  Tensor weights;  // [B, 1]; ones for the dynamic variant
};

// mean(-beta Q(s, a) + log pi(a|s) - log mu(a|s)) with a drawn from the
// bound policy by a differentiable solve. log pi comes from the same
// trajectory; log mu from the reverse solve under frozen mu; Q is frozen.
// Gradients reach the policy parameters directly and through a.
GmpgTerms gmpg_loss(const GenerativeModel::Bound& policy, const GenerativeModel& behavior, const Critic& critic,
                    const Tensor& states, const GmpgConfig& config, Rng& rng);

// Surrogate whose gradient is the importance-weighted score-function
// estimate E_mu[w (-beta Q + log pi - log mu) grad log pi] with the bracket
// and w held constant and a drawn from mu.
GmpgTerms gmpg_static_loss(const GenerativeModel::Bound& policy, const GenerativeModel& behavior,
                           const Critic& critic, const Tensor& states, const GmpgConfig& config, Rng& rng);

// Gradient of the static surrogate w.r.t. the policy parameters.
std::vector<Tensor> gmpg_static_grad(const GenerativeModel& policy, const GenerativeModel& behavior,
                                     const Critic& critic, const Tensor& states, const GmpgConfig& config, Rng& rng);

// pi is reset to an exact copy of mu, then trained on the configured variant.
std::vector<StepMetrics> train_gmpg(const OfflineDataset& data, const Critic& critic, const GenerativeModel& behavior,
                                    GenerativeModel& policy, const GmpgConfig& config, Rng& rng,
                                    const TrainHooks& hooks = {});

// One action per state row.
Tensor act(const GenerativeModel& policy, const Tensor& states, const SolverSpec& spec, Rng& rng);

}  // namespace genpol
