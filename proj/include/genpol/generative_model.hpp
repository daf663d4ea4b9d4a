#pragma once

#include <functional>
#include <vector>

#include "genpol/autodiff.hpp"
#include "genpol/mlp.hpp"
#include "genpol/schedules.hpp"

namespace genpol {

// An ODE right-hand side dx/dt = v(x, t) recorded on a tape.
using VelocityField = std::function<Var(const Var& x, double t)>;

// Raw network output at (x_t, t, condition), in some parameterization.
// `t` is a [B, 1] column; `cond` may be an unset Var for unconditional models.
using NetworkFn = std::function<Var(const Var& x_t, const Tensor& t, const Var& cond)>;

struct NetworkModel {
  Parameterization parameterization = Parameterization::Velocity;
  NetworkFn fn;
};

struct ModelSpec {
  PathSchedule schedule;
  Parameterization parameterization = Parameterization::Velocity;
  std::size_t action_dim = 1;
  std::size_t cond_dim = 0;
  std::vector<std::size_t> hidden{256, 256, 256};
  std::size_t time_embed_width = 32;
  double time_embed_scale = 1.0;
};

// Conditional generative model over x given a condition c: an MLP fed with
// [fourier(t), c, x_t] whose output is a velocity, noise or score.
class GenerativeModel {
 public:
  GenerativeModel() = default;
  GenerativeModel(ModelSpec spec, Rng& rng);
  GenerativeModel(ModelSpec spec, FourierTimeEmbedding embedding, Mlp net);

  const ModelSpec& spec() const { return spec_; }
  const PathSchedule& schedule() const { return spec_.schedule; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const FourierTimeEmbedding& embedding() const { return embed_; }

  struct Bound {
    const GenerativeModel* model = nullptr;
    BoundMlp net;

    Var output(const Var& x_t, const Tensor& t, const Var& cond) const;
    Var velocity(const Var& x_t, const Tensor& t, const Var& cond) const;
    // dx/dt field with the condition held fixed.
    VelocityField field(const Var& cond) const;
    NetworkModel network() const;
    const std::vector<Var>& params() const { return net.params; }
  };

  Bound bind(Tape& tape, bool trainable) const;

 private:
  ModelSpec spec_;
  FourierTimeEmbedding embed_;
  Mlp net_;
};

// [rows, 1] column filled with t.
Tensor time_column(std::size_t rows, double t);

}  // namespace genpol
