#include "genpol/generative_model.hpp"

namespace genpol {
namespace {

MlpSpec net_spec(const ModelSpec& spec) {
  MlpSpec m;
  m.input_dim = spec.time_embed_width + spec.cond_dim + spec.action_dim;
  m.hidden = spec.hidden;
  m.output_dim = spec.action_dim;
  return m;
}

}  // namespace

Tensor time_column(std::size_t rows, double t) { return Tensor({rows, 1}, static_cast<Real>(t)); }

GenerativeModel::GenerativeModel(ModelSpec spec, Rng& rng)
    : spec_(std::move(spec)), embed_(spec_.time_embed_width, spec_.time_embed_scale, rng), net_(net_spec(spec_), rng) {}

GenerativeModel::GenerativeModel(ModelSpec spec, FourierTimeEmbedding embedding, Mlp net)
    : spec_(std::move(spec)), embed_(std::move(embedding)), net_(std::move(net)) {
  const MlpSpec want = net_spec(spec_);
  if (net_.spec().input_dim != want.input_dim || net_.spec().output_dim != want.output_dim)
    throw ShapeError("network dimensions do not match the model spec");
  if (embed_.width() != spec_.time_embed_width) throw ShapeError("time embedding width mismatch");
}

GenerativeModel::Bound GenerativeModel::bind(Tape& tape, bool trainable) const {
  return Bound{this, net_.bind(tape, trainable)};
}

Var GenerativeModel::Bound::output(const Var& x_t, const Tensor& t, const Var& cond) const {
  const ModelSpec& spec = model->spec_;
  if (x_t.cols() != spec.action_dim) throw ShapeError("model input has wrong action dimension");
  Tape& tape = x_t.tape();
  const Tensor t_col = t.numel() == 1 ? time_column(x_t.rows(), t[0]) : t;
  std::vector<Var> parts;
  parts.push_back(tape.constant(model->embed_.embed(t_col)));
  if (spec.cond_dim > 0) {
    if (!cond.valid() || cond.cols() != spec.cond_dim || cond.rows() != x_t.rows())
      throw ShapeError("condition must be [" + std::to_string(x_t.rows()) + ", " + std::to_string(spec.cond_dim) + "]");
    parts.push_back(cond);
  }
  parts.push_back(x_t);
  return net.forward(hcat(parts));
}

Var GenerativeModel::Bound::velocity(const Var& x_t, const Tensor& t, const Var& cond) const {
  const Tensor t_col = t.numel() == 1 ? time_column(x_t.rows(), t[0]) : t;
  return to_velocity(model->spec_.parameterization, model->spec_.schedule, x_t, t_col, output(x_t, t_col, cond));
}

VelocityField GenerativeModel::Bound::field(const Var& cond) const {
  return [self = *this, cond](const Var& x, double t) { return self.velocity(x, time_column(x.rows(), t), cond); };
}

NetworkModel GenerativeModel::Bound::network() const {
  return {model->spec_.parameterization,
          [self = *this](const Var& x_t, const Tensor& t, const Var& cond) { return self.output(x_t, t, cond); }};
}

}  // namespace genpol
