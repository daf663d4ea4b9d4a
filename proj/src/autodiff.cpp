#include "genpol/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "genpol/kernels.hpp"

namespace genpol {
namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::MatMul: return "matmul";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Tanh: return "tanh";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Sqrt: return "sqrt";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::RowSum: return "row_sum";
    case Op::HCat: return "hcat";
    case Op::ColSlice: return "col_slice";
  }
  return "?";
}

Shape broadcast_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1 && a.rank() >= b.rank()) return a.shape();
  if (a.numel() == 1 && b.rank() >= a.rank()) return b.shape();
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  const bool rows_ok = ar == br || ar == 1 || br == 1;
  const bool cols_ok = ac == bc || ac == 1 || bc == 1;
  if (!rows_ok || !cols_ok)
    throw ShapeError("cannot broadcast " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
  return {std::max(ar, br), std::max(ac, bc)};
}

template <class F>
Tensor broadcast_map(const Tensor& a, const Tensor& b, F f) {
  Tensor out(broadcast_shape(a, b));
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const std::size_t r = out.rows(), c = out.cols();
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t ia = ar == 1 ? 0 : i, ib = br == 1 ? 0 : i;
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t ja = ac == 1 ? 0 : j, jb = bc == 1 ? 0 : j;
      out[i * c + j] = f(a[ia * ac + ja], b[ib * bc + jb]);
    }
  }
  return out;
}

template <class F>
Tensor unary_map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
  return out;
}

// Sum a broadcast gradient back down to the operand's shape.
Tensor reduce_to(const Tensor& g, const Shape& shape) {
  if (g.shape() == shape) return g;
  const std::size_t n = shape_numel(shape);
  if (n == g.numel()) return g.reshaped(shape);
  if (n == 1) return Tensor(shape, g.sum());
  Tensor like(shape);
  const std::size_t lr = like.rows(), lc = like.cols();
  if (lr == 1 && lc == g.cols()) {
    Tensor out(shape);
    kernels::col_sum(g.values(), out.values(), g.rows(), g.cols());
    return out;
  }
  if (lc == 1 && lr == g.rows()) {
    Tensor out(shape);
    kernels::row_sum(g.values(), out.values(), g.rows(), g.cols());
    return out;
  }
  throw ShapeError("cannot reduce gradient " + shape_str(g.shape()) + " to " + shape_str(shape));
}

Tensor gemm(const Tensor& a, const Tensor& b, kernels::Transpose op) {
  std::size_t m = 0, k = 0, n = 0;
  switch (op) {
    case kernels::Transpose::None:
      m = a.rows(), k = a.cols(), n = b.cols();
      if (b.rows() != k) throw ShapeError("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
      break;
    case kernels::Transpose::Left:
      m = a.cols(), k = a.rows(), n = b.cols();
      if (b.rows() != k) throw ShapeError("matmul^T shape mismatch");
      break;
    case kernels::Transpose::Right:
      m = a.rows(), k = a.cols(), n = b.rows();
      if (b.cols() != k) throw ShapeError("matmul B^T shape mismatch");
      break;
  }
  Tensor out({m, n});
  kernels::gemm(a.values(), b.values(), out.values(), m, k, n, op);
  return out;
}

Var make(Op op, Tensor value, std::vector<NodeId> inputs, Tape& tape, Real scalar = 0, std::size_t aux0 = 0,
         std::size_t aux1 = 0) {
  return tape.record(op, std::move(value), std::move(inputs), scalar, aux0, aux1);
}

Tape& common_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ShapeError("operation on an unset Var");
  if (&a.tape() != &b.tape()) throw ShapeError("operands recorded on different tapes");
  return a.tape();
}

}  // namespace

Var Tape::constant(Tensor value) { return record(Op::Leaf, std::move(value), {}); }

Var Tape::variable(Tensor value) {
  Var v = record(Op::Leaf, std::move(value), {});
  nodes_[v.id()].requires_grad = true;
  nodes_[v.id()].trainable = true;
  return v;
}

void Tape::rewind(std::size_t mark) {
  while (nodes_.size() > mark) nodes_.pop_back();
}

Var Tape::record(Op op, Tensor value, std::vector<NodeId> inputs, Real scalar, std::size_t aux0, std::size_t aux1) {
  if (op != Op::Leaf) {
    for (std::size_t i = 0; i < value.numel(); ++i) {
      if (!std::isfinite(value[i]))
        throw NumericError(std::string("non-finite result in ") + op_name(op) + " at flat index " + std::to_string(i));
    }
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.scalar = scalar;
  node.aux0 = aux0;
  node.aux1 = aux1;
  for (NodeId in : inputs) node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

GradientMap Tape::backward(const Var& output) const {
  if (!output.valid() || &output.tape() != this) throw ShapeError("backward: output not on this tape");
  const NodeId out = output.id();
  if (nodes_[out].value.numel() != 1)
    throw ShapeError("backward needs a scalar output, got " + shape_str(nodes_[out].value.shape()));

  std::vector<std::optional<Tensor>> adj(out + 1);
  adj[out] = Tensor(nodes_[out].value.shape(), Real{1});

  auto push = [&](NodeId id, Tensor g) {
    if (!nodes_[id].requires_grad) return;
    g = reduce_to(g, nodes_[id].value.shape());
    if (!adj[id]) {
      adj[id] = std::move(g);
    } else {
      auto& acc = *adj[id];
      for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] += g[i];
    }
  };

  GradientMap grads;
  for (NodeId id = out + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.requires_grad || !adj[id]) continue;
    const Tensor& g = *adj[id];
    if (!g.all_finite())
      throw NumericError(std::string("NaN encountered during reverse pass at ") + op_name(node.op) + " node " +
                         std::to_string(id));
    const Tensor& y = node.value;
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[node.inputs[k]].value; };
    auto mapg = [&](auto f) {
      Tensor r(g.shape());
      for (std::size_t i = 0; i < g.numel(); ++i) r[i] = f(i);
      return r;
    };
    switch (node.op) {
      case Op::Leaf:
        if (node.trainable) grads.emplace(id, g);
        break;
      case Op::Add:
        push(node.inputs[0], g);
        push(node.inputs[1], g);
        break;
      case Op::Sub:
        push(node.inputs[0], g);
        push(node.inputs[1], unary_map(g, [](Real v) { return -v; }));
        break;
      case Op::Mul:
        push(node.inputs[0], broadcast_map(g, in(1), [](Real u, Real v) { return u * v; }));
        push(node.inputs[1], broadcast_map(g, in(0), [](Real u, Real v) { return u * v; }));
        break;
      case Op::Div: {
        push(node.inputs[0], broadcast_map(g, in(1), [](Real u, Real v) { return u / v; }));
        // d(a/b)/db = -y / b
        Tensor gy = broadcast_map(g, y, [](Real u, Real v) { return u * v; });
        push(node.inputs[1], broadcast_map(gy, in(1), [](Real u, Real v) { return -u / v; }));
        break;
      }
      case Op::MatMul:
        if (nodes_[node.inputs[0]].requires_grad) push(node.inputs[0], gemm(g, in(1), kernels::Transpose::Right));
        if (nodes_[node.inputs[1]].requires_grad) push(node.inputs[1], gemm(in(0), g, kernels::Transpose::Left));
        break;
      case Op::Neg: push(node.inputs[0], mapg([&](std::size_t i) { return -g[i]; })); break;
      case Op::Scale: push(node.inputs[0], mapg([&](std::size_t i) { return node.scalar * g[i]; })); break;
      case Op::AddScalar: push(node.inputs[0], g); break;
      case Op::Exp: push(node.inputs[0], mapg([&](std::size_t i) { return g[i] * y[i]; })); break;
      case Op::Log: push(node.inputs[0], mapg([&](std::size_t i) { return g[i] / in(0)[i]; })); break;
      case Op::Tanh: push(node.inputs[0], mapg([&](std::size_t i) { return g[i] * (Real{1} - y[i] * y[i]); })); break;
      case Op::Sin: push(node.inputs[0], mapg([&](std::size_t i) { return g[i] * std::cos(in(0)[i]); })); break;
      case Op::Cos: push(node.inputs[0], mapg([&](std::size_t i) { return -g[i] * std::sin(in(0)[i]); })); break;
      case Op::Sqrt: push(node.inputs[0], mapg([&](std::size_t i) { return g[i] / (Real{2} * y[i]); })); break;
      case Op::Square: push(node.inputs[0], mapg([&](std::size_t i) { return Real{2} * in(0)[i] * g[i]; })); break;
      case Op::Sum: push(node.inputs[0], Tensor(in(0).shape(), g.item())); break;
      case Op::Mean:
        push(node.inputs[0], Tensor(in(0).shape(), g.item() / static_cast<Real>(in(0).numel())));
        break;
      case Op::RowSum: {
        const Tensor& x = in(0);
        Tensor r(x.shape());
        const std::size_t c = x.cols();
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) r[i * c + j] = g[i];
        push(node.inputs[0], std::move(r));
        break;
      }
      case Op::HCat: {
        std::size_t off = 0;
        for (NodeId part : node.inputs) {
          const std::size_t pc = nodes_[part].value.cols();
          if (nodes_[part].requires_grad) push(part, g.col_slice(off, off + pc));
          off += pc;
        }
        break;
      }
      case Op::ColSlice: {
        const Tensor& x = in(0);
        Tensor r(x.shape());
        const std::size_t c = x.cols(), w = node.aux1 - node.aux0;
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < w; ++j) r[i * c + node.aux0 + j] = g[i * w + j];
        push(node.inputs[0], std::move(r));
        break;
      }
    }
  }
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].trainable && !grads.contains(id)) grads.emplace(id, Tensor(nodes_[id].value.shape()));
  }
  return grads;
}

Var Tape::jvp(const Var& output, const Var& input, const Var& tangent) {
  if (&output.tape() != this || &input.tape() != this || &tangent.tape() != this)
    throw ShapeError("jvp: Vars not on this tape");
  if (tangent.value().shape() != input.value().shape())
    throw ShapeError("jvp: tangent shape " + shape_str(tangent.value().shape()) + " != input shape " +
                     shape_str(input.value().shape()));
  const NodeId lo = input.id(), hi = output.id();
  if (hi == lo) return tangent;
  if (hi < lo) return constant(Tensor(output.value().shape()));

  std::vector<Var> dot(hi - lo + 1);
  dot[0] = tangent;
  auto tan = [&](NodeId id) -> const Var* {
    if (id < lo || id > hi) return nullptr;
    const Var& v = dot[id - lo];
    return v.valid() ? &v : nullptr;
  };
  auto fit = [&](Var v, const Tensor& like) {
    if (v.value().shape() == like.shape()) return v;
    return add(v, Tensor(like.shape()));
  };

  for (NodeId id = lo + 1; id <= hi; ++id) {
    const Op op = nodes_[id].op;
    if (op == Op::Leaf) continue;
    if (std::none_of(nodes_[id].inputs.begin(), nodes_[id].inputs.end(), [&](NodeId i) { return tan(i) != nullptr; }))
      continue;
    const std::vector<NodeId> ins = nodes_[id].inputs;
    const Real scalar = nodes_[id].scalar;
    const std::size_t aux0 = nodes_[id].aux0, aux1 = nodes_[id].aux1;
    const Var y(this, id);
    auto x = [&](std::size_t k) { return Var(this, ins[k]); };
    const Var* d0 = tan(ins[0]);
    const Var* d1 = ins.size() > 1 ? tan(ins[1]) : nullptr;
    if (op != Op::HCat && !d0 && !d1) continue;

    std::optional<Var> r;
    switch (op) {
      case Op::Leaf: break;
      case Op::Add:
        r = d0 && d1 ? add(*d0, *d1) : (d0 ? *d0 : *d1);
        break;
      case Op::Sub:
        r = d0 && d1 ? sub(*d0, *d1) : (d0 ? *d0 : neg(*d1));
        break;
      case Op::Mul: {
        std::optional<Var> t0, t1;
        if (d0) t0 = mul(*d0, x(1));
        if (d1) t1 = mul(x(0), *d1);
        r = t0 && t1 ? add(*t0, *t1) : (t0 ? *t0 : *t1);
        break;
      }
      case Op::Div: {
        // d(a/b) = (da - y db) / b
        std::optional<Var> num;
        if (d0 && d1) num = sub(*d0, mul(y, *d1));
        else if (d0) num = *d0;
        else num = neg(mul(y, *d1));
        r = div(*num, x(1));
        break;
      }
      case Op::MatMul: {
        std::optional<Var> t0, t1;
        if (d0) t0 = matmul(*d0, x(1));
        if (d1) t1 = matmul(x(0), *d1);
        r = t0 && t1 ? add(*t0, *t1) : (t0 ? *t0 : *t1);
        break;
      }
      case Op::Neg: r = neg(*d0); break;
      case Op::Scale: r = scale(*d0, scalar); break;
      case Op::AddScalar: r = *d0; break;
      case Op::Exp: r = mul(*d0, y); break;
      case Op::Log: r = div(*d0, x(0)); break;
      case Op::Tanh: r = mul(*d0, add_scalar(neg(square(y)), Real{1})); break;
      case Op::Sin: r = mul(*d0, cos(x(0))); break;
      case Op::Cos: r = neg(mul(*d0, sin(x(0)))); break;
      case Op::Sqrt: r = div(*d0, scale(y, Real{2})); break;
      case Op::Square: r = mul(*d0, scale(x(0), Real{2})); break;
      case Op::Sum: r = sum(*d0); break;
      case Op::Mean: r = mean(*d0); break;
      case Op::RowSum: r = row_sum(*d0); break;
      case Op::HCat: {
        bool any = false;
        std::vector<Var> parts;
        parts.reserve(ins.size());
        for (NodeId p : ins) {
          if (const Var* dp = tan(p)) {
            parts.push_back(*dp);
            any = true;
          } else {
            parts.push_back(constant(Tensor(nodes_[p].value.shape())));
          }
        }
        if (any) r = hcat(parts);
        break;
      }
      case Op::ColSlice: r = col_slice(*d0, aux0, aux1); break;
    }
    if (r) dot[id - lo] = fit(*r, nodes_[id].value);
  }
  if (dot[hi - lo].valid()) return dot[hi - lo];
  return constant(Tensor(output.value().shape()));
}

const Tensor& grad_of(const GradientMap& grads, const Var& leaf) {
  auto it = grads.find(leaf.id());
  if (it == grads.end()) throw ShapeError("no gradient recorded for node " + std::to_string(leaf.id()));
  return it->second;
}

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  return make(Op::Add, broadcast_map(a.value(), b.value(), [](Real u, Real v) { return u + v; }), {a.id(), b.id()}, t);
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  return make(Op::Sub, broadcast_map(a.value(), b.value(), [](Real u, Real v) { return u - v; }), {a.id(), b.id()}, t);
}

Var mul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  return make(Op::Mul, broadcast_map(a.value(), b.value(), [](Real u, Real v) { return u * v; }), {a.id(), b.id()}, t);
}

Var div(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  return make(Op::Div, broadcast_map(a.value(), b.value(), [](Real u, Real v) { return u / v; }), {a.id(), b.id()}, t);
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.value().rank() != 2 || b.value().rank() != 2) throw ShapeError("matmul needs rank-2 operands");
  return make(Op::MatMul, gemm(a.value(), b.value(), kernels::Transpose::None), {a.id(), b.id()}, t);
}

Var mul(const Var& a, const Tensor& b) { return mul(a, a.tape().constant(b)); }
Var add(const Var& a, const Tensor& b) { return add(a, a.tape().constant(b)); }

#define GENPOL_UNARY(NAME, OP, EXPR)                                                  \
  Var NAME(const Var& a) {                                                            \
    return make(OP, unary_map(a.value(), [](Real v) { return EXPR; }), {a.id()}, a.tape()); \
  }

GENPOL_UNARY(neg, Op::Neg, -v)
GENPOL_UNARY(exp, Op::Exp, std::exp(v))
GENPOL_UNARY(log, Op::Log, std::log(v))
GENPOL_UNARY(tanh, Op::Tanh, std::tanh(v))
GENPOL_UNARY(sin, Op::Sin, std::sin(v))
GENPOL_UNARY(cos, Op::Cos, std::cos(v))
GENPOL_UNARY(sqrt, Op::Sqrt, std::sqrt(v))
GENPOL_UNARY(square, Op::Square, v * v)

#undef GENPOL_UNARY

Var scale(const Var& a, Real c) {
  return make(Op::Scale, unary_map(a.value(), [c](Real v) { return c * v; }), {a.id()}, a.tape(), c);
}

Var add_scalar(const Var& a, Real c) {
  return make(Op::AddScalar, unary_map(a.value(), [c](Real v) { return v + c; }), {a.id()}, a.tape(), c);
}

Var sum(const Var& a) { return make(Op::Sum, Tensor::scalar(a.value().sum()), {a.id()}, a.tape()); }

Var mean(const Var& a) {
  if (a.value().numel() == 0) throw ShapeError("mean of empty tensor");
  return make(Op::Mean, Tensor::scalar(a.value().mean()), {a.id()}, a.tape());
}

Var row_sum(const Var& a) {
  const Tensor& x = a.value();
  Tensor out({x.rows(), 1});
  kernels::row_sum(x.values(), out.values(), x.rows(), x.cols());
  return make(Op::RowSum, std::move(out), {a.id()}, a.tape());
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("hcat of nothing");
  std::vector<Tensor> values;
  std::vector<NodeId> ids;
  for (const Var& p : parts) {
    common_tape(parts[0], p);
    values.push_back(p.value());
    ids.push_back(p.id());
  }
  return make(Op::HCat, genpol::hcat(values), std::move(ids), parts[0].tape());
}

Var col_slice(const Var& a, std::size_t begin, std::size_t end) {
  return make(Op::ColSlice, a.value().col_slice(begin, end), {a.id()}, a.tape(), 0, begin, end);
}

GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor> points, double h) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : points) vars.push_back(tape.variable(p));
  const Var out = f(tape, vars);
  const GradientMap grads = tape.backward(out);

  auto eval = [&](std::vector<Tensor> pts) {
    Tape t;
    std::vector<Var> vs;
    for (auto& p : pts) vs.push_back(t.variable(std::move(p)));
    const double v = f(t, vs).value().item();
    if (!std::isfinite(v)) throw NumericError("grad_check: function non-finite at perturbed point");
    return v;
  };

  GradCheckResult res;
  std::vector<Tensor> pts(points.begin(), points.end());
  for (std::size_t a = 0; a < pts.size(); ++a) {
    const Tensor& g = grad_of(grads, vars[a]);
    for (std::size_t i = 0; i < pts[a].numel(); ++i) {
      const Real orig = pts[a][i];
      pts[a][i] = orig + static_cast<Real>(h);
      const double fp = eval(pts);
      pts[a][i] = orig - static_cast<Real>(h);
      const double fm = eval(pts);
      pts[a][i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(static_cast<double>(g[i]) - fd) / (std::abs(fd) + 1e-8);
      if (err > res.max_rel_error) res = {err, a, i};
    }
  }
  return res;
}

double grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& point, double h) {
  const Tensor pts[] = {point};
  return grad_check([&](Tape& t, std::span<const Var> v) { return f(t, v[0]); }, pts, h).max_rel_error;
}

}  // namespace genpol
