#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "genpol/tensor.hpp"

namespace genpol {

class Tape;

using NodeId = std::uint32_t;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape still holds the node (see Tape::clear / Tape::rewind).
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  const Tensor& value() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Neg,
  Scale,
  AddScalar,
  Exp,
  Log,
  Tanh,
  Sin,
  Cos,
  Sqrt,
  Square,
  Sum,
  Mean,
  RowSum,
  HCat,
  ColSlice,
};

using GradientMap = std::unordered_map<NodeId, Tensor>;

// Reverse-mode record of primitive operations.
//
// Lifecycle: record a computation, call backward() on a scalar output to get
// gradients of every trainable leaf, then clear() before the next step.
// backward() does not consume the tape, so it may be called again (for a
// different output) until the tape is cleared. Recording is re-entrant:
// jvp() appends its forward-mode tangent computation to the same tape, so
// quantities built from Jacobian-vector products (trace estimates) are
// themselves differentiable.
//
// Memory is one Tensor per recorded node. Differentiating an unrolled ODE
// solve keeps every stage of every step alive: roughly
// steps x stages x (network nodes) x batch x width values.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);  // trainable leaf

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  // Drop every node recorded after `mark` (a previous size()). Vars that
  // refer to dropped nodes become dangling.
  void rewind(std::size_t mark);

  // Gradient of a scalar `output` with respect to every trainable leaf on
  // the tape (zero tensors for leaves the output does not depend on).
  GradientMap backward(const Var& output) const;

  // Forward-mode derivative of `output` along `tangent` placed on `input`,
  // recorded as ordinary taped operations. Returns a Var shaped like output.
  Var jvp(const Var& output, const Var& input, const Var& tangent);

  // Used by the op free functions.
  Var record(Op op, Tensor value, std::vector<NodeId> inputs, Real scalar = 0, std::size_t aux0 = 0,
             std::size_t aux1 = 0);
  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Op op = Op::Leaf;
    Tensor value;
    std::vector<NodeId> inputs;
    Real scalar = 0;
    std::size_t aux0 = 0;
    std::size_t aux1 = 0;
    bool requires_grad = false;
    bool trainable = false;
  };

  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

// Gradient lookup; throws if the id is not a trainable leaf of the map.
const Tensor& grad_of(const GradientMap& grads, const Var& leaf);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, Real c);
Var add_scalar(const Var& a, Real c);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var row_sum(const Var& a);
Var hcat(std::span<const Var> parts);
Var col_slice(const Var& a, std::size_t begin, std::size_t end);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(const Var& a, Real c) { return scale(a, c); }
inline Var operator*(Real c, const Var& a) { return scale(a, c); }
inline Var operator+(const Var& a, Real c) { return add_scalar(a, c); }
inline Var operator+(Real c, const Var& a) { return add_scalar(a, c); }
inline Var operator-(const Var& a, Real c) { return add_scalar(a, -c); }
inline Var operator-(Real c, const Var& a) { return add_scalar(neg(a), c); }

// Broadcast-aware elementwise product of a Var with a constant tensor.
Var mul(const Var& a, const Tensor& b);
Var add(const Var& a, const Tensor& b);

// Finite-difference check of a scalar function of several tensors.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_arg = 0;
  std::size_t worst_index = 0;
};

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

// max over coordinates of |AD - FD| / (|FD| + 1e-8), central differences with
// step h. A kink at the point shows up as a large error; nothing is clipped.
GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor> points, double h = 1e-5);
double grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& point, double h = 1e-5);

}  // namespace genpol
