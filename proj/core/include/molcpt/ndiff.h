//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_NDIFF_H_
#define MOLCPT_NDIFF_H_

// Minimal dense reverse-mode autodiff over double tensors.
//
// Tensors are row-major. Most primitives operate on a "matrix view" of their
// operands: cols() is the last dimension and rows() the product of all
// leading dimensions, so rank-0 and rank-1 tensors behave like a single row.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace molcpt {
class Rng;
}

namespace molcpt::nd {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_str(const Shape &shape);

class Tensor {
public:
  Tensor(): shape_ { 0 } { }
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape {}, { v }); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);
  static Tensor zeros_like(const Tensor &t) { return Tensor(t.shape_); }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> &values() { return data_; }
  const std::vector<double> &values() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  // Value of a single-element tensor.
  double item() const;

  bool all_finite() const;

  Tensor &operator+=(const Tensor &other);

  friend bool operator==(const Tensor &, const Tensor &) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

// Xavier/Glorot uniform initialization for a fan_in x fan_out matrix.
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng &rng);

// A named trainable tensor. Parameters are owned by model structs; tapes
// only reference them.
struct Parameter {
  std::string name;
  Tensor value;
  bool requires_grad = true;
};

class Tape;

// Handle to a node recorded on a tape.
class Var {
public:
  Var() = default;

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape *tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape *tape, std::size_t id): tape_(tape), id_(id) { }

  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardContext {
  const Tape &tape;
  std::span<const std::size_t> inputs;
  const Tensor &output;
  const Tensor &grad_output;
  // nullptr for inputs that do not require a gradient
  std::span<Tensor *const> input_grads;

  const Tensor &input(std::size_t i) const;
};

using BackwardFn = std::function<void(const BackwardContext &)>;

class Gradients {
public:
  // Gradient w.r.t. a parameter leaf; zeros if the parameter never reached
  // the loss or was not recorded.
  Tensor of(const Parameter &p) const;
  Tensor of(Var v) const;
  const Tensor *find(const Parameter &p) const;

private:
  friend class Tape;
  std::unordered_map<const Parameter *, Tensor> params_;
  std::unordered_map<std::size_t, Tensor> nodes_;
};

struct TapeOptions {
  // When false nothing is differentiable and no backward closures are kept.
  bool grad_enabled = true;
  // Throw on non-finite forward values.
  bool checked = true;
};

class Tape {
public:
  explicit Tape(TapeOptions options = {}): options_(options) { }
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a parameter; recording the same parameter twice returns
  // the same node.
  Var param(const Parameter &p);

  Gradients backward(Var loss) const;

  const Tensor &value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  const TapeOptions &options() const { return options_; }

  // Primitive recording: used by the op implementations.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn,
             const char *op);

private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    const Parameter *param = nullptr;
  };

  Var push_leaf(Tensor value, bool requires_grad, const Parameter *param);

  TapeOptions options_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter *, std::size_t> param_nodes_;
};

// ---- primitives ----------------------------------------------------------

// (m x k) . (k x n)
Var matmul(Var a, Var b);
// Elementwise a + b. b may also be a single row broadcast over the rows of
// a, or a single element broadcast everywhere.
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product; same broadcasting rules as add.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var softmax(Var a);
Var log_softmax(Var a);
Var gather_rows(Var a, std::vector<std::size_t> indices);
// Row i of a is added into output row indices[i]; the output has `rows` rows.
Var scatter_add_rows(Var a, std::vector<std::size_t> indices, std::size_t rows);
Var sum(Var a);
Var mean(Var a);
// axis 0 reduces rows (-> 1 x cols), axis 1 reduces columns (-> rows x 1)
Var sum(Var a, int axis);
Var mean(Var a, int axis);
Var concat(std::span<const Var> parts, int axis);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
Var frobenius_sq(Var a);
Var stop_gradient(Var a);
// Each row divided by (its L2 norm + eps).
Var normalize_rows(Var a, double eps = 1e-12);
// Each row centered and scaled to unit variance (layer norm, no affine).
Var standardize_rows(Var a, double eps = 1e-5);

// ---- composites ----------------------------------------------------------

// Mean over rows of -log softmax(logits)[row, target].
Var cross_entropy(Var logits, std::span<const std::size_t> targets);
Var add_n(std::span<const Var> terms);

// ---- checking and optimization --------------------------------------------

// max over coordinates of |analytic - numeric| / max(1e-8, |analytic| +
// |numeric|), numeric from central differences with step h.
double grad_check(const std::function<Var(Tape &, Var)> &f, const Tensor &x,
                  double h = 1e-5);
double grad_check(const std::function<Var(Tape &)> &f,
                  std::span<Parameter *const> params, double h = 1e-5);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::int64_t step = 0;
};

AdamState make_adam_state(std::span<Parameter *const> params,
                          AdamConfig config = {});

// Bias-corrected Adam update. Parameters with requires_grad == false are
// left untouched. grads[i] pairs with params[i].
void adam_step(std::span<Parameter *const> params,
               std::span<const Tensor> grads, AdamState &state);

class Adam {
public:
  Adam(std::vector<Parameter *> params, AdamConfig config = {});

  void step(const Gradients &grads);
  // Optional per-parameter gradient hook, applied before the update.
  void step(const Gradients &grads,
            const std::function<void(const Parameter &, Tensor &)> &hook);

  const AdamState &state() const { return state_; }
  std::span<Parameter *const> params() const { return params_; }

private:
  std::vector<Parameter *> params_;
  AdamState state_;
};

}  // namespace molcpt::nd

#endif  // MOLCPT_NDIFF_H_
