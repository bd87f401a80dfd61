//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/ndiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt::nd {

namespace {

[[noreturn]] void shape_error(const std::string &op, const std::string &msg) {
  throw Error(ErrorCategory::kShape, op + ": " + msg);
}

Tape &tape_of(Var a) {
  if (!a.valid())
    shape_error("ndiff", "operation on an unrecorded Var");
  return *a.tape();
}

Tape &tape_of(Var a, Var b) {
  Tape &t = tape_of(a);
  if (b.tape() != &t)
    shape_error("ndiff", "operands recorded on different tapes");
  return t;
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcast_kind(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() == b.shape())
    return Broadcast::kSame;
  if (b.size() == 1)
    return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols() && a.size() % a.cols() == 0)
    return Broadcast::kRow;
  shape_error(op, "cannot broadcast " + shape_str(b.shape()) + " onto "
                      + shape_str(a.shape()));
}

std::size_t b_index(Broadcast k, std::size_t i, std::size_t cols) {
  switch (k) {
  case Broadcast::kSame:
    return i;
  case Broadcast::kRow:
    return i % cols;
  case Broadcast::kScalar:
    return 0;
  }
  return 0;
}

void require_rank2(const Tensor &t, const char *op) {
  if (t.rank() != 2)
    shape_error(op, "expected a rank-2 tensor, got " + shape_str(t.shape()));
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t { 1 },
                         std::multiplies<> {});
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) { }

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_))
    shape_error("Tensor", "data length " + std::to_string(data_.size())
                              + " does not match shape " + shape_str(shape_));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({ values.size() }, std::vector<double>(values));
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto &row: rows) {
    if (row.size() != c)
      shape_error("Tensor::matrix", "ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({ r, c }, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({ n, n });
  for (std::size_t i = 0; i < n; ++i)
    t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() <= 1)
    return 1;
  return shape_size(Shape(shape_.begin(), shape_.end() - 1));
}

std::size_t Tensor::cols() const {
  return shape_.empty() ? 1 : shape_.back();
}

double Tensor::item() const {
  if (data_.size() != 1)
    shape_error("Tensor::item", "tensor has " + std::to_string(data_.size())
                                    + " elements");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

Tensor &Tensor::operator+=(const Tensor &other) {
  if (other.data_.size() != data_.size())
    shape_error("Tensor::+=", shape_str(shape_) + " vs "
                                  + shape_str(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += other.data_[i];
  return *this;
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng &rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({ fan_in, fan_out });
  for (double &x: t.values())
    x = rng.uniform(-bound, bound);
  return t;
}

// ---- Tape -----------------------------------------------------------------

const Tensor &Var::value() const {
  return tape_->value(id_);
}

bool Var::requires_grad() const {
  return tape_->requires_grad(id_);
}

const Tensor &BackwardContext::input(std::size_t i) const {
  return tape.value(inputs[i]);
}

Var Tape::push_leaf(Tensor value, bool requires_grad, const Parameter *param) {
  if (options_.checked && !value.all_finite())
    throw Error(ErrorCategory::kNumeric, "non-finite leaf value");
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && options_.grad_enabled;
  node.param = param;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  return push_leaf(std::move(value), false, nullptr);
}

Var Tape::variable(Tensor value) {
  return push_leaf(std::move(value), true, nullptr);
}

Var Tape::param(const Parameter &p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
    return Var(this, it->second);
  Var v = push_leaf(p.value, p.requires_grad, &p);
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn,
                 const char *op) {
  if (options_.checked && !value.all_finite())
    throw Error(ErrorCategory::kNumeric,
                std::string(op) + ": non-finite forward value");

  Node node;
  node.value = std::move(value);
  node.requires_grad =
      options_.grad_enabled
      && std::any_of(inputs.begin(), inputs.end(),
                     [&](std::size_t i) { return nodes_[i].requires_grad; });
  if (node.requires_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this)
    shape_error("backward", "loss recorded on another tape");
  if (value(loss.id()).size() != 1)
    shape_error("backward", "loss must be a scalar, got "
                                + shape_str(value(loss.id()).shape()));

  Gradients out;
  if (!nodes_[loss.id()].requires_grad)
    return out;

  std::vector<Tensor> grads(loss.id() + 1);
  std::vector<bool> has(loss.id() + 1, false);
  grads[loss.id()] = Tensor(value(loss.id()).shape(), 1.0);
  has[loss.id()] = true;

  std::vector<Tensor *> slots;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (!has[id])
      continue;
    const Node &node = nodes_[id];
    if (!node.backward)
      continue;

    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const std::size_t in = node.inputs[i];
      if (!nodes_[in].requires_grad)
        continue;
      if (!has[in]) {
        grads[in] = Tensor::zeros_like(nodes_[in].value);
        has[in] = true;
      }
      slots[i] = &grads[in];
    }
    node.backward(BackwardContext { *this, node.inputs, node.value, grads[id],
                                    slots });
  }

  for (std::size_t id = 0; id <= loss.id(); ++id) {
    if (!has[id])
      continue;
    if (nodes_[id].param != nullptr)
      out.params_.emplace(nodes_[id].param, grads[id]);
    out.nodes_.emplace(id, std::move(grads[id]));
  }
  return out;
}

Tensor Gradients::of(const Parameter &p) const {
  if (const Tensor *g = find(p))
    return *g;
  return Tensor::zeros_like(p.value);
}

const Tensor *Gradients::find(const Parameter &p) const {
  auto it = params_.find(&p);
  return it == params_.end() ? nullptr : &it->second;
}

Tensor Gradients::of(Var v) const {
  auto it = nodes_.find(v.id());
  if (it == nodes_.end())
    return Tensor::zeros_like(v.value());
  return it->second;
}

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape &t = tape_of(a, b);
  const Tensor &x = a.value(), &y = b.value();
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  const std::size_t m = x.shape()[0], k = x.shape()[1], n = y.shape()[1];
  if (y.shape()[0] != k)
    shape_error("matmul", shape_str(x.shape()) + " x " + shape_str(y.shape()));

  Tensor out({ m, n });
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x(i, p);
      if (xv == 0.0)
        continue;
      const double *yr = &y.values()[p * n];
      double *orow = &out.values()[i * n];
      for (std::size_t j = 0; j < n; ++j)
        orow[j] += xv * yr[j];
    }

  return t.record(
      std::move(out), { a.id(), b.id() },
      [m, k, n](const BackwardContext &ctx) {
        const Tensor &g = ctx.grad_output;
        const Tensor &x = ctx.input(0), &y = ctx.input(1);
        if (Tensor *gx = ctx.input_grads[0]) {
          // gx += g . y^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j)
                acc += g(i, j) * y(p, j);
              (*gx)(i, p) += acc;
            }
        }
        if (Tensor *gy = ctx.input_grads[1]) {
          // gy += x^T . g
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double xv = x(i, p);
              if (xv == 0.0)
                continue;
              for (std::size_t j = 0; j < n; ++j)
                (*gy)(p, j) += xv * g(i, j);
            }
        }
      },
      "matmul");
}

namespace {

Var binary_elementwise(Var a, Var b, const char *op, int kind) {
  Tape &t = tape_of(a, b);
  const Tensor &x = a.value(), &y = b.value();
  const Broadcast bc = broadcast_kind(x, y, op);
  const std::size_t cols = x.cols();

  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yv = y[b_index(bc, i, cols)];
    switch (kind) {
    case 0:
      out[i] = x[i] + yv;
      break;
    case 1:
      out[i] = x[i] - yv;
      break;
    default:
      out[i] = x[i] * yv;
      break;
    }
  }

  return t.record(
      std::move(out), { a.id(), b.id() },
      [bc, cols, kind](const BackwardContext &ctx) {
        const Tensor &g = ctx.grad_output;
        const Tensor &x = ctx.input(0), &y = ctx.input(1);
        Tensor *gx = ctx.input_grads[0], *gy = ctx.input_grads[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t j = b_index(bc, i, cols);
          switch (kind) {
          case 0:
            if (gx)
              (*gx)[i] += g[i];
            if (gy)
              (*gy)[j] += g[i];
            break;
          case 1:
            if (gx)
              (*gx)[i] += g[i];
            if (gy)
              (*gy)[j] -= g[i];
            break;
          default:
            if (gx)
              (*gx)[i] += g[i] * y[j];
            if (gy)
              (*gy)[j] += g[i] * x[i];
            break;
          }
        }
      },
      op);
}

template <class Fwd, class Bwd>
Var unary_elementwise(Var a, const char *op, Fwd fwd, Bwd bwd) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = fwd(x[i]);
  return t.record(
      std::move(out), { a.id() },
      [bwd](const BackwardContext &ctx) {
        Tensor *gx = ctx.input_grads[0];
        const Tensor &x = ctx.input(0);
        for (std::size_t i = 0; i < x.size(); ++i)
          (*gx)[i] += ctx.grad_output[i] * bwd(x[i], ctx.output[i]);
      },
      op);
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(a, b, "add", 0);
}

Var sub(Var a, Var b) {
  return binary_elementwise(a, b, "sub", 1);
}

Var mul(Var a, Var b) {
  return binary_elementwise(a, b, "mul", 2);
}

Var scale(Var a, double s) {
  return unary_elementwise(
      a, "scale", [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

Var relu(Var a) {
  return unary_elementwise(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary_elementwise(
      a, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(Var a) {
  return unary_elementwise(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var softmax(Var a) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < c; ++j)
      mx = std::max(mx, x[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      z += out[i * c + j] = std::exp(x[i * c + j] - mx);
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] /= z;
  }
  return t.record(
      std::move(out), { a.id() },
      [r, c](const BackwardContext &ctx) {
        const Tensor &y = ctx.output, &g = ctx.grad_output;
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < r; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j)
            dot += g[i * c + j] * y[i * c + j];
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
        }
      },
      "softmax");
}

Var log_softmax(Var a) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < c; ++j)
      mx = std::max(mx, x[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      z += std::exp(x[i * c + j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = x[i * c + j] - lse;
  }
  return t.record(
      std::move(out), { a.id() },
      [r, c](const BackwardContext &ctx) {
        const Tensor &y = ctx.output, &g = ctx.grad_output;
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < r; ++i) {
          double gs = 0.0;
          for (std::size_t j = 0; j < c; ++j)
            gs += g[i * c + j];
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] += g[i * c + j] - std::exp(y[i * c + j]) * gs;
        }
      },
      "log_softmax");
}

Var gather_rows(Var a, std::vector<std::size_t> indices) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  require_rank2(x, "gather_rows");
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  Tensor out({ indices.size(), c });
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n)
      shape_error("gather_rows", "row " + std::to_string(indices[i])
                                     + " out of range " + std::to_string(n));
    std::copy_n(&x.values()[indices[i] * c], c, &out.values()[i * c]);
  }
  return t.record(
      std::move(out), { a.id() },
      [idx = std::move(indices), c](const BackwardContext &ctx) {
        Tensor &gx = *ctx.input_grads[0];
        const Tensor &g = ctx.grad_output;
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx[idx[i] * c + j] += g[i * c + j];
      },
      "gather_rows");
}

Var scatter_add_rows(Var a, std::vector<std::size_t> indices, std::size_t rows) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  require_rank2(x, "scatter_add_rows");
  const std::size_t c = x.shape()[1];
  if (indices.size() != x.shape()[0])
    shape_error("scatter_add_rows", "index count " + std::to_string(indices.size())
                                        + " != rows " + std::to_string(x.shape()[0]));
  Tensor out({ rows, c });
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows)
      shape_error("scatter_add_rows", "row " + std::to_string(indices[i])
                                          + " out of range " + std::to_string(rows));
    for (std::size_t j = 0; j < c; ++j)
      out[indices[i] * c + j] += x[i * c + j];
  }
  return t.record(
      std::move(out), { a.id() },
      [idx = std::move(indices), c](const BackwardContext &ctx) {
        Tensor &gx = *ctx.input_grads[0];
        const Tensor &g = ctx.grad_output;
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] += g[idx[i] * c + j];
      },
      "scatter_add_rows");
}

Var sum(Var a) {
  Tape &t = tape_of(a);
  double s = 0.0;
  for (double x: a.value().values())
    s += x;
  return t.record(
      Tensor::scalar(s), { a.id() },
      [](const BackwardContext &ctx) {
        const double g = ctx.grad_output[0];
        for (double &x: ctx.input_grads[0]->values())
          x += g;
      },
      "sum");
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0)
    shape_error("mean", "empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum(Var a, int axis) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  require_rank2(x, "sum");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  if (axis != 0 && axis != 1)
    shape_error("sum", "axis must be 0 or 1");

  Tensor out(axis == 0 ? Shape { 1, c } : Shape { r, 1 });
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[axis == 0 ? j : i] += x(i, j);
  return t.record(
      std::move(out), { a.id() },
      [r, c, axis](const BackwardContext &ctx) {
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx(i, j) += ctx.grad_output[axis == 0 ? j : i];
      },
      "sum_axis");
}

Var mean(Var a, int axis) {
  const Tensor &x = a.value();
  require_rank2(x, "mean");
  const std::size_t n = x.shape()[axis == 0 ? 0 : 1];
  if (n == 0)
    shape_error("mean", "empty axis");
  return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty())
    shape_error("concat", "no operands");
  Tape &t = tape_of(parts[0]);
  if (axis != 0 && axis != 1)
    shape_error("concat", "axis must be 0 or 1");

  std::vector<std::size_t> ids;
  std::vector<std::size_t> extent;
  std::size_t other = 0, total = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    tape_of(parts[0], parts[p]);
    const Tensor &x = parts[p].value();
    require_rank2(x, "concat");
    const std::size_t along = x.shape()[axis], across = x.shape()[1 - axis];
    if (p == 0)
      other = across;
    else if (across != other)
      shape_error("concat", "mismatched extent " + shape_str(x.shape()));
    ids.push_back(parts[p].id());
    extent.push_back(along);
    total += along;
  }

  const std::size_t rows = axis == 0 ? total : other;
  const std::size_t cols = axis == 0 ? other : total;
  Tensor out({ rows, cols });
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor &x = parts[p].value();
    for (std::size_t i = 0; i < x.shape()[0]; ++i)
      for (std::size_t j = 0; j < x.shape()[1]; ++j) {
        if (axis == 0)
          out(offset + i, j) = x(i, j);
        else
          out(i, offset + j) = x(i, j);
      }
    offset += extent[p];
  }

  return t.record(
      std::move(out), std::move(ids),
      [extent, axis](const BackwardContext &ctx) {
        const Tensor &g = ctx.grad_output;
        std::size_t offset = 0;
        for (std::size_t p = 0; p < extent.size(); ++p) {
          if (Tensor *gx = ctx.input_grads[p]) {
            const std::size_t r = gx->shape()[0], c = gx->shape()[1];
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j)
                (*gx)(i, j) += axis == 0 ? g(offset + i, j) : g(i, offset + j);
          }
          offset += extent[p];
        }
      },
      "concat");
}

Var transpose(Var a) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  require_rank2(x, "transpose");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Tensor out({ c, r });
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out(j, i) = x(i, j);
  return t.record(
      std::move(out), { a.id() },
      [r, c](const BackwardContext &ctx) {
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx(i, j) += ctx.grad_output(j, i);
      },
      "transpose");
}

Var reshape(Var a, Shape shape) {
  Tape &t = tape_of(a);
  if (shape_size(shape) != a.value().size())
    shape_error("reshape", shape_str(a.shape()) + " -> " + shape_str(shape));
  return t.record(
      Tensor(std::move(shape), a.value().values()), { a.id() },
      [](const BackwardContext &ctx) {
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < gx.size(); ++i)
          gx[i] += ctx.grad_output[i];
      },
      "reshape");
}

Var frobenius_sq(Var a) {
  Tape &t = tape_of(a);
  double s = 0.0;
  for (double x: a.value().values())
    s += x * x;
  return t.record(
      Tensor::scalar(s), { a.id() },
      [](const BackwardContext &ctx) {
        const double g = ctx.grad_output[0];
        const Tensor &x = ctx.input(0);
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < x.size(); ++i)
          gx[i] += 2.0 * g * x[i];
      },
      "frobenius_sq");
}

Var stop_gradient(Var a) {
  return tape_of(a).constant(a.value());
}

Var normalize_rows(Var a, double eps) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      s += x[i * c + j] * x[i * c + j];
    norms[i] = std::sqrt(s);
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = x[i * c + j] / (norms[i] + eps);
  }
  return t.record(
      std::move(out), { a.id() },
      [r, c, eps, norms = std::move(norms)](const BackwardContext &ctx) {
        const Tensor &x = ctx.input(0), &g = ctx.grad_output;
        Tensor &gx = *ctx.input_grads[0];
        for (std::size_t i = 0; i < r; ++i) {
          const double n = norms[i], d = n + eps;
          double xg = 0.0;
          for (std::size_t j = 0; j < c; ++j)
            xg += x[i * c + j] * g[i * c + j];
          // d/dx (x / (|x| + eps)) = I/d - x x^T / (d^2 |x|)
          const double coef = n > 0.0 ? xg / (d * d * n) : 0.0;
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] += g[i * c + j] / d - coef * x[i * c + j];
        }
      },
      "normalize_rows");
}

Var standardize_rows(Var a, double eps) {
  Tape &t = tape_of(a);
  const Tensor &x = a.value();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      mu += x[i * c + j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      var += (x[i * c + j] - mu) * (x[i * c + j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = (x[i * c + j] - mu) * inv_std[i];
  }
  return t.record(
      std::move(out), { a.id() },
      [r, c, inv_std = std::move(inv_std)](const BackwardContext &ctx) {
        const Tensor &y = ctx.output, &g = ctx.grad_output;
        Tensor &gx = *ctx.input_grads[0];
        const double inv_c = 1.0 / static_cast<double>(c);
        for (std::size_t i = 0; i < r; ++i) {
          double gm = 0.0, gy = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            gm += g[i * c + j];
            gy += g[i * c + j] * y[i * c + j];
          }
          gm *= inv_c;
          gy *= inv_c;
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] +=
                inv_std[i] * (g[i * c + j] - gm - y[i * c + j] * gy);
        }
      },
      "standardize_rows");
}

// ---- composites -----------------------------------------------------------

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
  const Tensor &x = logits.value();
  const std::size_t r = x.rows(), c = x.cols();
  if (targets.size() != r)
    shape_error("cross_entropy", "expected " + std::to_string(r) + " targets");
  Tensor onehot(x.shape());
  for (std::size_t i = 0; i < r; ++i) {
    if (targets[i] >= c)
      shape_error("cross_entropy", "target out of range");
    onehot[i * c + targets[i]] = -1.0 / static_cast<double>(r);
  }
  Tape &t = tape_of(logits);
  return sum(mul(log_softmax(logits), t.constant(std::move(onehot))));
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty())
    shape_error("add_n", "no operands");
  Var acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i)
    acc = add(acc, terms[i]);
  return acc;
}

// ---- grad_check -----------------------------------------------------------

namespace {

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric)
         / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

}  // namespace

double grad_check(const std::function<Var(Tape &, Var)> &f, const Tensor &x,
                  double h) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var loss = f(tape, xv);
    analytic = tape.backward(loss).of(xv);
  }

  auto eval = [&](const Tensor &at) {
    Tape tape({ .grad_enabled = false, .checked = true });
    return f(tape, tape.constant(at)).value().item();
  };

  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = eval(probe);
    probe[i] = orig - h;
    const double down = eval(probe);
    probe[i] = orig;
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double grad_check(const std::function<Var(Tape &)> &f,
                  std::span<Parameter *const> params, double h) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var loss = f(tape);
    Gradients g = tape.backward(loss);
    for (const Parameter *p: params)
      analytic.push_back(g.of(*p));
  }

  auto eval = [&]() {
    Tape tape({ .grad_enabled = false, .checked = true });
    return f(tape).value().item();
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter &p = *params[k];
    if (!p.requires_grad)
      continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = eval();
      p.value[i] = orig - h;
      const double down = eval();
      p.value[i] = orig;
      worst = std::max(worst,
                       rel_error(analytic[k][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// ---- Adam -----------------------------------------------------------------

AdamState make_adam_state(std::span<Parameter *const> params,
                          AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Parameter *p: params) {
    s.first.push_back(Tensor::zeros_like(p->value));
    s.second.push_back(Tensor::zeros_like(p->value));
  }
  return s;
}

void adam_step(std::span<Parameter *const> params,
               std::span<const Tensor> grads, AdamState &state) {
  if (params.size() != grads.size() || params.size() != state.first.size())
    shape_error("adam_step", "parameter/gradient/state count mismatch");

  ++state.step;
  const AdamConfig &c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter &p = *params[k];
    const Tensor &g = grads[k];
    Tensor &m = state.first[k], &v = state.second[k];
    if (g.shape() != p.value.shape() || m.shape() != p.value.shape())
      shape_error("adam_step", "shape mismatch for " + p.name);
    if (!p.requires_grad)
      continue;
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1, vhat = v[i] / bc2;
      p.value[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

Adam::Adam(std::vector<Parameter *> params, AdamConfig config)
    : params_(std::move(params)), state_(make_adam_state(params_, config)) { }

void Adam::step(const Gradients &grads) {
  step(grads, nullptr);
}

void Adam::step(const Gradients &grads,
                const std::function<void(const Parameter &, Tensor &)> &hook) {
  std::vector<Tensor> g;
  g.reserve(params_.size());
  for (const Parameter *p: params_) {
    g.push_back(grads.of(*p));
    if (hook)
      hook(*p, g.back());
  }
  adam_step(params_, g, state_);
}

}  // namespace molcpt::nd
