#include "rega/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rega {

std::string shape_str(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

static void validate_shape(const Shape& dims) {
  if (dims.empty() || dims.size() > 4)
    throw ShapeError("tensor rank must be 1..4, got " + shape_str(dims));
  for (int d : dims)
    if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(dims));
}

Tensor Tensor::zeros(Shape dims, bool requires_grad) {
  return full(std::move(dims), 0.0, requires_grad);
}

Tensor Tensor::full(Shape dims, double value, bool requires_grad) {
  validate_shape(dims);
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->data.assign(shape_numel(dims), value);
  t.impl_->dims = std::move(dims);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_data(Shape dims, std::vector<double> values, bool requires_grad) {
  validate_shape(dims);
  if (values.size() != shape_numel(dims))
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(dims));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->dims = std::move(dims);
  t.impl_->data = std::move(values);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

double Tensor::value() const {
  if (numel() != 1)
    throw ShapeError("value() requires a scalar tensor, got " + shape_str(dims()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  const Shape& d = impl_->dims;
  if (idx.size() != d.size())
    throw ShapeError("index rank " + std::to_string(idx.size()) + " vs tensor " + shape_str(d));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (int i : idx) {
    if (i < 0 || i >= d[axis])
      throw ValueError("index " + std::to_string(i) + " out of range for axis " +
                       std::to_string(axis) + " of " + shape_str(d));
    flat = flat * static_cast<std::size_t>(d[axis]) + static_cast<std::size_t>(i);
    ++axis;
  }
  return impl_->data[flat];
}

const std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty())
    throw Error("tensor has no grad (backward not run or leaf unreachable)");
  return impl_->grad;
}

double* Tensor::grad_accum_buffer() const {
  if (!impl_->requires_grad)
    throw Error("grad requested on a tensor with requires_grad=false");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad.data();
}

void Tensor::accumulate_grad(const double* g, std::size_t n) const {
  if (n != numel())
    throw ShapeError("grad length " + std::to_string(n) + " vs tensor " + shape_str(dims()));
  double* buf = grad_accum_buffer();
  for (std::size_t i = 0; i < n; ++i) buf[i] += g[i];
}

void Tensor::zero_grad() const {
  if (!impl_->requires_grad)
    throw Error("zero_grad on a tensor with requires_grad=false");
  impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::clear_grad() const { impl_->grad.clear(); }

void Tensor::set_node(const char* op, std::vector<Tensor> parents,
                      std::function<void(const Tensor&)> fn) const {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->parents = std::move(parents);
  node->backward = std::move(fn);
  impl_->node = std::move(node);
}

Graph Graph::trace(const Tensor& root) {
  Graph g;
  std::unordered_set<TensorImpl*> visited;
  // Iterative post-order DFS; parents are appended before their consumers.
  struct Frame {
    Tensor t;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root.impl());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.t.node();
    if (node && f.next_parent < node->parents.size()) {
      Tensor p = node->parents[f.next_parent++];
      if (visited.insert(p.impl()).second) stack.push_back({p, 0});
    } else {
      g.order.push_back(f.t);
      stack.pop_back();
    }
  }
  return g;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ValueError("backward: loss must be a scalar tensor" +
                     (loss.defined() ? ", got " + shape_str(loss.dims()) : std::string()));
  Graph g = Graph::trace(loss);
  // Interior grads are scratch per sweep; leaf grads persist and accumulate.
  for (const Tensor& t : g.order)
    if (t.node()) t.zero_grad();
  if (loss.node()) {
    loss.grad_accum_buffer()[0] = 1.0;
  } else if (loss.requires_grad()) {
    double one = 1.0;
    loss.accumulate_grad(&one, 1);
  }
  for (auto it = g.order.rbegin(); it != g.order.rend(); ++it) {
    const Tensor& t = *it;
    if (t.node() && t.has_grad()) t.node()->backward(t);
  }
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void debug_check_finite(const Tensor& t, const char* op) {
#ifndef NDEBUG
  for (double v : t.data())
    if (!std::isfinite(v)) throw Error(std::string("non-finite value in output of ") + op);
#else
  (void)t;
  (void)op;
#endif
}

}  // namespace rega
