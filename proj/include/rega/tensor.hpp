#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "rega/error.hpp"

namespace rega {

using Shape = std::vector<int>;

std::string shape_str(const Shape& dims);
std::size_t shape_numel(const Shape& dims);

class Tensor;

// One reverse-mode step: reads the output's grad and accumulates into the
// grads of the parents captured by the closure.
struct Node {
  const char* op = "";
  std::vector<Tensor> parents;
  std::function<void(const Tensor& out)> backward;
};

struct TensorImpl {
  Shape dims;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation
  std::shared_ptr<Node> node;
};

// Value handle over shared storage. Data is immutable after forward
// construction except for leaves (optimizer updates, finite-difference
// probes) and grad slots.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape dims, bool requires_grad = false);
  static Tensor full(Shape dims, double value, bool requires_grad = false);
  static Tensor from_data(Shape dims, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& dims() const { return impl_->dims; }
  int rank() const { return static_cast<int>(impl_->dims.size()); }
  int size(int axis) const { return impl_->dims.at(static_cast<std::size_t>(axis)); }
  std::size_t numel() const { return impl_->data.size(); }

  const std::vector<double>& data() const { return impl_->data; }
  std::vector<double>& mutable_data() const { return impl_->data; }
  double value() const;  // scalar tensors only
  double at(std::initializer_list<int> idx) const;

  bool requires_grad() const { return impl_->requires_grad; }
  bool is_leaf() const { return impl_->node == nullptr; }
  bool has_grad() const { return !impl_->grad.empty(); }
  const std::vector<double>& grad() const;
  // Allocates a zeroed grad buffer on first use; callers += into it.
  double* grad_accum_buffer() const;
  void accumulate_grad(const double* g, std::size_t n) const;
  void zero_grad() const;
  void clear_grad() const;

  void set_node(const char* op, std::vector<Tensor> parents,
                std::function<void(const Tensor&)> fn) const;
  const std::shared_ptr<Node>& node() const { return impl_->node; }
  TensorImpl* impl() const { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Trace of the graph rooted at one tensor, parents before consumers.
struct Graph {
  std::vector<Tensor> order;
  static Graph trace(const Tensor& root);
};

// Reverse-mode sweep from a scalar loss. Interior grads are reset per call;
// grads of requires_grad leaves accumulate across calls.
void backward(const Tensor& loss);

bool grad_enabled();

// RAII switch that suppresses graph construction (eval mode, FD probes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Debug-build guard: every forward op output must be finite for finite inputs.
void debug_check_finite(const Tensor& t, const char* op);

}  // namespace rega
