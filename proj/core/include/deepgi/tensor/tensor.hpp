// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace deepgi {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct TensorImpl;

using BackwardFn =
    std::function<void(const TensorImpl& output, std::span<const std::shared_ptr<TensorImpl>> inputs)>;

/// Edge of the autodiff graph: the operation that produced a tensor.
struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until the first gradient arrives
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  /// Allocates a zeroed gradient buffer if none exists and returns it.
  std::vector<float>& grad_buffer();
};

}  // namespace detail

/// Dense float32 tensor with optional gradient. A Tensor is a cheap handle;
/// copies share storage. Image data uses N x C x H x W layout.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::int64_t numel() const;

  std::span<const float> data() const;
  /// Mutable access. Only parameter owners (optimizers, initializers,
  /// checkpoint loaders) should write through this between steps.
  std::span<float> mutable_data();

  bool has_grad() const;
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;

  /// Value of a one-element tensor.
  float item() const;

  /// New leaf holding a copy of the data, cut from the graph.
  Tensor detach() const;
  Tensor clone() const;

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; interior gradients are recomputed from scratch each call.
  void backward() const;

  /// Identity of the underlying storage.
  const void* id() const { return impl_.get(); }

  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

/// Disables graph construction on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

/// Builds an op result. A graph node is attached only when gradients are
/// enabled and at least one input requires them.
Tensor make_result(std::string op, Shape shape, std::vector<float> data,
                   std::initializer_list<Tensor> inputs, BackwardFn backward);

}  // namespace detail

}  // namespace deepgi
