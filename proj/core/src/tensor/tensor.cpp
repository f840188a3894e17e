// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/tensor/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "deepgi/common/error.hpp"

namespace deepgi {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace detail {

std::vector<float>& TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
  return grad;
}

}  // namespace detail

namespace {

thread_local bool t_grad_enabled = true;

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, std::vector<float> data, bool requires_grad) {
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " + std::to_string(data.size()) +
                     " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return impl;
}

const detail::TensorImpl& checked(const std::shared_ptr<detail::TensorImpl>& impl) {
  if (!impl) throw Error("operation on an undefined tensor");
  return *impl;
}

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(shape_numel(shape), 0));
  return Tensor(make_impl(std::move(shape), std::vector<float>(n, 0.0f), requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(shape_numel(shape), 0));
  return Tensor(make_impl(std::move(shape), std::vector<float>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(float value, bool requires_grad) { return from_data({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return checked(impl_).shape; }

std::int64_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(checked(impl_).data.size()); }

std::span<const float> Tensor::data() const { return checked(impl_).data; }

std::span<float> Tensor::mutable_data() {
  checked(impl_);
  return impl_->data;
}

bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }

std::span<const float> Tensor::grad() const { return checked(impl_).grad; }

std::span<float> Tensor::mutable_grad() {
  checked(impl_);
  return impl_->grad_buffer();
}

void Tensor::zero_grad() {
  checked(impl_);
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }

void Tensor::set_requires_grad(bool value) {
  checked(impl_);
  impl_->requires_grad = value;
}

bool Tensor::is_leaf() const { return checked(impl_).node == nullptr; }

float Tensor::item() const {
  const auto& impl = checked(impl_);
  if (impl.data.size() != 1) {
    throw ShapeError("item() needs a one-element tensor, got " + shape_string(impl.shape));
  }
  return impl.data[0];
}

Tensor Tensor::detach() const {
  const auto& impl = checked(impl_);
  return Tensor(make_impl(impl.shape, impl.data, false));
}

Tensor Tensor::clone() const {
  const auto& impl = checked(impl_);
  return Tensor(make_impl(impl.shape, impl.data, impl.requires_grad));
}

void Tensor::backward() const {
  const auto& root = checked(impl_);
  if (root.data.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) throw Error("backward() on a tensor that does not require grad");

  // Post-order DFS gives a topological order with inputs before outputs.
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack{{impl_.get(), 0}};
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      auto* child = t->node->inputs[next++].get();
      if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  for (auto* t : order) {
    if (t->node) t->grad.assign(t->data.size(), 0.0f);
  }
  impl_->grad_buffer()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* t = *it;
    if (t->node && t->node->backward) t->node->backward(*t, t->node->inputs);
  }
}

namespace detail {

Tensor make_result(std::string op, Shape shape, std::vector<float> data, std::initializer_list<Tensor> inputs,
                   BackwardFn backward) {
  auto impl = make_impl(std::move(shape), std::move(data), false);
  if (!grad_enabled()) return Tensor(std::move(impl));
  bool any = false;
  for (const auto& in : inputs) any = any || (in.defined() && in.requires_grad());
  if (!any) return Tensor(std::move(impl));

  auto node = std::make_shared<Node>();
  node->op = std::move(op);
  node->backward = std::move(backward);
  for (const auto& in : inputs) node->inputs.push_back(in.defined() ? in.impl() : nullptr);
  impl->node = std::move(node);
  impl->requires_grad = true;
  return Tensor(std::move(impl));
}

}  // namespace detail

}  // namespace deepgi
