#include "factuality/autodiff/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "factuality/errors.hpp"

namespace factuality::autodiff {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, bool trainable)
    : shape_(std::move(shape)), values_(element_count(shape_), 0.0), trainable_(trainable) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool trainable)
    : shape_(std::move(shape)), values_(std::move(values)), trainable_(trainable) {
  if (values_.size() != element_count(shape_)) {
    throw DimensionError("tensor: " + std::to_string(values_.size()) +
                         " values do not fill shape " + to_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values, bool trainable) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values), trainable);
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (shape_.size() != 2 || r >= shape_[0]) {
    throw DimensionError("tensor row " + std::to_string(r) + " out of range for shape " +
                         to_string(shape_));
  }
  return std::span<const double>(values_).subspan(r * shape_[1], shape_[1]);
}

void Tensor::set_trainable(bool trainable) {
  trainable_ = trainable;
  if (!trainable_) clear_grad();
}

std::span<const double> Tensor::grad() const {
  if (!has_grad_) throw ContractError("tensor has no gradient");
  return grad_;
}

std::span<double> Tensor::grad() {
  if (!has_grad_) throw ContractError("tensor has no gradient");
  return grad_;
}

void Tensor::ensure_grad() {
  if (!trainable_) throw ContractError("non-trainable tensor cannot hold a gradient");
  if (!has_grad_) {
    grad_.assign(values_.size(), 0.0);
    has_grad_ = true;
  }
}

void Tensor::zero_grad() {
  if (!trainable_) return;
  grad_.assign(values_.size(), 0.0);
  has_grad_ = true;
}

void Tensor::clear_grad() {
  grad_.clear();
  grad_.shrink_to_fit();
  has_grad_ = false;
}

}  // namespace factuality::autodiff
