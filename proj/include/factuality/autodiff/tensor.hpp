#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace factuality::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array of doubles. Trainable tensors own a gradient
// accumulator that the tape fills during backward; non-trainable tensors
// (embeddings, inputs) never receive one.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool trainable = false);
  Tensor(Shape shape, std::vector<double> values, bool trainable = false);

  static Tensor vector(std::vector<double> values, bool trainable = false);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_.front(); }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> row(std::size_t r) const;
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable);

  bool has_grad() const { return has_grad_; }
  std::span<const double> grad() const;
  std::span<double> grad();
  // Allocates a zero gradient if none is present.
  void ensure_grad();
  void zero_grad();
  void clear_grad();

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool trainable_ = false;
  bool has_grad_ = false;
};

}  // namespace factuality::autodiff
