#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "factuality/autodiff/tensor.hpp"

namespace factuality::autodiff {

enum class OpKind : std::uint8_t {
  Leaf,
  Row,
  Affine,
  Concat,
  Add,
  Sum,
  Hadamard,
  Sigmoid,
  Tanh,
  Relu,
  SumElements,
  Huber,
};

const char* to_string(OpKind kind);

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;

  bool valid() const { return id != kInvalid; }
};

// Records primitive applications in execution order and replays them in
// reverse to accumulate gradients. One tape per forward pass; tensors bound
// as leaves must outlive the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to `tensor`. Gradients reach tensor.grad() only when the
  // tensor is trainable. Repeated calls with the same tensor return the same
  // node.
  Var leaf(Tensor& tensor);
  // Leaf that never receives gradient.
  Var input(const Tensor& tensor);
  Var constant(std::vector<double> values);
  Var zeros(std::size_t n);

  Var row(Var matrix, std::size_t r);
  // w * x + b with w of shape [out, in], x of [in], b of [out].
  Var affine(Var w, Var x, Var b);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }
  Var add(Var a, Var b);
  // Elementwise sum over an arbitrary non-empty set of same-shaped nodes.
  Var sum(std::span<const Var> parts);
  Var hadamard(Var a, Var b);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var relu(Var x);
  Var sum_elements(Var x);
  // Smooth L1 with delta = 1 between a scalar prediction and a fixed gold value.
  Var huber(Var prediction, double gold);

  std::span<const double> value(Var v) const;
  const Shape& shape(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const;

  // Fills gradients for every node reachable from `loss` and accumulates
  // into trainable leaf tensors. Trainable leaves that are not reachable get
  // a zero gradient allocated.
  void backward(Var loss);
  // Gradient of the last backward() with respect to node `v` (zeros if it was
  // not reached).
  std::span<const double> grad(Var v) const;

  // Smallest |input| seen by any ReLU on this tape, and a hash of the sign
  // pattern of all ReLU inputs. Used by the finite-difference checker to
  // detect kinks between perturbed evaluations.
  double min_relu_margin() const { return min_relu_margin_; }
  std::uint64_t relu_pattern() const { return relu_pattern_; }

 private:
  struct Node {
    OpKind op;
    Shape shape;
    std::vector<double> value;
    std::vector<std::uint32_t> inputs;
    Tensor* bound = nullptr;
    const Tensor* bound_const = nullptr;
    double aux = 0.0;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  std::span<const double> node_value(const Node& n) const;
  void require_same_shape(const char* op, Var a, Var b) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<const Tensor*, std::uint32_t> leaf_ids_;
  double min_relu_margin_ = std::numeric_limits<double>::infinity();
  std::uint64_t relu_pattern_ = 1469598103934665603ULL;
};

}  // namespace factuality::autodiff
