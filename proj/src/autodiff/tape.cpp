#include "factuality/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

#include "factuality/errors.hpp"

namespace factuality::autodiff {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Row: return "row";
    case OpKind::Affine: return "affine";
    case OpKind::Concat: return "concat";
    case OpKind::Add: return "add";
    case OpKind::Sum: return "sum";
    case OpKind::Hadamard: return "hadamard";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::SumElements: return "sum_elements";
    case OpKind::Huber: return "huber";
  }
  return "unknown";
}

namespace {

constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void accumulate(std::vector<double>& dst, std::size_t n) {
  if (dst.empty()) dst.assign(n, 0.0);
}

}  // namespace

Var Tape::push(Node n) {
  if (nodes_.size() >= Var::kInvalid) throw ContractError("tape is full");
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
  return nodes_[v.id];
}

std::span<const double> Tape::node_value(const Node& n) const {
  if (n.bound != nullptr) return n.bound->values();
  if (n.bound_const != nullptr) return n.bound_const->values();
  return n.value;
}

std::span<const double> Tape::value(Var v) const { return node_value(node(v)); }
const Shape& Tape::shape(Var v) const { return node(v).shape; }
OpKind Tape::kind(Var v) const { return node(v).op; }

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  auto values = node_value(n);
  if (values.size() != 1) {
    throw DimensionError("scalar: node has shape " + to_string(n.shape));
  }
  return values[0];
}

void Tape::require_same_shape(const char* op, Var a, Var b) const {
  const Shape& sa = node(a).shape;
  const Shape& sb = node(b).shape;
  if (sa != sb) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(sa) + " vs " +
                         to_string(sb));
  }
}

Var Tape::leaf(Tensor& tensor) {
  if (auto it = leaf_ids_.find(&tensor); it != leaf_ids_.end()) return Var{it->second};
  Node n{OpKind::Leaf, tensor.shape(), {}, {}};
  n.bound = &tensor;
  Var v = push(std::move(n));
  leaf_ids_.emplace(&tensor, v.id);
  return v;
}

Var Tape::input(const Tensor& tensor) {
  if (auto it = leaf_ids_.find(&tensor); it != leaf_ids_.end()) return Var{it->second};
  Node n{OpKind::Leaf, tensor.shape(), {}, {}};
  n.bound_const = &tensor;
  Var v = push(std::move(n));
  leaf_ids_.emplace(&tensor, v.id);
  return v;
}

Var Tape::constant(std::vector<double> values) {
  Shape shape{values.size()};
  return push(Node{OpKind::Leaf, std::move(shape), std::move(values), {}});
}

Var Tape::zeros(std::size_t n) { return constant(std::vector<double>(n, 0.0)); }

Var Tape::row(Var matrix, std::size_t r) {
  const Node& m = node(matrix);
  if (m.shape.size() != 2 || r >= m.shape[0]) {
    throw DimensionError("row: index " + std::to_string(r) + " out of range for " +
                         to_string(m.shape));
  }
  const std::size_t cols = m.shape[1];
  auto src = node_value(m).subspan(r * cols, cols);
  Node n{OpKind::Row, Shape{cols}, std::vector<double>(src.begin(), src.end()), {matrix.id}};
  n.aux = static_cast<double>(r);
  return push(std::move(n));
}

Var Tape::affine(Var w, Var x, Var b) {
  const Node& wn = node(w);
  const Node& xn = node(x);
  const Node& bn = node(b);
  if (wn.shape.size() != 2 || xn.shape.size() != 1 || bn.shape.size() != 1 ||
      wn.shape[1] != xn.shape[0] || wn.shape[0] != bn.shape[0]) {
    throw DimensionError("affine: incompatible shapes W" + to_string(wn.shape) + " x" +
                         to_string(xn.shape) + " b" + to_string(bn.shape));
  }
  const std::size_t rows = wn.shape[0];
  const std::size_t cols = wn.shape[1];
  auto wv = node_value(wn);
  auto xv = node_value(xn);
  auto bv = node_value(bn);
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = wv.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * xv[j];
    out[i] = acc + bv[i];
  }
  return push(Node{OpKind::Affine, Shape{rows}, std::move(out), {w.id, x.id, b.id}});
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> out;
  std::vector<std::uint32_t> ids;
  ids.reserve(parts.size());
  for (Var p : parts) {
    const Node& pn = node(p);
    if (pn.shape.size() != 1) {
      throw DimensionError("concat: input of shape " + to_string(pn.shape) + " is not a vector");
    }
    auto pv = node_value(pn);
    out.insert(out.end(), pv.begin(), pv.end());
    ids.push_back(p.id);
  }
  Shape shape{out.size()};
  return push(Node{OpKind::Concat, std::move(shape), std::move(out), std::move(ids)});
}

Var Tape::add(Var a, Var b) {
  require_same_shape("add", a, b);
  auto av = value(a);
  auto bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return push(Node{OpKind::Add, node(a).shape, std::move(out), {a.id, b.id}});
}

Var Tape::sum(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("sum: empty input set");
  std::vector<double> out(value(parts[0]).begin(), value(parts[0]).end());
  std::vector<std::uint32_t> ids{parts[0].id};
  for (std::size_t k = 1; k < parts.size(); ++k) {
    require_same_shape("sum", parts[0], parts[k]);
    auto pv = value(parts[k]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += pv[i];
    ids.push_back(parts[k].id);
  }
  return push(Node{OpKind::Sum, node(parts[0]).shape, std::move(out), std::move(ids)});
}

Var Tape::hadamard(Var a, Var b) {
  require_same_shape("hadamard", a, b);
  auto av = value(a);
  auto bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return push(Node{OpKind::Hadamard, node(a).shape, std::move(out), {a.id, b.id}});
}

Var Tape::sigmoid(Var x) {
  auto xv = value(x);
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = xv[i];
    // Split on sign so exp never overflows.
    if (z >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      out[i] = e / (1.0 + e);
    }
  }
  return push(Node{OpKind::Sigmoid, node(x).shape, std::move(out), {x.id}});
}

Var Tape::tanh(Var x) {
  auto xv = value(x);
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  return push(Node{OpKind::Tanh, node(x).shape, std::move(out), {x.id}});
}

Var Tape::relu(Var x) {
  auto xv = value(x);
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = xv[i];
    out[i] = z > 0.0 ? z : 0.0;
    min_relu_margin_ = std::min(min_relu_margin_, std::abs(z));
    relu_pattern_ = (relu_pattern_ ^ static_cast<std::uint64_t>(z > 0.0)) * kFnvPrime;
  }
  return push(Node{OpKind::Relu, node(x).shape, std::move(out), {x.id}});
}

Var Tape::sum_elements(Var x) {
  double acc = 0.0;
  for (double v : value(x)) acc += v;
  return push(Node{OpKind::SumElements, Shape{1}, {acc}, {x.id}});
}

Var Tape::huber(Var prediction, double gold) {
  const double p = scalar(prediction);
  if (!std::isfinite(p) || !std::isfinite(gold)) {
    throw NumericError("huber: non-finite input (prediction " + std::to_string(p) + ", gold " +
                       std::to_string(gold) + ")");
  }
  const double e = p - gold;
  const double loss = std::abs(e) <= 1.0 ? 0.5 * e * e : std::abs(e) - 0.5;
  Node n{OpKind::Huber, Shape{1}, {loss}, {prediction.id}};
  n.aux = gold;
  return push(std::move(n));
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (v.id < grads_.size() && !grads_[v.id].empty()) return grads_[v.id];
  static thread_local std::vector<double> zeros;
  zeros.assign(element_count(n.shape), 0.0);
  return zeros;
}

void Tape::backward(Var loss) {
  const Node& ln = node(loss);
  if (node_value(ln).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + to_string(ln.shape));
  }
  grads_.assign(nodes_.size(), {});
  grads_[loss.id].assign(1, 1.0);

  for (std::size_t idx = loss.id + 1; idx-- > 0;) {
    if (grads_[idx].empty()) continue;
    const Node& n = nodes_[idx];
    const std::vector<double>& g = grads_[idx];
    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::Row: {
        const Node& m = nodes_[n.inputs[0]];
        auto& gm = grads_[n.inputs[0]];
        accumulate(gm, element_count(m.shape));
        const std::size_t offset = static_cast<std::size_t>(n.aux) * m.shape[1];
        for (std::size_t j = 0; j < g.size(); ++j) gm[offset + j] += g[j];
        break;
      }
      case OpKind::Affine: {
        const Node& wn = nodes_[n.inputs[0]];
        const Node& xn = nodes_[n.inputs[1]];
        const std::size_t rows = wn.shape[0];
        const std::size_t cols = wn.shape[1];
        auto wv = node_value(wn);
        auto xv = node_value(xn);
        auto& gw = grads_[n.inputs[0]];
        auto& gx = grads_[n.inputs[1]];
        auto& gb = grads_[n.inputs[2]];
        accumulate(gw, rows * cols);
        accumulate(gx, cols);
        accumulate(gb, rows);
        for (std::size_t i = 0; i < rows; ++i) {
          const double gi = g[i];
          gb[i] += gi;
          if (gi == 0.0) continue;
          double* gwr = gw.data() + i * cols;
          const double* wr = wv.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) {
            gwr[j] += gi * xv[j];
            gx[j] += gi * wr[j];
          }
        }
        break;
      }
      case OpKind::Concat: {
        std::size_t offset = 0;
        for (std::uint32_t in : n.inputs) {
          const std::size_t len = element_count(nodes_[in].shape);
          auto& gi = grads_[in];
          accumulate(gi, len);
          for (std::size_t j = 0; j < len; ++j) gi[j] += g[offset + j];
          offset += len;
        }
        break;
      }
      case OpKind::Add:
      case OpKind::Sum: {
        for (std::uint32_t in : n.inputs) {
          auto& gi = grads_[in];
          accumulate(gi, g.size());
          for (std::size_t j = 0; j < g.size(); ++j) gi[j] += g[j];
        }
        break;
      }
      case OpKind::Hadamard: {
        const std::uint32_t a = n.inputs[0];
        const std::uint32_t b = n.inputs[1];
        auto av = node_value(nodes_[a]);
        auto bv = node_value(nodes_[b]);
        accumulate(grads_[a], g.size());
        accumulate(grads_[b], g.size());
        auto& ga = grads_[a];
        auto& gb = grads_[b];
        for (std::size_t j = 0; j < g.size(); ++j) {
          ga[j] += g[j] * bv[j];
          gb[j] += g[j] * av[j];
        }
        break;
      }
      case OpKind::Sigmoid: {
        auto& gi = grads_[n.inputs[0]];
        accumulate(gi, g.size());
        for (std::size_t j = 0; j < g.size(); ++j) gi[j] += g[j] * n.value[j] * (1.0 - n.value[j]);
        break;
      }
      case OpKind::Tanh: {
        auto& gi = grads_[n.inputs[0]];
        accumulate(gi, g.size());
        for (std::size_t j = 0; j < g.size(); ++j) gi[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
        break;
      }
      case OpKind::Relu: {
        auto& gi = grads_[n.inputs[0]];
        accumulate(gi, g.size());
        // Subgradient at 0 is 0; the output is positive exactly where the input was.
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (n.value[j] > 0.0) gi[j] += g[j];
        }
        break;
      }
      case OpKind::SumElements: {
        const std::uint32_t in = n.inputs[0];
        auto& gi = grads_[in];
        accumulate(gi, element_count(nodes_[in].shape));
        for (double& v : gi) v += g[0];
        break;
      }
      case OpKind::Huber: {
        const std::uint32_t in = n.inputs[0];
        const double e = node_value(nodes_[in])[0] - n.aux;
        const double d = std::abs(e) <= 1.0 ? e : (e > 0 ? 1.0 : -1.0);
        auto& gi = grads_[in];
        accumulate(gi, 1);
        gi[0] += g[0] * d;
        break;
      }
    }
  }

  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    Node& n = nodes_[idx];
    if (n.op != OpKind::Leaf || n.bound == nullptr || !n.bound->trainable()) continue;
    n.bound->ensure_grad();
    if (grads_[idx].empty()) continue;
    auto dst = n.bound->grad();
    const auto& src = grads_[idx];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

}  // namespace factuality::autodiff
