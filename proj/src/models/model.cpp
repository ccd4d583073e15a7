#include "factuality/models/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <random>

#include "factuality/errors.hpp"

namespace factuality::models {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Tensor xavier(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = u(rng);
  return Tensor({rows, cols}, std::move(values), true);
}

Tensor zeros(std::size_t n) { return Tensor({n}, std::vector<double>(n, 0.0), true); }

LstmCell make_cell(std::size_t hidden, std::size_t input, std::mt19937_64& rng) {
  LstmCell c;
  c.W_f = xavier(hidden, hidden + input, rng);
  c.W_i = xavier(hidden, hidden + input, rng);
  c.W_o = xavier(hidden, hidden + input, rng);
  c.W_c = xavier(hidden, hidden + input, rng);
  c.b_f = zeros(hidden);
  c.b_i = zeros(hidden);
  c.b_o = zeros(hidden);
  c.b_c = zeros(hidden);
  return c;
}

BiLstmStack make_stack(Topology topology, Activation g, const ModelConfig& config, std::mt19937_64& rng) {
  BiLstmStack stack;
  stack.topology = topology;
  stack.g = g;
  const std::size_t h = config.hidden();
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t input = l == 0 ? config.input_dim : 2 * h;
    BiLayer layer;
    layer.forward = make_cell(h, input, rng);
    layer.backward = make_cell(h, input, rng);
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

template <typename CellT, typename Fn>
void for_each_cell_param(CellT& c, Fn&& fn) {
  fn("W_f", c.W_f);
  fn("W_i", c.W_i);
  fn("W_o", c.W_o);
  fn("W_c", c.W_c);
  fn("b_f", c.b_f);
  fn("b_i", c.b_i);
  fn("b_o", c.b_o);
  fn("b_c", c.b_c);
}

template <typename StackT, typename Fn>
void for_each_stack_param(StackT& stack, const std::string& prefix, Fn&& fn) {
  const bool tree = stack.topology == Topology::Tree;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    auto& layer = stack.layers[l];
    const std::string base = prefix + ".l" + std::to_string(l) + ".";
    const std::string fwd = base + (tree ? "up." : "fwd.");
    const std::string bwd = base + (tree ? "down." : "bwd.");
    for_each_cell_param(layer.forward, [&](const char* name, auto& t) { fn(fwd + name, t); });
    for_each_cell_param(layer.backward, [&](const char* name, auto& t) { fn(bwd + name, t); });
  }
}

template <typename HeadT, typename Fn>
void for_each_head_param(HeadT& head, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".V1", head.V1);
  fn(prefix + ".b1", head.b1);
  fn(prefix + ".V2", head.V2);
  fn(prefix + ".b2", head.b2);
}

Var activate(Tape& tape, Activation g, Var x) {
  return g == Activation::Tanh ? tape.tanh(x) : tape.relu(x);
}

struct GateInputs {
  Var f_w, f_b, i_w, i_b, o_w, o_b, c_w, c_b;
};

GateInputs bind_cell(Binder& bind, const LstmCell& c) {
  return {bind(c.W_f), bind(c.b_f), bind(c.W_i), bind(c.b_i),
          bind(c.W_o), bind(c.b_o), bind(c.W_c), bind(c.b_c)};
}

// One direction of one layer. `neighbors[t]` are the states feeding token t
// (previous token for a chain, children/parents for a tree) and `order`
// visits every neighbor before the token itself.
std::vector<Var> run_direction(Binder& bind, const LstmCell& cell, Activation g, const std::vector<Var>& x,
                               const std::vector<std::vector<std::size_t>>& neighbors,
                               const std::vector<std::size_t>& order, bool child_sum) {
  Tape& tape = bind.tape();
  const std::size_t hidden = cell.b_f.size();
  const GateInputs p = bind_cell(bind, cell);
  const Var zero = tape.zeros(hidden);
  std::vector<Var> h(x.size());
  std::vector<Var> c(x.size());
  std::vector<Var> parts;
  for (std::size_t t : order) {
    const auto& prev = neighbors[t];
    if (!child_sum) {
      const Var h_prev = prev.empty() ? zero : h[prev.front()];
      const Var c_prev = prev.empty() ? zero : c[prev.front()];
      const Var z = tape.concat({h_prev, x[t]});
      const Var f = tape.sigmoid(tape.affine(p.f_w, z, p.f_b));
      const Var i = tape.sigmoid(tape.affine(p.i_w, z, p.i_b));
      const Var o = tape.sigmoid(tape.affine(p.o_w, z, p.o_b));
      const Var c_hat = activate(tape, g, tape.affine(p.c_w, z, p.c_b));
      c[t] = tape.add(tape.hadamard(i, c_hat), tape.hadamard(f, c_prev));
      h[t] = tape.hadamard(o, activate(tape, g, c[t]));
      continue;
    }
    Var h_hat = zero;
    if (!prev.empty()) {
      parts.clear();
      for (std::size_t k : prev) parts.push_back(h[k]);
      h_hat = tape.sum(parts);
    }
    const Var z = tape.concat({h_hat, x[t]});
    const Var i = tape.sigmoid(tape.affine(p.i_w, z, p.i_b));
    const Var o = tape.sigmoid(tape.affine(p.o_w, z, p.o_b));
    const Var c_hat = activate(tape, g, tape.affine(p.c_w, z, p.c_b));
    parts.clear();
    parts.push_back(tape.hadamard(i, c_hat));
    for (std::size_t k : prev) {
      const Var f = tape.sigmoid(tape.affine(p.f_w, tape.concat({h[k], x[t]}), p.f_b));
      parts.push_back(tape.hadamard(f, c[k]));
    }
    c[t] = parts.size() == 1 ? parts.front() : tape.sum(parts);
    h[t] = tape.hadamard(o, activate(tape, g, c[t]));
  }
  return h;
}

}  // namespace

Architecture parse_architecture(std::string_view text) {
  const std::string key = lower(text);
  if (key == "linear" || key == "l") return Architecture::Linear;
  if (key == "tree" || key == "t") return Architecture::Tree;
  if (key == "hybrid" || key == "h") return Architecture::Hybrid;
  throw ConfigError("unknown architecture '" + std::string(text) + "' (linear|tree|hybrid)");
}

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::Linear: return "linear";
    case Architecture::Tree: return "tree";
    case Architecture::Hybrid: return "hybrid";
  }
  return "?";
}

Activation parse_activation(std::string_view text) {
  const std::string key = lower(text);
  if (key == "tanh") return Activation::Tanh;
  if (key == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(text) + "' (tanh|relu)");
}

std::string_view to_string(Activation activation) {
  return activation == Activation::Tanh ? "tanh" : "relu";
}

std::size_t ModelConfig::representation_dim() const {
  return (arch == Architecture::Hybrid ? 4 : 2) * hidden();
}

void ModelConfig::validate() const {
  if (layers != 1 && layers != 2) {
    throw ConfigError("layers must be 1 or 2 (got " + std::to_string(layers) + ")");
  }
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (heads.empty()) throw ConfigError("model needs at least one regression head");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].empty()) throw ConfigError("regression head names must be non-empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (heads[i] == heads[j]) throw ConfigError("duplicate regression head '" + heads[i] + "'");
    }
  }
}

corpus::TreeStructure chain_structure(std::size_t n) {
  std::vector<std::size_t> heads(n);
  for (std::size_t t = 0; t < n; ++t) heads[t] = t + 1 < n ? t + 1 : corpus::Sentence::kRoot;
  return corpus::tree_structure(heads);
}

Var Binder::operator()(const Tensor& parameter) {
  // Training binds through the caller's mutable model; see Model::encode.
  return trainable_ ? tape_.leaf(const_cast<Tensor&>(parameter)) : tape_.input(parameter);
}

StackStates BiLstmStack::run(Binder& bind, Var inputs, std::size_t n, const corpus::TreeStructure* tree) const {
  Tape& tape = bind.tape();
  if (tape.shape(inputs).size() != 2 || tape.shape(inputs)[0] != n) {
    throw DimensionError("encoder input has shape " + autodiff::to_string(tape.shape(inputs)) +
                         " for a sentence of " + std::to_string(n) + " tokens");
  }
  const std::size_t input_dim = layers.front().forward.W_f.cols() - hidden();
  if (tape.shape(inputs)[1] != input_dim) {
    throw DimensionError("encoder expects " + std::to_string(input_dim) + "-d inputs, got " +
                         autodiff::to_string(tape.shape(inputs)));
  }

  std::vector<std::vector<std::size_t>> fwd_prev(n);
  std::vector<std::vector<std::size_t>> bwd_prev(n);
  std::vector<std::size_t> fwd_order(n);
  std::vector<std::size_t> bwd_order(n);
  const bool child_sum = topology == Topology::Tree;
  if (child_sum) {
    if (tree == nullptr || tree->size() != n) {
      throw DimensionError("tree encoder needs a structure over " + std::to_string(n) + " tokens");
    }
    fwd_prev = tree->children;
    bwd_prev = tree->parents;
    fwd_order = tree->upward_order;
    bwd_order = tree->downward_order;
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) fwd_prev[t].push_back(t - 1);
      if (t + 1 < n) bwd_prev[t].push_back(t + 1);
      fwd_order[t] = t;
      bwd_order[t] = n - 1 - t;
    }
  }

  StackStates states;
  std::vector<Var> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = tape.row(inputs, t);
  for (const BiLayer& layer : layers) {
    if (!states.forward.empty()) {
      const auto& hf = states.forward.back();
      const auto& hb = states.backward.back();
      for (std::size_t t = 0; t < n; ++t) x[t] = tape.concat({hf[t], hb[t]});
    }
    states.forward.push_back(run_direction(bind, layer.forward, g, x, fwd_prev, fwd_order, child_sum));
    states.backward.push_back(run_direction(bind, layer.backward, g, x, bwd_prev, bwd_order, child_sum));
  }
  states.top.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    states.top[t] = tape.concat({states.forward.back()[t], states.backward.back()[t]});
  }
  return states;
}

Var RegressionHead::run(Binder& bind, Var h) const {
  Tape& tape = bind.tape();
  const Var hidden = tape.relu(tape.affine(bind(V1), h, bind(b1)));
  return tape.affine(bind(V2), hidden, bind(b2));
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  if (config_.arch != Architecture::Tree) {
    linear_ = make_stack(Topology::Linear, config_.linear_activation, config_, rng);
  }
  if (config_.arch != Architecture::Linear) {
    tree_ = make_stack(Topology::Tree, config_.tree_activation, config_, rng);
  }
  const std::size_t in = config_.representation_dim();
  const std::size_t mid = in / 2;
  for (const std::string& name : config_.heads) {
    RegressionHead head;
    head.V1 = xavier(mid, in, rng);
    head.b1 = zeros(mid);
    head.V2 = xavier(1, mid, rng);
    head.b2 = zeros(1);
    heads_.emplace(name, std::move(head));
  }
}

bool Model::has_head(std::string_view name) const { return heads_.find(name) != heads_.end(); }

const RegressionHead& Model::find_head(std::string_view name) const {
  auto it = heads_.find(name);
  if (it == heads_.end()) throw ConfigError("model has no regression head for '" + std::string(name) + "'");
  return it->second;
}

const RegressionHead& Model::head(std::string_view name) const { return find_head(name); }
RegressionHead& Model::head(std::string_view name) { return const_cast<RegressionHead&>(find_head(name)); }

std::vector<std::pair<std::string, const Tensor*>> Model::parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  auto add = [&](const std::string& name, const Tensor& t) { out.emplace_back(name, &t); };
  if (linear_) for_each_stack_param(*linear_, "linear", add);
  if (tree_) for_each_stack_param(*tree_, "tree", add);
  for (const std::string& name : config_.heads) for_each_head_param(heads_.find(name)->second, "head." + name, add);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Model::parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& [name, t] : std::as_const(*this).parameters()) out.emplace_back(name, const_cast<Tensor*>(t));
  return out;
}

std::vector<Tensor*> Model::encoder_parameters() {
  std::vector<Tensor*> out;
  auto add = [&](const std::string&, Tensor& t) { out.push_back(&t); };
  if (linear_) for_each_stack_param(*linear_, "linear", add);
  if (tree_) for_each_stack_param(*tree_, "tree", add);
  return out;
}

std::vector<Tensor*> Model::head_parameters(std::string_view name) {
  RegressionHead& h = head(name);
  return {&h.V1, &h.b1, &h.V2, &h.b2};
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += t->size();
  return n;
}

std::vector<Var> Model::encode_impl(Binder& bind, const EncodedSentence& sentence) const {
  Tape& tape = bind.tape();
  const std::size_t n = sentence.size();
  if (n == 0) throw DimensionError("cannot encode an empty sentence");
  // Trainable inputs become leaves so gradients can flow back to them.
  const Var inputs = sentence.inputs.trainable() ? tape.leaf(const_cast<Tensor&>(sentence.inputs))
                                                 : tape.input(sentence.inputs);
  if (config_.arch == Architecture::Linear) return linear_->run(bind, inputs, n, nullptr).top;
  if (config_.arch == Architecture::Tree) return tree_->run(bind, inputs, n, &sentence.tree).top;
  const std::vector<Var> l = linear_->run(bind, inputs, n, nullptr).top;
  const std::vector<Var> t = tree_->run(bind, inputs, n, &sentence.tree).top;
  std::vector<Var> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = tape.concat({l[i], t[i]});
  return out;
}

std::vector<Var> Model::encode(Tape& tape, const EncodedSentence& sentence) {
  Binder bind(tape, true);
  return encode_impl(bind, sentence);
}

std::vector<Var> Model::encode(Tape& tape, const EncodedSentence& sentence) const {
  Binder bind(tape, false);
  return encode_impl(bind, sentence);
}

Var Model::regress(Tape& tape, Var h, std::string_view head) {
  Binder bind(tape, true);
  return find_head(head).run(bind, h);
}

Var Model::regress(Tape& tape, Var h, std::string_view head) const {
  Binder bind(tape, false);
  return find_head(head).run(bind, h);
}

Var Model::sentence_loss(Tape& tape, const EncodedSentence& sentence,
                         std::span<const std::pair<std::size_t, double>> targets, std::string_view head) {
  if (targets.empty()) throw ContractError("sentence_loss: no annotated tokens in " + sentence.id);
  const RegressionHead& h = find_head(head);
  Binder bind(tape, true);
  const std::vector<Var> reps = encode_impl(bind, sentence);
  std::vector<Var> losses;
  losses.reserve(targets.size());
  for (const auto& [token, gold] : targets) {
    if (token >= reps.size()) {
      throw DimensionError("sentence_loss: token " + std::to_string(token) + " out of range in " + sentence.id);
    }
    losses.push_back(tape.huber(h.run(bind, reps[token]), gold));
  }
  return losses.size() == 1 ? losses.front() : tape.sum(losses);
}

std::vector<double> Model::predict(const EncodedSentence& sentence, std::span<const std::size_t> tokens,
                                   std::string_view head) const {
  const RegressionHead& h = find_head(head);
  Tape tape;
  Binder bind(tape, false);
  const std::vector<Var> reps = encode_impl(bind, sentence);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t token : tokens) {
    if (token >= reps.size()) {
      throw DimensionError("predict: token " + std::to_string(token) + " out of range in " + sentence.id);
    }
    out.push_back(tape.scalar(h.run(bind, reps[token])));
  }
  return out;
}

StackStates Model::run_linear(Tape& tape, const EncodedSentence& sentence) const {
  if (!linear_) throw ContractError("model has no linear encoder");
  Binder bind(tape, false);
  return linear_->run(bind, tape.input(sentence.inputs), sentence.size(), nullptr);
}

StackStates Model::run_tree(Tape& tape, const EncodedSentence& sentence) const {
  if (!tree_) throw ContractError("model has no tree encoder");
  Binder bind(tape, false);
  return tree_->run(bind, tape.input(sentence.inputs), sentence.size(), &sentence.tree);
}

bool operator==(const Model& a, const Model& b) {
  if (!(a.config_ == b.config_)) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || pa[i].second->shape() != pb[i].second->shape()) return false;
    auto va = pa[i].second->values();
    auto vb = pb[i].second->values();
    if (!std::equal(va.begin(), va.end(), vb.begin(), vb.end(),
                    [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; })) {
      return false;
    }
  }
  return true;
}

}  // namespace factuality::models
