#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factuality/autodiff/tape.hpp"
#include "factuality/autodiff/tensor.hpp"
#include "factuality/corpus/sentence.hpp"

namespace factuality::models {

using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;

enum class Architecture { Linear, Tree, Hybrid };
enum class Activation { Tanh, Relu };

Architecture parse_architecture(std::string_view text);
std::string_view to_string(Architecture arch);
Activation parse_activation(std::string_view text);
std::string_view to_string(Activation activation);

struct ModelConfig {
  Architecture arch = Architecture::Linear;
  std::size_t layers = 2;
  std::size_t input_dim = 300;
  // 0 means "same as input_dim".
  std::size_t hidden_dim = 0;
  Activation linear_activation = Activation::Tanh;
  Activation tree_activation = Activation::Relu;
  std::vector<std::string> heads{"default"};

  std::size_t hidden() const { return hidden_dim == 0 ? input_dim : hidden_dim; }
  // Width of the per-token representation fed to a head.
  std::size_t representation_dim() const;
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// A sentence ready for the encoders: one input row per token plus its tree
// neighborhoods. Inputs are constants unless the tensor is marked trainable.
struct EncodedSentence {
  std::string id;
  Tensor inputs;
  corpus::TreeStructure tree;

  std::size_t size() const { return inputs.rows(); }
};

// Chain structure for sentences without a parse: each token's head is the
// following token.
corpus::TreeStructure chain_structure(std::size_t n);

struct LstmCell {
  Tensor W_f, W_i, W_o, W_c;
  Tensor b_f, b_i, b_o, b_c;
};

// Forward/backward for a linear stack; upward/downward for a tree stack.
struct BiLayer {
  LstmCell forward;
  LstmCell backward;
};

enum class Topology { Linear, Tree };

// Per-layer, per-direction hidden states ([layer][token]) and the final
// layer's concatenation per token.
struct StackStates {
  std::vector<std::vector<Var>> forward;
  std::vector<std::vector<Var>> backward;
  std::vector<Var> top;
};

// Maps parameter tensors onto a tape: as gradient-receiving leaves when
// trainable, as constants otherwise. A trainable binder must only be built
// over a model the caller may mutate.
class Binder {
 public:
  Binder(Tape& tape, bool trainable) : tape_(tape), trainable_(trainable) {}

  Tape& tape() { return tape_; }
  Var operator()(const Tensor& parameter);

 private:
  Tape& tape_;
  bool trainable_;
};

struct BiLstmStack {
  Topology topology = Topology::Linear;
  Activation g = Activation::Tanh;
  std::vector<BiLayer> layers;

  std::size_t hidden() const { return layers.front().forward.b_f.size(); }
  StackStates run(Binder& bind, Var inputs, std::size_t n, const corpus::TreeStructure* tree) const;
};

struct RegressionHead {
  Tensor V1, b1, V2, b2;

  Var run(Binder& bind, Var h) const;
};

// Shared encoder(s) plus one regression head per named dataset (or a single
// shared head).
class Model {
 public:
  // Xavier-uniform weights, zero biases, deterministic in seed.
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  bool has_head(std::string_view name) const;
  const RegressionHead& head(std::string_view name) const;

  const std::optional<BiLstmStack>& linear() const { return linear_; }
  const std::optional<BiLstmStack>& tree() const { return tree_; }
  std::optional<BiLstmStack>& linear() { return linear_; }
  std::optional<BiLstmStack>& tree() { return tree_; }
  RegressionHead& head(std::string_view name);

  // Named parameters in a fixed order: linear stack, tree stack, heads.
  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
  std::vector<Tensor*> encoder_parameters();
  std::vector<Tensor*> head_parameters(std::string_view name);
  std::size_t parameter_count() const;

  // Trainable variants bind parameters as tape leaves that receive
  // gradients; const variants bind them as constants.
  std::vector<Var> encode(Tape& tape, const EncodedSentence& sentence);
  std::vector<Var> encode(Tape& tape, const EncodedSentence& sentence) const;
  Var regress(Tape& tape, Var h, std::string_view head);
  Var regress(Tape& tape, Var h, std::string_view head) const;

  // Sum of Huber losses over `targets` (token, gold), routed through `head`.
  Var sentence_loss(Tape& tape, const EncodedSentence& sentence,
                    std::span<const std::pair<std::size_t, double>> targets, std::string_view head);

  // Raw predictions for the given tokens.
  std::vector<double> predict(const EncodedSentence& sentence, std::span<const std::size_t> tokens,
                              std::string_view head) const;

  // Per-stack states for analysis and tests.
  StackStates run_linear(Tape& tape, const EncodedSentence& sentence) const;
  StackStates run_tree(Tape& tape, const EncodedSentence& sentence) const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  std::vector<Var> encode_impl(Binder& bind, const EncodedSentence& sentence) const;
  const RegressionHead& find_head(std::string_view name) const;

  ModelConfig config_;
  std::optional<BiLstmStack> linear_;
  std::optional<BiLstmStack> tree_;
  std::map<std::string, RegressionHead, std::less<>> heads_;
};

}  // namespace factuality::models
