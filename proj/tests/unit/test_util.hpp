#pragma once

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "factuality/autodiff/tensor.hpp"
#include "factuality/corpus/sentence.hpp"
#include "factuality/models/model.hpp"

namespace factuality::testing_util {

// Random dependency tree of n tokens: a random permutation decides the
// attachment order and every token attaches to one placed before it.
inline corpus::Sentence random_tree_sentence(std::mt19937_64& rng, std::size_t n) {
  corpus::Sentence s;
  s.id = "random";
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  s.heads.assign(n, corpus::Sentence::kRoot);
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    s.heads[order[i]] = order[pick(rng)];
  }
  for (std::size_t t = 0; t < n; ++t) {
    s.tokens.push_back("w" + std::to_string(t));
    s.lemmas.push_back("l" + std::to_string(t));
    s.upos.push_back("X");
    s.deprels.push_back(s.heads[t] == corpus::Sentence::kRoot ? "root" : "dep");
  }
  return s;
}

// "Jo failed to leave no trace ." with leave attached under failed.
inline corpus::Sentence figure_one_sentence() {
  corpus::Sentence s;
  s.id = "figure-1";
  s.tokens = {"Jo", "failed", "to", "leave", "no", "trace", "."};
  s.lemmas = {"Jo", "fail", "to", "leave", "no", "trace", "."};
  s.upos = {"PROPN", "VERB", "PART", "VERB", "DET", "NOUN", "PUNCT"};
  const auto R = corpus::Sentence::kRoot;
  s.heads = {1, R, 3, 1, 5, 3, 3};
  s.deprels = {"nsubj", "root", "mark", "xcomp", "neg", "dobj", "punct"};
  return s;
}

// Random inputs in [-1, 1] over a random dependency tree.
inline models::EncodedSentence random_encoded(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(n * dim);
  for (double& v : values) v = u(rng);
  models::EncodedSentence s;
  s.id = "enc";
  s.inputs = autodiff::Tensor({n, dim}, std::move(values));
  s.tree = corpus::tree_structure(random_tree_sentence(rng, n));
  return s;
}

inline models::ModelConfig small_config(models::Architecture arch, std::size_t layers, std::size_t dim = 4) {
  models::ModelConfig c;
  c.arch = arch;
  c.layers = layers;
  c.input_dim = dim;
  return c;
}

}  // namespace factuality::testing_util
