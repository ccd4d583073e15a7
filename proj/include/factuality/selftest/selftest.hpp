#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "factuality/corpus/sentence.hpp"

namespace factuality::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// End-to-end finite-difference check of L(1), L(2), T(1), T(2) and H(2)
// models plus head, with respect to parameters and inputs, on random 3-6
// token sentences.
CheckResult check_gradients(std::size_t seeds = 20, double tolerance = 1e-4);
// Tree encoder on chain-shaped trees, with tanh and the linear encoder's
// weights, against the linear recurrence.
CheckResult check_chain_tree(std::size_t sentences = 50, double tolerance = 1e-12);
// Upward tree states ignore every input outside the token's subtree.
CheckResult check_subtree_locality(std::size_t trees = 20);
CheckResult check_isotonic_oracle(std::size_t trials = 200, double tolerance = 1e-9);
CheckResult check_label_mapping();
// Miner ratios on a generated 200-line corpus with planted counts.
CheckResult check_miner();
// Per-epoch schedule counts and head-gradient sparsity.
CheckResult check_regimes();

struct ParityOptions {
  std::size_t train_size = 2000;
  std::size_t dev_size = 500;
  std::size_t embedding_dim = 50;
  std::size_t epochs = 20;
  double target_r = 0.9;
  std::uint64_t seed = 1;
  // Stop once the target is reached.
  bool stop_early = true;
};
CheckResult check_negation_parity(const ParityOptions& options = {});

// Least-squares monotone fit by enumerating every contiguous partition of the
// tie-merged, sorted points. Returns (x, fitted value) per distinct x in
// increasing order. Exponential in the number of distinct predictions.
std::vector<std::pair<double, double>> brute_force_isotonic(std::span<const double> predictions,
                                                            std::span<const double> golds);

struct SyntheticExample {
  corpus::Sentence sentence;
  std::size_t predicate = 0;
  double label = 0.0;
};

// "[det] [adj] noun [adv] verb [det] [adj] noun ." with optional adjectives
// and adverb. The verb is the predicate; its label is +2.25 when the number of
// "no" determiners is even and -2.25 otherwise.
std::vector<SyntheticExample> generate_negation_parity(std::size_t count, std::uint64_t seed);
std::vector<std::string> negation_parity_vocabulary();

// Criteria in the order of the acceptance list, minus the data-gated ones.
// `progress` is called after each check.
std::vector<CheckResult> run_all(const std::function<void(const CheckResult&)>& progress = {});

}  // namespace factuality::selftest
