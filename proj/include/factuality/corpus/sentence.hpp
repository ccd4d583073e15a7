#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace factuality::corpus {

// One dependency-parsed sentence. Heads are 0-based token indices; the root
// token(s) carry kRoot.
struct Sentence {
  static constexpr std::size_t kRoot = std::numeric_limits<std::size_t>::max();

  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::vector<std::string> upos;
  std::vector<std::size_t> heads;
  std::vector<std::string> deprels;

  std::size_t size() const { return tokens.size(); }
  bool is_root(std::size_t t) const { return heads.at(t) == kRoot; }

  // Throws DataError if the parallel columns disagree in length, a head is
  // out of range or self-referential, no root exists, or the heads contain a
  // cycle.
  void validate() const;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Both return indices in ascending order. Throw std::out_of_range for a bad t.
std::vector<std::size_t> children(const Sentence& sentence, std::size_t t);
std::vector<std::size_t> parents(const Sentence& sentence, std::size_t t);

// Neighborhoods and processing orders for the tree encoder. upward_order
// lists every token after all of its children; downward_order is its reverse
// (every token after its parent).
struct TreeStructure {
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::size_t> upward_order;
  std::vector<std::size_t> downward_order;

  std::size_t size() const { return children.size(); }
};

TreeStructure tree_structure(const std::vector<std::size_t>& heads);
inline TreeStructure tree_structure(const Sentence& sentence) { return tree_structure(sentence.heads); }

// A set of sentences addressable by id.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Sentence> sentences);

  void add(Sentence sentence);
  const Sentence* find(const std::string& id) const;
  const std::vector<Sentence>& sentences() const { return sentences_; }
  std::size_t size() const { return sentences_.size(); }

 private:
  std::vector<Sentence> sentences_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace factuality::corpus
