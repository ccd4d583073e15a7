#include "factuality/corpus/sentence.hpp"

#include <stdexcept>

#include "factuality/errors.hpp"

namespace factuality::corpus {

void Sentence::validate() const {
  const std::size_t n = tokens.size();
  const std::string where = "sentence '" + id + "'";
  if (n == 0) throw DataError(where + " is empty");
  if (lemmas.size() != n || upos.size() != n || heads.size() != n || deprels.size() != n) {
    throw DataError(where + " has columns of unequal length");
  }
  bool has_root = false;
  for (std::size_t t = 0; t < n; ++t) {
    if (heads[t] == kRoot) {
      has_root = true;
    } else if (heads[t] >= n) {
      throw DataError(where + ": head of token " + std::to_string(t + 1) + " is out of range");
    } else if (heads[t] == t) {
      throw DataError(where + ": token " + std::to_string(t + 1) + " is its own head");
    }
  }
  if (!has_root) throw DataError(where + " has no root");

  // 0 = unvisited, 1 = on current path, 2 = reaches a root.
  std::vector<char> state(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<std::size_t> path;
    std::size_t t = start;
    while (t != kRoot && state[t] == 0) {
      state[t] = 1;
      path.push_back(t);
      t = heads[t];
    }
    if (t != kRoot && state[t] == 1) {
      throw DataError(where + " has a cycle through token " + std::to_string(t + 1));
    }
    for (std::size_t p : path) state[p] = 2;
  }
}

std::vector<std::size_t> children(const Sentence& sentence, std::size_t t) {
  if (t >= sentence.size()) throw std::out_of_range("children: token index out of range");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < sentence.size(); ++k) {
    if (sentence.heads[k] == t) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> parents(const Sentence& sentence, std::size_t t) {
  if (t >= sentence.size()) throw std::out_of_range("parents: token index out of range");
  if (sentence.heads[t] == Sentence::kRoot) return {};
  return {sentence.heads[t]};
}

TreeStructure tree_structure(const std::vector<std::size_t>& heads) {
  const std::size_t n = heads.size();
  TreeStructure tree;
  tree.children.resize(n);
  tree.parents.resize(n);
  std::vector<std::size_t> roots;
  for (std::size_t t = 0; t < n; ++t) {
    if (heads[t] == Sentence::kRoot) {
      roots.push_back(t);
    } else {
      if (heads[t] >= n) throw DataError("tree_structure: head out of range");
      tree.children[heads[t]].push_back(t);
      tree.parents[t].push_back(heads[t]);
    }
  }

  // Iterative post-order from each root, children visited in ascending order.
  tree.upward_order.reserve(n);
  for (std::size_t root : roots) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < tree.children[node].size()) {
        const std::size_t child = tree.children[node][next++];
        stack.emplace_back(child, 0);
      } else {
        tree.upward_order.push_back(node);
        stack.pop_back();
      }
    }
  }
  if (tree.upward_order.size() != n) {
    throw DataError("tree_structure: heads contain a cycle or unreachable tokens");
  }
  tree.downward_order.assign(tree.upward_order.rbegin(), tree.upward_order.rend());
  return tree;
}

Corpus::Corpus(std::vector<Sentence> sentences) {
  for (auto& s : sentences) add(std::move(s));
}

void Corpus::add(Sentence sentence) {
  if (by_id_.contains(sentence.id)) {
    throw DataError("duplicate sentence id '" + sentence.id + "'");
  }
  by_id_.emplace(sentence.id, sentences_.size());
  sentences_.push_back(std::move(sentence));
}

const Sentence* Corpus::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &sentences_[it->second];
}

}  // namespace factuality::corpus
