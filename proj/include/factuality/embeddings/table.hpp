#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "factuality/autodiff/tensor.hpp"
#include "factuality/corpus/sentence.hpp"

namespace factuality::embeddings {

// Frozen word vectors keyed by lowercased token, with a single shared UNK
// vector for everything not in the file.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::uint64_t seed);

  // Text format: `token v1 ... vdim` per line. First occurrence of a
  // (lowercased) token wins. Throws DataError with the line number on a
  // malformed line or a dimension mismatch. With `vocabulary` (lowercased),
  // only those rows are kept; the rest are checked for field count only.
  static EmbeddingTable load(std::istream& in, std::size_t dim, std::uint64_t seed,
                             const std::unordered_set<std::string>* vocabulary = nullptr);
  static EmbeddingTable load(const std::filesystem::path& path, std::size_t dim, std::uint64_t seed,
                             const std::unordered_set<std::string>* vocabulary = nullptr);

  // Every word in `vocabulary` gets an iid Uniform[-1,1] vector. Used for
  // synthetic tasks that have no pretrained vectors.
  static EmbeddingTable random(std::span<const std::string> vocabulary, std::size_t dim,
                               std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view token) const;
  std::span<const double> unk() const { return unk_; }
  // Lowercased lookup, falling back to unk().
  std::span<const double> lookup(std::string_view token) const;

 private:
  bool insert(std::string token, std::vector<double> vector);

  std::size_t dim_;
  std::vector<double> unk_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

std::string lowercase(std::string_view text);

// Per-lemma feature vector of fixed width, appended to the word vector.
struct FeatureProvider {
  std::size_t dim = 0;
  std::function<std::vector<double>(std::string_view lemma)> features;

  bool enabled() const { return dim > 0; }
};

std::vector<double> embed_token(const EmbeddingTable& table, std::string_view token,
                                const std::vector<double>* features = nullptr);

// n x (dim + features.dim) non-trainable matrix. Features are looked up by
// lemma. Throws DataError on an empty sentence.
autodiff::Tensor embed_sentence(const EmbeddingTable& table, const corpus::Sentence& sentence,
                                const FeatureProvider& features = {});

}  // namespace factuality::embeddings
