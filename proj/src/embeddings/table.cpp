#include "factuality/embeddings/table.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "factuality/errors.hpp"

namespace factuality::embeddings {
namespace {

std::vector<double> uniform_vector(std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = u(rng);
  return v;
}

bool parse_double(std::string_view field, double& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t seed) : dim_(dim) {
  if (dim == 0) throw DimensionError("embedding dimension must be positive");
  std::mt19937_64 rng(seed);
  unk_ = uniform_vector(dim, rng);
}

bool EmbeddingTable::insert(std::string token, std::vector<double> vector) {
  return vectors_.try_emplace(lowercase(token), std::move(vector)).second;
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::size_t dim, std::uint64_t seed,
                                    const std::unordered_set<std::string>* vocabulary) {
  EmbeddingTable table(dim, seed);
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fields.clear();
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos == line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      fields.emplace_back(line.data() + pos, end - pos);
      pos = end;
    }
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      if (rows == 0 && fields.size() > 1) {
        throw DimensionError("line " + std::to_string(line_no) + ": embedding file has dimension " +
                             std::to_string(fields.size() - 1) + ", expected " + std::to_string(dim));
      }
      throw DataError("expected " + std::to_string(dim + 1) + " fields, found " +
                          std::to_string(fields.size()),
                      line_no);
    }
    ++rows;
    if (vocabulary != nullptr && !vocabulary->contains(lowercase(fields[0]))) continue;
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], v[i])) {
        throw DataError("cannot parse '" + std::string(fields[i + 1]) + "' as a number", line_no);
      }
    }
    table.insert(std::string(fields[0]), std::move(v));
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::size_t dim, std::uint64_t seed,
                                    const std::unordered_set<std::string>* vocabulary) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  return load(in, dim, seed, vocabulary);
}

EmbeddingTable EmbeddingTable::random(std::span<const std::string> vocabulary, std::size_t dim,
                                      std::uint64_t seed) {
  EmbeddingTable table(dim, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const std::string& word : vocabulary) {
    std::vector<double> v = uniform_vector(dim, rng);
    table.insert(word, std::move(v));
  }
  return table;
}

bool EmbeddingTable::contains(std::string_view token) const {
  return vectors_.contains(lowercase(token));
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  auto it = vectors_.find(lowercase(token));
  return it == vectors_.end() ? std::span<const double>(unk_) : std::span<const double>(it->second);
}

std::vector<double> embed_token(const EmbeddingTable& table, std::string_view token,
                                const std::vector<double>* features) {
  auto base = table.lookup(token);
  std::vector<double> out(base.begin(), base.end());
  if (features != nullptr) out.insert(out.end(), features->begin(), features->end());
  return out;
}

autodiff::Tensor embed_sentence(const EmbeddingTable& table, const corpus::Sentence& sentence,
                                const FeatureProvider& features) {
  const std::size_t n = sentence.size();
  if (n == 0) throw DataError("cannot embed empty sentence '" + sentence.id + "'");
  const std::size_t width = table.dim() + features.dim;
  std::vector<double> values;
  values.reserve(n * width);
  for (std::size_t t = 0; t < n; ++t) {
    auto base = table.lookup(sentence.tokens[t]);
    values.insert(values.end(), base.begin(), base.end());
    if (features.enabled()) {
      const std::string_view lemma = t < sentence.lemmas.size() ? std::string_view(sentence.lemmas[t])
                                                                : std::string_view(sentence.tokens[t]);
      std::vector<double> f = features.features(lemma);
      if (f.size() != features.dim) {
        throw DimensionError("feature provider returned " + std::to_string(f.size()) +
                             " values, expected " + std::to_string(features.dim));
      }
      values.insert(values.end(), f.begin(), f.end());
    }
  }
  return autodiff::Tensor({n, width}, std::move(values), false);
}

}  // namespace factuality::embeddings
