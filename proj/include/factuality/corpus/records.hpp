#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factuality/corpus/sentence.hpp"

namespace factuality::corpus {

enum class Dataset { FactBank, UW, Meantime, UdsIh2 };
enum class Split { Train, Dev, Test };

inline constexpr Dataset kAllDatasets[] = {Dataset::FactBank, Dataset::UW, Dataset::Meantime,
                                           Dataset::UdsIh2};

std::string_view to_string(Dataset dataset);
std::string_view to_string(Split split);
// Case-insensitive; accepts "FactBank", "UW", "MEANTIME", "UDS-IH2" (and "UDS_IH2").
Dataset parse_dataset(std::string_view text);
Split parse_split(std::string_view text);

inline constexpr double kMinLabel = -3.0;
inline constexpr double kMaxLabel = 3.0;

// One gold factuality judgement on one token.
struct AnnotatedPredicate {
  std::string sentence_id;
  std::size_t token = 0;
  double label = 0.0;
  Dataset dataset = Dataset::UdsIh2;
  Split split = Split::Train;

  friend bool operator==(const AnnotatedPredicate&, const AnnotatedPredicate&) = default;
};

class RecordSet {
 public:
  using Key = std::pair<Dataset, Split>;

  void add(AnnotatedPredicate record);
  const std::vector<AnnotatedPredicate>& get(Dataset dataset, Split split) const;
  std::size_t count(Dataset dataset, Split split) const { return get(dataset, split).size(); }
  std::size_t total() const;
  bool empty() const { return groups_.empty(); }
  const std::map<Key, std::vector<AnnotatedPredicate>>& groups() const { return groups_; }

 private:
  std::map<Key, std::vector<AnnotatedPredicate>> groups_;
};

// JSON-lines reader: {"sentence_id", "token", "label", "dataset", "split"}.
// When `sentences` is given, every record must refer to a known sentence and
// an in-range token. Errors carry the 1-based record number.
RecordSet load_factuality_records(std::istream& in, const Corpus* sentences = nullptr);
RecordSet load_factuality_records(const std::filesystem::path& path,
                                  const Corpus* sentences = nullptr);

void write_factuality_record(std::ostream& out, const AnnotatedPredicate& record);

}  // namespace factuality::corpus
