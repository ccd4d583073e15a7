#include "factuality/corpus/records.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "factuality/errors.hpp"
#include "factuality/log.hpp"

namespace factuality::corpus {
namespace {

std::string normalized(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Dataset dataset) {
  switch (dataset) {
    case Dataset::FactBank: return "FactBank";
    case Dataset::UW: return "UW";
    case Dataset::Meantime: return "MEANTIME";
    case Dataset::UdsIh2: return "UDS-IH2";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Dataset parse_dataset(std::string_view text) {
  const std::string key = normalized(text);
  if (key == "factbank") return Dataset::FactBank;
  if (key == "uw") return Dataset::UW;
  if (key == "meantime") return Dataset::Meantime;
  if (key == "udsih2") return Dataset::UdsIh2;
  throw ConfigError("unknown dataset '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  const std::string key = normalized(text);
  if (key == "train") return Split::Train;
  if (key == "dev") return Split::Dev;
  if (key == "test") return Split::Test;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

void RecordSet::add(AnnotatedPredicate record) {
  const Key key{record.dataset, record.split};
  groups_[key].push_back(std::move(record));
}

const std::vector<AnnotatedPredicate>& RecordSet::get(Dataset dataset, Split split) const {
  static const std::vector<AnnotatedPredicate> kEmpty;
  auto it = groups_.find({dataset, split});
  return it == groups_.end() ? kEmpty : it->second;
}

std::size_t RecordSet::total() const {
  std::size_t n = 0;
  for (const auto& [key, records] : groups_) n += records.size();
  return n;
}

RecordSet load_factuality_records(std::istream& in, const Corpus* sentences) {
  RecordSet set;
  std::string line;
  std::size_t record_no = 0;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    ++record_no;
    AnnotatedPredicate record;
    try {
      const auto j = nlohmann::json::parse(line);
      record.sentence_id = j.at("sentence_id").get<std::string>();
      const auto token = j.at("token").get<long long>();
      if (token < 0) throw DataError("negative token index");
      record.token = static_cast<std::size_t>(token);
      record.label = j.at("label").get<double>();
      record.dataset = parse_dataset(j.at("dataset").get<std::string>());
      record.split = parse_split(j.at("split").get<std::string>());
    } catch (const std::exception& e) {
      throw DataError(std::string("record ") + std::to_string(record_no) + ": " + e.what());
    }
    if (!std::isfinite(record.label) || record.label < kMinLabel || record.label > kMaxLabel) {
      throw DataError("record " + std::to_string(record_no) + ": label " +
                          std::to_string(record.label) + " outside [-3, 3]");
    }
    if (sentences != nullptr) {
      const Sentence* s = sentences->find(record.sentence_id);
      if (s == nullptr) {
        throw DataError("record " + std::to_string(record_no) + ": unknown sentence id '" +
                            record.sentence_id + "'");
      }
      if (record.token >= s->size()) {
        throw DataError("record " + std::to_string(record_no) + ": token " +
                            std::to_string(record.token) + " out of range for sentence '" +
                            record.sentence_id + "'");
      }
    }
    set.add(std::move(record));
  }
  if (set.empty()) log::warn("factuality records: no records found");
  return set;
}

RecordSet load_factuality_records(const std::filesystem::path& path, const Corpus* sentences) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open factuality records " + path.string());
  return load_factuality_records(in, sentences);
}

void write_factuality_record(std::ostream& out, const AnnotatedPredicate& record) {
  nlohmann::json j{{"sentence_id", record.sentence_id},
                   {"token", record.token},
                   {"label", record.label},
                   {"dataset", std::string(to_string(record.dataset))},
                   {"split", std::string(to_string(record.split))}};
  out << j.dump() << '\n';
}

}  // namespace factuality::corpus
