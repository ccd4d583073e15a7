#include "factuality/corpus/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "factuality/errors.hpp"
#include "factuality/log.hpp"

namespace factuality::corpus {
namespace {

using ItemKey = std::pair<std::string, std::size_t>;

// Mean of each worker's pairwise statistic, z-scored across workers that have
// at least one comparison. Returns workers with z < -2.
std::set<std::string> low_outliers(const std::map<std::string, std::pair<double, std::size_t>>& sums) {
  std::vector<std::pair<std::string, double>> means;
  for (const auto& [worker, acc] : sums) {
    if (acc.second > 0) means.emplace_back(worker, acc.first / static_cast<double>(acc.second));
  }
  std::set<std::string> out;
  if (means.size() < 2) return out;
  double mean = 0.0;
  for (const auto& [w, m] : means) mean += m;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (const auto& [w, m] : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(means.size());
  const double sd = std::sqrt(var);
  if (sd == 0.0) return out;
  for (const auto& [w, m] : means) {
    if ((m - mean) / sd < -2.0) out.insert(w);
  }
  return out;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void RawAnnotation::validate() const {
  if (usable()) {
    if (!happened || !confidence) {
      throw DataError("annotation by '" + worker + "' on " + sentence_id + ":" +
                      std::to_string(token) + " lacks happened/confidence");
    }
    if (*confidence < 0 || *confidence > 4) {
      throw DataError("annotation by '" + worker + "': confidence " + std::to_string(*confidence) +
                      " outside 0-4");
    }
  } else if (happened || confidence) {
    throw DataError("annotation by '" + worker + "' on " + sentence_id + ":" +
                    std::to_string(token) +
                    " has happened/confidence although the item was not understandable or not a predicate");
  }
}

std::vector<RawAnnotation> load_raw_annotations(std::istream& in) {
  std::vector<RawAnnotation> out;
  std::string line;
  std::size_t record_no = 0;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    ++record_no;
    try {
      const auto j = nlohmann::json::parse(line);
      RawAnnotation a;
      a.worker = j.at("worker").get<std::string>();
      a.sentence_id = j.at("sentence_id").get<std::string>();
      const auto token = j.at("token").get<long long>();
      if (token < 0) throw DataError("negative token index");
      a.token = static_cast<std::size_t>(token);
      a.understandable = j.at("understandable").get<bool>();
      a.is_predicate = j.at("predicate").get<bool>();
      if (auto it = j.find("happened"); it != j.end() && !it->is_null()) a.happened = it->get<bool>();
      if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) a.confidence = it->get<int>();
      a.validate();
      out.push_back(std::move(a));
    } catch (const std::exception& e) {
      throw DataError("annotation record " + std::to_string(record_no) + ": " + e.what());
    }
  }
  return out;
}

double uds_label(bool happened, double mean_confidence) {
  if (!(mean_confidence >= 0.0 && mean_confidence <= 4.0)) {
    throw DataError("uds_label: confidence " + std::to_string(mean_confidence) + " outside [0, 4]");
  }
  const double magnitude = 0.75 * mean_confidence;
  return happened ? magnitude : -magnitude;
}

std::optional<AnnotatedPredicate> aggregate_predicate(std::span<const RawAnnotation> annotations,
                                                      Split split) {
  double total = 0.0;
  std::size_t used = 0;
  const RawAnnotation* first = nullptr;
  for (const RawAnnotation& a : annotations) {
    if (first == nullptr) first = &a;
    if (a.sentence_id != first->sentence_id || a.token != first->token) {
      throw ContractError("aggregate_predicate: annotations belong to different predicates");
    }
    if (!a.usable()) continue;
    a.validate();
    total += uds_label(*a.happened, static_cast<double>(*a.confidence));
    ++used;
  }
  if (used == 0) {
    if (first != nullptr) {
      log::info("dropping predicate " + first->sentence_id + ":" + std::to_string(first->token) +
                ": no usable annotations");
    }
    return std::nullopt;
  }
  AnnotatedPredicate p;
  p.sentence_id = first->sentence_id;
  p.token = first->token;
  p.label = std::clamp(total / static_cast<double>(used), kMinLabel, kMaxLabel);
  p.dataset = Dataset::UdsIh2;
  p.split = split;
  return p;
}

std::map<int, double> ridit_scores(std::span<const int> ratings) {
  std::map<int, std::size_t> counts;
  for (int r : ratings) ++counts[r];
  std::map<int, double> scores;
  const double n = static_cast<double>(ratings.size());
  std::size_t below = 0;
  for (const auto& [rating, count] : counts) {
    scores[rating] = (static_cast<double>(below) + 0.5 * static_cast<double>(count)) / n;
    below += count;
  }
  return scores;
}

AnnotatorFilterResult filter_annotators(std::span<const RawAnnotation> annotations) {
  AnnotatorFilterResult result;
  for (const RawAnnotation& a : annotations) result.retained.insert(a.worker);

  std::map<std::string, std::vector<int>> ratings;
  for (const RawAnnotation& a : annotations) {
    if (a.usable() && a.confidence) ratings[a.worker].push_back(*a.confidence);
  }
  std::map<std::string, std::map<int, double>> ridits;
  for (const auto& [worker, rs] : ratings) ridits[worker] = ridit_scores(rs);

  // item -> (worker, happened, logit ridit confidence)
  struct Response {
    const std::string* worker;
    bool happened;
    double confidence;
  };
  std::map<ItemKey, std::vector<Response>> items;
  for (const RawAnnotation& a : annotations) {
    if (!a.usable() || !a.happened || !a.confidence) continue;
    const double r = ridits[a.worker][*a.confidence];
    items[{a.sentence_id, a.token}].push_back({&a.worker, *a.happened, logit(r)});
  }

  std::map<std::string, std::pair<double, std::size_t>> happened_agreement;
  std::map<std::string, std::pair<double, std::size_t>> confidence_agreement;
  for (const auto& [item, responses] : items) {
    for (std::size_t i = 0; i < responses.size(); ++i) {
      for (std::size_t j = i + 1; j < responses.size(); ++j) {
        const Response& a = responses[i];
        const Response& b = responses[j];
        if (*a.worker == *b.worker) continue;
        const double equal = a.happened == b.happened ? 1.0 : 0.0;
        const double closeness = -std::abs(a.confidence - b.confidence);
        for (const std::string* w : {a.worker, b.worker}) {
          auto& h = happened_agreement[*w];
          h.first += equal;
          ++h.second;
          auto& c = confidence_agreement[*w];
          c.first += closeness;
          ++c.second;
        }
      }
    }
  }

  for (const auto& w : low_outliers(happened_agreement)) result.dropped.insert(w);
  for (const auto& w : low_outliers(confidence_agreement)) result.dropped.insert(w);
  for (const auto& w : result.dropped) result.retained.erase(w);
  return result;
}

AggregationResult aggregate_annotations(std::span<const RawAnnotation> annotations, Split split) {
  AggregationResult result;
  const AnnotatorFilterResult filter = filter_annotators(annotations);
  result.dropped_workers = filter.dropped;
  for (const auto& w : filter.dropped) log::info("dropping annotator '" + w + "' for low agreement");

  std::map<ItemKey, std::vector<RawAnnotation>> by_item;
  for (const RawAnnotation& a : annotations) {
    if (filter.retained.contains(a.worker)) by_item[{a.sentence_id, a.token}].push_back(a);
  }
  // Predicates whose only annotators were dropped.
  for (const RawAnnotation& a : annotations) {
    by_item.try_emplace({a.sentence_id, a.token});
  }
  for (const auto& [item, group] : by_item) {
    auto record = group.empty() ? std::nullopt : aggregate_predicate(group, split);
    if (record) {
      result.records.push_back(std::move(*record));
    } else {
      result.dropped_predicates.push_back(item.first + ":" + std::to_string(item.second));
    }
  }
  return result;
}

}  // namespace factuality::corpus
