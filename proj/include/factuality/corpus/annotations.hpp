#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "factuality/corpus/records.hpp"

namespace factuality::corpus {

// One crowd worker's answers for one predicate candidate. happened and
// confidence are present exactly when the worker marked the sentence
// understandable and the token a predicate.
struct RawAnnotation {
  std::string worker;
  std::string sentence_id;
  std::size_t token = 0;
  bool understandable = false;
  bool is_predicate = false;
  std::optional<bool> happened;
  std::optional<int> confidence;

  bool usable() const { return understandable && is_predicate; }
  // Throws DataError when the presence rule or the 0-4 confidence range is broken.
  void validate() const;
};

// JSON-lines: {"worker", "sentence_id", "token", "understandable",
// "predicate", "happened"?, "confidence"?}.
std::vector<RawAnnotation> load_raw_annotations(std::istream& in);

// +0.75 * confidence when the event happened, -0.75 * confidence otherwise.
double uds_label(bool happened, double mean_confidence);

// Collapses all annotations of one predicate into a label: each usable
// annotation contributes its signed value, the values are averaged and
// clipped to [-3, 3]. Returns nullopt when no annotation is usable.
std::optional<AnnotatedPredicate> aggregate_predicate(std::span<const RawAnnotation> annotations,
                                                      Split split = Split::Train);

// rating -> (count below + half the count equal) / N over one annotator's ratings.
std::map<int, double> ridit_scores(std::span<const int> ratings);

struct AnnotatorFilterResult {
  std::set<std::string> retained;
  std::set<std::string> dropped;
};

// Drops workers whose agreement with co-annotators is more than two standard
// deviations below the mean, on either the happened answers (mean pairwise
// equality) or the confidence answers (mean absolute difference of
// logit-transformed per-worker ridit scores, negated). Workers sharing no
// item with anyone are kept.
AnnotatorFilterResult filter_annotators(std::span<const RawAnnotation> annotations);

struct AggregationResult {
  std::vector<AnnotatedPredicate> records;
  std::set<std::string> dropped_workers;
  // sentence_id:token of predicates left without usable annotations.
  std::vector<std::string> dropped_predicates;
};

// Filter annotators, then aggregate every predicate (ordered by sentence id
// and token).
AggregationResult aggregate_annotations(std::span<const RawAnnotation> annotations,
                                        Split split = Split::Train);

}  // namespace factuality::corpus
