#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factuality/corpus/records.hpp"
#include "factuality/corpus/sentence.hpp"

namespace factuality::evaluation {

// One scored predicate. `prediction` is absent for gold-only analyses.
struct PredictionRecord {
  std::string sentence_id;
  std::size_t token = 0;
  double gold = 0.0;
  std::optional<double> prediction;
  std::optional<double> calibrated;
};

struct EvalReport {
  std::string dataset;
  std::string split;
  std::size_t n = 0;
  double mae = 0.0;
  std::optional<double> pearson;
};

// Throws std::invalid_argument if any record lacks a prediction.
EvalReport evaluate(std::span<const PredictionRecord> records, std::string dataset, std::string split);
EvalReport constant_baseline(std::span<const double> golds, std::string dataset, std::string split,
                             double value = 3.0);

nlohmann::json to_json(const EvalReport& report);
// "NAN" for an undefined correlation.
std::string format_pearson(const std::optional<double>& r, int precision = 3);

// Modal and negation context of a predicate, read off its direct dependents.
struct ModalContext {
  // "none", a modal from the fixed list, "ca(n't)" or "(wi)'ll".
  std::string modal = "none";
  bool negated = false;

  friend bool operator==(const ModalContext&, const ModalContext&) = default;
};

ModalContext modal_context(const corpus::Sentence& sentence, std::size_t token);
// Direct negation: a "neg" dependent, or an advmod dependent "not"/"n't".
bool directly_negated(const corpus::Sentence& sentence, std::size_t token);

struct ModalRow {
  std::string modal;
  bool negated = false;
  double mean_gold = 0.0;
  std::optional<double> mae;
  std::size_t n = 0;
};

// Groups sorted by descending mean gold. Records whose sentence is missing
// from the corpus are skipped.
std::vector<ModalRow> breakdown_modal_negation(std::span<const PredictionRecord> records,
                                               const corpus::Corpus& corpus);

struct RelationRow {
  std::string deprel;
  double mean_gold = 0.0;
  std::optional<double> mean_prediction;
  std::size_t n = 0;
};

// Groups by the annotated token's own relation to its head; the `top_k` most
// frequent (ties by name), sorted by descending frequency. top_k = 0 keeps all.
std::vector<RelationRow> breakdown_relation(std::span<const PredictionRecord> records,
                                            const corpus::Corpus& corpus, std::size_t top_k = 10);

struct ErrorRow {
  std::string sentence_id;
  std::size_t token = 0;
  double prediction = 0.0;
  double gold = 0.0;
  double abs_error = 0.0;
};

// Largest absolute errors first; equal errors ordered by sentence id, then by
// input order.
std::vector<ErrorRow> top_errors(std::span<const PredictionRecord> records, std::size_t n);

// The infinitival-taking verbs of the analysis tables.
const std::vector<std::string>& infinitival_verbs();

struct XcompRow {
  std::string verb;  // "manage to"
  double mean_gold = 0.0;
  std::optional<double> mae;
  std::size_t n = 0;
};

// Predicates attached by xcomp to a verb from infinitival_verbs(); the
// governing verb's directly negated instances are excluded when
// `exclude_negated`. Sorted by descending mean gold.
std::vector<XcompRow> xcomp_verb_means(std::span<const PredictionRecord> records, const corpus::Corpus& corpus,
                                       bool exclude_negated = true);

void write_modal_table(std::ostream& out, std::span<const ModalRow> rows);
void write_relation_table(std::ostream& out, std::span<const RelationRow> rows);
void write_error_table(std::ostream& out, std::span<const ErrorRow> rows);
void write_xcomp_table(std::ostream& out, std::span<const XcompRow> rows);
void write_modal_csv(std::ostream& out, std::span<const ModalRow> rows);
void write_relation_csv(std::ostream& out, std::span<const RelationRow> rows);
void write_xcomp_csv(std::ostream& out, std::span<const XcompRow> rows);

}  // namespace factuality::evaluation
