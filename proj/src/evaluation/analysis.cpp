#include "factuality/evaluation/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "factuality/evaluation/metrics.hpp"

namespace factuality::evaluation {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_aux(std::string_view deprel) { return deprel == "aux" || deprel.starts_with("aux:"); }

std::optional<std::string> modal_label(const corpus::Sentence& s, std::size_t t) {
  static const std::vector<std::string> kModals{"may", "would", "can", "could", "might", "should", "will"};
  const std::string form = lower(s.tokens[t]);
  if (form == "ca") return "ca(n't)";
  if (form == "'ll") return "(wi)'ll";
  if (std::find(kModals.begin(), kModals.end(), form) != kModals.end()) return form;
  const std::string lemma = t < s.lemmas.size() ? lower(s.lemmas[t]) : std::string();
  if (std::find(kModals.begin(), kModals.end(), lemma) != kModals.end()) return lemma;
  return std::nullopt;
}

struct Accumulator {
  double gold = 0.0;
  double abs_error = 0.0;
  double prediction = 0.0;
  std::size_t predicted = 0;
  std::size_t n = 0;

  void add(const PredictionRecord& r) {
    gold += r.gold;
    ++n;
    if (r.prediction) {
      abs_error += std::abs(*r.prediction - r.gold);
      prediction += *r.prediction;
      ++predicted;
    }
  }
  double mean_gold() const { return gold / static_cast<double>(n); }
  std::optional<double> mae() const {
    if (predicted == 0) return std::nullopt;
    return abs_error / static_cast<double>(predicted);
  }
  std::optional<double> mean_prediction() const {
    if (predicted == 0) return std::nullopt;
    return prediction / static_cast<double>(predicted);
  }
};

const corpus::Sentence* lookup(const corpus::Corpus& corpus, const PredictionRecord& r) {
  const corpus::Sentence* s = corpus.find(r.sentence_id);
  if (s == nullptr || r.token >= s->size()) return nullptr;
  return s;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int precision) {
  return v ? fixed(*v, precision) : std::string("-");
}

// Aligned text table: first column left-aligned, the rest right-aligned.
void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << cells[c];
      }
    }
    out << std::left << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) line(row);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const PredictionRecord> records, std::string dataset, std::string split) {
  std::vector<double> preds;
  std::vector<double> golds;
  preds.reserve(records.size());
  golds.reserve(records.size());
  for (const PredictionRecord& r : records) {
    if (!r.prediction) {
      throw std::invalid_argument("evaluate: record " + r.sentence_id + ":" + std::to_string(r.token) +
                                  " has no prediction");
    }
    preds.push_back(*r.prediction);
    golds.push_back(r.gold);
  }
  EvalReport report;
  report.dataset = std::move(dataset);
  report.split = std::move(split);
  report.n = records.size();
  report.mae = mae(preds, golds);
  report.pearson = pearson(preds, golds);
  return report;
}

EvalReport constant_baseline(std::span<const double> golds, std::string dataset, std::string split,
                             double value) {
  const std::vector<double> preds(golds.size(), value);
  EvalReport report;
  report.dataset = std::move(dataset);
  report.split = std::move(split);
  report.n = golds.size();
  report.mae = mae(preds, golds);
  report.pearson = pearson(preds, golds);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j{{"dataset", report.dataset}, {"split", report.split}, {"n", report.n}, {"mae", report.mae}};
  j["pearson"] = report.pearson ? nlohmann::json(*report.pearson) : nlohmann::json("NAN");
  return j;
}

std::string format_pearson(const std::optional<double>& r, int precision) {
  return r ? fixed(*r, precision) : std::string("NAN");
}

bool directly_negated(const corpus::Sentence& sentence, std::size_t token) {
  for (std::size_t c : corpus::children(sentence, token)) {
    const std::string& rel = sentence.deprels[c];
    if (rel == "neg") return true;
    if (rel == "advmod") {
      const std::string form = lower(sentence.tokens[c]);
      if (form == "not" || form == "n't") return true;
    }
  }
  return false;
}

ModalContext modal_context(const corpus::Sentence& sentence, std::size_t token) {
  ModalContext ctx;
  for (std::size_t c : corpus::children(sentence, token)) {
    if (!is_aux(sentence.deprels[c])) continue;
    if (auto label = modal_label(sentence, c)) {
      ctx.modal = *label;
      break;
    }
  }
  ctx.negated = directly_negated(sentence, token);
  return ctx;
}

std::vector<ModalRow> breakdown_modal_negation(std::span<const PredictionRecord> records,
                                               const corpus::Corpus& corpus) {
  std::map<std::pair<std::string, bool>, Accumulator> groups;
  for (const PredictionRecord& r : records) {
    const corpus::Sentence* s = lookup(corpus, r);
    if (s == nullptr) continue;
    const ModalContext ctx = modal_context(*s, r.token);
    groups[{ctx.modal, ctx.negated}].add(r);
  }
  std::vector<ModalRow> rows;
  for (const auto& [key, acc] : groups) {
    rows.push_back({key.first, key.second, acc.mean_gold(), acc.mae(), acc.n});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ModalRow& a, const ModalRow& b) { return a.mean_gold > b.mean_gold; });
  return rows;
}

std::vector<RelationRow> breakdown_relation(std::span<const PredictionRecord> records,
                                            const corpus::Corpus& corpus, std::size_t top_k) {
  std::map<std::string, Accumulator> groups;
  for (const PredictionRecord& r : records) {
    const corpus::Sentence* s = lookup(corpus, r);
    if (s == nullptr) continue;
    groups[s->deprels[r.token]].add(r);
  }
  std::vector<RelationRow> rows;
  for (const auto& [rel, acc] : groups) rows.push_back({rel, acc.mean_gold(), acc.mean_prediction(), acc.n});
  std::stable_sort(rows.begin(), rows.end(), [](const RelationRow& a, const RelationRow& b) { return a.n > b.n; });
  if (top_k > 0 && rows.size() > top_k) rows.resize(top_k);
  return rows;
}

std::vector<ErrorRow> top_errors(std::span<const PredictionRecord> records, std::size_t n) {
  std::vector<ErrorRow> rows;
  for (const PredictionRecord& r : records) {
    if (!r.prediction) continue;
    rows.push_back({r.sentence_id, r.token, *r.prediction, r.gold, std::abs(*r.prediction - r.gold)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ErrorRow& a, const ErrorRow& b) {
    if (a.abs_error != b.abs_error) return a.abs_error > b.abs_error;
    return a.sentence_id < b.sentence_id;
  });
  if (rows.size() > n) rows.resize(n);
  return rows;
}

const std::vector<std::string>& infinitival_verbs() {
  static const std::vector<std::string> kVerbs{"dare",  "bother",  "happen", "forget", "manage",
                                               "try",   "get",     "venture", "intend", "want",
                                               "decide", "promise", "agree",  "plan",   "hope"};
  return kVerbs;
}

std::vector<XcompRow> xcomp_verb_means(std::span<const PredictionRecord> records, const corpus::Corpus& corpus,
                                       bool exclude_negated) {
  const auto& verbs = infinitival_verbs();
  std::map<std::string, Accumulator> groups;
  for (const PredictionRecord& r : records) {
    const corpus::Sentence* s = lookup(corpus, r);
    if (s == nullptr || s->deprels[r.token] != "xcomp" || s->is_root(r.token)) continue;
    const std::size_t head = s->heads[r.token];
    const std::string lemma = lower(head < s->lemmas.size() ? s->lemmas[head] : s->tokens[head]);
    if (std::find(verbs.begin(), verbs.end(), lemma) == verbs.end()) continue;
    if (exclude_negated && directly_negated(*s, head)) continue;
    groups[lemma].add(r);
  }
  std::vector<XcompRow> rows;
  for (const auto& [lemma, acc] : groups) rows.push_back({lemma + " to", acc.mean_gold(), acc.mae(), acc.n});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const XcompRow& a, const XcompRow& b) { return a.mean_gold > b.mean_gold; });
  return rows;
}

void write_modal_table(std::ostream& out, std::span<const ModalRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const ModalRow& r : rows) {
    cells.push_back({r.modal, r.negated ? "yes" : "no", fixed(r.mean_gold, 2), opt_fixed(r.mae, 2),
                     std::to_string(r.n)});
  }
  write_table(out, {"modal", "negated", "mean label", "MAE", "n"}, cells);
}

void write_relation_table(std::ostream& out, std::span<const RelationRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const RelationRow& r : rows) {
    cells.push_back({r.deprel, fixed(r.mean_gold, 2), opt_fixed(r.mean_prediction, 2), std::to_string(r.n)});
  }
  write_table(out, {"relation", "mean label", "mean prediction", "n"}, cells);
}

void write_error_table(std::ostream& out, std::span<const ErrorRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const ErrorRow& r : rows) {
    cells.push_back({r.sentence_id, std::to_string(r.token), fixed(r.prediction, 2), fixed(r.gold, 2),
                     fixed(r.abs_error, 2)});
  }
  write_table(out, {"sentence", "token", "prediction", "gold", "|error|"}, cells);
}

void write_xcomp_table(std::ostream& out, std::span<const XcompRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const XcompRow& r : rows) {
    cells.push_back({r.verb, fixed(r.mean_gold, 2), opt_fixed(r.mae, 2), std::to_string(r.n)});
  }
  write_table(out, {"verb", "mean label", "MAE", "n"}, cells);
}

void write_modal_csv(std::ostream& out, std::span<const ModalRow> rows) {
  out << "modal,negated,mean_gold,mae,n\n";
  for (const ModalRow& r : rows) {
    out << csv_field(r.modal) << ',' << (r.negated ? "yes" : "no") << ',' << csv_number(r.mean_gold) << ','
        << csv_number(r.mae) << ',' << r.n << '\n';
  }
}

void write_relation_csv(std::ostream& out, std::span<const RelationRow> rows) {
  out << "relation,mean_gold,mean_prediction,n\n";
  for (const RelationRow& r : rows) {
    out << csv_field(r.deprel) << ',' << csv_number(r.mean_gold) << ',' << csv_number(r.mean_prediction) << ','
        << r.n << '\n';
  }
}

void write_xcomp_csv(std::ostream& out, std::span<const XcompRow> rows) {
  out << "verb,mean_gold,mae,n\n";
  for (const XcompRow& r : rows) {
    out << csv_field(r.verb) << ',' << csv_number(r.mean_gold) << ',' << csv_number(r.mae) << ',' << r.n << '\n';
  }
}

}  // namespace factuality::evaluation
