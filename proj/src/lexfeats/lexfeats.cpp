#include "factuality/lexfeats/lexfeats.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "factuality/errors.hpp"
#include "factuality/log.hpp"

namespace factuality::lexfeats {
namespace {

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  out.push_back(std::move(current));
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(embeddings::lowercase(w));
  return out;
}

template <typename Parse>
auto load_file(const std::filesystem::path& path, const char* what, Parse parse) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " " + path.string());
  return parse(in);
}

bool is_final_punct(char c) {
  return c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',' || c == '"' ||
         c == '\'' || c == ')';
}

}  // namespace

bool valid_signature(std::string_view signature) {
  auto side = [](char c) { return c == '+' || c == '-' || c == 'o'; };
  return signature.size() == 3 && side(signature[0]) && signature[1] == '|' && side(signature[2]);
}

SignatureLexicon::SignatureLexicon(std::map<std::string, std::string> entries) {
  std::set<std::string> distinct;
  for (auto& [lemma, signature] : entries) {
    if (!valid_signature(signature)) {
      throw DataError("invalid implication signature '" + signature + "' for '" + lemma + "'");
    }
    distinct.insert(signature);
    entries_.emplace(embeddings::lowercase(lemma), signature);
  }
  signatures_.assign(distinct.begin(), distinct.end());
}

SignatureLexicon SignatureLexicon::load(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw DataError("expected lemma<TAB>signature", line_no);
    }
    if (!valid_signature(fields[1])) {
      throw DataError("invalid implication signature '" + fields[1] + "'", line_no);
    }
    entries.try_emplace(fields[0], fields[1]);
  }
  return SignatureLexicon(std::move(entries));
}

SignatureLexicon SignatureLexicon::load(const std::filesystem::path& path) {
  return load_file(path, "signature lexicon", [](std::istream& in) { return load(in); });
}

std::optional<std::string> SignatureLexicon::signature(std::string_view lemma) const {
  auto it = entries_.find(embeddings::lowercase(lemma));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> SignatureLexicon::signature_vector(std::string_view lemma) const {
  std::vector<double> v(signatures_.size(), 0.0);
  if (auto sig = signature(lemma)) {
    auto pos = std::lower_bound(signatures_.begin(), signatures_.end(), *sig);
    v[static_cast<std::size_t>(pos - signatures_.begin())] = 1.0;
  }
  return v;
}

ConjugationTable::ConjugationTable(std::map<std::string, Conjugation> entries)
    : entries_(std::move(entries)) {
  for (const auto& [lemma, c] : entries_) {
    if (c.past.empty() || c.present_progressive.empty() || c.future.empty()) {
      throw DataError("conjugation of '" + lemma + "' is missing a form");
    }
  }
}

ConjugationTable ConjugationTable::load(std::istream& in) {
  std::map<std::string, Conjugation> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 4 || std::any_of(f.begin(), f.end(), [](const std::string& s) { return s.empty(); })) {
      throw DataError("expected lemma<TAB>past<TAB>presprog<TAB>future", line_no);
    }
    entries.try_emplace(embeddings::lowercase(f[0]), Conjugation{f[1], f[2], f[3]});
  }
  return ConjugationTable(std::move(entries));
}

ConjugationTable ConjugationTable::load(const std::filesystem::path& path) {
  return load_file(path, "conjugation table", [](std::istream& in) { return load(in); });
}

TimePhrases default_time_phrases() {
  return {{"earlier today", "yesterday", "last week", "last month", "last year"},
          {"later today", "tomorrow", "next week", "next month", "next year"}};
}

VerbCounts& VerbCounts::operator+=(const VerbCounts& other) {
  agreeing += other.agreeing;
  decidable += other.decidable;
  progressive += other.progressive;
  return *this;
}

TenseAgreementTable::TenseAgreementTable(std::map<std::string, AgreementScore, std::less<>> scores)
    : scores_(std::move(scores)) {}

TenseAgreementTable TenseAgreementTable::load(std::istream& in) {
  std::map<std::string, AgreementScore, std::less<>> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 3) throw DataError("expected lemma<TAB>score<TAB>matches", line_no);
    AgreementScore s;
    try {
      std::size_t used = 0;
      s.score = std::stod(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("trailing characters");
      s.matches = std::stoul(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError("cannot parse score line", line_no);
    }
    if (!(s.score >= 0.0 && s.score <= 1.0)) throw DataError("score outside [0, 1]", line_no);
    scores.try_emplace(f[0], s);
  }
  return TenseAgreementTable(std::move(scores));
}

TenseAgreementTable TenseAgreementTable::load(const std::filesystem::path& path) {
  return load_file(path, "tense agreement table", [](std::istream& in) { return load(in); });
}

void TenseAgreementTable::write(std::ostream& out) const {
  char buf[64];
  for (const auto& [lemma, s] : scores_) {
    std::snprintf(buf, sizeof buf, "%.17g", s.score);
    out << lemma << '\t' << buf << '\t' << s.matches << '\n';
  }
}

std::optional<double> TenseAgreementTable::score(std::string_view lemma) const {
  auto it = scores_.find(embeddings::lowercase(lemma));
  if (it == scores_.end()) return std::nullopt;
  return it->second.score;
}

std::vector<std::string> mining_tokens(std::string_view line) {
  std::size_t end = line.size();
  while (end > 0 && (std::isspace(static_cast<unsigned char>(line[end - 1])) || is_final_punct(line[end - 1]))) {
    --end;
  }
  return words(line.substr(0, end));
}

TenseMiner::TenseMiner(const ConjugationTable& conjugations, TimePhrases phrases) {
  for (const auto& [lemma, c] : conjugations.entries()) {
    const std::pair<Tense, const std::string*> forms[] = {
        {Tense::Past, &c.past}, {Tense::PresentProgressive, &c.present_progressive}, {Tense::Future, &c.future}};
    for (const auto& [tense, text] : forms) {
      Form f{lemma, tense, words(*text)};
      if (f.tokens.empty()) continue;
      forms_by_first_token_[f.tokens.front()].push_back(std::move(f));
    }
  }
  for (const auto& p : phrases.past) phrases_.push_back({Tense::Past, words(p)});
  for (const auto& p : phrases.future) phrases_.push_back({Tense::Future, words(p)});
  std::erase_if(phrases_, [](const Phrase& p) { return p.tokens.empty(); });
}

void TenseMiner::scan_line(std::string_view line) {
  ++lines_;
  const std::vector<std::string> tokens = mining_tokens(line);
  const std::size_t n = tokens.size();
  auto matches_at = [&](const std::vector<std::string>& pattern, std::size_t at) {
    if (at + pattern.size() > n) return false;
    return std::equal(pattern.begin(), pattern.end(), tokens.begin() + static_cast<std::ptrdiff_t>(at));
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (tokens[i] != "i") continue;
    auto candidates = forms_by_first_token_.find(tokens[i + 1]);
    if (candidates == forms_by_first_token_.end()) continue;
    for (const Form& form : candidates->second) {
      if (!matches_at(form.tokens, i + 1)) continue;
      const std::size_t to = i + 1 + form.tokens.size();
      if (to >= n || tokens[to] != "to") continue;
      const Phrase* found = nullptr;
      for (std::size_t star = 1; star <= 3 && found == nullptr; ++star) {
        for (const Phrase& p : phrases_) {
          if (matches_at(p.tokens, to + 1 + star)) {
            found = &p;
            break;
          }
        }
      }
      if (found == nullptr) continue;
      VerbCounts& c = counts_[form.lemma];
      if (form.tense == Tense::PresentProgressive) {
        ++c.progressive;
      } else {
        ++c.decidable;
        if (form.tense == found->tense) ++c.agreeing;
      }
    }
  }
}

void TenseMiner::scan(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) scan_line(line);
}

void TenseMiner::merge(const TenseMiner& other) {
  for (const auto& [lemma, c] : other.counts_) counts_[lemma] += c;
  lines_ += other.lines_;
}

TenseAgreementTable TenseMiner::table(std::size_t min_count) const {
  std::map<std::string, AgreementScore, std::less<>> scores;
  for (const auto& [lemma, c] : counts_) {
    if (c.decidable == 0 || c.decidable < min_count) continue;
    scores[lemma] = {static_cast<double>(c.agreeing) / static_cast<double>(c.decidable), c.decidable};
  }
  return TenseAgreementTable(std::move(scores));
}

TenseAgreementTable mine_tense_agreement(std::istream& corpus, const ConjugationTable& conjugations,
                                         const TimePhrases& phrases, std::size_t min_count) {
  TenseMiner miner(conjugations, phrases);
  miner.scan(corpus);
  if (miner.lines() == 0) log::warn("tense mining: empty corpus");
  return miner.table(min_count);
}

FeatureMode parse_feature_mode(std::string_view text) {
  const std::string key = embeddings::lowercase(text);
  if (key == "none") return FeatureMode::None;
  if (key == "sign") return FeatureMode::Sign;
  if (key == "mine") return FeatureMode::Mine;
  if (key == "both") return FeatureMode::Both;
  throw ConfigError("unknown lexical feature mode '" + std::string(text) + "' (none|sign|mine|both)");
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::None: return "none";
    case FeatureMode::Sign: return "sign";
    case FeatureMode::Mine: return "mine";
    case FeatureMode::Both: return "both";
  }
  return "?";
}

std::size_t feature_dim(const SignatureLexicon& lexicon, FeatureMode mode) {
  switch (mode) {
    case FeatureMode::None: return 0;
    case FeatureMode::Sign: return lexicon.signatures().size();
    case FeatureMode::Mine: return 1;
    case FeatureMode::Both: return lexicon.signatures().size() + 1;
  }
  return 0;
}

std::vector<double> token_features(std::string_view lemma, const SignatureLexicon& lexicon,
                                   const TenseAgreementTable& table, FeatureMode mode) {
  std::vector<double> out;
  if (mode == FeatureMode::Sign || mode == FeatureMode::Both) out = lexicon.signature_vector(lemma);
  if (mode == FeatureMode::Mine || mode == FeatureMode::Both) out.push_back(table.score(lemma).value_or(0.0));
  return out;
}

embeddings::FeatureProvider make_feature_provider(SignatureLexicon lexicon, TenseAgreementTable table,
                                                  FeatureMode mode) {
  embeddings::FeatureProvider provider;
  provider.dim = feature_dim(lexicon, mode);
  if (provider.dim == 0) return provider;
  provider.features = [lexicon = std::move(lexicon), table = std::move(table), mode](std::string_view lemma) {
    return token_features(lemma, lexicon, table, mode);
  };
  return provider;
}

}  // namespace factuality::lexfeats
