#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "factuality/embeddings/table.hpp"

namespace factuality::lexfeats {

// lemma -> implication signature such as "+|-" or "o|+".
class SignatureLexicon {
 public:
  SignatureLexicon() = default;
  explicit SignatureLexicon(std::map<std::string, std::string> entries);

  // `lemma<TAB>signature` lines; '#' comments and blank lines ignored.
  static SignatureLexicon load(std::istream& in);
  static SignatureLexicon load(const std::filesystem::path& path);

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
  // Distinct signatures, sorted. Fixes the indicator layout.
  const std::vector<std::string>& signatures() const { return signatures_; }
  std::optional<std::string> signature(std::string_view lemma) const;

  // One-hot over signatures(); all zeros for unlisted lemmas.
  std::vector<double> signature_vector(std::string_view lemma) const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::vector<std::string> signatures_;
};

bool valid_signature(std::string_view signature);

enum class Tense { Past, PresentProgressive, Future };

struct Conjugation {
  std::string past;
  std::string present_progressive;
  std::string future;
};

// lemma<TAB>past<TAB>presprog<TAB>future, first person singular
// ("managed", "am managing", "will manage").
class ConjugationTable {
 public:
  ConjugationTable() = default;
  explicit ConjugationTable(std::map<std::string, Conjugation> entries);

  static ConjugationTable load(std::istream& in);
  static ConjugationTable load(const std::filesystem::path& path);

  const std::map<std::string, Conjugation>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Conjugation> entries_;
};

struct TimePhrases {
  std::vector<std::string> past;
  std::vector<std::string> future;
};

TimePhrases default_time_phrases();

struct VerbCounts {
  std::size_t agreeing = 0;
  // Matches whose verb form is past or future.
  std::size_t decidable = 0;
  std::size_t progressive = 0;

  VerbCounts& operator+=(const VerbCounts& other);
  friend bool operator==(const VerbCounts&, const VerbCounts&) = default;
};

struct AgreementScore {
  double score = 0.0;
  std::size_t matches = 0;
};

class TenseAgreementTable {
 public:
  TenseAgreementTable() = default;
  explicit TenseAgreementTable(std::map<std::string, AgreementScore, std::less<>> scores);

  // `lemma<TAB>score<TAB>matches` lines.
  static TenseAgreementTable load(std::istream& in);
  static TenseAgreementTable load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  std::optional<double> score(std::string_view lemma) const;
  const std::map<std::string, AgreementScore, std::less<>>& scores() const { return scores_; }
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::string, AgreementScore, std::less<>> scores_;
};

// Scans lines for `i <form> to <1-3 tokens> <time phrase>`. Counts from
// independent miners over disjoint shards can be merged by summation.
class TenseMiner {
 public:
  TenseMiner(const ConjugationTable& conjugations, TimePhrases phrases = default_time_phrases());

  void scan_line(std::string_view line);
  void scan(std::istream& in);
  void merge(const TenseMiner& other);

  const std::map<std::string, VerbCounts>& counts() const { return counts_; }
  std::size_t lines() const { return lines_; }

  // Verbs with fewer than min_count decidable matches get no score.
  TenseAgreementTable table(std::size_t min_count = 10) const;

 private:
  struct Form {
    std::string lemma;
    Tense tense;
    std::vector<std::string> tokens;
  };
  struct Phrase {
    Tense tense;
    std::vector<std::string> tokens;
  };

  std::map<std::string, std::vector<Form>> forms_by_first_token_;
  std::vector<Phrase> phrases_;
  std::map<std::string, VerbCounts> counts_;
  std::size_t lines_ = 0;
};

// Lowercases, strips sentence-final punctuation and splits on whitespace.
std::vector<std::string> mining_tokens(std::string_view line);

TenseAgreementTable mine_tense_agreement(std::istream& corpus, const ConjugationTable& conjugations,
                                         const TimePhrases& phrases = default_time_phrases(),
                                         std::size_t min_count = 10);

enum class FeatureMode { None, Sign, Mine, Both };

FeatureMode parse_feature_mode(std::string_view text);
std::string_view to_string(FeatureMode mode);

std::size_t feature_dim(const SignatureLexicon& lexicon, FeatureMode mode);

// [signature indicators][mined score], each part present per mode. The mined
// score is 0 for verbs without one.
std::vector<double> token_features(std::string_view lemma, const SignatureLexicon& lexicon,
                                   const TenseAgreementTable& table, FeatureMode mode);

// Copies lexicon and table into the returned provider.
embeddings::FeatureProvider make_feature_provider(SignatureLexicon lexicon, TenseAgreementTable table,
                                                  FeatureMode mode);

}  // namespace factuality::lexfeats
