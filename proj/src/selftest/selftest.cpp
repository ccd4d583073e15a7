#include "factuality/selftest/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "factuality/autodiff/grad_check.hpp"
#include "factuality/calibration/isotonic.hpp"
#include "factuality/corpus/annotations.hpp"
#include "factuality/embeddings/table.hpp"
#include "factuality/evaluation/metrics.hpp"
#include "factuality/lexfeats/lexfeats.hpp"
#include "factuality/models/model.hpp"
#include "factuality/training/trainer.hpp"

namespace factuality::selftest {
namespace {

using autodiff::Tape;
using autodiff::Tensor;
using corpus::Dataset;
using models::Architecture;
using models::EncodedSentence;
using models::Model;
using models::ModelConfig;

constexpr std::size_t kRoot = corpus::Sentence::kRoot;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(const char* fmt, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<std::size_t> random_heads(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> heads(n, kRoot);
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    heads[order[i]] = order[pick(rng)];
  }
  return heads;
}

EncodedSentence random_sentence(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(n * dim);
  for (double& v : values) v = u(rng);
  EncodedSentence s;
  s.id = "random";
  s.inputs = Tensor({n, dim}, std::move(values));
  s.tree = corpus::tree_structure(random_heads(rng, n));
  return s;
}

ModelConfig small_config(Architecture arch, std::size_t layers, std::size_t dim) {
  ModelConfig c;
  c.arch = arch;
  c.layers = layers;
  c.input_dim = dim;
  return c;
}

std::vector<double> values(const Tape& tape, autodiff::Var v) {
  const auto span = tape.value(v);
  return {span.begin(), span.end()};
}

}  // namespace

CheckResult check_gradients(std::size_t seeds, double tolerance) {
  Timer timer;
  CheckResult r;
  r.name = "gradient correctness";
  struct Case {
    Architecture arch;
    std::size_t layers;
    const char* name;
  };
  const Case cases[] = {{Architecture::Linear, 1, "L(1)"},
                        {Architecture::Linear, 2, "L(2)"},
                        {Architecture::Tree, 1, "T(1)"},
                        {Architecture::Tree, 2, "T(2)"},
                        {Architecture::Hybrid, 2, "H(2)"}};
  double worst = 0.0;
  std::string worst_case;
  std::size_t checked = 0, skipped = 0;
  for (const Case& c : cases) {
    for (std::size_t seed = 1; seed <= seeds; ++seed) {
      std::mt19937_64 rng(seed * 1000 + static_cast<std::size_t>(c.arch) * 10 + c.layers);
      Model model(small_config(c.arch, c.layers, 4), rng());
      const std::size_t n = 3 + rng() % 4;
      EncodedSentence s = random_sentence(rng, n, 4);
      s.inputs.set_trainable(true);
      std::uniform_real_distribution<double> gold(-3.0, 3.0);
      std::vector<std::pair<std::size_t, double>> targets{{rng() % n, gold(rng)}, {rng() % n, gold(rng)}};
      if (targets[0].first == targets[1].first) targets.pop_back();
      auto build = [&](Tape& tape) { return model.sentence_loss(tape, s, targets, "default"); };
      std::vector<Tensor*> params{&s.inputs};
      for (auto& [name, t] : model.parameters()) params.push_back(t);
      const auto report = autodiff::grad_check(build, params);
      checked += report.coordinates_checked;
      skipped += report.coordinates_skipped;
      if (report.max_relative_error >= worst) {
        worst = report.max_relative_error;
        worst_case = std::string(c.name) + " seed " + std::to_string(seed);
      }
    }
  }
  r.passed = worst < tolerance && checked > 0;
  r.detail = "max relative error " + format("%.2e", worst) + " (" + worst_case + "), " + std::to_string(checked) +
             " coordinates, " + std::to_string(skipped) + " skipped at kinks";
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_chain_tree(std::size_t sentences, double tolerance) {
  Timer timer;
  CheckResult r;
  r.name = "chain-tree oracle";
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (std::size_t i = 0; i < sentences; ++i) {
    const std::size_t layers = 1 + i % 2;
    const std::size_t dim = 5;
    Model linear(small_config(Architecture::Linear, layers, dim), rng());
    ModelConfig tc = small_config(Architecture::Tree, layers, dim);
    tc.tree_activation = models::Activation::Tanh;
    Model tree(tc, rng());
    tree.tree()->layers = linear.linear()->layers;
    const std::size_t n = 1 + rng() % 10;
    EncodedSentence s = random_sentence(rng, n, dim);
    s.tree = models::chain_structure(n);
    Tape a, b;
    const auto ls = linear.run_linear(a, s);
    const auto ts = tree.run_tree(b, s);
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t t = 0; t < n; ++t) {
        const auto pairs = {std::pair{ls.forward[l][t], ts.forward[l][t]},
                            std::pair{ls.backward[l][t], ts.backward[l][t]}};
        for (const auto& [x, y] : pairs) {
          const auto u = a.value(x);
          const auto v = b.value(y);
          for (std::size_t k = 0; k < u.size(); ++k) worst = std::max(worst, std::abs(u[k] - v[k]));
        }
      }
    }
  }
  r.passed = worst < tolerance;
  r.detail = "max abs difference " + format("%.2e", worst) + " over " + std::to_string(sentences) + " sentences";
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_subtree_locality(std::size_t trees) {
  Timer timer;
  CheckResult r;
  r.name = "subtree locality";
  std::mt19937_64 rng(3);
  std::size_t comparisons = 0, violations = 0;
  for (std::size_t i = 0; i < trees; ++i) {
    const std::size_t layers = 1 + i % 2;
    Model model(small_config(Architecture::Tree, layers, 4), rng());
    const std::size_t n = 3 + rng() % 8;
    const EncodedSentence s = random_sentence(rng, n, 4);
    Tape base;
    const auto states = model.run_tree(base, s);
    for (std::size_t u = 0; u < n; ++u) {
      EncodedSentence perturbed = s;
      for (std::size_t k = 0; k < 4; ++k) perturbed.inputs.values()[u * 4 + k] += 0.5;
      Tape tape;
      const auto ps = model.run_tree(tape, perturbed);
      for (std::size_t t = 0; t < n; ++t) {
        bool inside = false;
        for (std::size_t a = u; a != kRoot; a = s.tree.parents[a].empty() ? kRoot : s.tree.parents[a][0]) {
          if (a == t) inside = true;
        }
        if (inside) continue;
        ++comparisons;
        if (values(base, states.forward[0][t]) != values(tape, ps.forward[0][t])) ++violations;
      }
    }
  }
  r.passed = violations == 0 && comparisons > 0;
  r.detail = std::to_string(violations) + " changed upward states in " + std::to_string(comparisons) +
             " outside-context perturbations";
  r.seconds = timer.seconds();
  return r;
}

std::vector<std::pair<double, double>> brute_force_isotonic(std::span<const double> predictions,
                                                            std::span<const double> golds) {
  std::map<double, std::pair<double, double>> merged;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    merged[predictions[i]].first += golds[i];
    merged[predictions[i]].second += 1.0;
  }
  std::vector<double> xs, sums, weights;
  for (const auto& [x, acc] : merged) {
    xs.push_back(x);
    sums.push_back(acc.first);
    weights.push_back(acc.second);
  }
  const std::size_t m = xs.size();
  std::vector<double> best(m);
  double best_sse = std::numeric_limits<double>::infinity();
  // Bit k of `cuts` set: a block ends after point k.
  for (std::uint64_t cuts = 0; cuts < (std::uint64_t{1} << (m - 1)); ++cuts) {
    std::vector<double> fit(m);
    double previous = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::size_t start = 0;
    for (std::size_t k = 0; k < m && monotone; ++k) {
      if (k + 1 < m && !((cuts >> k) & 1)) continue;
      double s = 0, w = 0;
      for (std::size_t j = start; j <= k; ++j) {
        s += sums[j];
        w += weights[j];
      }
      const double mean = s / w;
      if (mean < previous) monotone = false;
      for (std::size_t j = start; j <= k; ++j) fit[j] = mean;
      previous = mean;
      start = k + 1;
    }
    if (!monotone) continue;
    double sse = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const std::size_t j = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), predictions[i]) - xs.begin());
      sse += (fit[j] - golds[i]) * (fit[j] - golds[i]);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = fit;
    }
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t j = 0; j < m; ++j) out.emplace_back(xs[j], best[j]);
  return out;
}

CheckResult check_isotonic_oracle(std::size_t trials, double tolerance) {
  Timer timer;
  CheckResult r;
  r.name = "isotonic oracle";
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_int_distribution<int> grid(0, 5);
  std::uniform_real_distribution<double> label(-3.0, 3.0);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const int n = size(rng);
    std::vector<double> p, g;
    for (int i = 0; i < n; ++i) {
      // Every other trial draws from a coarse grid to force ties.
      p.push_back(trial % 2 == 0 ? label(rng) : static_cast<double>(grid(rng)));
      g.push_back(label(rng));
    }
    const calibration::IsotonicMap map = calibration::fit_isotonic(p, g);
    for (const auto& [x, y] : brute_force_isotonic(p, g)) worst = std::max(worst, std::abs(map(x) - y));
  }
  r.passed = worst <= tolerance;
  r.detail = "max deviation " + format("%.2e", worst) + " over " + std::to_string(trials) + " instances";
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_label_mapping() {
  Timer timer;
  CheckResult r;
  r.name = "label mapping";
  const double pos = corpus::uds_label(true, 4.0);
  const double neg = corpus::uds_label(false, 4.0);
  r.passed = pos == 3.0 && neg == -3.0;
  r.detail = "uds_label(true, 4) = " + format("%.17g", pos) + ", uds_label(false, 4) = " + format("%.17g", neg);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_miner() {
  Timer timer;
  CheckResult r;
  r.name = "miner exactness";
  std::map<std::string, lexfeats::Conjugation> entries{
      {"manage", {"managed", "am managing", "will manage"}},
      {"forget", {"forgot", "am forgetting", "will forget"}},
      {"try", {"tried", "am trying", "will try"}},
      {"want", {"wanted", "am wanting", "will want"}},
      {"hope", {"hoped", "am hoping", "will hope"}}};
  const lexfeats::ConjugationTable conj(entries);
  const lexfeats::TimePhrases phrases = lexfeats::default_time_phrases();
  // verb -> (decidable lines, agreeing lines); 190 decidable + 10 filler.
  const std::map<std::string, std::pair<int, int>> planted{
      {"manage", {40, 37}}, {"forget", {30, 29}}, {"try", {50, 31}}, {"want", {40, 17}}, {"hope", {30, 2}}};
  const std::vector<std::string> stars{"see her", "call", "finish the report", "go"};
  std::mt19937_64 rng(8);
  std::vector<std::string> lines;
  for (const auto& [verb, counts] : planted) {
    const auto& c = entries.at(verb);
    for (int i = 0; i < counts.first; ++i) {
      const bool future_form = rng() % 2 == 0;
      const bool agree = i < counts.second;
      const bool past_phrase = future_form != agree;
      const auto& pool = past_phrase ? phrases.past : phrases.future;
      lines.push_back("I " + (future_form ? c.future : c.past) + " to " + stars[rng() % stars.size()] + " " +
                      pool[rng() % pool.size()] + (rng() % 2 ? "." : ""));
    }
  }
  // Progressive forms, too-long stars and other subjects never count.
  lines.push_back("I am managing to go tomorrow.");
  lines.push_back("I am hoping to see her next week");
  lines.push_back("I managed to go there with Bo yesterday");
  lines.push_back("You managed to call yesterday.");
  lines.push_back("I tried to yesterday");
  lines.push_back("We will try to go tomorrow");
  lines.push_back("I wanted a car last year");
  lines.push_back("Nothing to see here.");
  lines.push_back("I hoped to call her and then see him last month");
  lines.push_back("");
  std::shuffle(lines.begin(), lines.end(), rng);

  std::ostringstream text;
  for (const auto& l : lines) text << l << '\n';
  std::istringstream in(text.str());
  const lexfeats::TenseAgreementTable table = lexfeats::mine_tense_agreement(in, conj, phrases, 1);
  std::size_t exact = 0;
  std::string mismatch;
  for (const auto& [verb, counts] : planted) {
    const double expected = static_cast<double>(counts.second) / static_cast<double>(counts.first);
    const auto got = table.score(verb);
    const auto it = table.scores().find(verb);
    if (got && *got == expected && it->second.matches == static_cast<std::size_t>(counts.first)) {
      ++exact;
    } else if (mismatch.empty()) {
      mismatch = ", first mismatch " + verb + " expected " + format("%.6f", expected) + " got " +
                 (got ? format("%.6f", *got) : std::string("none"));
    }
  }
  r.passed = exact == planted.size() && table.size() == planted.size() && lines.size() == 200;
  r.detail = std::to_string(exact) + "/" + std::to_string(planted.size()) + " ratios exact on " +
             std::to_string(lines.size()) + " lines" + mismatch;
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_regimes() {
  Timer timer;
  CheckResult r;
  r.name = "regime accounting";
  using training::make_schedule;
  using training::Regime;
  using training::RegimeKind;
  std::vector<std::string> problems;
  const std::map<Dataset, std::size_t> sizes{
      {Dataset::FactBank, 37}, {Dataset::UW, 11}, {Dataset::Meantime, 4}, {Dataset::UdsIh2, 23}};
  Regime bal;
  bal.kind = RegimeKind::MultiBal;
  for (std::size_t epoch = 1; epoch <= 5; ++epoch) {
    std::map<Dataset, std::size_t> counts;
    for (const auto& item : make_schedule(bal, sizes, epoch, 17)) ++counts[item.dataset];
    for (const auto& [d, c] : counts) {
      if (c != counts.begin()->second) problems.push_back("MultiBal epoch " + std::to_string(epoch) + " unequal");
    }
    if (counts.size() != sizes.size()) problems.push_back("MultiBal missing dataset");
    for (Dataset focus : {Dataset::FactBank, Dataset::Meantime, Dataset::UdsIh2}) {
      Regime regime;
      regime.kind = RegimeKind::MultiFoc;
      regime.focus = focus;
      std::size_t in_focus = 0;
      const auto schedule = make_schedule(regime, sizes, epoch, 17);
      for (const auto& item : schedule) in_focus += item.dataset == focus ? 1 : 0;
      const double half = static_cast<double>(schedule.size()) / 2.0;
      if (std::abs(static_cast<double>(in_focus) - half) > 1.0) {
        problems.push_back("MultiFoc focus " + std::string(corpus::to_string(focus)) + " got " +
                           std::to_string(in_focus) + " of " + std::to_string(schedule.size()));
      }
    }
  }

  // MultiSimp: every step leaves the other heads without gradient.
  std::mt19937_64 rng(9);
  training::TrainingData data;
  const std::vector<Dataset> datasets{Dataset::FactBank, Dataset::UW, Dataset::Meantime};
  for (Dataset d : datasets) {
    for (int i = 0; i < 3 + static_cast<int>(d); ++i) {
      auto s = std::make_shared<EncodedSentence>(random_sentence(rng, 2 + rng() % 4, 4));
      data.train[d].push_back({s, {{0, 1.5}}});
    }
  }
  Regime simp;
  simp.kind = RegimeKind::MultiSimp;
  ModelConfig config = small_config(Architecture::Tree, 1, 4);
  config.heads = training::head_names(simp, datasets);
  Model model(config, 3);
  std::size_t steps = 0, dirty = 0;
  training::TrainerHooks hooks;
  hooks.on_step = [&](const training::StepInfo& info, const Model& m) {
    ++steps;
    for (const std::string& h : m.config().heads) {
      if (h == info.head) continue;
      const auto& head = m.head(h);
      for (const Tensor* t : {&head.V1, &head.b1, &head.V2, &head.b2}) {
        if (!t->has_grad()) continue;
        for (double g : t->grad()) dirty += g != 0.0 ? 1 : 0;
      }
    }
  };
  training::TrainerConfig tc;
  tc.epochs = 2;
  tc.keep_snapshots = false;
  training::train(model, simp, tc, data, hooks);
  if (dirty > 0) problems.push_back("MultiSimp: " + std::to_string(dirty) + " non-zero foreign head gradients");

  r.passed = problems.empty() && steps > 0;
  r.detail = problems.empty() ? "5 epochs of MultiBal/MultiFoc schedules, " + std::to_string(steps) +
                                    " MultiSimp steps with clean foreign heads"
                              : problems.front();
  r.seconds = timer.seconds();
  return r;
}

std::vector<std::string> negation_parity_vocabulary() {
  return {"the", "a",     "some",  "every", "no",    "girl",  "boy",   "dog",   "cat",    "teacher", "farmer",
          "dessert", "apple", "book", "letter", "car", "big",  "small", "old",   "red",    "quiet",   "quickly",
          "slowly", "often", "ate", "saw",  "wrote", "bought", "found", "took",  "liked",  "."};
}

std::vector<SyntheticExample> generate_negation_parity(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> dets{"the", "a", "some", "every"};
  static const std::vector<std::string> nouns{"girl", "boy", "dog", "cat", "teacher", "farmer",
                                              "dessert", "apple", "book", "letter", "car"};
  static const std::vector<std::string> adjs{"big", "small", "old", "red", "quiet"};
  static const std::vector<std::string> advs{"quickly", "slowly", "often"};
  static const std::vector<std::string> verbs{"ate", "saw", "wrote", "bought", "found", "took", "liked"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  auto coin = [&] { return rng() % 2 == 0; };

  std::vector<SyntheticExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticExample ex;
    corpus::Sentence& s = ex.sentence;
    s.id = "parity-" + std::to_string(seed) + "-" + std::to_string(i);
    auto push = [&](const std::string& word, std::size_t head, const std::string& rel) {
      s.tokens.push_back(word);
      s.lemmas.push_back(word);
      s.upos.push_back("X");
      s.heads.push_back(head);
      s.deprels.push_back(rel);
      return s.tokens.size() - 1;
    };
    int negations = 0;
    // Heads are patched once the verb's index is known.
    auto noun_phrase = [&](const std::string& rel) {
      const bool neg = coin();
      negations += neg ? 1 : 0;
      const std::size_t det = push(neg ? "no" : pick(dets), kRoot, "det");
      std::size_t adj = kRoot;
      if (coin()) adj = push(pick(adjs), kRoot, "amod");
      const std::size_t noun = push(pick(nouns), kRoot, rel);
      s.heads[det] = noun;
      if (adj != kRoot) s.heads[adj] = noun;
      return noun;
    };
    const std::size_t subject = noun_phrase("nsubj");
    std::size_t adverb = kRoot;
    if (coin()) adverb = push(pick(advs), kRoot, "advmod");
    const std::size_t verb = push(pick(verbs), kRoot, "root");
    const std::size_t object = noun_phrase("dobj");
    const std::size_t period = push(".", verb, "punct");
    s.heads[subject] = verb;
    s.heads[object] = verb;
    if (adverb != kRoot) s.heads[adverb] = verb;
    (void)period;
    ex.predicate = verb;
    ex.label = negations % 2 == 0 ? 2.25 : -2.25;
    out.push_back(std::move(ex));
  }
  return out;
}

CheckResult check_negation_parity(const ParityOptions& options) {
  Timer timer;
  CheckResult r;
  r.name = "negation-parity learning";
  const auto vocab = negation_parity_vocabulary();
  const auto table = embeddings::EmbeddingTable::random(vocab, options.embedding_dim, options.seed);
  auto encode = [&](const std::vector<SyntheticExample>& examples) {
    std::vector<training::SentenceExample> out;
    for (const auto& ex : examples) {
      auto s = std::make_shared<EncodedSentence>();
      s->id = ex.sentence.id;
      s->inputs = embeddings::embed_sentence(table, ex.sentence);
      s->tree = corpus::tree_structure(ex.sentence);
      out.push_back({std::move(s), {{ex.predicate, ex.label}}});
    }
    return out;
  };
  // The synthetic task occupies the UDS-IH2 slot.
  const Dataset slot = Dataset::UdsIh2;
  training::TrainingData data;
  data.train[slot] = encode(generate_negation_parity(options.train_size, options.seed * 2 + 1));
  data.dev[slot] = encode(generate_negation_parity(options.dev_size, options.seed * 2 + 2));

  const training::Regime regime;
  ModelConfig config;
  config.arch = Architecture::Linear;
  config.layers = 1;
  config.input_dim = options.embedding_dim;
  const std::vector<Dataset> datasets{slot};
  config.heads = training::head_names(regime, datasets);
  Model model(config, options.seed);
  training::TrainerConfig tc;
  tc.epochs = options.epochs;
  tc.seed = options.seed;
  tc.keep_snapshots = false;
  training::TrainerHooks hooks;
  if (options.stop_early) {
    hooks.stop = [&](const training::Checkpoint& cp) {
      const auto& p = cp.dev.at(slot).pearson;
      return p && *p >= options.target_r;
    };
  }
  const auto checkpoints = training::train(model, regime, tc, data, hooks);
  std::optional<double> best;
  std::size_t best_epoch = 0;
  std::size_t first_hit = 0;
  for (const auto& cp : checkpoints) {
    const auto& p = cp.dev.at(slot).pearson;
    if (p && (!best || *p > *best)) {
      best = p;
      best_epoch = cp.epoch;
    }
    if (p && *p >= options.target_r && first_hit == 0) first_hit = cp.epoch;
  }
  r.passed = first_hit > 0;
  r.detail = "best dev r " + (best ? format("%.4f", *best) : std::string("NAN")) + " at epoch " +
             std::to_string(best_epoch) +
             (first_hit > 0 ? ", reached " + format("%.2f", options.target_r) + " at epoch " + std::to_string(first_hit)
                            : ", target " + format("%.2f", options.target_r) + " not reached in " +
                                  std::to_string(checkpoints.size()) + " epochs");
  r.seconds = timer.seconds();
  return r;
}

std::vector<CheckResult> run_all(const std::function<void(const CheckResult&)>& progress) {
  std::vector<CheckResult> results;
  auto run = [&](CheckResult r) {
    if (progress) progress(r);
    results.push_back(std::move(r));
  };
  run(check_gradients());
  run(check_chain_tree());
  run(check_subtree_locality());
  run(check_isotonic_oracle());
  run(check_label_mapping());
  run(check_negation_parity());
  run(check_miner());
  run(check_regimes());
  return results;
}

}  // namespace factuality::selftest
