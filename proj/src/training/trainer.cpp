#include "factuality/training/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

#include "factuality/autodiff/adam.hpp"
#include "factuality/errors.hpp"
#include "factuality/evaluation/metrics.hpp"

namespace factuality::training {
namespace {

using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;

std::string normalized(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  return std::mt19937_64(seq);
}

// `count` indices into a dataset of `size`: every index once per full pass,
// the remainder drawn with replacement (or without, when count < size).
void draw(Dataset dataset, std::size_t size, std::size_t count, std::mt19937_64& rng,
          std::vector<ScheduleItem>& out) {
  if (count == 0) return;
  if (size == 0) throw ConfigError("cannot schedule empty dataset " + std::string(corpus::to_string(dataset)));
  if (count < size) {
    std::vector<std::size_t> all(size);
    for (std::size_t i = 0; i < size; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    for (std::size_t i = 0; i < count; ++i) out.push_back({dataset, all[i]});
    return;
  }
  for (std::size_t i = 0; i < size; ++i) out.push_back({dataset, i});
  std::uniform_int_distribution<std::size_t> pick(0, size - 1);
  for (std::size_t i = size; i < count; ++i) out.push_back({dataset, pick(rng)});
}

}  // namespace

RegimeKind parse_regime(std::string_view text) {
  const std::string key = normalized(text);
  if (key == "s") return RegimeKind::S;
  if (key == "g") return RegimeKind::G;
  if (key == "multisimp") return RegimeKind::MultiSimp;
  if (key == "multibal") return RegimeKind::MultiBal;
  if (key == "multifoc") return RegimeKind::MultiFoc;
  throw ConfigError("unknown regime '" + std::string(text) + "' (S|G|multisimp|multibal|multifoc)");
}

std::string_view to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::S: return "S";
    case RegimeKind::G: return "G";
    case RegimeKind::MultiSimp: return "MultiSimp";
    case RegimeKind::MultiBal: return "MultiBal";
    case RegimeKind::MultiFoc: return "MultiFoc";
  }
  return "?";
}

void Regime::validate() const {
  if (kind == RegimeKind::MultiFoc && !focus) throw ConfigError("MultiFoc needs a focus dataset");
  if (kind != RegimeKind::MultiFoc && focus) {
    throw ConfigError("a focus dataset is only meaningful for MultiFoc");
  }
}

std::string head_name(const Regime& regime, Dataset dataset) {
  if (regime.kind == RegimeKind::G) return "shared";
  return std::string(corpus::to_string(dataset));
}

std::vector<std::string> head_names(const Regime& regime, std::span<const Dataset> datasets) {
  std::vector<std::string> out;
  for (Dataset d : datasets) {
    std::string name = head_name(regime, d);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
  }
  return out;
}

std::vector<ScheduleItem> make_schedule(const Regime& regime, const std::map<Dataset, std::size_t>& sizes,
                                        std::size_t epoch, std::uint64_t seed) {
  regime.validate();
  if (regime.kind == RegimeKind::S && sizes.size() != 1) {
    throw ConfigError("regime S trains on exactly one dataset (got " + std::to_string(sizes.size()) + ")");
  }
  if (regime.kind != RegimeKind::S && sizes.size() < 2) {
    throw ConfigError("regime " + std::string(to_string(regime.kind)) + " needs at least two datasets");
  }
  std::mt19937_64 rng = epoch_rng(seed, epoch);
  std::vector<ScheduleItem> out;
  switch (regime.kind) {
    case RegimeKind::S:
    case RegimeKind::G:
    case RegimeKind::MultiSimp:
      for (const auto& [d, n] : sizes) draw(d, n, n, rng, out);
      break;
    case RegimeKind::MultiBal: {
      std::size_t largest = 0;
      for (const auto& [d, n] : sizes) largest = std::max(largest, n);
      for (const auto& [d, n] : sizes) draw(d, n, largest, rng, out);
      break;
    }
    case RegimeKind::MultiFoc: {
      if (!sizes.contains(*regime.focus)) {
        throw ConfigError("focus dataset " + std::string(corpus::to_string(*regime.focus)) + " is not loaded");
      }
      std::size_t largest = 0;
      for (const auto& [d, n] : sizes) {
        if (d != *regime.focus) largest = std::max(largest, n);
      }
      for (const auto& [d, n] : sizes) {
        if (d != *regime.focus) draw(d, n, largest, rng, out);
      }
      draw(*regime.focus, sizes.at(*regime.focus), largest * (sizes.size() - 1), rng, out);
      break;
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> predict_examples(
    const models::Model& model, std::span<const SentenceExample> examples, const std::string& head) {
  std::vector<double> preds, golds;
  std::vector<std::size_t> tokens;
  for (const SentenceExample& ex : examples) {
    tokens.clear();
    for (const auto& [t, gold] : ex.targets) {
      tokens.push_back(t);
      golds.push_back(gold);
    }
    const std::vector<double> p = model.predict(*ex.sentence, tokens, head);
    preds.insert(preds.end(), p.begin(), p.end());
  }
  return {std::move(preds), std::move(golds)};
}

DevScore score_examples(const models::Model& model, std::span<const SentenceExample> examples,
                        const std::string& head) {
  const auto [preds, golds] = predict_examples(model, examples, head);
  DevScore score;
  score.n = preds.size();
  if (score.n == 0) return score;
  score.mae = evaluation::mae(preds, golds);
  score.pearson = evaluation::pearson(preds, golds);
  return score;
}

std::vector<Checkpoint> train(models::Model& model, const Regime& regime, const TrainerConfig& config,
                              const TrainingData& data, const TrainerHooks& hooks) {
  regime.validate();
  if (config.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  std::map<Dataset, std::size_t> sizes;
  for (const auto& [d, examples] : data.train) {
    sizes[d] = examples.size();
    if (!model.has_head(head_name(regime, d))) {
      throw ConfigError("model has no regression head '" + head_name(regime, d) + "' for " +
                        std::string(corpus::to_string(d)));
    }
  }
  for (const auto& [d, examples] : data.dev) {
    if (!model.has_head(head_name(regime, d))) {
      throw ConfigError("model has no regression head for dev dataset " + std::string(corpus::to_string(d)));
    }
  }

  autodiff::AdamState adam(autodiff::AdamConfig{config.learning_rate});
  const std::vector<Tensor*> encoder = model.encoder_parameters();
  std::vector<Checkpoint> checkpoints;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<ScheduleItem> schedule = make_schedule(regime, sizes, epoch, config.seed);
    Checkpoint cp;
    cp.epoch = epoch;
    std::set<std::string> batch_heads;
    auto flush = [&] {
      if (batch_heads.empty()) return;
      std::vector<Tensor*> params = encoder;
      for (const std::string& h : batch_heads) {
        for (Tensor* t : model.head_parameters(h)) params.push_back(t);
      }
      autodiff::adam_step(params, adam);
      batch_heads.clear();
    };
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const ScheduleItem& item = schedule[k];
      const SentenceExample& ex = data.train.at(item.dataset)[item.index];
      if (ex.targets.empty()) continue;
      const std::string head = head_name(regime, item.dataset);
      double loss = 0.0;
      try {
        Tape tape;
        const Var l = model.sentence_loss(tape, *ex.sentence, ex.targets, head);
        loss = tape.scalar(l);
        if (!std::isfinite(loss)) throw NumericError("loss is " + std::to_string(loss));
        tape.backward(l);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", sentence '" + ex.sentence->id +
                           "': " + e.what());
      }
      cp.train_loss += loss;
      cp.train_targets += ex.targets.size();
      batch_heads.insert(head);
      ++step;
      if (hooks.on_step) hooks.on_step({epoch, step, item.dataset, head, loss}, model);
      if (batch_heads.size() > 0 && (k + 1) % config.batch_size == 0) flush();
    }
    flush();

    for (const auto& [d, examples] : data.dev) cp.dev[d] = score_examples(model, examples, head_name(regime, d));
    if (config.keep_snapshots) {
      auto snapshot = std::make_shared<models::Model>(model);
      for (auto& [name, t] : snapshot->parameters()) t->clear_grad();
      cp.snapshot = std::move(snapshot);
    }
    if (hooks.on_epoch) hooks.on_epoch(cp, model);
    checkpoints.push_back(std::move(cp));
    if (hooks.stop && hooks.stop(checkpoints.back())) break;
  }
  return checkpoints;
}

const Checkpoint& select_best(std::span<const Checkpoint> checkpoints, Dataset dataset) {
  const Checkpoint* best = nullptr;
  for (const Checkpoint& cp : checkpoints) {
    auto it = cp.dev.find(dataset);
    if (it == cp.dev.end() || it->second.n == 0) continue;
    if (best == nullptr) {
      best = &cp;
      continue;
    }
    const auto& current = best->dev.at(dataset).pearson;
    const auto& candidate = it->second.pearson;
    if (candidate && (!current || *candidate > *current)) best = &cp;
  }
  if (best == nullptr) {
    throw ConfigError("no checkpoint has a dev score for " + std::string(corpus::to_string(dataset)));
  }
  return *best;
}

}  // namespace factuality::training
