#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factuality/corpus/records.hpp"
#include "factuality/models/model.hpp"

namespace factuality::training {

using corpus::Dataset;

enum class RegimeKind { S, G, MultiSimp, MultiBal, MultiFoc };

RegimeKind parse_regime(std::string_view text);
std::string_view to_string(RegimeKind kind);

struct Regime {
  RegimeKind kind = RegimeKind::S;
  std::optional<Dataset> focus;
  // Whether UDS-IH2 joins the unified datasets ("w/UDS-IH2" variants).
  bool include_uds = false;

  // Throws ConfigError if focus is set iff kind != MultiFoc.
  void validate() const;
};

// Name of the regression head that examples of `dataset` are routed through.
std::string head_name(const Regime& regime, Dataset dataset);
// Heads a model needs for `datasets` under `regime`, in dataset order.
std::vector<std::string> head_names(const Regime& regime, std::span<const Dataset> datasets);

// One sentence and its annotated predicates.
struct SentenceExample {
  std::shared_ptr<const models::EncodedSentence> sentence;
  std::vector<std::pair<std::size_t, double>> targets;
};

using DatasetExamples = std::map<Dataset, std::vector<SentenceExample>>;

struct TrainingData {
  DatasetExamples train;
  DatasetExamples dev;
};

struct ScheduleItem {
  Dataset dataset;
  std::size_t index;

  friend bool operator==(const ScheduleItem&, const ScheduleItem&) = default;
};

// Order of training sentences for one epoch, deterministic in (seed, epoch).
// Throws ConfigError when the regime does not fit the datasets (S needs
// exactly one, the others at least two, MultiFoc a known focus).
std::vector<ScheduleItem> make_schedule(const Regime& regime, const std::map<Dataset, std::size_t>& sizes,
                                        std::size_t epoch, std::uint64_t seed);

struct TrainerConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Sentences per optimizer step.
  std::size_t batch_size = 1;
  // Keep a parameter copy in every checkpoint.
  bool keep_snapshots = true;
};

struct DevScore {
  std::optional<double> pearson;
  double mae = 0.0;
  std::size_t n = 0;
};

struct Checkpoint {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::size_t train_targets = 0;
  std::map<Dataset, DevScore> dev;
  std::shared_ptr<const models::Model> snapshot;
};

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t step = 0;
  Dataset dataset{};
  std::string head;
  double loss = 0.0;
};

struct TrainerHooks {
  // After backward, before the optimizer step; gradients are populated.
  std::function<void(const StepInfo&, const models::Model&)> on_step;
  std::function<void(const Checkpoint&, const models::Model&)> on_epoch;
  // Ends training after the epoch when it returns true.
  std::function<bool(const Checkpoint&)> stop;
};

// Predictions and golds of every annotated token of `examples`, in order.
std::pair<std::vector<double>, std::vector<double>> predict_examples(
    const models::Model& model, std::span<const SentenceExample> examples, const std::string& head);

DevScore score_examples(const models::Model& model, std::span<const SentenceExample> examples,
                        const std::string& head);

// Throws NumericError (with epoch and sentence id) on a non-finite loss.
std::vector<Checkpoint> train(models::Model& model, const Regime& regime, const TrainerConfig& config,
                              const TrainingData& data, const TrainerHooks& hooks = {});

// Argmax of dev Pearson for `dataset`; undefined r ranks below any defined
// value and ties go to the earliest epoch. Throws ConfigError if no
// checkpoint scored the dataset.
const Checkpoint& select_best(std::span<const Checkpoint> checkpoints, Dataset dataset);

}  // namespace factuality::training
