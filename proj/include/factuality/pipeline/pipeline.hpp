#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factuality/corpus/records.hpp"
#include "factuality/corpus/sentence.hpp"
#include "factuality/embeddings/table.hpp"
#include "factuality/evaluation/analysis.hpp"
#include "factuality/lexfeats/lexfeats.hpp"
#include "factuality/models/model.hpp"
#include "factuality/training/trainer.hpp"

namespace factuality::pipeline {

namespace fs = std::filesystem;
using corpus::Dataset;
using corpus::Split;

// Relative paths are resolved against data_root when the config is loaded.
struct DataPaths {
  fs::path data_root;
  // CoNLL-U files, or directories searched for *.conllu.
  std::vector<fs::path> treebanks;
  fs::path records;
  fs::path embeddings;
  fs::path signatures;
  fs::path conjugations;
  // Mined tense-agreement table; needed for lexfeats mine/both.
  fs::path tense_table;

  // Absolute paths pass through; relative ones are taken under data_root.
  fs::path resolve(const fs::path& p) const;
};

struct RunConfig {
  DataPaths paths;
  models::Architecture arch = models::Architecture::Linear;
  std::size_t layers = 2;
  lexfeats::FeatureMode lexfeats = lexfeats::FeatureMode::None;
  std::size_t embedding_dim = 300;
  training::Regime regime;
  // Empty: UDS-IH2 for S; FactBank, UW, MEANTIME (+ UDS-IH2 with
  // include_uds) otherwise.
  std::vector<Dataset> datasets;
  training::TrainerConfig trainer;
  fs::path out = "run";

  std::vector<Dataset> active_datasets() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// FACTUALITY_DATA, else ./data.
fs::path default_data_root();
// The lexicons shipped with the sources.
fs::path resource_dir();

RunConfig default_config();
// Overlays `j` on `base`; unknown fields throw ConfigError ("model.foo:
// unknown field").
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = default_config());
nlohmann::json to_json(const RunConfig& config);
RunConfig load_config(const fs::path& path, RunConfig base = default_config());

// 64-bit FNV-1a over the file bytes; directories hash their *.conllu files
// in name order.
std::uint64_t fnv1a_file(const fs::path& path);
std::string hex_digest(std::uint64_t digest);

nlohmann::json make_manifest(const std::string& command, const RunConfig& config,
                             const std::vector<fs::path>& inputs, const nlohmann::json& extra = {});
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

std::vector<fs::path> treebank_files(const std::vector<fs::path>& entries);
corpus::Corpus load_treebanks(const std::vector<fs::path>& entries);

struct Resources {
  corpus::Corpus corpus;
  corpus::RecordSet records;
  embeddings::EmbeddingTable table{1, 0};
  embeddings::FeatureProvider features;
};

// Treebanks, records (checked against the treebanks), embeddings restricted
// to the treebank vocabulary, and the feature provider of the config.
Resources load_resources(const RunConfig& config);
embeddings::FeatureProvider load_features(const RunConfig& config);

// One example per sentence with at least one record; targets sorted by token.
std::vector<training::SentenceExample> build_examples(const Resources& resources, Dataset dataset, Split split);
training::TrainingData build_training_data(const Resources& resources, const std::vector<Dataset>& datasets);

models::ModelConfig model_config(const RunConfig& config, std::size_t feature_dim);

// Prediction records in the order of predict_examples().
std::vector<evaluation::PredictionRecord> prediction_records(const models::Model& model,
                                                             std::span<const training::SentenceExample> examples,
                                                             const std::string& head);

}  // namespace factuality::pipeline
