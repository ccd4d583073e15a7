#include "factuality/pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "factuality/corpus/conllu.hpp"
#include "factuality/errors.hpp"
#include "factuality/log.hpp"

#ifndef FACTUALITY_RESOURCE_DIR
#define FACTUALITY_RESOURCE_DIR "data"
#endif

namespace factuality::pipeline {
namespace {

using nlohmann::json;

void check_fields(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError((where.empty() ? key : where + "." + key) + ": unknown field");
    }
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename F>
auto convert(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

}  // namespace

fs::path DataPaths::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return data_root / p;
}

std::vector<Dataset> RunConfig::active_datasets() const {
  if (!datasets.empty()) return datasets;
  if (regime.kind == training::RegimeKind::S) return {Dataset::UdsIh2};
  std::vector<Dataset> out{Dataset::FactBank, Dataset::UW, Dataset::Meantime};
  if (regime.include_uds) out.push_back(Dataset::UdsIh2);
  return out;
}

void RunConfig::validate() const {
  if (layers != 1 && layers != 2) {
    throw ConfigError("model.layers: " + std::to_string(layers) + " not in {1, 2}");
  }
  if (embedding_dim == 0) throw ConfigError("model.embedding_dim: must be positive");
  if (trainer.epochs == 0) throw ConfigError("trainer.epochs: must be positive");
  if (!(trainer.learning_rate > 0)) throw ConfigError("trainer.learning_rate: must be positive");
  if (trainer.batch_size == 0) throw ConfigError("trainer.batch_size: must be positive");
  convert("regime", [&] { regime.validate(); });
  const auto ds = active_datasets();
  std::set<Dataset> unique(ds.begin(), ds.end());
  if (unique.size() != ds.size()) throw ConfigError("regime.datasets: duplicate dataset");
  if (regime.kind == training::RegimeKind::S && ds.size() != 1) {
    throw ConfigError("regime.datasets: S trains on exactly one dataset");
  }
  if (regime.kind != training::RegimeKind::S && ds.size() < 2) {
    throw ConfigError("regime.datasets: " + std::string(training::to_string(regime.kind)) +
                      " needs at least two datasets");
  }
  if (regime.focus && !unique.contains(*regime.focus)) {
    throw ConfigError("regime.focus: " + std::string(corpus::to_string(*regime.focus)) +
                      " is not among the training datasets");
  }
}

fs::path default_data_root() {
  if (const char* env = std::getenv("FACTUALITY_DATA"); env != nullptr && *env != '\0') return env;
  return "data";
}

fs::path resource_dir() { return FACTUALITY_RESOURCE_DIR; }

RunConfig default_config() {
  RunConfig c;
  c.paths.data_root = default_data_root();
  c.paths.treebanks = {"treebanks"};
  c.paths.records = "factuality.jsonl";
  c.paths.embeddings = "embeddings.txt";
  c.paths.signatures = resource_dir() / "signatures.tsv";
  c.paths.conjugations = resource_dir() / "conjugations.tsv";
  c.paths.tense_table = "tense_agreement.tsv";
  return c;
}

RunConfig config_from_json(const json& j, RunConfig c) {
  check_fields(j, "", {"paths", "model", "regime", "trainer", "out"});
  if (j.contains("paths")) {
    const json& p = j["paths"];
    check_fields(p, "paths",
                 {"data_root", "treebanks", "records", "embeddings", "signatures", "conjugations", "tense_table"});
    if (p.contains("data_root")) c.paths.data_root = field<std::string>(p, "data_root", "paths");
    if (p.contains("treebanks")) {
      c.paths.treebanks.clear();
      for (const auto& s : field<std::vector<std::string>>(p, "treebanks", "paths")) c.paths.treebanks.emplace_back(s);
    }
    if (p.contains("records")) c.paths.records = field<std::string>(p, "records", "paths");
    if (p.contains("embeddings")) c.paths.embeddings = field<std::string>(p, "embeddings", "paths");
    if (p.contains("signatures")) c.paths.signatures = field<std::string>(p, "signatures", "paths");
    if (p.contains("conjugations")) c.paths.conjugations = field<std::string>(p, "conjugations", "paths");
    if (p.contains("tense_table")) c.paths.tense_table = field<std::string>(p, "tense_table", "paths");
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    check_fields(m, "model", {"arch", "layers", "lexfeats", "embedding_dim"});
    if (m.contains("arch")) {
      c.arch = convert("model.arch", [&] { return models::parse_architecture(field<std::string>(m, "arch", "model")); });
    }
    if (m.contains("layers")) c.layers = field<std::size_t>(m, "layers", "model");
    if (m.contains("lexfeats")) {
      c.lexfeats = convert("model.lexfeats",
                           [&] { return lexfeats::parse_feature_mode(field<std::string>(m, "lexfeats", "model")); });
    }
    if (m.contains("embedding_dim")) c.embedding_dim = field<std::size_t>(m, "embedding_dim", "model");
  }
  if (j.contains("regime")) {
    const json& r = j["regime"];
    check_fields(r, "regime", {"kind", "focus", "include_uds", "datasets"});
    if (r.contains("kind")) {
      c.regime.kind = convert("regime.kind", [&] { return training::parse_regime(field<std::string>(r, "kind", "regime")); });
    }
    if (r.contains("focus")) {
      if (r["focus"].is_null()) {
        c.regime.focus.reset();
      } else {
        c.regime.focus =
            convert("regime.focus", [&] { return corpus::parse_dataset(field<std::string>(r, "focus", "regime")); });
      }
    }
    if (r.contains("include_uds")) c.regime.include_uds = field<bool>(r, "include_uds", "regime");
    if (r.contains("datasets")) {
      c.datasets.clear();
      for (const auto& s : field<std::vector<std::string>>(r, "datasets", "regime")) {
        c.datasets.push_back(convert("regime.datasets", [&] { return corpus::parse_dataset(s); }));
      }
    }
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    check_fields(t, "trainer", {"epochs", "learning_rate", "seed", "batch_size"});
    if (t.contains("epochs")) c.trainer.epochs = field<std::size_t>(t, "epochs", "trainer");
    if (t.contains("learning_rate")) c.trainer.learning_rate = field<double>(t, "learning_rate", "trainer");
    if (t.contains("seed")) c.trainer.seed = field<std::uint64_t>(t, "seed", "trainer");
    if (t.contains("batch_size")) c.trainer.batch_size = field<std::size_t>(t, "batch_size", "trainer");
  }
  if (j.contains("out")) c.out = field<std::string>(j, "out", "config");
  return c;
}

json to_json(const RunConfig& c) {
  json treebanks = json::array();
  for (const auto& t : c.paths.treebanks) treebanks.push_back(t.string());
  json datasets = json::array();
  for (Dataset d : c.active_datasets()) datasets.push_back(std::string(corpus::to_string(d)));
  return {{"paths",
           {{"data_root", c.paths.data_root.string()},
            {"treebanks", treebanks},
            {"records", c.paths.records.string()},
            {"embeddings", c.paths.embeddings.string()},
            {"signatures", c.paths.signatures.string()},
            {"conjugations", c.paths.conjugations.string()},
            {"tense_table", c.paths.tense_table.string()}}},
          {"model",
           {{"arch", std::string(models::to_string(c.arch))},
            {"layers", c.layers},
            {"lexfeats", std::string(lexfeats::to_string(c.lexfeats))},
            {"embedding_dim", c.embedding_dim}}},
          {"regime",
           {{"kind", std::string(training::to_string(c.regime.kind))},
            {"focus", c.regime.focus ? json(std::string(corpus::to_string(*c.regime.focus))) : json(nullptr)},
            {"include_uds", c.regime.include_uds},
            {"datasets", datasets}}},
          {"trainer",
           {{"epochs", c.trainer.epochs},
            {"learning_rate", c.trainer.learning_rate},
            {"seed", c.trainer.seed},
            {"batch_size", c.trainer.batch_size}}},
          {"out", c.out.string()}};
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

std::uint64_t fnv1a_file(const fs::path& path) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      for (std::streamsize i = 0; i < in.gcount(); ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 1099511628211ULL;
      }
    }
  };
  if (fs::is_directory(path)) {
    for (const auto& f : treebank_files({path})) feed(f);
  } else {
    feed(path);
  }
  return h;
}

std::string hex_digest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

json make_manifest(const std::string& command, const RunConfig& config, const std::vector<fs::path>& inputs,
                   const json& extra) {
  json digests = json::object();
  for (const auto& p : inputs) {
    if (!p.empty() && fs::exists(p)) digests[p.string()] = "fnv1a64:" + hex_digest(fnv1a_file(p));
  }
  json m{{"command", command}, {"config", to_json(config)}, {"seed", config.trainer.seed}, {"inputs", digests}};
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) m[k] = v;
  }
  return m;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<fs::path> treebank_files(const std::vector<fs::path>& entries) {
  std::vector<fs::path> files;
  for (const auto& e : entries) {
    if (fs::is_directory(e)) {
      std::vector<fs::path> found;
      for (const auto& f : fs::directory_iterator(e)) {
        if (f.is_regular_file() && f.path().extension() == ".conllu") found.push_back(f.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(e)) {
      files.push_back(e);
    } else {
      throw DataError("treebank " + e.string() + " does not exist");
    }
  }
  return files;
}

corpus::Corpus load_treebanks(const std::vector<fs::path>& entries) {
  corpus::Corpus corpus;
  for (const auto& f : treebank_files(entries)) {
    for (auto& s : corpus::read_conllu(f)) {
      if (corpus.find(s.id) != nullptr) throw DataError("duplicate sentence id '" + s.id + "' in " + f.string());
      corpus.add(std::move(s));
    }
  }
  return corpus;
}

embeddings::FeatureProvider load_features(const RunConfig& config) {
  using lexfeats::FeatureMode;
  if (config.lexfeats == FeatureMode::None) return {};
  lexfeats::SignatureLexicon lexicon = lexfeats::SignatureLexicon::load(config.paths.resolve(config.paths.signatures));
  lexfeats::TenseAgreementTable table;
  if (config.lexfeats == FeatureMode::Mine || config.lexfeats == FeatureMode::Both) {
    const fs::path p = config.paths.resolve(config.paths.tense_table);
    if (!fs::exists(p)) {
      throw ConfigError("paths.tense_table: " + p.string() + " does not exist (run `factuality mine` first)");
    }
    table = lexfeats::TenseAgreementTable::load(p);
  }
  return lexfeats::make_feature_provider(std::move(lexicon), std::move(table), config.lexfeats);
}

Resources load_resources(const RunConfig& config) {
  Resources r;
  std::vector<fs::path> treebanks;
  for (const auto& t : config.paths.treebanks) treebanks.push_back(config.paths.resolve(t));
  r.corpus = load_treebanks(treebanks);
  log::info("loaded " + std::to_string(r.corpus.size()) + " sentences");
  r.records = corpus::load_factuality_records(config.paths.resolve(config.paths.records), &r.corpus);
  for (const auto& [key, recs] : r.records.groups()) {
    log::info(std::string(corpus::to_string(key.first)) + "/" + std::string(corpus::to_string(key.second)) + ": " +
              std::to_string(recs.size()) + " predicates");
  }
  std::unordered_set<std::string> vocabulary;
  for (const auto& s : r.corpus.sentences()) {
    for (const auto& t : s.tokens) vocabulary.insert(embeddings::lowercase(t));
  }
  r.table = embeddings::EmbeddingTable::load(config.paths.resolve(config.paths.embeddings), config.embedding_dim,
                                             config.trainer.seed, &vocabulary);
  log::info("embeddings cover " + std::to_string(r.table.size()) + " of " + std::to_string(vocabulary.size()) +
            " word types");
  r.features = load_features(config);
  return r;
}

std::vector<training::SentenceExample> build_examples(const Resources& resources, Dataset dataset, Split split) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> targets;
  for (const auto& rec : resources.records.get(dataset, split)) {
    auto [it, fresh] = targets.try_emplace(rec.sentence_id);
    if (fresh) order.push_back(rec.sentence_id);
    const bool duplicate = std::any_of(it->second.begin(), it->second.end(),
                                       [&](const auto& t) { return t.first == rec.token; });
    if (duplicate) {
      log::warn("duplicate record for " + rec.sentence_id + ":" + std::to_string(rec.token) + " ignored");
      continue;
    }
    it->second.emplace_back(rec.token, rec.label);
  }
  std::vector<training::SentenceExample> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    const corpus::Sentence* s = resources.corpus.find(id);
    if (s == nullptr) throw DataError("record refers to unknown sentence '" + id + "'");
    auto encoded = std::make_shared<models::EncodedSentence>();
    encoded->id = id;
    encoded->inputs = embeddings::embed_sentence(resources.table, *s, resources.features);
    encoded->tree = corpus::tree_structure(*s);
    auto t = std::move(targets[id]);
    std::sort(t.begin(), t.end());
    out.push_back({std::move(encoded), std::move(t)});
  }
  return out;
}

training::TrainingData build_training_data(const Resources& resources, const std::vector<Dataset>& datasets) {
  training::TrainingData data;
  for (Dataset d : datasets) {
    data.train[d] = build_examples(resources, d, Split::Train);
    data.dev[d] = build_examples(resources, d, Split::Dev);
    if (data.train[d].empty()) {
      throw DataError("no training records for " + std::string(corpus::to_string(d)));
    }
  }
  return data;
}

models::ModelConfig model_config(const RunConfig& config, std::size_t feature_dim) {
  models::ModelConfig m;
  m.arch = config.arch;
  m.layers = config.layers;
  m.input_dim = config.embedding_dim + feature_dim;
  const auto datasets = config.active_datasets();
  m.heads = training::head_names(config.regime, datasets);
  return m;
}

std::vector<evaluation::PredictionRecord> prediction_records(const models::Model& model,
                                                             std::span<const training::SentenceExample> examples,
                                                             const std::string& head) {
  std::vector<evaluation::PredictionRecord> out;
  std::vector<std::size_t> tokens;
  for (const auto& ex : examples) {
    tokens.clear();
    for (const auto& [t, gold] : ex.targets) tokens.push_back(t);
    const std::vector<double> p = model.predict(*ex.sentence, tokens, head);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      out.push_back({ex.sentence->id, tokens[i], ex.targets[i].second, p[i], std::nullopt});
    }
  }
  return out;
}

}  // namespace factuality::pipeline
