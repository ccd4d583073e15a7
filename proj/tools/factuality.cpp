#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factuality/calibration/isotonic.hpp"
#include "factuality/corpus/annotations.hpp"
#include "factuality/errors.hpp"
#include "factuality/evaluation/analysis.hpp"
#include "factuality/lexfeats/lexfeats.hpp"
#include "factuality/log.hpp"
#include "factuality/models/checkpoint.hpp"
#include "factuality/pipeline/pipeline.hpp"
#include "factuality/selftest/selftest.hpp"
#include "factuality/training/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace factuality;
using corpus::Dataset;
using corpus::Split;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kNumericFailure = 3;

// Flags shared by the commands that build a RunConfig. Unset flags leave the
// config file's values alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> regime;
  std::optional<std::string> focus;
  std::optional<std::string> arch;
  std::optional<std::size_t> layers;
  std::optional<std::string> lexfeats;
  std::optional<std::size_t> epochs;
  std::optional<std::string> out;

  void add_to(CLI::App* app, bool model_flags) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--out", out, "Output directory");
    if (!model_flags) return;
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--regime", regime, "S, G, multisimp, multibal or multifoc");
    app->add_option("--focus", focus, "Focus dataset for multifoc");
    app->add_option("--arch", arch, "linear, tree or hybrid");
    app->add_option("--layers", layers, "1 or 2");
    app->add_option("--lexfeats", lexfeats, "none, sign, mine or both");
    app->add_option("--epochs", epochs, "Training epochs");
  }

  pipeline::RunConfig resolve() const {
    pipeline::RunConfig c = config.empty() ? pipeline::default_config() : pipeline::load_config(config);
    json j = json::object();
    if (seed) j["trainer"]["seed"] = *seed;
    if (epochs) j["trainer"]["epochs"] = *epochs;
    if (regime) j["regime"]["kind"] = *regime;
    if (focus) j["regime"]["focus"] = *focus;
    if (arch) j["model"]["arch"] = *arch;
    if (layers) j["model"]["layers"] = *layers;
    if (lexfeats) j["model"]["lexfeats"] = *lexfeats;
    if (out) j["out"] = *out;
    c = pipeline::config_from_json(j, c);
    c.validate();
    return c;
  }
};

void require_file(const std::string& field, const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError(field + ": " + p.string() + " does not exist");
}

void check_inputs(const pipeline::RunConfig& c) {
  for (const auto& t : c.paths.treebanks) require_file("paths.treebanks", c.paths.resolve(t));
  require_file("paths.records", c.paths.resolve(c.paths.records));
  require_file("paths.embeddings", c.paths.resolve(c.paths.embeddings));
  if (c.lexfeats != lexfeats::FeatureMode::None) require_file("paths.signatures", c.paths.resolve(c.paths.signatures));
}

std::vector<fs::path> input_files(const pipeline::RunConfig& c) {
  std::vector<fs::path> inputs;
  for (const auto& t : c.paths.treebanks) inputs.push_back(c.paths.resolve(t));
  inputs.push_back(c.paths.resolve(c.paths.records));
  inputs.push_back(c.paths.resolve(c.paths.embeddings));
  if (c.lexfeats != lexfeats::FeatureMode::None) inputs.push_back(c.paths.resolve(c.paths.signatures));
  if (c.lexfeats == lexfeats::FeatureMode::Mine || c.lexfeats == lexfeats::FeatureMode::Both) {
    inputs.push_back(c.paths.resolve(c.paths.tense_table));
  }
  return inputs;
}

json score_json(const training::DevScore& s) {
  return {{"pearson", s.pearson ? json(*s.pearson) : json(nullptr)}, {"mae", s.mae}, {"n", s.n}};
}

fs::path checkpoint_path(const fs::path& run, std::size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch-%02zu.ckpt", epoch);
  return run / "checkpoints" / name;
}

std::string fixed(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// ---- train ----

int cmd_train(const CommonFlags& flags) {
  pipeline::RunConfig config = flags.resolve();
  config.paths.data_root = fs::absolute(config.paths.data_root);
  check_inputs(config);
  fs::create_directories(config.out / "checkpoints");

  const auto datasets = config.active_datasets();
  const pipeline::Resources resources = pipeline::load_resources(config);
  const training::TrainingData data = pipeline::build_training_data(resources, datasets);
  models::Model model(pipeline::model_config(config, resources.features.dim), config.trainer.seed);

  std::vector<fs::path> inputs = input_files(config);
  if (!flags.config.empty()) inputs.push_back(flags.config);
  pipeline::write_json(config.out / "manifest.json", pipeline::make_manifest("train", config, inputs));

  json epochs = json::array();
  training::TrainerHooks hooks;
  hooks.on_epoch = [&](const training::Checkpoint& cp, const models::Model& m) {
    json dev = json::object();
    std::string line = "epoch " + std::to_string(cp.epoch) + " train loss " +
                       fixed(cp.train_loss / static_cast<double>(std::max<std::size_t>(cp.train_targets, 1)), 4);
    for (const auto& [d, s] : cp.dev) {
      dev[std::string(corpus::to_string(d))] = score_json(s);
      line += "  " + std::string(corpus::to_string(d)) + " r " + evaluation::format_pearson(s.pearson) + " mae " +
              fixed(s.mae);
    }
    log::info(line);
    models::CheckpointInfo info{config.trainer.seed, cp.epoch, {{"dev", dev}}};
    models::save_checkpoint(checkpoint_path(config.out, cp.epoch), m, info);
    epochs.push_back({{"epoch", cp.epoch},
                      {"train_loss", cp.train_loss},
                      {"train_targets", cp.train_targets},
                      {"dev", dev},
                      {"checkpoint", checkpoint_path(config.out, cp.epoch).filename().string()}});
  };
  training::TrainerConfig tc = config.trainer;
  tc.keep_snapshots = false;
  training::train(model, config.regime, tc, data, hooks);
  pipeline::write_json(config.out / "training.json", {{"epochs", epochs}});
  log::info("wrote " + (config.out / "training.json").string());
  return kOk;
}

// ---- shared by evaluate / predict / calibrate ----

struct Run {
  fs::path dir;
  pipeline::RunConfig config;
  std::vector<training::Checkpoint> epochs;
};

Run load_run(const fs::path& dir) {
  Run run;
  run.dir = dir;
  const json manifest = pipeline::read_json(dir / "manifest.json");
  run.config = pipeline::config_from_json(manifest.at("config"));
  const json training = pipeline::read_json(dir / "training.json");
  for (const auto& e : training.at("epochs")) {
    training::Checkpoint cp;
    cp.epoch = e.at("epoch").get<std::size_t>();
    for (const auto& [name, s] : e.at("dev").items()) {
      training::DevScore score;
      if (!s.at("pearson").is_null()) score.pearson = s.at("pearson").get<double>();
      score.mae = s.at("mae").get<double>();
      score.n = s.at("n").get<std::size_t>();
      cp.dev[corpus::parse_dataset(name)] = score;
    }
    run.epochs.push_back(std::move(cp));
  }
  if (run.epochs.empty()) throw DataError(dir.string() + ": run has no epochs");
  return run;
}

std::size_t chosen_epoch(const Run& run, Dataset d, std::optional<std::size_t> pinned) {
  if (pinned) return *pinned;
  return training::select_best(run.epochs, d).epoch;
}

models::Model load_model(const Run& run, std::size_t epoch) {
  const fs::path p = checkpoint_path(run.dir, epoch);
  if (!fs::exists(p)) throw DataError("missing checkpoint " + p.string());
  return models::load_checkpoint(p).model;
}

std::vector<Dataset> selected_datasets(const Run& run, const std::vector<std::string>& names) {
  if (names.empty()) return run.config.active_datasets();
  std::vector<Dataset> out;
  for (const auto& n : names) out.push_back(corpus::parse_dataset(n));
  return out;
}

std::map<Dataset, calibration::IsotonicMap> load_calibration(const fs::path& path) {
  std::map<Dataset, calibration::IsotonicMap> maps;
  if (!fs::exists(path)) return maps;
  const json j = pipeline::read_json(path);
  for (const auto& [name, entry] : j.items()) {
    maps[corpus::parse_dataset(name)] = calibration::IsotonicMap::from_json(entry.at("map"));
  }
  return maps;
}

struct EvalFlags {
  std::string run;
  std::string split = "test";
  std::vector<std::string> datasets;
  std::optional<std::size_t> epoch;
  std::string out;
  bool baseline = false;
};

// ---- evaluate ----

int cmd_evaluate(const EvalFlags& flags) {
  const Run run = load_run(flags.run);
  const fs::path out = flags.out.empty() ? run.dir : fs::path(flags.out);
  const Split split = corpus::parse_split(flags.split);
  const pipeline::Resources resources = pipeline::load_resources(run.config);
  const auto calibration = load_calibration(run.dir / "calibration.json");

  json reports = json::array();
  std::vector<std::vector<std::string>> rows;
  for (Dataset d : selected_datasets(run, flags.datasets)) {
    const std::string name(corpus::to_string(d));
    const auto examples = pipeline::build_examples(resources, d, split);
    if (examples.empty()) {
      log::warn("no " + flags.split + " records for " + name);
      continue;
    }
    const std::size_t epoch = chosen_epoch(run, d, flags.epoch);
    const models::Model model = load_model(run, epoch);
    auto records = pipeline::prediction_records(model, examples, training::head_name(run.config.regime, d));
    const evaluation::EvalReport report = evaluation::evaluate(records, name, flags.split);
    json j = evaluation::to_json(report);
    j["epoch"] = epoch;
    std::vector<std::string> row{name, std::to_string(epoch), std::to_string(report.n), fixed(report.mae),
                                 evaluation::format_pearson(report.pearson)};
    if (auto it = calibration.find(d); it != calibration.end()) {
      for (auto& r : records) r.prediction = it->second(*r.prediction);
      const auto cal = evaluation::evaluate(records, name, flags.split);
      j["calibrated"] = evaluation::to_json(cal);
      row.push_back(fixed(cal.mae));
      row.push_back(evaluation::format_pearson(cal.pearson));
    } else {
      row.insert(row.end(), {"-", "-"});
    }
    reports.push_back(j);
    rows.push_back(row);
    if (flags.baseline) {
      std::vector<double> golds;
      for (const auto& r : records) golds.push_back(r.gold);
      const auto base = evaluation::constant_baseline(golds, name, flags.split);
      json b = evaluation::to_json(base);
      b["system"] = "All-3.0";
      reports.push_back(b);
      rows.push_back({name + " All-3.0", "-", std::to_string(base.n), fixed(base.mae),
                      evaluation::format_pearson(base.pearson), "-", "-"});
    }
  }
  pipeline::write_json(out / ("eval-" + flags.split + ".json"), reports);
  std::printf("%-20s %5s %6s %7s %7s %9s %9s\n", "dataset", "epoch", "n", "MAE", "r", "cal MAE", "cal r");
  for (const auto& r : rows) {
    std::printf("%-20s %5s %6s %7s %7s %9s %9s\n", r[0].c_str(), r[1].c_str(), r[2].c_str(), r[3].c_str(),
                r[4].c_str(), r[5].c_str(), r[6].c_str());
  }
  return kOk;
}

// ---- predict ----

int cmd_predict(const EvalFlags& flags) {
  const Run run = load_run(flags.run);
  const fs::path out = flags.out.empty() ? run.dir : fs::path(flags.out);
  fs::create_directories(out);
  const Split split = corpus::parse_split(flags.split);
  const pipeline::Resources resources = pipeline::load_resources(run.config);
  const auto calibration = load_calibration(run.dir / "calibration.json");
  for (Dataset d : selected_datasets(run, flags.datasets)) {
    const std::string name(corpus::to_string(d));
    const auto examples = pipeline::build_examples(resources, d, split);
    const std::size_t epoch = chosen_epoch(run, d, flags.epoch);
    const models::Model model = load_model(run, epoch);
    const auto records = pipeline::prediction_records(model, examples, training::head_name(run.config.regime, d));
    const fs::path path = out / ("predictions-" + name + "-" + flags.split + ".jsonl");
    std::ofstream file(path);
    if (!file) throw DataError("cannot write " + path.string());
    const auto it = calibration.find(d);
    for (const auto& r : records) {
      json j{{"sentence_id", r.sentence_id}, {"token", r.token}, {"gold", r.gold}, {"prediction", *r.prediction}};
      j["calibrated"] = it != calibration.end() ? json(it->second(*r.prediction)) : json(nullptr);
      j["dataset"] = name;
      file << j.dump() << '\n';
    }
    log::info("wrote " + std::to_string(records.size()) + " predictions to " + path.string());
  }
  return kOk;
}

// ---- calibrate ----

int cmd_calibrate(const EvalFlags& flags) {
  const Run run = load_run(flags.run);
  const fs::path out = flags.out.empty() ? run.dir : fs::path(flags.out);
  const pipeline::Resources resources = pipeline::load_resources(run.config);
  json maps = json::object();
  for (Dataset d : selected_datasets(run, flags.datasets)) {
    const std::string name(corpus::to_string(d));
    // Maps are fit on the train split only.
    const auto examples = pipeline::build_examples(resources, d, Split::Train);
    if (examples.empty()) throw DataError("no train records for " + name);
    const std::size_t epoch = chosen_epoch(run, d, flags.epoch);
    const models::Model model = load_model(run, epoch);
    const auto [preds, golds] =
        training::predict_examples(model, examples, training::head_name(run.config.regime, d));
    const auto map = calibration::fit_isotonic(preds, golds);
    maps[name] = {{"epoch", epoch}, {"split", "train"}, {"map", map.to_json()}};
    log::info(name + ": " + std::to_string(map.breakpoints().size()) + " breakpoints from " +
              std::to_string(preds.size()) + " train predicates");
  }
  pipeline::write_json(out / "calibration.json", maps);
  return kOk;
}

// ---- mine ----

struct MineFlags {
  std::string corpus;
  std::string conjugations;
  std::size_t min_count = 10;
  std::string out = "mined";
};

int cmd_mine(const MineFlags& flags) {
  const fs::path conj_path =
      flags.conjugations.empty() ? pipeline::resource_dir() / "conjugations.tsv" : fs::path(flags.conjugations);
  const auto conj = lexfeats::ConjugationTable::load(conj_path);
  std::ifstream in(flags.corpus);
  if (!in) throw DataError("cannot open corpus " + flags.corpus);
  lexfeats::TenseMiner miner(conj);
  miner.scan(in);
  const auto table = miner.table(flags.min_count);
  const fs::path out(flags.out);
  fs::create_directories(out);
  std::ofstream file(out / "tense_agreement.tsv");
  table.write(file);
  json counts = json::object();
  for (const auto& [verb, c] : miner.counts()) {
    counts[verb] = {{"agreeing", c.agreeing}, {"decidable", c.decidable}, {"progressive", c.progressive}};
  }
  pipeline::RunConfig config = pipeline::default_config();
  config.out = out;
  pipeline::write_json(out / "manifest.json",
                       pipeline::make_manifest("mine", config, {flags.corpus, conj_path},
                                               {{"min_count", flags.min_count}, {"lines", miner.lines()},
                                                {"counts", counts}}));
  for (const auto& [verb, s] : table.scores()) std::printf("%s\t%.4f\t%zu\n", verb.c_str(), s.score, s.matches);
  log::info("scored " + std::to_string(table.size()) + " verbs from " + std::to_string(miner.lines()) + " lines");
  return kOk;
}

// ---- aggregate ----

struct AggregateFlags {
  std::string annotations;
  std::string split = "train";
  std::string out = "aggregated";
};

int cmd_aggregate(const AggregateFlags& flags) {
  std::ifstream in(flags.annotations);
  if (!in) throw DataError("cannot open annotations " + flags.annotations);
  const auto raw = corpus::load_raw_annotations(in);
  const auto result = corpus::aggregate_annotations(raw, corpus::parse_split(flags.split));
  const fs::path out(flags.out);
  fs::create_directories(out);
  std::ofstream file(out / "records.jsonl");
  for (const auto& r : result.records) corpus::write_factuality_record(file, r);
  pipeline::RunConfig config = pipeline::default_config();
  config.out = out;
  json dropped_workers(result.dropped_workers);
  json dropped_predicates(result.dropped_predicates);
  pipeline::write_json(out / "manifest.json",
                       pipeline::make_manifest("aggregate", config, {flags.annotations},
                                               {{"split", flags.split},
                                                {"records", result.records.size()},
                                                {"dropped_workers", dropped_workers},
                                                {"dropped_predicates", dropped_predicates}}));
  for (const auto& r : result.records) {
    std::printf("%s\t%zu\t%.4f\n", r.sentence_id.c_str(), r.token, r.label);
  }
  log::info(std::to_string(result.records.size()) + " predicates, " + std::to_string(result.dropped_workers.size()) +
            " annotators dropped, " + std::to_string(result.dropped_predicates.size()) + " predicates dropped");
  return kOk;
}

// ---- report ----

struct ReportFlags {
  std::string predictions;
  std::string out = "report";
  std::size_t top = 50;
  std::size_t relations = 10;
  bool include_negated = false;
};

int cmd_report(const ReportFlags& flags, const CommonFlags& common) {
  const pipeline::RunConfig config = common.resolve();
  std::vector<fs::path> treebanks;
  for (const auto& t : config.paths.treebanks) treebanks.push_back(config.paths.resolve(t));
  const corpus::Corpus corpus = pipeline::load_treebanks(treebanks);

  std::vector<evaluation::PredictionRecord> records;
  std::ifstream in(flags.predictions);
  if (!in) throw DataError("cannot open predictions " + flags.predictions);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      evaluation::PredictionRecord r;
      r.sentence_id = j.at("sentence_id").get<std::string>();
      r.token = j.at("token").get<std::size_t>();
      r.gold = j.contains("gold") ? j["gold"].get<double>() : j.at("label").get<double>();
      if (j.contains("prediction") && !j["prediction"].is_null()) r.prediction = j["prediction"].get<double>();
      if (j.contains("calibrated") && !j["calibrated"].is_null()) r.calibrated = j["calibrated"].get<double>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(std::string("predictions: ") + e.what(), line_no);
    }
  }

  const auto modal = evaluation::breakdown_modal_negation(records, corpus);
  const auto relation = evaluation::breakdown_relation(records, corpus, flags.relations);
  const auto errors = evaluation::top_errors(records, flags.top);
  const auto xcomp = evaluation::xcomp_verb_means(records, corpus, !flags.include_negated);

  const fs::path out(flags.out);
  fs::create_directories(out);
  {
    std::ofstream f(out / "modal_negation.csv");
    evaluation::write_modal_csv(f, modal);
  }
  {
    std::ofstream f(out / "relations.csv");
    evaluation::write_relation_csv(f, relation);
  }
  {
    std::ofstream f(out / "xcomp.csv");
    evaluation::write_xcomp_csv(f, xcomp);
  }
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"predictions", flags.predictions}, {"n", records.size()}};
  for (const auto& r : modal) {
    j["modal_negation"].push_back({{"modal", r.modal}, {"negated", r.negated}, {"mean_gold", r.mean_gold},
                                   {"mae", opt(r.mae)}, {"n", r.n}});
  }
  for (const auto& r : relation) {
    j["relations"].push_back(
        {{"relation", r.deprel}, {"mean_gold", r.mean_gold}, {"mean_prediction", opt(r.mean_prediction)}, {"n", r.n}});
  }
  for (const auto& r : errors) {
    j["top_errors"].push_back({{"sentence_id", r.sentence_id}, {"token", r.token}, {"prediction", r.prediction},
                               {"gold", r.gold}, {"abs_error", r.abs_error}});
  }
  for (const auto& r : xcomp) {
    j["xcomp"].push_back({{"verb", r.verb}, {"mean_gold", r.mean_gold}, {"mae", opt(r.mae)}, {"n", r.n}});
  }
  pipeline::write_json(out / "report.json", j);

  std::cout << "Modal / negation\n";
  evaluation::write_modal_table(std::cout, modal);
  std::cout << "\nRelation of the predicate to its head\n";
  evaluation::write_relation_table(std::cout, relation);
  std::cout << "\nInfinitival complements\n";
  evaluation::write_xcomp_table(std::cout, xcomp);
  std::cout << "\nLargest absolute errors\n";
  evaluation::write_error_table(std::cout, errors);
  return kOk;
}

// ---- selftest ----

int cmd_selftest() {
  bool ok = true;
  selftest::run_all([&](const selftest::CheckResult& r) {
    ok = ok && r.passed;
    std::printf("%s  %-26s %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
  });
  return ok ? kOk : kNumericFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event factuality prediction: training, evaluation and analysis"};
  app.require_subcommand(1);

  CommonFlags common;
  EvalFlags eval;
  MineFlags mine;
  AggregateFlags aggregate;
  ReportFlags report;

  auto* train = app.add_subcommand("train", "Train a model; writes checkpoints, training.json and a manifest");
  common.add_to(train, true);

  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--run", eval.run, "Directory written by `train`")->required();
    sub->add_option("--split", eval.split, "train, dev or test");
    sub->add_option("--dataset", eval.datasets, "Restrict to these datasets");
    sub->add_option("--epoch", eval.epoch, "Pin an epoch instead of the best dev Pearson");
    sub->add_option("--out", eval.out, "Output directory (default: the run directory)");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Score the best checkpoint per dataset");
  add_eval(evaluate);
  evaluate->add_flag("--baseline", eval.baseline, "Also report the All-3.0 baseline");
  auto* predict = app.add_subcommand("predict", "Write per-predicate predictions as JSON lines");
  add_eval(predict);
  auto* calibrate = app.add_subcommand("calibrate", "Fit isotonic maps on the train split");
  add_eval(calibrate);

  auto* mine_cmd = app.add_subcommand("mine", "Mine tense-agreement scores from a text corpus");
  mine_cmd->add_option("--corpus", mine.corpus, "One sentence per line")->required();
  mine_cmd->add_option("--conjugations", mine.conjugations, "lemma/past/progressive/future table");
  mine_cmd->add_option("--min-count", mine.min_count, "Minimum decidable matches per verb");
  mine_cmd->add_option("--out", mine.out, "Output directory");

  auto* aggregate_cmd = app.add_subcommand("aggregate", "Aggregate raw annotations into factuality records");
  aggregate_cmd->add_option("--annotations", aggregate.annotations, "JSON-lines annotations")->required();
  aggregate_cmd->add_option("--split", aggregate.split, "Split tag for the records");
  aggregate_cmd->add_option("--out", aggregate.out, "Output directory");

  auto* report_cmd = app.add_subcommand("report", "Breakdown tables for a predictions file");
  report_cmd->add_option("--predictions", report.predictions, "Output of `predict`")->required();
  report_cmd->add_option("--config", common.config, "Run configuration naming the treebanks");
  report_cmd->add_option("--out", report.out, "Output directory");
  report_cmd->add_option("--top", report.top, "Number of largest errors to list");
  report_cmd->add_option("--relations", report.relations, "Number of relations to list");
  report_cmd->add_flag("--include-negated", report.include_negated, "Keep negated governors in the xcomp table");

  auto* self = app.add_subcommand("selftest", "Run the gradient checks and oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(common);
    if (*evaluate) return cmd_evaluate(eval);
    if (*predict) return cmd_predict(eval);
    if (*calibrate) return cmd_calibrate(eval);
    if (*mine_cmd) return cmd_mine(mine);
    if (*aggregate_cmd) return cmd_aggregate(aggregate);
    if (*report_cmd) return cmd_report(report, common);
    if (*self) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
