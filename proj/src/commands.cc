#include "tempie/commands.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempie/corpus.h"
#include "tempie/docreltime.h"
#include "tempie/error.h"
#include "tempie/eval.h"
#include "tempie/extractor.h"
#include "tempie/rng.h"
#include "tempie/synthetic.h"
#include "tempie/tagger.h"

namespace tempie {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Logging (verbosity from TEMPIE_LOG: quiet, info or debug)

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level_from_env() {
  const char* raw = std::getenv("TEMPIE_LOG");
  const std::string v = raw ? raw : "";
  if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

class Logger {
 public:
  explicit Logger(std::ostream& sink) : sink_(sink), level_(log_level_from_env()) {}
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::Info) sink_ << "[tempie] " << msg << "\n";
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::Debug) sink_ << "[tempie:debug] " << msg << "\n";
  }

 private:
  std::ostream& sink_;
  LogLevel level_;
};

// ---------------------------------------------------------------------------
// Run configuration

struct CorpusSection {
  std::string train, dev, input, gold, predictions, format;
};

struct SynthSection {
  std::optional<int> documents;
  int test_documents = 0;
  Json spec;  // null, a path string or an inline generator spec
};

struct ModelSection {
  std::string path;
  std::string kind = "crf";
  std::string klass{kTimex3};
  int skip_window = 3;
  std::string embeddings;
  int dim = 100;
  std::string inference;
  std::string phase2_mode = "lr+skip";
};

struct TrainingSection {
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  double l2 = 1.0;
  std::optional<int> hidden, context, pad;
  int patience = 5;
  int budget = 10;
  int gibbs_sweeps = 1000;
  int gibbs_burn_in = 100;
  double timex_prior = 5.0;
  double min_confidence = 0.7;
  int min_support = 3;
  int proximity = 10;
};

struct EvalSection {
  std::string mode;
  std::string klass;
};

struct RunConfig {
  std::string task;
  std::uint64_t seed = 0;
  CorpusSection corpus;
  SynthSection synth;
  ModelSection model;
  TrainingSection training;
  EvalSection eval;
  std::string output_dir;
};

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_field(const Json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj[key].get<T>();
}

template <typename T>
void read_field(const Json& obj, const char* key, std::optional<T>& into) {
  if (obj.contains(key) && !obj[key].is_null()) into = obj[key].get<T>();
}

// Relative paths in a config file are taken relative to the file's directory.
std::string resolve_path(const std::string& value, const fs::path& base) {
  if (value.empty()) return value;
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

RunConfig parse_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  Json root;
  try {
    root = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  RunConfig c;
  try {
    check_keys(root, {"task", "seed", "corpus", "synth", "model", "training", "eval", "output"}, "config");
    read_field(root, "task", c.task);
    read_field(root, "seed", c.seed);
    if (root.contains("corpus")) {
      const Json& j = root["corpus"];
      check_keys(j, {"train", "dev", "input", "gold", "predictions", "format"}, "corpus");
      read_field(j, "train", c.corpus.train);
      read_field(j, "dev", c.corpus.dev);
      read_field(j, "input", c.corpus.input);
      read_field(j, "gold", c.corpus.gold);
      read_field(j, "predictions", c.corpus.predictions);
      read_field(j, "format", c.corpus.format);
    }
    if (root.contains("synth")) {
      const Json& j = root["synth"];
      check_keys(j, {"documents", "test_documents", "spec"}, "synth");
      read_field(j, "documents", c.synth.documents);
      read_field(j, "test_documents", c.synth.test_documents);
      if (j.contains("spec")) c.synth.spec = j["spec"];
    }
    if (root.contains("model")) {
      const Json& j = root["model"];
      check_keys(j, {"path", "kind", "class", "skip_window", "embeddings", "dim", "inference", "phase2_mode"}, "model");
      read_field(j, "path", c.model.path);
      read_field(j, "kind", c.model.kind);
      read_field(j, "class", c.model.klass);
      read_field(j, "skip_window", c.model.skip_window);
      read_field(j, "embeddings", c.model.embeddings);
      read_field(j, "dim", c.model.dim);
      read_field(j, "inference", c.model.inference);
      read_field(j, "phase2_mode", c.model.phase2_mode);
    }
    if (root.contains("training")) {
      const Json& j = root["training"];
      check_keys(j,
                 {"epochs", "learning_rate", "l2", "hidden", "context", "pad", "patience", "budget", "gibbs_sweeps",
                  "gibbs_burn_in", "timex_prior", "min_confidence", "min_support", "proximity"},
                 "training");
      TrainingSection& t = c.training;
      read_field(j, "epochs", t.epochs);
      read_field(j, "learning_rate", t.learning_rate);
      read_field(j, "l2", t.l2);
      read_field(j, "hidden", t.hidden);
      read_field(j, "context", t.context);
      read_field(j, "pad", t.pad);
      read_field(j, "patience", t.patience);
      read_field(j, "budget", t.budget);
      read_field(j, "gibbs_sweeps", t.gibbs_sweeps);
      read_field(j, "gibbs_burn_in", t.gibbs_burn_in);
      read_field(j, "timex_prior", t.timex_prior);
      read_field(j, "min_confidence", t.min_confidence);
      read_field(j, "min_support", t.min_support);
      read_field(j, "proximity", t.proximity);
    }
    if (root.contains("eval")) {
      const Json& j = root["eval"];
      check_keys(j, {"mode", "class"}, "eval");
      read_field(j, "mode", c.eval.mode);
      read_field(j, "class", c.eval.klass);
    }
    if (root.contains("output")) {
      const Json& j = root["output"];
      check_keys(j, {"dir"}, "output");
      read_field(j, "dir", c.output_dir);
    }
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  for (std::string* p : {&c.corpus.train, &c.corpus.dev, &c.corpus.input, &c.corpus.gold, &c.corpus.predictions,
                         &c.model.path, &c.model.embeddings, &c.output_dir}) {
    *p = resolve_path(*p, base);
  }
  if (c.synth.spec.is_string()) c.synth.spec = resolve_path(c.synth.spec.get<std::string>(), base);
  if (c.output_dir.empty()) c.output_dir = (base / "out").string();
  return c;
}

bool is_rnn_task(const std::string& task) {
  return task == "tokenize" || task == "pos" || task == "timex3" || task == "event";
}

std::optional<FeatureRun> crf_task_run(const std::string& task) {
  if (task == "crf-run1") return FeatureRun::Run1;
  if (task == "crf-run2") return FeatureRun::Run2;
  if (task == "crf-run3") return FeatureRun::Run3;
  return std::nullopt;
}

void check_task(const std::string& task) {
  if (task.empty()) throw UsageError("config has no task");
  if (!is_rnn_task(task) && !crf_task_run(task) && task != "phase2") {
    throw UsageError("unknown task '" + task +
                     "' (expected tokenize, pos, timex3, event, crf-run1, crf-run2, crf-run3 or phase2)");
  }
}

// Fills task-dependent defaults so the resolved config records every value used.
void resolve_defaults(RunConfig& c) {
  TrainingSection& t = c.training;
  if (is_rnn_task(c.task)) {
    const Hyperparams preset = preset_config(parse_tagger_task(c.task), c.model.dim);
    if (!t.learning_rate) t.learning_rate = preset.learning_rate;
    if (!t.hidden) t.hidden = preset.hidden;
    if (!t.context) t.context = preset.context;
    if (!t.pad) t.pad = preset.pad;
    if (c.task == "tokenize") c.model.dim = preset.dim;
  }
  if (!t.epochs) t.epochs = 10;
  if (!t.learning_rate) t.learning_rate = 0.1;
}

Json run_config_json(const RunConfig& c) {
  Json j;
  j["task"] = c.task;
  j["seed"] = c.seed;
  j["corpus"] = {{"train", c.corpus.train}, {"dev", c.corpus.dev},   {"input", c.corpus.input},
                 {"gold", c.corpus.gold},   {"predictions", c.corpus.predictions}, {"format", c.corpus.format}};
  j["synth"] = {{"documents", c.synth.documents ? Json(*c.synth.documents) : Json(nullptr)},
                {"test_documents", c.synth.test_documents},
                {"spec", c.synth.spec}};
  j["model"] = {{"path", c.model.path},     {"kind", c.model.kind},           {"class", c.model.klass},
                {"skip_window", c.model.skip_window}, {"embeddings", c.model.embeddings}, {"dim", c.model.dim},
                {"inference", c.model.inference},     {"phase2_mode", c.model.phase2_mode}};
  const TrainingSection& t = c.training;
  const auto opt = [](const auto& v) { return v ? Json(*v) : Json(nullptr); };
  j["training"] = {{"epochs", opt(t.epochs)},
                   {"learning_rate", opt(t.learning_rate)},
                   {"l2", t.l2},
                   {"hidden", opt(t.hidden)},
                   {"context", opt(t.context)},
                   {"pad", opt(t.pad)},
                   {"patience", t.patience},
                   {"budget", t.budget},
                   {"gibbs_sweeps", t.gibbs_sweeps},
                   {"gibbs_burn_in", t.gibbs_burn_in},
                   {"timex_prior", t.timex_prior},
                   {"min_confidence", t.min_confidence},
                   {"min_support", t.min_support},
                   {"proximity", t.proximity}};
  j["eval"] = {{"mode", c.eval.mode}, {"class", c.eval.klass}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

// ---------------------------------------------------------------------------
// Helpers

std::vector<Document> load_input(const std::string& path, const RunConfig& c, const char* what) {
  if (path.empty()) throw UsageError(std::string("config is missing the corpus path '") + what + "'");
  if (!fs::exists(path)) throw ConfigError(std::string("corpus file '") + path + "' (" + what + ") does not exist");
  const CorpusFormat format = c.corpus.format.empty() ? format_for_path(path) : parse_corpus_format(c.corpus.format);
  return load_corpus(path, format);
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

Json score_json(const PrfScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
}

std::string format_f1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Phase1Config phase1_config(const RunConfig& c, FeatureRun run) {
  Phase1Config p;
  p.klass = c.model.klass;
  p.run = run;
  p.kind = parse_model_kind(c.model.kind);
  p.skip_window = c.model.skip_window;
  p.training.l2 = c.training.l2;
  p.training.epochs = *c.training.epochs;
  p.training.learning_rate = *c.training.learning_rate;
  p.training.seed = derive_seed(c.seed, "phase1-order");
  p.gibbs = {c.training.gibbs_sweeps, c.training.gibbs_burn_in, derive_seed(c.seed, "phase1-gibbs")};
  return p;
}

Phase2Config phase2_config(const RunConfig& c) {
  Phase2Config p;
  p.supervision = {c.training.min_confidence, c.training.min_support, c.training.proximity};
  p.timex_prior = c.training.timex_prior;
  for (TrainOptions* o : {&p.unigram_training, &p.skip_training}) {
    o->l2 = c.training.l2;
    o->epochs = *c.training.epochs;
    o->learning_rate = *c.training.learning_rate;
  }
  p.gibbs = {c.training.gibbs_sweeps, c.training.gibbs_burn_in, derive_seed(c.seed, "phase2-gibbs")};
  return p;
}

Hyperparams rnn_hyperparams(const RunConfig& c) {
  Hyperparams hp = preset_config(parse_tagger_task(c.task), c.model.dim);
  hp.epochs = *c.training.epochs;
  hp.learning_rate = *c.training.learning_rate;
  hp.hidden = *c.training.hidden;
  hp.context = *c.training.context;
  hp.pad = *c.training.pad;
  hp.patience = c.training.patience;
  hp.seed = derive_seed(c.seed, "rnn");
  return hp;
}

std::map<std::string, std::string> event_label_map(std::span<const Document> docs) {
  std::map<std::string, std::string> out;
  for (const Document& d : docs) {
    for (const Span& e : d.spans_of(kEvent)) {
      if (!e.doc_rel_time) continue;
      out[d.id + ":" + std::to_string(e.begin) + ":" + std::to_string(e.end)] = std::string(to_string(*e.doc_rel_time));
    }
  }
  return out;
}

std::map<std::string, std::string> prediction_label_map(std::span<const DocumentPredictions> preds) {
  std::map<std::string, std::string> out;
  for (const DocumentPredictions& d : preds) {
    for (const EventPrediction& p : d.events) {
      out[d.doc_id + ":" + std::to_string(p.event.begin) + ":" + std::to_string(p.event.end)] =
          std::string(to_string(p.label));
    }
  }
  return out;
}

std::vector<DocumentPredictions> predict_corpus(std::span<const Document> docs, const Phase2Model& model,
                                                Phase2Mode mode) {
  std::vector<DocumentPredictions> out;
  for (const Document& d : docs) out.push_back({d.id, predict_docreltime(d, model, mode)});
  return out;
}

// Keeps only events with a gold label so scoring keys line up.
std::vector<DocumentPredictions> labeled_only(std::vector<DocumentPredictions> preds, std::span<const Document> docs) {
  const auto gold = event_label_map(docs);
  for (DocumentPredictions& d : preds) {
    std::erase_if(d.events, [&](const EventPrediction& p) {
      return !gold.count(d.doc_id + ":" + std::to_string(p.event.begin) + ":" + std::to_string(p.event.end));
    });
  }
  return preds;
}

Json read_manifest(const fs::path& dir) {
  const fs::path file = dir / "manifest.json";
  if (!fs::exists(file)) throw ConfigError("no model manifest at " + file.string());
  try {
    return Json::parse(read_file(file));
  } catch (const Json::parse_error& e) {
    throw ConfigError("bad model manifest " + file.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

int command_synth(const RunConfig& c, const fs::path& out_dir, std::ostream& out, const Logger& log) {
  GeneratorSpec spec = default_generator_spec();
  if (c.synth.spec.is_string()) {
    spec = generator_spec_from_json(read_file(c.synth.spec.get<std::string>()));
  } else if (c.synth.spec.is_object()) {
    spec = generator_spec_from_json(c.synth.spec.dump());
  } else if (!c.synth.spec.is_null()) {
    throw ConfigError("synth.spec must be a path or an object");
  }
  if (c.synth.documents) spec.documents = *c.synth.documents;
  if (c.synth.test_documents < 0) throw ConfigError("synth.test_documents must be non-negative");
  const int train_docs = spec.documents;
  spec.documents += c.synth.test_documents;
  log.info("generating " + std::to_string(spec.documents) + " documents");
  std::vector<Document> docs = generate_synthetic_corpus(spec, c.seed);
  std::vector<Document> test(docs.begin() + train_docs, docs.end());
  docs.resize(static_cast<std::size_t>(train_docs));
  save_corpus(out_dir / "corpus.json", docs, CorpusFormat::Json);
  save_corpus(out_dir / "corpus.conll", docs, CorpusFormat::Conll);
  if (!test.empty()) {
    save_corpus(out_dir / "test.json", test, CorpusFormat::Json);
    save_corpus(out_dir / "test.conll", test, CorpusFormat::Conll);
  }
  write_file_atomic(out_dir / "generator_spec.json", generator_spec_to_json(spec));
  out << "wrote " << docs.size() << " documents to " << (out_dir / "corpus.json").string();
  if (!test.empty()) out << " and " << test.size() << " to " << (out_dir / "test.json").string();
  out << "\n";
  return 0;
}

int command_train(const RunConfig& c, const fs::path& out_dir, std::ostream& out, const Logger& log) {
  check_task(c.task);
  const std::vector<Document> train = load_input(c.corpus.train, c, "train");
  if (train.empty()) throw DataError("training corpus is empty");
  const fs::path model_dir = out_dir / "model";
  Json train_log;
  train_log["task"] = c.task;
  train_log["epochs"] = Json::array();
  PrfScore train_score;

  if (is_rnn_task(c.task)) {
    const TaggerTask task = parse_tagger_task(c.task);
    const Hyperparams hp = rnn_hyperparams(c);
    std::vector<Document> dev;
    if (!c.corpus.dev.empty()) dev = load_input(c.corpus.dev, c, "dev");
    const fs::path embeddings(c.model.embeddings);
    RnnModel model = init_tagger(task, train, hp, c.model.embeddings.empty() ? nullptr : &embeddings);
    const auto sequences = task_sequences(model, task, train, hp.pad);
    ModelScorer scorer;
    if (!dev.empty()) scorer = [&](const RnnModel& m) { return evaluate_tagger(m, task, dev, hp.pad).f1; };
    const TrainReport report = tempie::train(model, sequences, hp, scorer);
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
      Json row{{"epoch", e + 1}, {"loss", report.epoch_loss[e]}};
      if (e < report.dev_score.size()) row["dev_f1"] = report.dev_score[e];
      train_log["epochs"].push_back(std::move(row));
    }
    train_log["best_epoch"] = report.best_epoch;
    save_rnn_model(model_dir / "rnn.json", model);
    write_json(model_dir / "manifest.json",
               Json{{"format", "tempie-rnn-tagger"}, {"task", c.task}, {"pad", hp.pad}, {"file", "rnn.json"}});
    train_score = evaluate_tagger(model, task, train, hp.pad);
  } else if (const auto run = crf_task_run(c.task)) {
    const Phase1Config config = phase1_config(c, *run);
    TrainLog tl;
    const Phase1Model model = train_phase1(train, config, &tl);
    for (std::size_t e = 0; e < tl.objective.size(); ++e) {
      log.debug("epoch " + std::to_string(e + 1) + " objective " + std::to_string(tl.objective[e]));
      train_log["epochs"].push_back({{"epoch", e + 1}, {"objective", tl.objective[e]}});
    }
    save_phase1_model(model_dir, model);
    train_score = score_corpus(train, tag_corpus(train, model), config.klass, MatchMode::Exact);
  } else {
    const Phase2Config config = phase2_config(c);
    TrainLog unigram_log, skip_log;
    const Phase2Model model = train_phase2(train, config, derive_seed(c.seed, "phase2"), &unigram_log, &skip_log);
    for (std::size_t e = 0; e < unigram_log.objective.size(); ++e) {
      train_log["epochs"].push_back({{"epoch", e + 1}, {"stage", "unigram"}, {"objective", unigram_log.objective[e]}});
    }
    for (std::size_t e = 0; e < skip_log.objective.size(); ++e) {
      train_log["epochs"].push_back({{"epoch", e + 1}, {"stage", "skip"}, {"objective", skip_log.objective[e]}});
    }
    save_phase2_model(model_dir, model);
    const Phase2Mode mode = parse_phase2_mode(c.model.phase2_mode);
    train_log["mode"] = std::string(to_string(mode));
    train_score = score_labels(event_label_map(train),
                               prediction_label_map(labeled_only(predict_corpus(train, model, mode), train)))
                      .micro;
  }
  train_log["train_score"] = score_json(train_score);
  write_json(out_dir / "train_log.json", train_log);
  out << "trained " << c.task << " model in " << model_dir.string() << "; training-set F1 " << format_f1(train_score.f1)
      << "\n";
  return 0;
}

int command_tag(const RunConfig& c, const fs::path& out_dir, const std::optional<std::string>& mode,
                std::ostream& out) {
  if (c.model.path.empty()) throw UsageError("config is missing model.path");
  const Json manifest = read_manifest(c.model.path);
  const std::string format = manifest.value("format", "");
  const std::vector<Document> input = load_input(c.corpus.input, c, "input");
  std::vector<Document> tagged;
  if (format == "tempie-phase1") {
    const Phase1Model model = load_phase1_model(c.model.path);
    const std::string m = mode.value_or(c.model.inference);
    std::optional<InferenceMode> inference;
    if (m == "exact") inference = InferenceMode::Exact;
    else if (m == "gibbs") inference = InferenceMode::Gibbs;
    else if (!m.empty()) throw ConfigError("unknown inference mode '" + m + "' (expected exact or gibbs)");
    tagged = tag_corpus(input, model, inference);
  } else if (format == "tempie-rnn-tagger") {
    const RnnModel model = load_rnn_model(fs::path(c.model.path) / manifest.at("file").get<std::string>());
    tagged = apply_tagger(model, parse_tagger_task(manifest.at("task").get<std::string>()), input);
  } else if (format == "tempie-phase2") {
    throw ConfigError("model at " + c.model.path + " is a phase 2 model; use the predict command");
  } else {
    throw ConfigError("unrecognized model format at " + c.model.path);
  }
  save_corpus(out_dir / "tagged.json", tagged, CorpusFormat::Json);
  out << "tagged " << tagged.size() << " documents into " << (out_dir / "tagged.json").string() << "\n";
  return 0;
}

int command_predict(const RunConfig& c, const fs::path& out_dir, const std::optional<std::string>& mode,
                    std::ostream& out) {
  if (c.model.path.empty()) throw UsageError("config is missing model.path");
  const Json manifest = read_manifest(c.model.path);
  if (manifest.value("format", "") != "tempie-phase2") {
    throw ConfigError("model at " + c.model.path + " is not a phase 2 model; use the tag command");
  }
  const Phase2Model model = load_phase2_model(c.model.path);
  const Phase2Mode m = parse_phase2_mode(mode.value_or(c.model.phase2_mode));
  const std::vector<Document> input = load_input(c.corpus.input, c, "input");
  const auto predictions = predict_corpus(input, model, m);
  write_file_atomic(out_dir / "predictions.tsv", write_predictions_tsv(predictions));
  out << "predicted DocRelTime for " << input.size() << " documents (" << to_string(m) << ") into "
      << (out_dir / "predictions.tsv").string() << "\n";
  return 0;
}

int command_eval(const RunConfig& c, const fs::path& out_dir, const std::optional<std::string>& mode,
                 std::ostream& out) {
  const std::vector<Document> gold = load_input(c.corpus.gold, c, "gold");
  if (c.corpus.predictions.empty()) throw UsageError("config is missing the corpus path 'predictions'");
  if (!fs::exists(c.corpus.predictions)) throw ConfigError("predictions file '" + c.corpus.predictions + "' does not exist");
  std::vector<ReportRow> rows;
  if (fs::path(c.corpus.predictions).extension() == ".tsv") {
    const auto preds = read_predictions_tsv(read_file(c.corpus.predictions));
    const LabelScores scores = score_labels(event_label_map(gold), prediction_label_map(preds));
    rows.push_back({"DocRelTime micro", scores.micro});
    for (const auto& [label, score] : scores.per_class) rows.push_back({"DocRelTime " + label, score});
  } else {
    const std::vector<Document> pred = load_input(c.corpus.predictions, c, "predictions");
    const std::string m = mode.value_or(c.eval.mode);
    std::vector<MatchMode> modes;
    if (m.empty() || m == "both") modes = {MatchMode::Exact, MatchMode::Overlap};
    else modes = {parse_match_mode(m)};
    std::set<std::string> classes;
    if (!c.eval.klass.empty()) {
      classes.insert(c.eval.klass);
    } else {
      for (const auto* docs : {&gold, &pred}) {
        for (const Document& d : *docs) {
          for (const Span& s : d.gold_spans) classes.insert(s.klass);
        }
      }
    }
    for (const std::string& k : classes) {
      for (MatchMode mm : modes) rows.push_back({k + " (" + std::string(to_string(mm)) + ")", score_corpus(gold, pred, k, mm)});
    }
  }
  const std::string table = format_report_table(rows), json = format_report_json(rows);
  write_file_atomic(out_dir / "report.txt", table);
  write_file_atomic(out_dir / "report.json", json);
  out << table << json;
  return 0;
}

int command_grid_search(const RunConfig& c, const fs::path& out_dir, std::ostream& out, const Logger& log) {
  check_task(c.task);
  if (!is_rnn_task(c.task)) throw UsageError("grid-search supports the RNN tasks (tokenize, pos, timex3, event)");
  const TaggerTask task = parse_tagger_task(c.task);
  std::vector<Document> train = load_input(c.corpus.train, c, "train");
  std::vector<Document> dev;
  if (!c.corpus.dev.empty()) {
    dev = load_input(c.corpus.dev, c, "dev");
  } else {
    // Hold out the last fifth of the training documents.
    const std::size_t keep = train.size() - train.size() / 5;
    dev.assign(train.begin() + static_cast<std::ptrdiff_t>(keep), train.end());
    train.resize(keep);
  }
  if (train.empty() || dev.empty()) throw DataError("grid search needs non-empty training and held-out sets");
  SearchSpace space;
  space.char_level = task == TaggerTask::Tokenizer;
  const Hyperparams base = rnn_hyperparams(c);
  const fs::path embeddings(c.model.embeddings);
  int trial = 0;
  const auto evaluate = [&](const Hyperparams& hp) {
    RnnModel model = init_tagger(task, train, hp, c.model.embeddings.empty() ? nullptr : &embeddings);
    const auto sequences = task_sequences(model, task, train, hp.pad);
    tempie::train(model, sequences, hp);
    const double f1 = evaluate_tagger(model, task, dev, hp.pad).f1;
    log.info("trial " + std::to_string(++trial) + ": hidden " + std::to_string(hp.hidden) + ", context " +
             std::to_string(hp.context) + ", lr " + std::to_string(hp.learning_rate) + " -> F1 " + format_f1(f1));
    return f1;
  };
  const SearchResult result = random_grid_search(space, c.training.budget, base, evaluate, derive_seed(c.seed, "search"));
  const auto hp_json = [](const Hyperparams& hp) {
    return Json{{"hidden", hp.hidden}, {"context", hp.context}, {"learning_rate", hp.learning_rate},
                {"dim", hp.dim},       {"pad", hp.pad},         {"epochs", hp.epochs}};
  };
  Json j;
  j["task"] = c.task;
  j["trials"] = Json::array();
  for (const SearchTrial& t : result.trials) {
    Json row = hp_json(t.params);
    row["f1"] = t.score;
    j["trials"].push_back(std::move(row));
  }
  j["best"] = hp_json(result.best);
  j["best"]["f1"] = result.best_score;
  write_json(out_dir / "search.json", j);
  out << "best of " << result.trials.size() << " trials: hidden " << result.best.hidden << ", context "
      << result.best.context << ", learning rate " << result.best.learning_rate << ", F1 "
      << format_f1(result.best_score) << "\n";
  return 0;
}

}  // namespace

int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  try {
    static const std::set<std::string> kCommands = {"synth", "train", "tag", "predict", "eval", "grid-search"};
    if (!kCommands.count(options.command)) throw UsageError("unknown command '" + options.command + "'");
    if (options.config.empty()) throw UsageError("--config is required");
    RunConfig config = parse_run_config(options.config);
    if (options.seed) config.seed = *options.seed;
    if (options.out) config.output_dir = fs::absolute(*options.out).lexically_normal().string();
    if (options.command == "train" || options.command == "grid-search") {
      check_task(config.task);
      resolve_defaults(config);
    }
    if (options.mode) {
      if (options.command == "eval") config.eval.mode = *options.mode;
      if (options.command == "predict") config.model.phase2_mode = *options.mode;
      if (options.command == "tag") config.model.inference = *options.mode;
    }
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    write_json(out_dir / ("resolved_config." + options.command + ".json"), run_config_json(config));
    log.debug("resolved config written to " + out_dir.string());
    if (options.command == "synth") return command_synth(config, out_dir, out, log);
    if (options.command == "train") return command_train(config, out_dir, out, log);
    if (options.command == "tag") return command_tag(config, out_dir, options.mode, out);
    if (options.command == "predict") return command_predict(config, out_dir, options.mode, out);
    if (options.command == "eval") return command_eval(config, out_dir, options.mode, out);
    return command_grid_search(config, out_dir, out, log);
  } catch (const UsageError& e) {
    err << "tempie: usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "tempie: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "tempie: error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Temporal information extraction: RNN taggers, factor-graph extractors and DocRelTime classification"};
  app.require_subcommand(1);
  CommandOptions options;
  std::string config, out, mode;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Generate a synthetic annotated corpus"},
      {"train", "Train a model for the configured task"},
      {"tag", "Annotate a corpus with a trained span or RNN model"},
      {"predict", "Predict event DocRelTime labels with a phase 2 model"},
      {"eval", "Score predictions against gold annotations"},
      {"grid-search", "Random hyperparameter search for an RNN tagger"},
  };
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--mode", mode, "eval: exact|overlap|both; predict: lr|lr+skip; tag: exact|gibbs");
    subs.emplace_back(sub, name);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (const auto& [sub, name] : subs) {
    if (!sub->parsed()) continue;
    options.command = name;
    options.config = config;
    if (sub->count("--seed")) options.seed = seed;
    if (sub->count("--out")) options.out = out;
    if (sub->count("--mode")) options.mode = mode;
  }
  return run_command(options, std::cout, std::cerr);
}

}  // namespace tempie
