#include "tempie/extractor.h"

#include <json.hpp>

#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

using Json = nlohmann::ordered_json;

std::vector<std::string> phase1_labels(const std::string& klass) { return {"O", "B-" + klass, "I-" + klass}; }

namespace {

GraphFeatureConfig feature_config(const Phase1Model& model) { return {model.config.run, model.dictionaries}; }

std::vector<int> gold_labels(const Document& doc, const Weights& weights, const std::string& klass) {
  std::vector<int> gold;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    for (const Iob2Tag& tag : sentence_tags(doc, si, klass)) gold.push_back(weights.label_index(tag.str()));
  }
  return gold;
}

}  // namespace

Phase1Model train_phase1(std::span<const Document> corpus, const Phase1Config& config, TrainLog* log) {
  Phase1Model model{config, {}, Weights(phase1_labels(config.klass))};
  model.dictionaries.push_back(build_memorization_dict(corpus, kTimex3));
  model.dictionaries.push_back(build_memorization_dict(corpus, kEvent));
  const GraphFeatureConfig features = feature_config(model);
  std::vector<TrainingGraph> data;
  for (const Document& doc : corpus) {
    TrainingGraph tg;
    tg.graph = build_training_graph(doc, features, config.kind, config.skip_window, model.weights);
    tg.gold = gold_labels(doc, model.weights, config.klass);
    if (!tg.gold.empty()) data.push_back(std::move(tg));
  }
  if (config.kind == ModelKind::Skip) {
    model.weights = train_pseudolikelihood(data, std::move(model.weights), config.training, log);
  } else {
    model.weights = train_crf(data, std::move(model.weights), config.training, log);
  }
  return model;
}

std::vector<Span> tag_document(const Document& doc, const Phase1Model& model, std::optional<InferenceMode> inference) {
  const FactorGraph graph =
      build_graph(doc, feature_config(model), model.config.kind, model.config.skip_window, model.weights);
  const InferenceMode mode =
      inference.value_or(model.config.kind == ModelKind::Skip ? InferenceMode::Gibbs : InferenceMode::Exact);
  GibbsConfig gibbs = model.config.gibbs;
  gibbs.seed = derive_seed(gibbs.seed, doc.id);
  const std::vector<int> labels = predict(graph, model.weights, mode, gibbs);
  std::vector<Span> spans;
  std::size_t k = 0;
  for (const Sentence& s : doc.sentences) {
    TagSequence tags;
    for (std::size_t i = 0; i < s.size(); ++i) tags.push_back(Iob2Tag::parse(model.weights.labels[static_cast<std::size_t>(labels[k++])]));
    for (Span& span : decode_iob2(repair_iob2(tags), s.tokens)) spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<Document> tag_corpus(std::span<const Document> docs, const Phase1Model& model,
                                 std::optional<InferenceMode> inference) {
  std::vector<Document> out;
  out.reserve(docs.size());
  for (const Document& doc : docs) {
    Document tagged = doc;
    tagged.gold_spans = tag_document(doc, model, inference);
    out.push_back(std::move(tagged));
  }
  return out;
}

void save_phase1_model(const std::filesystem::path& dir, const Phase1Model& model) {
  const Phase1Config& c = model.config;
  Json manifest;
  manifest["format"] = "tempie-phase1";
  manifest["class"] = c.klass;
  manifest["run"] = static_cast<int>(c.run);
  manifest["kind"] = std::string(to_string(c.kind));
  manifest["skip_window"] = c.skip_window;
  manifest["training"] = {{"l2", c.training.l2},
                          {"epochs", c.training.epochs},
                          {"learning_rate", c.training.learning_rate},
                          {"seed", c.training.seed}};
  manifest["gibbs"] = {{"sweeps", c.gibbs.sweeps}, {"burn_in", c.gibbs.burn_in}, {"seed", c.gibbs.seed}};
  manifest["dictionaries"] = Json::array();
  for (const PhraseDictionary& d : model.dictionaries) {
    const std::string file = "dict-" + d.klass + ".tsv";
    manifest["dictionaries"].push_back({{"class", d.klass}, {"file", file}});
    write_file_atomic(dir / file, write_dictionary_tsv(d));
  }
  write_file_atomic(dir / "weights.tsv", write_weights_tsv(model.weights));
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Phase1Model load_phase1_model(const std::filesystem::path& dir) {
  Json manifest;
  try {
    manifest = Json::parse(read_file(dir / "manifest.json"));
  } catch (const Json::parse_error& e) {
    throw ConfigError("bad phase 1 manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "tempie-phase1") throw ConfigError(dir.string() + " is not a phase 1 model");
  Phase1Model model;
  try {
    Phase1Config& c = model.config;
    c.klass = manifest.at("class").get<std::string>();
    c.run = parse_feature_run(manifest.at("run").get<int>());
    c.kind = parse_model_kind(manifest.at("kind").get<std::string>());
    c.skip_window = manifest.at("skip_window").get<int>();
    const Json& t = manifest.at("training");
    c.training.l2 = t.at("l2").get<double>();
    c.training.epochs = t.at("epochs").get<int>();
    c.training.learning_rate = t.at("learning_rate").get<double>();
    c.training.seed = t.at("seed").get<std::uint64_t>();
    c.gibbs.sweeps = manifest.at("gibbs").at("sweeps").get<int>();
    c.gibbs.burn_in = manifest.at("gibbs").at("burn_in").get<int>();
    c.gibbs.seed = manifest.at("gibbs").at("seed").get<std::uint64_t>();
    for (const Json& d : manifest.at("dictionaries")) {
      model.dictionaries.push_back(
          read_dictionary_tsv(read_file(dir / d.at("file").get<std::string>()), d.at("class").get<std::string>()));
    }
  } catch (const Json::exception& e) {
    throw ConfigError("bad phase 1 manifest: " + std::string(e.what()));
  }
  model.weights = read_weights_tsv(read_file(dir / "weights.tsv"), phase1_labels(model.config.klass));
  return model;
}

}  // namespace tempie
