#include "tempie/docreltime.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tempie/embeddings.h"
#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

using Json = nlohmann::ordered_json;

std::optional<std::size_t> nearest_timex3(const Span& event, std::span<const Span> timexes) {
  std::optional<std::size_t> best;
  // Twice the midpoint keeps the arithmetic in integers.
  const long long mid = static_cast<long long>(event.begin) + event.end;
  long long best_distance = std::numeric_limits<long long>::max();
  for (std::size_t i = 0; i < timexes.size(); ++i) {
    const long long d = std::llabs(static_cast<long long>(timexes[i].begin) + timexes[i].end - mid);
    const bool earlier = best && timexes[i].begin < timexes[*best].begin;
    if (!best || d < best_distance || (d == best_distance && earlier)) {
      best = i;
      best_distance = d;
    }
  }
  return best;
}

std::vector<std::string> docreltime_labels() {
  std::vector<std::string> labels;
  for (int k = 0; k < kNumDocRelTime; ++k) labels.emplace_back(to_string(static_cast<DocRelTime>(k)));
  return labels;
}

namespace {

// Document-level token indices touched by a span (first, last).
std::pair<std::size_t, std::size_t> covered_tokens(std::span<const Token> tokens, const Span& span) {
  if (const auto r = token_range(tokens, span)) return *r;
  std::size_t first = 0;
  while (first + 1 < tokens.size() && tokens[first].end <= span.begin) ++first;
  std::size_t last = first;
  while (last + 1 < tokens.size() && tokens[last + 1].begin < span.end) ++last;
  return {first, last};
}

std::size_t token_gap(std::pair<std::size_t, std::size_t> a, std::pair<std::size_t, std::size_t> b) {
  if (a.second < b.first) return b.first - a.second;
  if (b.second < a.first) return a.first - b.second;
  return 0;
}

std::string distance_bucket(std::size_t gap) {
  if (gap <= 3) return "0-3";
  if (gap <= 7) return "4-7";
  if (gap <= 15) return "8-15";
  return "16+";
}

}  // namespace

FeatureVector event_features(const Document& doc, std::span<const Token> tokens, const Span& event,
                             std::span<const Span> timexes) {
  FeatureVector out{"bias"};
  if (tokens.empty()) return out;
  const auto range = covered_tokens(tokens, event);

  // Sentence of the event and the document-level index range of that sentence.
  std::size_t sentence = 0, sentence_first = 0;
  for (std::size_t si = 0, offset = 0; si < doc.sentences.size(); offset += doc.sentences[si].size(), ++si) {
    if (range.first < offset + doc.sentences[si].size()) {
      sentence = si;
      sentence_first = offset;
      break;
    }
  }
  const std::size_t sentence_last = sentence_first + doc.sentences[sentence].size() - 1;

  out.push_back("phrase=" + mention_phrase(doc, tokens, event));
  out.push_back("case." + std::string(letter_case(tokens[range.first].surface)));
  const auto word_at = [&](std::ptrdiff_t index) -> std::string {
    if (index < static_cast<std::ptrdiff_t>(sentence_first) || index > static_cast<std::ptrdiff_t>(sentence_last)) {
      return std::string(kPadToken);
    }
    return normalize_word(tokens[static_cast<std::size_t>(index)].surface);
  };
  const auto first = static_cast<std::ptrdiff_t>(range.first), last = static_cast<std::ptrdiff_t>(range.second);
  out.push_back("win.left2=" + word_at(first - 2));
  out.push_back("win.left1=" + word_at(first - 1));
  out.push_back("win.right1=" + word_at(last + 1));
  out.push_back("win.right2=" + word_at(last + 2));
  out.push_back("section.q" + std::to_string(4 * sentence / doc.sentences.size()));
  if (const auto near = nearest_timex3(event, timexes)) {
    out.push_back("dist." + distance_bucket(token_gap(range, covered_tokens(tokens, timexes[*near]))));
  } else {
    out.push_back("dist.none");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

template <typename FeatureId>
Phase2Graph build_graph_impl(const Document& doc, const Phase2Model& model, FeatureId feature_id) {
  Phase2Graph g;
  g.events = doc.spans_of(kEvent);
  g.timexes = doc.spans_of(kTimex3);
  g.timex_labels = label_document_timex3(doc, model.associations, model.config.supervision.min_confidence,
                                         model.config.supervision.min_support);
  const std::vector<Token> tokens = flat_tokens(doc);
  const int events = static_cast<int>(g.events.size());
  for (int e = 0; e < events; ++e) {
    g.graph.variables.push_back(LabelVariable{kNumDocRelTime, Anchor{0, 0, e}});
    Factor unigram{FactorKind::Unigram, e, -1, {}, {}};
    for (const std::string& name : event_features(doc, tokens, g.events[static_cast<std::size_t>(e)], g.timexes)) {
      const int id = feature_id(name);
      if (id >= 0) unigram.features.push_back(id);
    }
    g.graph.factors.push_back(std::move(unigram));
  }
  for (std::size_t t = 0; t < g.timexes.size(); ++t) {
    const int var = static_cast<int>(g.graph.variables.size());
    g.graph.variables.push_back(LabelVariable{kNumDocRelTime, Anchor{0, 0, var}});
    if (g.timex_labels[t]) {
      std::vector<double> offsets(kNumDocRelTime, 0.0);
      offsets[static_cast<std::size_t>(*g.timex_labels[t])] = model.config.timex_prior;
      g.graph.factors.push_back(Factor{FactorKind::Unigram, var, -1, {}, std::move(offsets)});
    }
  }
  for (int e = 0; e < events; ++e) {
    const auto near = nearest_timex3(g.events[static_cast<std::size_t>(e)], g.timexes);
    g.nearest.push_back(near);
    if (near) g.graph.factors.push_back(Factor{FactorKind::Skip, e, events + static_cast<int>(*near), {}, {}});
  }
  return g;
}

}  // namespace

Phase2Graph build_phase2_graph(const Document& doc, const Phase2Model& model) {
  return build_graph_impl(doc, model, [&](const std::string& name) { return model.weights.features.lookup(name); });
}

Phase2Model train_phase2(std::span<const Document> corpus, const Phase2Config& config, std::uint64_t seed,
                         TrainLog* unigram_log, TrainLog* skip_log) {
  Phase2Model model{config, Weights(docreltime_labels()), {}};
  model.associations = learn_phrase_associations(corpus, config.supervision.proximity);

  // Stage 1: event unigram weights from gold labels (one variable per event).
  std::vector<TrainingGraph> unigram_data;
  for (const Document& doc : corpus) {
    Phase2Graph g = build_graph_impl(doc, model, [&](const std::string& name) { return model.weights.features.intern(name); });
    TrainingGraph tg;
    for (std::size_t e = 0; e < g.events.size(); ++e) {
      if (!g.events[e].doc_rel_time) continue;
      Factor f = g.graph.factors[e];
      f.a = static_cast<int>(tg.graph.variables.size());
      tg.graph.variables.push_back(g.graph.variables[e]);
      tg.graph.factors.push_back(std::move(f));
      tg.gold.push_back(static_cast<int>(*g.events[e].doc_rel_time));
    }
    if (!tg.gold.empty()) unigram_data.push_back(std::move(tg));
  }
  if (unigram_data.empty()) throw DataError("phase 2 training needs events with gold DocRelTime labels");
  model.weights.sync_features();
  TrainOptions unigram_options = config.unigram_training;
  unigram_options.seed = derive_seed(seed, "phase2-unigram");
  unigram_options.train_pairwise = false;
  model.weights = train_crf(unigram_data, std::move(model.weights), unigram_options, unigram_log);

  // Stage 2: the event/time-mention label matrix, time mentions clamped.
  std::vector<TrainingGraph> skip_data;
  for (const Document& doc : corpus) {
    Phase2Graph g = build_phase2_graph(doc, model);
    const std::size_t events = g.events.size();
    TrainingGraph tg;
    tg.graph.variables = g.graph.variables;
    tg.gold.assign(g.graph.variables.size(), 0);
    tg.targets.assign(g.graph.variables.size(), 0);
    for (const Factor& f : g.graph.factors) {
      if (f.kind == FactorKind::Unigram) {
        if (static_cast<std::size_t>(f.a) < events) tg.graph.factors.push_back(f);
        continue;
      }
      const auto e = static_cast<std::size_t>(f.a);
      const auto t = static_cast<std::size_t>(f.b) - events;
      if (!g.events[e].doc_rel_time || !g.timex_labels[t]) continue;
      tg.graph.factors.push_back(f);
      tg.gold[e] = static_cast<int>(*g.events[e].doc_rel_time);
      tg.gold[static_cast<std::size_t>(f.b)] = static_cast<int>(*g.timex_labels[t]);
      tg.targets[e] = 1;
    }
    if (std::find(tg.targets.begin(), tg.targets.end(), 1) != tg.targets.end()) skip_data.push_back(std::move(tg));
  }
  if (!skip_data.empty()) {
    TrainOptions skip_options = config.skip_training;
    skip_options.seed = derive_seed(seed, "phase2-skip");
    skip_options.train_unigram = false;
    model.weights = train_pseudolikelihood(skip_data, std::move(model.weights), skip_options, skip_log);
  }
  return model;
}

Phase2Mode parse_phase2_mode(std::string_view name) {
  if (name == "lr") return Phase2Mode::Lr;
  if (name == "lr+skip" || name == "lr-skip") return Phase2Mode::LrSkip;
  throw ConfigError("unknown phase 2 mode '" + std::string(name) + "' (expected lr or lr+skip)");
}

std::string_view to_string(Phase2Mode mode) { return mode == Phase2Mode::Lr ? "lr" : "lr+skip"; }

std::vector<EventPrediction> predict_docreltime(const Document& doc, const Phase2Model& model, Phase2Mode mode) {
  const Phase2Graph g = build_phase2_graph(doc, model);
  std::vector<EventPrediction> out;
  if (g.events.empty()) return out;
  std::vector<std::vector<double>> beliefs;
  if (mode == Phase2Mode::LrSkip && !g.timexes.empty()) {
    GibbsConfig gibbs = model.config.gibbs;
    gibbs.seed = derive_seed(gibbs.seed, doc.id);
    beliefs = gibbs_marginals(g.graph, model.weights, gibbs);
  } else {
    for (std::size_t e = 0; e < g.events.size(); ++e) {
      beliefs.push_back(unary_scores(g.graph, static_cast<int>(e), model.weights));
    }
  }
  for (std::size_t e = 0; e < g.events.size(); ++e) {
    const auto& b = beliefs[e];
    const auto best = static_cast<int>(std::max_element(b.begin(), b.end()) - b.begin());
    out.push_back(EventPrediction{g.events[e], static_cast<DocRelTime>(best)});
  }
  return out;
}

std::string write_predictions_tsv(std::span<const DocumentPredictions> predictions) {
  std::string out;
  for (const DocumentPredictions& doc : predictions) {
    for (const EventPrediction& p : doc.events) {
      out += doc.doc_id + "\t" + std::to_string(p.event.begin) + "\t" + std::to_string(p.event.end) + "\t" +
             std::string(to_string(p.label)) + "\n";
    }
  }
  return out;
}

std::vector<DocumentPredictions> read_predictions_tsv(std::string_view text) {
  std::vector<DocumentPredictions> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cols.push_back(line.substr(start, tab - start));
    }
    cols.push_back(line.substr(start));
    if (cols.size() != 4) throw ParseError(line_no, "expected 4 tab-separated columns");
    EventPrediction p;
    try {
      p.event = Span{std::stoi(cols[1]), std::stoi(cols[2]), std::string(kEvent), std::nullopt};
      p.label = parse_doc_rel_time(cols[3]);
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (out.empty() || out.back().doc_id != cols[0]) out.push_back(DocumentPredictions{cols[0], {}});
    out.back().events.push_back(p);
  }
  return out;
}

namespace {

Json options_json(const TrainOptions& o) {
  return Json{{"l2", o.l2}, {"epochs", o.epochs}, {"learning_rate", o.learning_rate}, {"seed", o.seed}};
}

TrainOptions options_from_json(const Json& j) {
  TrainOptions o;
  o.l2 = j.at("l2").get<double>();
  o.epochs = j.at("epochs").get<int>();
  o.learning_rate = j.at("learning_rate").get<double>();
  o.seed = j.at("seed").get<std::uint64_t>();
  return o;
}

}  // namespace

void save_phase2_model(const std::filesystem::path& dir, const Phase2Model& model) {
  const Phase2Config& c = model.config;
  Json manifest;
  manifest["format"] = "tempie-phase2";
  manifest["labels"] = model.weights.labels;
  manifest["supervision"] = {{"min_confidence", c.supervision.min_confidence},
                             {"min_support", c.supervision.min_support},
                             {"proximity", c.supervision.proximity}};
  manifest["timex_prior"] = c.timex_prior;
  manifest["unigram_training"] = options_json(c.unigram_training);
  manifest["skip_training"] = options_json(c.skip_training);
  manifest["gibbs"] = {{"sweeps", c.gibbs.sweeps}, {"burn_in", c.gibbs.burn_in}, {"seed", c.gibbs.seed}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file_atomic(dir / "weights.tsv", write_weights_tsv(model.weights));
  write_file_atomic(dir / "associations.tsv", write_associations_tsv(model.associations));
}

Phase2Model load_phase2_model(const std::filesystem::path& dir) {
  Json manifest;
  try {
    manifest = Json::parse(read_file(dir / "manifest.json"));
  } catch (const Json::parse_error& e) {
    throw CorpusError("bad phase 2 manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "tempie-phase2") throw ConfigError(dir.string() + " is not a phase 2 model");
  Phase2Model model;
  try {
    Phase2Config& c = model.config;
    c.supervision.min_confidence = manifest.at("supervision").at("min_confidence").get<double>();
    c.supervision.min_support = manifest.at("supervision").at("min_support").get<int>();
    c.supervision.proximity = manifest.at("supervision").at("proximity").get<int>();
    c.timex_prior = manifest.at("timex_prior").get<double>();
    c.unigram_training = options_from_json(manifest.at("unigram_training"));
    c.skip_training = options_from_json(manifest.at("skip_training"));
    c.gibbs.sweeps = manifest.at("gibbs").at("sweeps").get<int>();
    c.gibbs.burn_in = manifest.at("gibbs").at("burn_in").get<int>();
    c.gibbs.seed = manifest.at("gibbs").at("seed").get<std::uint64_t>();
    model.weights = read_weights_tsv(read_file(dir / "weights.tsv"), manifest.at("labels").get<std::vector<std::string>>());
  } catch (const Json::exception& e) {
    throw ConfigError("bad phase 2 manifest: " + std::string(e.what()));
  }
  model.associations = read_associations_tsv(read_file(dir / "associations.tsv"));
  return model;
}

}  // namespace tempie
