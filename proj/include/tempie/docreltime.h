#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/factorgraph.h"
#include "tempie/temporal.h"

namespace tempie {

/// Index into `timexes` of the mention whose midpoint is closest to the
/// event's midpoint; ties go to the earlier mention.
std::optional<std::size_t> nearest_timex3(const Span& event, std::span<const Span> timexes);

struct Phase2Config {
  DistantSupervisionConfig supervision;
  /// Log-potential added to a time mention's rule or distantly supervised label.
  double timex_prior = 5.0;
  TrainOptions unigram_training{.l2 = 1.0, .epochs = 10, .learning_rate = 0.1};
  TrainOptions skip_training{.l2 = 1.0, .epochs = 10, .learning_rate = 0.1};
  GibbsConfig gibbs{.sweeps = 1000, .burn_in = 100};
};

/// Event unigram weights and the event-by-time-mention label matrix (the
/// Skip block of `weights`), over labels Before, Overlap, Before/Overlap, After.
struct Phase2Model {
  Phase2Config config;
  Weights weights;
  PhraseAssociations associations;
};

std::vector<std::string> docreltime_labels();

/// Binary features of one event: bias, the event phrase, +-2 neighbouring
/// words, letter case, position of its sentence in the document and token
/// distance to the nearest time mention.
FeatureVector event_features(const Document& doc, std::span<const Token> tokens, const Span& event,
                             std::span<const Span> timexes);

/// The Phase 2 graph of one document. Variables 0..events-1 are the events
/// (in spans_of order), followed by one variable per time mention.
struct Phase2Graph {
  FactorGraph graph;
  std::vector<Span> events;
  std::vector<Span> timexes;
  std::vector<std::optional<DocRelTime>> timex_labels;
  /// Per event: index into `timexes` of its nearest time mention.
  std::vector<std::optional<std::size_t>> nearest;
};

Phase2Graph build_phase2_graph(const Document& doc, const Phase2Model& model);

/// Learns event unigram weights from gold labels, then the skip matrix by
/// pseudo-likelihood with time mentions clamped to their rule/DS labels.
/// Throws DataError if the corpus has no labeled events.
Phase2Model train_phase2(std::span<const Document> corpus, const Phase2Config& config, std::uint64_t seed,
                         TrainLog* unigram_log = nullptr, TrainLog* skip_log = nullptr);

enum class Phase2Mode { Lr, LrSkip };
Phase2Mode parse_phase2_mode(std::string_view name);
std::string_view to_string(Phase2Mode mode);

struct EventPrediction {
  Span event;
  DocRelTime label = DocRelTime::Before;
  bool operator==(const EventPrediction&) const = default;
};

/// One label per event of the document, in spans_of order.
std::vector<EventPrediction> predict_docreltime(const Document& doc, const Phase2Model& model, Phase2Mode mode);

struct DocumentPredictions {
  std::string doc_id;
  std::vector<EventPrediction> events;
};

/// Lines "doc_id TAB begin TAB end TAB label".
std::string write_predictions_tsv(std::span<const DocumentPredictions> predictions);
std::vector<DocumentPredictions> read_predictions_tsv(std::string_view text);

/// Writes manifest.json, weights.tsv and associations.tsv into `dir`.
void save_phase2_model(const std::filesystem::path& dir, const Phase2Model& model);
Phase2Model load_phase2_model(const std::filesystem::path& dir);

}  // namespace tempie
