#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/factorgraph.h"
#include "tempie/features.h"
#include "tempie/iob2.h"

namespace tempie {

/// Span extraction for one entity class with a factor-graph model.
struct Phase1Config {
  std::string klass{kTimex3};
  FeatureRun run = FeatureRun::Run2;
  ModelKind kind = ModelKind::Crf;
  int skip_window = 3;
  TrainOptions training;
  GibbsConfig gibbs;
};

struct Phase1Model {
  Phase1Config config;
  /// Memorization dictionaries (TIMEX3 then EVENT) built from the training set.
  std::vector<PhraseDictionary> dictionaries;
  /// Labels O, B-<class>, I-<class>.
  Weights weights;
};

std::vector<std::string> phase1_labels(const std::string& klass);

/// lr and crf train by SGD on the chain likelihood, skip by pseudo-likelihood.
Phase1Model train_phase1(std::span<const Document> corpus, const Phase1Config& config, TrainLog* log = nullptr);

/// Predicted spans of the model's class. By default lr and crf decode
/// exactly and skip takes Gibbs max-marginals seeded per document.
std::vector<Span> tag_document(const Document& doc, const Phase1Model& model,
                               std::optional<InferenceMode> inference = std::nullopt);

/// Copies of the documents whose gold spans are replaced by predictions.
std::vector<Document> tag_corpus(std::span<const Document> docs, const Phase1Model& model,
                                 std::optional<InferenceMode> inference = std::nullopt);

/// manifest.json, weights.tsv and one dictionary TSV per class.
void save_phase1_model(const std::filesystem::path& dir, const Phase1Model& model);
Phase1Model load_phase1_model(const std::filesystem::path& dir);

}  // namespace tempie
