#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tempie/embeddings.h"

namespace tempie {

enum class TaggerTask { Tokenizer, Pos, Timex3, Event };
TaggerTask parse_tagger_task(std::string_view name);
std::string_view to_string(TaggerTask task);

struct Hyperparams {
  int hidden = 80;
  /// Context radius: the input window covers 2 * context + 1 units.
  int context = 2;
  double learning_rate = 0.01;
  int epochs = 10;
  std::uint64_t seed = 0;
  /// Embedding dimension.
  int dim = 100;
  /// Characters of neighbouring-sentence context (tokenizer only).
  int pad = 0;
  /// Epochs without held-out improvement before training stops.
  int patience = 5;
  bool operator==(const Hyperparams&) const = default;
};

/// Preset architecture for each tagger. dim is ignored for the tokenizer,
/// which always uses 16-dimensional character embeddings.
Hyperparams preset_config(TaggerTask task, int dim);

/// Elman network h(t) = logistic(U x(t) + V h(t-1)), y(t) = softmax(W h(t)),
/// where x(t) concatenates the embeddings of a (2c+1)-unit window.
struct RnnModel {
  Vocabulary vocab;
  VocabLevel level = VocabLevel::Word;
  EmbeddingTable table;
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::MatrixXd W;
  Eigen::VectorXd h0;
  int context = 2;
  std::vector<std::string> labels;

  int hidden() const { return static_cast<int>(V.rows()); }
  bool all_finite() const;
};

/// Weight matrices uniform in [-0.1, 0.1] / sqrt(fan-in); h0 zero.
RnnModel make_model(Vocabulary vocab, VocabLevel level, EmbeddingTable table, std::vector<std::string> labels,
                    int hidden, int context, std::uint64_t seed);

double logistic(double x);
/// Shifted by the maximum entry before exponentiating.
Eigen::VectorXd softmax(const Eigen::VectorXd& scores);

struct ForwardResult {
  std::vector<Eigen::VectorXd> hidden;
  std::vector<Eigen::VectorXd> probabilities;
};

ForwardResult forward(const RnnModel& model, std::span<const int> ids);

/// Summed cross-entropy. Throws std::invalid_argument on a length mismatch or
/// a gold index outside the label set.
double sequence_loss(std::span<const Eigen::VectorXd> probabilities, std::span<const int> gold);

struct Gradients {
  Eigen::MatrixXd U, V, W;
  Eigen::VectorXd h0;
  /// Only rows that appear in some input window.
  std::map<int, Eigen::VectorXd> embeddings;
  double loss = 0.0;
};

/// Exact gradients of sequence_loss by backpropagation through the whole sentence.
Gradients bptt_gradients(const RnnModel& model, std::span<const int> ids, std::span<const int> gold);

/// One plain gradient step on every parameter, embedding rows included.
void apply_gradients(RnnModel& model, const Gradients& grads, double learning_rate);

struct LabeledSequence {
  std::vector<int> ids;
  std::vector<int> gold;
};

struct TrainReport {
  /// Summed training loss of each epoch (accumulated during the epoch).
  std::vector<double> epoch_loss;
  /// Held-out score after each epoch (empty without a scorer).
  std::vector<double> dev_score;
  int best_epoch = 0;
};

using ModelScorer = std::function<double(const RnnModel&)>;

/// Per-sentence SGD over a seed-shuffled order each epoch. With a scorer the
/// best-scoring epoch's parameters are kept and training stops after
/// `patience` epochs without improvement. Throws DivergenceError on a
/// non-finite loss.
TrainReport train(RnnModel& model, std::span<const LabeledSequence> data, const Hyperparams& hp,
                  const ModelScorer& dev_scorer = {});

/// Per-position argmax (lowest label index on ties).
std::vector<int> predict_labels(const RnnModel& model, std::span<const int> ids);

struct SearchSpace {
  int min_hidden = 48, max_hidden = 384;
  int min_context = 2, max_context = 6;
  std::vector<double> learning_rates{0.001, 0.01, 0.1, 0.25};
  /// Character-level models also sample the embedding size and padding.
  bool char_level = false;
  std::vector<int> dims{16, 32};
  int min_pad = 0, max_pad = 5;
};

Hyperparams sample_hyperparams(const SearchSpace& space, const Hyperparams& base, std::uint64_t seed);

struct SearchTrial {
  Hyperparams params;
  double score = 0.0;
};

struct SearchResult {
  Hyperparams best;
  double best_score = 0.0;
  std::vector<SearchTrial> trials;
};

/// Samples `budget` configurations and keeps the highest `evaluate` score
/// (the first sampled wins ties). Throws std::invalid_argument if budget < 1.
SearchResult random_grid_search(const SearchSpace& space, int budget, const Hyperparams& base,
                                const std::function<double(const Hyperparams&)>& evaluate, std::uint64_t seed);

std::string model_to_json(const RnnModel& model);
RnnModel model_from_json(std::string_view text);
void save_rnn_model(const std::filesystem::path& path, const RnnModel& model);
RnnModel load_rnn_model(const std::filesystem::path& path);

}  // namespace tempie
