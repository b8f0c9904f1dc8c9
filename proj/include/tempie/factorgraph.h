#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/features.h"

namespace tempie {

enum class FactorKind { Unigram, Transition, Skip, Equality };
enum class ModelKind { Lr, Crf, Skip };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

class ModelKindError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Where a label variable sits in the corpus.
struct Anchor {
  int document = 0;
  int sentence = 0;
  int token = 0;
};

struct LabelVariable {
  int domain_size = 0;
  Anchor anchor;
};

/// A unigram factor scores one variable from its active features plus
/// optional fixed per-label offsets; pairwise factors score a label pair
/// through the weight matrix of their kind, indexed [label(a)][label(b)].
struct Factor {
  FactorKind kind = FactorKind::Unigram;
  int a = 0;
  int b = -1;
  std::vector<int> features;
  std::vector<double> offsets;
};

/// Interned feature names.
class FeatureIndex {
 public:
  /// -1 when absent.
  int lookup(std::string_view name) const;
  int intern(const std::string& name);
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

/// Log-linear parameters shared by every factor of a kind, stored flat as
/// [transition | skip | equality | unigram]. Each pairwise block is L x L
/// row-major; the unigram block is feature-major (feature * L + label) and
/// grows at the end as features are interned.
struct Weights {
  std::vector<std::string> labels;
  FeatureIndex features;
  std::vector<double> params;

  Weights() = default;
  explicit Weights(std::vector<std::string> label_names);

  int num_labels() const { return static_cast<int>(labels.size()); }
  /// -1 when absent.
  int label_index(std::string_view name) const;

  std::size_t pair_offset(FactorKind kind) const;
  std::size_t pair_index(FactorKind kind, int la, int lb) const {
    return pair_offset(kind) + static_cast<std::size_t>(la * num_labels() + lb);
  }
  std::size_t unary_offset() const { return 3 * labels.size() * labels.size(); }
  std::size_t unary_index(int feature, int label) const {
    return unary_offset() + static_cast<std::size_t>(feature) * labels.size() + static_cast<std::size_t>(label);
  }

  double unary(int feature, int label) const { return params[unary_index(feature, label)]; }
  double pair(FactorKind kind, int la, int lb) const { return params[pair_index(kind, la, lb)]; }
  double& pair(FactorKind kind, int la, int lb) { return params[pair_index(kind, la, lb)]; }

  /// Grows the unigram block to cover every interned feature (new entries zero).
  void sync_features();

  double squared_norm() const;
  bool all_finite() const;
};

/// Sorted "key TAB value" lines. Keys: U|label|feature, T|a|b, S|a|b, E|a|b.
std::string write_weights_tsv(const Weights& weights);
/// `labels` fixes the label order; every key must use those labels.
Weights read_weights_tsv(std::string_view text, std::vector<std::string> labels);

struct FactorGraph {
  std::vector<LabelVariable> variables;
  std::vector<Factor> factors;

  bool has_kind(FactorKind kind) const;
  /// Factor ids touching each variable.
  std::vector<std::vector<int>> incident() const;
  /// Throws std::invalid_argument on dangling scopes or non-adjacent transitions.
  void validate() const;
};

double log_potential(const Factor& factor, std::span<const int> assignment, const Weights& weights);

/// Per-label unigram log-potentials of one variable (sum over its unigram factors).
std::vector<double> unary_scores(const FactorGraph& graph, int variable, const Weights& weights);

struct Marginals {
  std::vector<std::vector<double>> probabilities;
  double log_partition = 0.0;
};

/// Exact inference over chains. Transition factors must join consecutive
/// variables (b == a + 1); variables not joined form separate chains.
/// Throws ModelKindError if the graph has skip or equality factors.
Marginals forward_backward(const FactorGraph& graph, const Weights& weights);

/// MAP assignment over chains. Among tied maxima the result has the lowest
/// label at the latest position where tied assignments differ.
std::vector<int> viterbi(const FactorGraph& graph, const Weights& weights);

/// Exhaustive enumeration (test oracle). Throws SizeError beyond 10^6 states.
Marginals brute_force_marginals(const FactorGraph& graph, const Weights& weights);
/// Highest-scoring assignment by enumeration, same tie rule as viterbi.
std::vector<int> brute_force_argmax(const FactorGraph& graph, const Weights& weights);

struct GibbsConfig {
  int sweeps = 1000;
  int burn_in = 100;
  std::uint64_t seed = 0;
};

/// Systematic-scan Gibbs sampling. After burn-in each sweep adds every
/// variable's full conditional distribution to its estimate (Rao-Blackwellized).
std::vector<std::vector<double>> gibbs_marginals(const FactorGraph& graph, const Weights& weights,
                                                 const GibbsConfig& config);

/// A graph with its gold assignment. `targets` selects the variables that
/// contribute pseudo-likelihood terms; empty means all.
struct TrainingGraph {
  FactorGraph graph;
  std::vector<int> gold;
  std::vector<char> targets;
};

struct TrainOptions {
  double l2 = 1.0;
  int epochs = 10;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  bool train_unigram = true;
  bool train_pairwise = true;
};

struct TrainLog {
  std::vector<double> objective;
};

/// Conditional log-likelihood of chain graphs minus (l2 / 2) * ||w||^2.
/// Fills `gradient` (Weights::params layout) when non-null.
double crf_objective(std::span<const TrainingGraph> data, const Weights& weights, double l2,
                     std::vector<double>* gradient);

/// Sum over target variables of log P(y_i | gold neighbours) minus the L2 term.
double pseudolikelihood_objective(std::span<const TrainingGraph> data, const Weights& weights, double l2,
                                  std::vector<double>* gradient);

/// SGD on crf_objective, one chain (sentence) per step, seed-shuffled order.
/// Throws DivergenceError on a non-finite objective.
Weights train_crf(std::span<const TrainingGraph> data, Weights init, const TrainOptions& options,
                  TrainLog* log = nullptr);

/// SGD on pseudolikelihood_objective, one graph per step.
Weights train_pseudolikelihood(std::span<const TrainingGraph> data, Weights init, const TrainOptions& options,
                               TrainLog* log = nullptr);

/// Splits a graph into its chain components (variables linked by transition
/// factors), keeping only unigram and transition factors.
std::vector<TrainingGraph> split_chains(const TrainingGraph& graph);

enum class InferenceMode { Exact, Gibbs };

/// Exact: viterbi. Gibbs: per-variable argmax of gibbs_marginals (lowest
/// label on ties).
std::vector<int> predict(const FactorGraph& graph, const Weights& weights, InferenceMode mode,
                         const GibbsConfig& gibbs = {});

struct GraphFeatureConfig {
  FeatureRun run = FeatureRun::Run2;
  std::vector<PhraseDictionary> dictionaries;
};

/// One variable per token with a unigram factor over its features; crf adds
/// transitions between adjacent tokens of a sentence; skip also links every
/// pair of tokens with identical normalized surface whose sentences are at
/// most `skip_window` apart. Unknown features are dropped.
FactorGraph build_graph(const Document& doc, const GraphFeatureConfig& config, ModelKind kind, int skip_window,
                        const Weights& weights);
/// As build_graph, interning previously unseen features into `weights`.
FactorGraph build_training_graph(const Document& doc, const GraphFeatureConfig& config, ModelKind kind,
                                 int skip_window, Weights& weights);

}  // namespace tempie
