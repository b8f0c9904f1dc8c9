#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"

namespace tempie {

/// Phrases labeled as an entity class at least half the time they occur.
struct PhraseDictionary {
  std::string klass;
  /// Normalized tokens joined by single spaces -> entity ratio (>= 0.5).
  std::map<std::string, double> entries;
  std::size_t max_length = 0;

  bool contains(const std::string& phrase) const { return entries.count(phrase) != 0; }
};

/// Candidates are the normalized token sequences seen at least once as a full
/// gold span of `klass`. A candidate is kept when the share of its occurrences
/// exactly covered by a gold `klass` span is at least one half.
PhraseDictionary build_memorization_dict(std::span<const Document> corpus, std::string_view klass);

std::string write_dictionary_tsv(const PhraseDictionary& dict);
PhraseDictionary read_dictionary_tsv(std::string_view text, std::string klass);

enum class DictFlag { None, Begin, Inside };

/// Greedy longest match, left to right, over already-normalized tokens.
std::vector<DictFlag> match_dictionary(std::span<const std::string> normalized, const PhraseDictionary& dict);

/// Feature ablation runs: 1 = dictionary + case, 2 = run 1 + word window,
/// 3 = run 2 + POS window.
enum class FeatureRun { Run1 = 1, Run2 = 2, Run3 = 3 };

FeatureRun parse_feature_run(int run);

/// Per-sentence values shared by every token's feature extraction.
struct SentenceContext {
  std::vector<std::string> surfaces;
  std::vector<std::string> normalized;
  /// One flag vector per dictionary, in dictionary order.
  std::vector<std::string> dict_classes;
  std::vector<std::vector<DictFlag>> dict_flags;
  std::optional<std::vector<std::string>> pos;
};

SentenceContext make_sentence_context(std::span<const Token> tokens, std::span<const PhraseDictionary> dicts,
                                      const std::vector<std::string>* pos);

/// "allcaps", "initcap", "lower", "mixed" or "nonalpha".
std::string_view letter_case(std::string_view surface);

/// Sorted, duplicate-free binary feature names.
using FeatureVector = std::vector<std::string>;

/// Feature names (offsets -2..+2, out-of-sentence offsets use <PAD>):
///   case.<shape>                              token letter case
///   dict.<class>.<offset>=<none|B|I|<PAD>>    dictionary membership
///   win.<offset>=<normalized word>            runs 2 and 3
///   pos.<offset>=<tag>                        run 3
/// with offsets named left2, left1, 0, right1, right2.
/// Throws ConfigError for run 3 when the context has no POS tags.
FeatureVector extract_features(const SentenceContext& sentence, std::size_t index, FeatureRun run);

}  // namespace tempie
