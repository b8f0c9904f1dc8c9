#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/iob2.h"

namespace tempie {

/// Precision is 1 with no predictions and recall is 1 with no gold items.
struct PrfScore {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;

  static PrfScore from_counts(long tp, long fp, long fn);
  PrfScore& operator+=(const PrfScore& other);
};

enum class MatchMode { Exact, Overlap };
MatchMode parse_match_mode(std::string_view name);
std::string_view to_string(MatchMode mode);

/// Exact mode matches identical (begin, end, class) triples. Overlap mode
/// greedily pairs same-class spans sharing at least one character, each span
/// used at most once. Throws ValidationError if gold spans of one class overlap.
PrfScore score_spans(std::span<const Span> gold, std::span<const Span> pred, MatchMode mode);

/// Scores spans of `klass` (all classes if empty) summed over documents
/// paired by id. Throws std::invalid_argument listing unpaired ids.
PrfScore score_corpus(std::span<const Document> gold, std::span<const Document> pred, std::string_view klass,
                      MatchMode mode);

struct LabelScores {
  PrfScore micro;
  std::map<std::string, PrfScore> per_class;
};

/// Single-label decisions keyed by item. Throws std::invalid_argument unless
/// both maps have the same keys.
LabelScores score_labels(const std::map<std::string, std::string>& gold, const std::map<std::string, std::string>& pred);

/// Per-position majority tag; ties give O. The result is repaired to valid IOB2.
/// Throws std::invalid_argument on length mismatch.
TagSequence ensemble_vote(std::span<const TagSequence> sequences);

struct ReportRow {
  std::string name;
  PrfScore score;
};

/// Aligned plain-text table with columns name, P, R, F1, TP, FP, FN.
std::string format_report_table(std::span<const ReportRow> rows);
/// The same rows as a JSON array of objects.
std::string format_report_json(std::span<const ReportRow> rows);

}  // namespace tempie
