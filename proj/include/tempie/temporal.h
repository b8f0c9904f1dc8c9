#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/date.h"

namespace tempie {

/// A date as written, possibly missing its year, month or day.
struct PartialDate {
  std::optional<int> year;
  std::optional<int> month;
  std::optional<int> day;

  bool operator==(const PartialDate&) const = default;
};

/// Recognized forms (case-insensitive, whole expression): M/D/YY, M/D/YYYY,
/// YYYY-MM-DD, D-Mon-YYYY, MonthName D[, YYYY], MonthName YYYY and a bare
/// YYYY in 1900-2099. Two-digit years pivot at 29: 00-29 -> 20xx, 30-99 -> 19xx.
std::optional<PartialDate> parse_date_expression(std::string_view text);

/// Fills a missing year from the last entry of `preceding` (document order),
/// else from the doctime; missing month and day default to 1 and an
/// out-of-range day is clamped to the end of its month.
Date resolve_partial_date(const PartialDate& date, std::span<const Date> preceding, const Date& doctime);

/// Before the doctime -> Before; inside [doctime, last revision] -> Overlap;
/// later -> After. Never yields Before/Overlap.
DocRelTime classify_date_docreltime(const Date& date, const Date& doctime, std::span<const Date> revisions);

struct PhraseAssociation {
  DocRelTime label = DocRelTime::Overlap;
  double confidence = 0.0;
  int support = 0;

  bool operator==(const PhraseAssociation&) const = default;
};

/// Normalized non-date TIMEX3 phrase -> dominant DocRelTime of nearby events.
using PhraseAssociations = std::map<std::string, PhraseAssociation>;

struct DistantSupervisionConfig {
  double min_confidence = 0.7;
  int min_support = 3;
  int proximity = 10;
};

/// Normalized token sequence of a mention joined by single spaces.
std::string mention_phrase(const Document& doc, std::span<const Token> tokens, const Span& mention);

/// Tallies gold event labels within `proximity` tokens of every non-date
/// TIMEX3 mention. Ties between labels go to the earlier label in
/// Before < Overlap < Before/Overlap < After.
PhraseAssociations learn_phrase_associations(std::span<const Document> corpus, int proximity);

/// Canonical dates for the document's date-like TIMEX3 mentions, resolved in
/// document order. Entry i corresponds to doc.spans_of(TIMEX3)[i].
std::vector<std::optional<Date>> resolve_document_dates(const Document& doc);

/// Date mentions are resolved and classified; other mentions take their
/// phrase's association when it clears both thresholds.
std::optional<DocRelTime> label_timex3(const Span& mention, const Document& doc,
                                       const PhraseAssociations& associations,
                                       double min_confidence, int min_support);

/// label_timex3 for every TIMEX3 span of the document (spans_of order).
std::vector<std::optional<DocRelTime>> label_document_timex3(const Document& doc,
                                                             const PhraseAssociations& associations,
                                                             double min_confidence, int min_support);

std::string write_associations_tsv(const PhraseAssociations& associations);
PhraseAssociations read_associations_tsv(std::string_view text);

}  // namespace tempie
