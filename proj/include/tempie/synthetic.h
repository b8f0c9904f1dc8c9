#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/date.h"

namespace tempie {

/// A time phrase and the DocRelTime it plants on nearby events.
struct TimexPhrase {
  std::string phrase;
  DocRelTime tendency = DocRelTime::Overlap;
  /// Probability that an event whose nearest time mention is this phrase
  /// shares its label; falls back to GeneratorSpec::tendency_strength.
  std::optional<double> strength;
  double weight = 1.0;
};

struct EventPhrase {
  std::string phrase;
  /// Label used (with probability event_prior_strength) when the document
  /// has no time mention.
  std::optional<DocRelTime> tendency;
};

/// Configuration of the synthetic clinical-note generator. Templates are
/// space-separated token strings with slots {TIMEX}, {EVENT} and {DECOY};
/// "." and "," attach to the preceding token in the rendered text.
struct GeneratorSpec {
  int documents = 100;
  int min_sentences = 3;
  int max_sentences = 8;
  Date doctime_start{2008, 1, 1};
  Date doctime_end{2015, 12, 31};
  double revision_probability = 0.3;
  int max_revision_days = 30;
  /// Share of {TIMEX} slots filled with a calendar date instead of a phrase.
  double date_fraction = 0.42;
  double tendency_strength = 0.9;
  double event_prior_strength = 0.5;
  std::vector<TimexPhrase> timex_phrases;
  std::vector<EventPhrase> event_phrases;
  /// Time-like phrases placed in non-entity positions ({DECOY} slots).
  std::vector<std::string> decoy_phrases;
  std::vector<std::string> templates;
  /// Lowercase word -> POS tag; digits map to CD, punctuation to itself and
  /// anything else unlisted to NN.
  std::vector<std::pair<std::string, std::string>> pos_lexicon;
};

GeneratorSpec default_generator_spec();

/// Throws ConfigError on unknown keys or malformed values. Missing keys keep
/// their default_generator_spec() value.
GeneratorSpec generator_spec_from_json(std::string_view text);
std::string generator_spec_to_json(const GeneratorSpec& spec);

/// Deterministic in (spec, seed). Every document carries TIMEX3 and EVENT
/// gold spans with DocRelTime labels, POS tags and a doctime. Throws
/// ConfigError if the timex, event or template lexicon is empty.
std::vector<Document> generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed);

/// Renders a date in one of the generator's surface forms; `style` is taken
/// modulo the number of forms. Some forms omit the year or day.
std::string render_date(const Date& date, int style);
inline constexpr int kDateStyles = 7;

}  // namespace tempie
