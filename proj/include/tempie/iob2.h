#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"

namespace tempie {

struct Iob2Tag {
  enum class Kind { O, B, I };

  Kind kind = Kind::O;
  std::string klass;

  static Iob2Tag outside() { return {}; }
  static Iob2Tag begin(std::string_view k) { return {Kind::B, std::string(k)}; }
  static Iob2Tag inside(std::string_view k) { return {Kind::I, std::string(k)}; }

  bool is_outside() const { return kind == Kind::O; }

  /// "O", "B-<klass>" or "I-<klass>".
  std::string str() const;
  /// Inverse of str(); throws std::invalid_argument on anything else.
  static Iob2Tag parse(std::string_view text);

  bool operator==(const Iob2Tag&) const = default;
};

using TagSequence = std::vector<Iob2Tag>;

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One tag per unit. Every span must start at some unit's begin and end at
/// some unit's end; spans must not overlap.
TagSequence encode_iob2(std::span<const Span> spans, std::span<const Token> units);

/// Maximal B/I runs become spans. An I that does not continue a run of its
/// own class starts a new span.
std::vector<Span> decode_iob2(std::span<const Iob2Tag> tags, std::span<const Token> units);

/// Within each contiguous non-O run (a B starts a new run), rewrites every tag
/// to the run's majority class; ties go to the class of the run's first tag.
TagSequence repair_span_classes(std::span<const Iob2Tag> tags);

/// Rewrites orphan I tags to B so the sequence is valid IOB2. Equivalent to
/// encoding the output of decode_iob2.
TagSequence repair_iob2(std::span<const Iob2Tag> tags);

/// True iff every I(k) directly follows B(k) or I(k).
bool is_valid_iob2(std::span<const Iob2Tag> tags);

/// Characters of a sentence plus `pad` characters of context on either side,
/// each as a one-character unit, with gold tags over classes W and E.
struct CharSequence {
  std::vector<Token> chars;
  TagSequence tags;
};

inline constexpr std::string_view kWordClass = "W";
inline constexpr std::string_view kEndClass = "E";

/// Character-level gold tags for the whole document text: B/I-E on tokens
/// that end a sentence, B/I-W on other tokens, O elsewhere.
TagSequence document_char_tags(const Document& doc);

CharSequence char_sequence(const Document& doc, std::size_t sentence_index, int pad);

/// Gold tags for one sentence restricted to spans of `klass`.
TagSequence sentence_tags(const Document& doc, std::size_t sentence_index,
                          std::string_view klass);

}  // namespace tempie
