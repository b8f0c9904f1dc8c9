#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/date.h"

namespace tempie {

inline constexpr std::string_view kTimex3 = "TIMEX3";
inline constexpr std::string_view kEvent = "EVENT";

/// Relation of a mention to its document's creation time.
enum class DocRelTime { Before = 0, Overlap = 1, BeforeOverlap = 2, After = 3 };
inline constexpr int kNumDocRelTime = 4;

std::string_view to_string(DocRelTime label);
/// Accepts the canonical spellings ("Before", "Overlap", "Before/Overlap",
/// "After") case-insensitively; throws std::invalid_argument otherwise.
DocRelTime parse_doc_rel_time(std::string_view text);

/// A token with half-open character offsets into its document's text.
struct Token {
  std::string surface;
  int begin = 0;
  int end = 0;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  int begin() const { return tokens.front().begin; }
  int end() const { return tokens.back().end; }
  std::size_t size() const { return tokens.size(); }

  bool operator==(const Sentence&) const = default;
};

/// An annotated character range. Event spans may carry a gold DocRelTime.
struct Span {
  int begin = 0;
  int end = 0;
  std::string klass;
  std::optional<DocRelTime> doc_rel_time;

  bool operator==(const Span&) const = default;
};

/// Orders spans by (begin, end, klass).
bool span_less(const Span& a, const Span& b);

struct Document {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;
  Date doctime;
  std::vector<Date> revisions;
  /// One tag per token when present, aligned with `sentences`.
  std::optional<std::vector<std::vector<std::string>>> pos_tags;
  std::vector<Span> gold_spans;

  /// Spans of one class, sorted by begin offset.
  std::vector<Span> spans_of(std::string_view klass) const;
  std::size_t token_count() const;

  /// Throws ValidationError if any type invariant is violated.
  void validate() const;

  bool operator==(const Document&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number where parsing failed.
class ParseError : public CorpusError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : CorpusError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

enum class CorpusFormat { Conll, Json };

CorpusFormat parse_corpus_format(std::string_view name);
/// Guesses from the extension: ".json" is JSON, anything else CoNLL.
CorpusFormat format_for_path(const std::filesystem::path& path);

std::vector<Document> read_conll(std::istream& in);
void write_conll(std::ostream& out, const std::vector<Document>& docs);

std::vector<Document> read_json_corpus(std::string_view text);
std::string write_json_corpus(const std::vector<Document>& docs);

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs,
                 CorpusFormat format);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tempie

namespace tempie {

/// All tokens of a document in order; the position in the result is the
/// document-level token index.
std::vector<Token> flat_tokens(const Document& doc);

/// Document-level token indices [first, last] exactly covered by `span`, or
/// nullopt if the span does not align with token boundaries.
std::optional<std::pair<std::size_t, std::size_t>> token_range(std::span<const Token> tokens,
                                                               const Span& span);

}  // namespace tempie
