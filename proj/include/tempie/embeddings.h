#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tempie/corpus.h"

namespace tempie {

inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kPadToken = "<PAD>";

/// Lowercases, then replaces every decimal digit with 'N'.
std::string normalize_word(std::string_view token);

/// Dense ids for normalized words (or raw characters). Id 0 is <UNK> and id 1
/// is <PAD>; remaining entries follow in sorted order when built from a corpus.
class Vocabulary {
 public:
  Vocabulary();

  /// Reserved tokens plus the sorted, de-duplicated `words`.
  static Vocabulary from_words(std::vector<std::string> words);

  /// Id of `word`, or the <UNK> id.
  int id(std::string_view word) const;
  std::optional<int> find(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  static constexpr int unk_id() { return 0; }
  static constexpr int pad_id() { return 1; }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  void append(std::string word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

enum class VocabLevel { Word, Char };

/// Word level: every normalized token surface. Char level: every raw byte of
/// the document texts.
Vocabulary build_vocab(std::span<const Document> corpus, VocabLevel level);

std::vector<int> word_ids(const Vocabulary& vocab, std::span<const Token> tokens);
std::vector<int> char_ids(const Vocabulary& vocab, std::string_view text);

/// The |vocab| x dim lookup table.
struct EmbeddingTable {
  Eigen::MatrixXd vectors;

  int dim() const { return static_cast<int>(vectors.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
};

/// Uniform [-1, 1] entries; the <PAD> row is zero.
EmbeddingTable init_random(const Vocabulary& vocab, int dim, std::uint64_t seed);

/// Words listed in a word2vec text file, in file order.
std::vector<std::string> read_word2vec_words(const std::filesystem::path& path);

/// Copies rows for vocabulary words found in the file, draws the rest as in
/// init_random, and sets <UNK> to the mean of every vector in the file.
/// Throws ParseError on malformed input and ConfigError if the file's
/// dimension differs from `expected_dim`.
EmbeddingTable load_word2vec_text(const std::filesystem::path& path, const Vocabulary& vocab,
                                  int expected_dim, std::uint64_t seed);

/// word2vec text output for every non-reserved vocabulary row, fixed-point
/// with `precision` decimals.
std::string format_word2vec_text(const EmbeddingTable& table, const Vocabulary& vocab, int precision = 6);
void save_word2vec_text(const std::filesystem::path& path, const EmbeddingTable& table,
                        const Vocabulary& vocab, int precision = 6);

/// Concatenated rows for positions index-c .. index+c; <PAD> beyond the edges.
Eigen::VectorXd lookup_window(const EmbeddingTable& table, std::span<const int> ids, std::size_t index,
                              int radius);

/// The ids whose rows make up lookup_window(table, ids, index, radius).
std::vector<int> window_ids(std::span<const int> ids, std::size_t index, int radius);

}  // namespace tempie
