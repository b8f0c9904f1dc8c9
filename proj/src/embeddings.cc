#include "tempie/embeddings.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

std::string normalize_word(std::string_view token) {
  std::string out(token);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isdigit(u)) {
      c = 'N';
    } else {
      c = static_cast<char>(std::tolower(u));
    }
  }
  return out;
}

Vocabulary::Vocabulary() {
  append(std::string(kUnkToken));
  append(std::string(kPadToken));
}

void Vocabulary::append(std::string word) {
  ids_.emplace(word, static_cast<int>(words_.size()));
  words_.push_back(std::move(word));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  Vocabulary vocab;
  for (std::string& w : words) {
    if (w == kUnkToken || w == kPadToken) continue;
    vocab.append(std::move(w));
  }
  return vocab;
}

int Vocabulary::id(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? unk_id() : it->second;
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(std::span<const Document> corpus, VocabLevel level) {
  std::set<std::string> seen;
  for (const Document& doc : corpus) {
    if (level == VocabLevel::Char) {
      for (char c : doc.text) seen.insert(std::string(1, c));
      continue;
    }
    for (const Sentence& s : doc.sentences) {
      for (const Token& t : s.tokens) seen.insert(normalize_word(t.surface));
    }
  }
  return Vocabulary::from_words({seen.begin(), seen.end()});
}

std::vector<int> word_ids(const Vocabulary& vocab, std::span<const Token> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const Token& t : tokens) ids.push_back(vocab.id(normalize_word(t.surface)));
  return ids;
}

std::vector<int> char_ids(const Vocabulary& vocab, std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(vocab.id(std::string_view(&c, 1)));
  return ids;
}

EmbeddingTable init_random(const Vocabulary& vocab, int dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embedding dimension must be positive");
  Rng rng(seed);
  EmbeddingTable table{Eigen::MatrixXd(static_cast<Eigen::Index>(vocab.size()), dim)};
  for (Eigen::Index r = 0; r < table.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) table.vectors(r, c) = rng.uniform(-1.0, 1.0);
  }
  table.vectors.row(Vocabulary::pad_id()).setZero();
  return table;
}

namespace {

struct Word2VecFile {
  int dim = 0;
  std::vector<std::string> words;
  std::vector<std::vector<double>> rows;
};

Word2VecFile parse_word2vec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open embeddings file '" + path.string() + "'");
  Word2VecFile file;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing word2vec header");
  long long count = -1, dim = -1;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim < 1) {
      throw ParseError(1, "malformed word2vec header '" + line + "', expected '<count> <dim>'");
    }
  }
  file.dim = static_cast<int>(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    std::vector<double> values;
    std::string field;
    while (row >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ParseError(line_no, "bad float '" + field + "'");
      }
      values.push_back(v);
    }
    if (static_cast<long long>(values.size()) != dim) {
      throw ParseError(line_no, "expected " + std::to_string(dim) + " values, found " +
                                    std::to_string(values.size()));
    }
    file.words.push_back(std::move(word));
    file.rows.push_back(std::move(values));
  }
  if (static_cast<long long>(file.words.size()) != count) {
    throw ParseError(line_no, "header declares " + std::to_string(count) + " rows, found " +
                                  std::to_string(file.words.size()));
  }
  return file;
}

}  // namespace

std::vector<std::string> read_word2vec_words(const std::filesystem::path& path) {
  return parse_word2vec(path).words;
}

EmbeddingTable load_word2vec_text(const std::filesystem::path& path, const Vocabulary& vocab,
                                  int expected_dim, std::uint64_t seed) {
  const Word2VecFile file = parse_word2vec(path);
  if (file.dim != expected_dim) {
    throw ConfigError("embeddings file has dimension " + std::to_string(file.dim) + ", expected " +
                      std::to_string(expected_dim));
  }
  EmbeddingTable table = init_random(vocab, expected_dim, seed);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(expected_dim);
  for (std::size_t i = 0; i < file.words.size(); ++i) {
    const Eigen::Map<const Eigen::VectorXd> row(file.rows[i].data(), expected_dim);
    mean += row;
    if (const auto id = vocab.find(file.words[i])) table.vectors.row(*id) = row.transpose();
  }
  if (!file.words.empty()) {
    table.vectors.row(Vocabulary::unk_id()) = (mean / static_cast<double>(file.words.size())).transpose();
  }
  return table;
}

std::string format_word2vec_text(const EmbeddingTable& table, const Vocabulary& vocab, int precision) {
  std::string out;
  const std::size_t n = vocab.size() >= 2 ? vocab.size() - 2 : 0;
  out += std::to_string(n) + " " + std::to_string(table.dim()) + "\n";
  char buf[64];
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    out += vocab.word(static_cast<int>(id));
    for (int c = 0; c < table.dim(); ++c) {
      std::snprintf(buf, sizeof buf, " %.*f", precision, table.vectors(static_cast<Eigen::Index>(id), c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_word2vec_text(const std::filesystem::path& path, const EmbeddingTable& table,
                        const Vocabulary& vocab, int precision) {
  write_file_atomic(path, format_word2vec_text(table, vocab, precision));
}

std::vector<int> window_ids(std::span<const int> ids, std::size_t index, int radius) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2 * radius + 1));
  const auto n = static_cast<long>(ids.size());
  for (long p = static_cast<long>(index) - radius; p <= static_cast<long>(index) + radius; ++p) {
    out.push_back(p < 0 || p >= n ? Vocabulary::pad_id() : ids[static_cast<std::size_t>(p)]);
  }
  return out;
}

Eigen::VectorXd lookup_window(const EmbeddingTable& table, std::span<const int> ids, std::size_t index,
                              int radius) {
  const int n = table.dim();
  Eigen::VectorXd x(static_cast<Eigen::Index>((2 * radius + 1) * n));
  const std::vector<int> window = window_ids(ids, index, radius);
  for (std::size_t k = 0; k < window.size(); ++k) {
    x.segment(static_cast<Eigen::Index>(k) * n, n) = table.vectors.row(window[k]).transpose();
  }
  return x;
}

}  // namespace tempie
