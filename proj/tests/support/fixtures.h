#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tempie/corpus.h"

namespace tempie::testing {

/// Joins tokens with single spaces; sentences are separated by one space.
Document make_doc(std::string id, const std::vector<std::vector<std::string>>& sentences,
                  Date doctime = {2010, 1, 5});

/// Span over tokens [first, last] of one sentence.
Span token_span(const Document& doc, std::size_t sentence, std::size_t first, std::size_t last,
                std::string_view klass, std::optional<DocRelTime> label = std::nullopt);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view name);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// Word vectors from a truncated eigendecomposition of the positive PMI
/// matrix of normalized words (symmetric window `radius` within sentences).
/// Stands in for word2vec when pretraining on generator text.
void write_ppmi_embeddings(std::span<const Document> corpus, int dim, int radius,
                           const std::filesystem::path& path);

}  // namespace tempie::testing
