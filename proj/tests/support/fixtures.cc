#include "fixtures.h"

#include <map>

#include <Eigen/Eigenvalues>

#include "tempie/embeddings.h"

namespace tempie::testing {

Document make_doc(std::string id, const std::vector<std::vector<std::string>>& sentences, Date doctime) {
  Document doc;
  doc.id = std::move(id);
  doc.doctime = doctime;
  for (const auto& words : sentences) {
    Sentence s;
    for (const std::string& w : words) {
      if (!doc.text.empty()) doc.text += ' ';
      const int begin = static_cast<int>(doc.text.size());
      doc.text += w;
      s.tokens.push_back({w, begin, static_cast<int>(doc.text.size())});
    }
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

Span token_span(const Document& doc, std::size_t sentence, std::size_t first, std::size_t last,
                std::string_view klass, std::optional<DocRelTime> label) {
  const auto& tokens = doc.sentences.at(sentence).tokens;
  return Span{tokens.at(first).begin, tokens.at(last).end, std::string(klass), label};
}

TempDir::TempDir(std::string_view name) {
  path_ = std::filesystem::temp_directory_path() / ("tempie-test-" + std::string(name));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_ppmi_embeddings(std::span<const Document> corpus, int dim, int radius,
                           const std::filesystem::path& path) {
  const Vocabulary vocab = build_vocab(corpus, VocabLevel::Word);
  const auto n = static_cast<Eigen::Index>(vocab.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const Document& doc : corpus) {
    for (const Sentence& s : doc.sentences) {
      const std::vector<int> ids = word_ids(vocab, s.tokens);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (int d = 1; d <= radius && i + static_cast<std::size_t>(d) < ids.size(); ++d) {
          counts(ids[i], ids[i + d]) += 1.0;
          counts(ids[i + d], ids[i]) += 1.0;
        }
      }
    }
  }
  const double total = counts.sum();
  const Eigen::VectorXd marginal = counts.rowwise().sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (counts(i, j) == 0.0) continue;
      ppmi(i, j) = std::max(0.0, std::log(counts(i, j) * total / (marginal(i) * marginal(j))));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ppmi);
  EmbeddingTable table;
  table.vectors = Eigen::MatrixXd::Zero(n, dim);
  // Eigenvalues come in ascending order; keep the largest, scaled by sqrt.
  const int keep = std::min<int>(dim, static_cast<int>(n));
  for (int k = 0; k < keep; ++k) {
    const Eigen::Index col = n - 1 - k;
    table.vectors.col(k) = solver.eigenvectors().col(col) * std::sqrt(std::max(0.0, solver.eigenvalues()(col)));
  }
  // Match the scale of random init so learning rates carry over.
  // Uniform [-1, 1] entries have RMS 1/sqrt(3).
  const double rms = std::sqrt(table.vectors.squaredNorm() / static_cast<double>(table.vectors.size()));
  if (rms > 0.0) table.vectors *= 1.0 / (std::sqrt(3.0) * rms);
  save_word2vec_text(path, table, vocab);
}

}  // namespace tempie::testing
