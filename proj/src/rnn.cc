#include "tempie/rnn.h"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "tempie/corpus.h"
#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

using Json = nlohmann::ordered_json;

TaggerTask parse_tagger_task(std::string_view name) {
  if (name == "tokenize" || name == "tokenizer") return TaggerTask::Tokenizer;
  if (name == "pos") return TaggerTask::Pos;
  if (name == "timex3") return TaggerTask::Timex3;
  if (name == "event") return TaggerTask::Event;
  throw ConfigError("unknown tagger task '" + std::string(name) + "'");
}

std::string_view to_string(TaggerTask task) {
  switch (task) {
    case TaggerTask::Tokenizer: return "tokenize";
    case TaggerTask::Pos: return "pos";
    case TaggerTask::Timex3: return "timex3";
    case TaggerTask::Event: return "event";
  }
  return "?";
}

Hyperparams preset_config(TaggerTask task, int dim) {
  Hyperparams hp;
  switch (task) {
    case TaggerTask::Tokenizer:
      hp.dim = 16;
      hp.context = 5;
      hp.pad = 5;
      hp.hidden = 48;
      hp.learning_rate = 0.1;
      break;
    case TaggerTask::Pos:
      hp.dim = 100;
      hp.context = 2;
      hp.hidden = 80;
      hp.learning_rate = 0.01;
      break;
    case TaggerTask::Timex3:
    case TaggerTask::Event:
      hp.dim = dim;
      hp.context = 2;
      hp.hidden = dim >= 300 ? 256 : 80;
      hp.learning_rate = 0.01;
      break;
  }
  return hp;
}

bool RnnModel::all_finite() const {
  return table.vectors.allFinite() && U.allFinite() && V.allFinite() && W.allFinite() && h0.allFinite();
}

RnnModel make_model(Vocabulary vocab, VocabLevel level, EmbeddingTable table, std::vector<std::string> labels,
                    int hidden, int context, std::uint64_t seed) {
  if (hidden < 1 || context < 0 || labels.empty()) throw ConfigError("invalid RNN shape");
  if (table.rows() != vocab.size()) throw ConfigError("embedding table rows differ from vocabulary size");
  RnnModel m;
  m.vocab = std::move(vocab);
  m.level = level;
  m.table = std::move(table);
  m.context = context;
  m.labels = std::move(labels);
  const int input = (2 * context + 1) * m.table.dim();
  Rng rng(seed);
  const auto init = [&rng](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd w(rows, cols);
    const double scale = 0.1 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-scale, scale);
    }
    return w;
  };
  m.U = init(hidden, input);
  m.V = init(hidden, hidden);
  m.W = init(static_cast<Eigen::Index>(m.labels.size()), hidden);
  m.h0 = Eigen::VectorXd::Zero(hidden);
  return m;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp();
  return e / e.sum();
}

namespace {

Eigen::VectorXd step_hidden(const RnnModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& prev) {
  return (m.U * x + m.V * prev).unaryExpr([](double v) { return logistic(v); });
}

}  // namespace

ForwardResult forward(const RnnModel& model, std::span<const int> ids) {
  ForwardResult r;
  const Eigen::VectorXd* prev = &model.h0;
  r.hidden.reserve(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    r.hidden.push_back(step_hidden(model, lookup_window(model.table, ids, t, model.context), *prev));
    prev = &r.hidden.back();
    r.probabilities.push_back(softmax(model.W * r.hidden.back()));
  }
  return r;
}

double sequence_loss(std::span<const Eigen::VectorXd> probabilities, std::span<const int> gold) {
  if (probabilities.size() != gold.size()) throw std::invalid_argument("sequence_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] < 0 || gold[t] >= probabilities[t].size()) {
      throw std::invalid_argument("sequence_loss: gold label " + std::to_string(gold[t]) + " out of range");
    }
    loss -= std::log(probabilities[t][gold[t]]);
  }
  return loss;
}

Gradients bptt_gradients(const RnnModel& model, std::span<const int> ids, std::span<const int> gold) {
  const ForwardResult fwd = forward(model, ids);
  Gradients g;
  g.loss = sequence_loss(fwd.probabilities, gold);
  g.U = Eigen::MatrixXd::Zero(model.U.rows(), model.U.cols());
  g.V = Eigen::MatrixXd::Zero(model.V.rows(), model.V.cols());
  g.W = Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols());
  const int n = model.table.dim();
  Eigen::VectorXd from_next = Eigen::VectorXd::Zero(model.hidden());
  for (std::size_t t = ids.size(); t-- > 0;) {
    Eigen::VectorXd d_out = fwd.probabilities[t];
    d_out[gold[t]] -= 1.0;
    const Eigen::VectorXd& h = fwd.hidden[t];
    g.W.noalias() += d_out * h.transpose();
    const Eigen::VectorXd d_hidden = model.W.transpose() * d_out + from_next;
    const Eigen::VectorXd d_pre = d_hidden.array() * h.array() * (1.0 - h.array());
    const Eigen::VectorXd x = lookup_window(model.table, ids, t, model.context);
    g.U.noalias() += d_pre * x.transpose();
    const Eigen::VectorXd& prev = t > 0 ? fwd.hidden[t - 1] : model.h0;
    g.V.noalias() += d_pre * prev.transpose();
    const Eigen::VectorXd d_x = model.U.transpose() * d_pre;
    const std::vector<int> rows = window_ids(ids, t, model.context);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto [it, fresh] = g.embeddings.try_emplace(rows[k], Eigen::VectorXd::Zero(n));
      it->second += d_x.segment(static_cast<Eigen::Index>(k) * n, n);
    }
    from_next = model.V.transpose() * d_pre;
  }
  g.h0 = from_next;
  return g;
}

void apply_gradients(RnnModel& model, const Gradients& grads, double learning_rate) {
  model.U -= learning_rate * grads.U;
  model.V -= learning_rate * grads.V;
  model.W -= learning_rate * grads.W;
  model.h0 -= learning_rate * grads.h0;
  for (const auto& [row, grad] : grads.embeddings) model.table.vectors.row(row) -= learning_rate * grad.transpose();
}

TrainReport train(RnnModel& model, std::span<const LabeledSequence> data, const Hyperparams& hp,
                  const ModelScorer& dev_scorer) {
  TrainReport report;
  Rng rng(derive_seed(hp.seed, "rnn-order"));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RnnModel best = model;
  double best_score = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      const LabeledSequence& s = data[idx];
      if (s.ids.empty()) continue;
      const Gradients g = bptt_gradients(model, s.ids, s.gold);
      if (!std::isfinite(g.loss)) {
        throw DivergenceError("RNN training loss became non-finite in epoch " + std::to_string(epoch) +
                              " (learning rate " + std::to_string(hp.learning_rate) + ")");
      }
      apply_gradients(model, g, hp.learning_rate);
      total += g.loss;
    }
    if (!model.all_finite()) throw DivergenceError("RNN parameters became non-finite in epoch " + std::to_string(epoch));
    report.epoch_loss.push_back(total);
    if (!dev_scorer) continue;
    const double score = dev_scorer(model);
    report.dev_score.push_back(score);
    if (score > best_score) {
      best_score = score;
      best = model;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }
  if (dev_scorer && report.best_epoch > 0) model = std::move(best);
  if (!dev_scorer) report.best_epoch = static_cast<int>(report.epoch_loss.size());
  return report;
}

std::vector<int> predict_labels(const RnnModel& model, std::span<const int> ids) {
  std::vector<int> out;
  for (const Eigen::VectorXd& p : forward(model, ids).probabilities) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < p.size(); ++k) {
      if (p[k] > p[best]) best = k;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

Hyperparams sample_hyperparams(const SearchSpace& space, const Hyperparams& base, std::uint64_t seed) {
  Rng rng(seed);
  Hyperparams hp = base;
  hp.hidden = rng.between(space.min_hidden, space.max_hidden);
  hp.context = rng.between(space.min_context, space.max_context);
  hp.learning_rate = rng.pick(space.learning_rates);
  if (space.char_level) {
    hp.dim = rng.pick(space.dims);
    hp.pad = rng.between(space.min_pad, space.max_pad);
  }
  return hp;
}

SearchResult random_grid_search(const SearchSpace& space, int budget, const Hyperparams& base,
                                const std::function<double(const Hyperparams&)>& evaluate, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_grid_search: budget must be at least 1");
  SearchResult result;
  for (int i = 0; i < budget; ++i) {
    const Hyperparams hp = sample_hyperparams(space, base, derive_seed(seed, "trial-" + std::to_string(i)));
    const double score = evaluate(hp);
    result.trials.push_back({hp, score});
    if (i == 0 || score > result.best_score) {
      result.best = hp;
      result.best_score = score;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ConfigError("matrix data size differs from its shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

}  // namespace

std::string model_to_json(const RnnModel& model) {
  Json j;
  j["format"] = "tempie-rnn";
  j["level"] = model.level == VocabLevel::Word ? "word" : "char";
  j["context"] = model.context;
  j["labels"] = model.labels;
  j["vocabulary"] = model.vocab.words();
  j["embeddings"] = matrix_json(model.table.vectors);
  j["U"] = matrix_json(model.U);
  j["V"] = matrix_json(model.V);
  j["W"] = matrix_json(model.W);
  j["h0"] = matrix_json(model.h0);
  return j.dump() + "\n";
}

RnnModel model_from_json(std::string_view text) {
  RnnModel m;
  try {
    const Json j = Json::parse(text);
    if (j.value("format", "") != "tempie-rnn") throw ConfigError("not an RNN model file");
    m.level = j.at("level").get<std::string>() == "char" ? VocabLevel::Char : VocabLevel::Word;
    m.context = j.at("context").get<int>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
    const auto words = j.at("vocabulary").get<std::vector<std::string>>();
    if (words.size() < 2) throw ConfigError("model vocabulary lacks the reserved tokens");
    m.vocab = Vocabulary::from_words({words.begin() + 2, words.end()});
    if (m.vocab.words() != words) throw ConfigError("model vocabulary is not in canonical order");
    m.table.vectors = matrix_from_json(j.at("embeddings"));
    m.U = matrix_from_json(j.at("U"));
    m.V = matrix_from_json(j.at("V"));
    m.W = matrix_from_json(j.at("W"));
    m.h0 = matrix_from_json(j.at("h0"));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed RNN model: ") + e.what());
  }
  const Eigen::Index h = m.V.rows();
  if (m.table.rows() != m.vocab.size() || m.V.cols() != h || m.U.rows() != h ||
      m.U.cols() != (2 * m.context + 1) * m.table.dim() || m.W.rows() != static_cast<Eigen::Index>(m.labels.size()) ||
      m.W.cols() != h || m.h0.size() != h) {
    throw ConfigError("RNN model matrices have inconsistent shapes");
  }
  return m;
}

void save_rnn_model(const std::filesystem::path& path, const RnnModel& model) {
  write_file_atomic(path, model_to_json(model));
}

RnnModel load_rnn_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

}  // namespace tempie
