#include <doctest.h>

#include <cmath>

#include "fixtures.h"
#include "oracles.h"
#include "tempie/error.h"
#include "tempie/rnn.h"

using namespace tempie;
using tempie::testing::random_rnn;
using tempie::testing::TempDir;

namespace {

std::vector<int> random_ids(Rng& rng, const RnnModel& m, std::size_t n) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<int>(rng.below(m.vocab.size())));
  return ids;
}

std::vector<int> random_gold(Rng& rng, const RnnModel& m, std::size_t n) {
  std::vector<int> gold;
  for (std::size_t i = 0; i < n; ++i) gold.push_back(static_cast<int>(rng.below(m.labels.size())));
  return gold;
}

}  // namespace

TEST_SUITE("rnn") {

TEST_CASE("logistic") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(std::abs(logistic(2.0) - 0.8807970779778823) < 1e-15);
  for (double x : {-30.0, -2.5, 0.1, 7.0, 40.0}) CHECK(std::abs(logistic(x) - (1 - logistic(-x))) < 1e-15);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(logistic(800.0) <= 1.0);
}

TEST_CASE("softmax") {
  const Eigen::VectorXd half = softmax(Eigen::Vector2d(0, 0));
  CHECK(half(0) == doctest::Approx(0.5));
  const Eigen::VectorXd big = softmax(Eigen::Vector2d(1000, 0));
  CHECK(big.allFinite());
  CHECK(big(0) == doctest::Approx(1.0));
  const Eigen::Vector3d v(0.3, -1.2, 2.0);
  const Eigen::VectorXd shifted = softmax((v.array() + 17.5).matrix());
  CHECK((softmax(v) - shifted).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(softmax(v).sum() - 1.0) < 1e-12);
}

TEST_CASE("forward pass") {
  Rng rng(5);
  RnnModel m = random_rnn(rng, 6, 4, 5, 3, 1);
  const std::vector<int> ids = random_ids(rng, m, 6);
  const ForwardResult r = forward(m, ids);
  REQUIRE(r.probabilities.size() == ids.size());
  for (const auto& p : r.probabilities) {
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.minCoeff() >= 0.0);
  }

  SUBCASE("zero weights give uniform outputs") {
    RnnModel z = m;
    z.U.setZero();
    z.V.setZero();
    z.W.setZero();
    const auto out = forward(z, ids);
    for (const auto& p : out.probabilities) CHECK((p.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
  }

  SUBCASE("without recurrence the network is a window classifier") {
    RnnModel ff = m;
    ff.V.setZero();
    const ForwardResult out = forward(ff, ids);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const Eigen::VectorXd x = lookup_window(ff.table, ids, t, ff.context);
      const Eigen::VectorXd h = (ff.U * x).unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
      const Eigen::VectorXd s = ff.W * h;
      const Eigen::VectorXd y = (s.array() - s.maxCoeff()).exp() / (s.array() - s.maxCoeff()).exp().sum();
      CHECK((out.probabilities[t] - y).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("length one uses h0") {
    const std::vector<int> one{ids[0]};
    const Eigen::VectorXd x = lookup_window(m.table, one, 0, m.context);
    const Eigen::VectorXd h = (m.U * x + m.V * m.h0).unaryExpr([](double a) { return logistic(a); });
    CHECK((forward(m, one).hidden[0] - h).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("sequence loss") {
  std::vector<Eigen::VectorXd> uniform(2, Eigen::VectorXd::Constant(3, 1.0 / 3));
  const std::vector<int> gold{0, 2};
  CHECK(std::abs(sequence_loss(uniform, gold) - 2 * std::log(3.0)) < 1e-12);
  std::vector<Eigen::VectorXd> perfect{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 0, 1)};
  CHECK(sequence_loss(perfect, gold) == 0.0);
  CHECK_THROWS(sequence_loss(uniform, std::vector<int>{0, 3}));
}

TEST_CASE("BPTT matches finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const RnnModel m = random_rnn(rng, 5, 4, 6, 3, 1);
    const auto ids = random_ids(rng, m, 5);
    const auto gold = random_gold(rng, m, 5);
    CHECK(testing::rnn_gradient_error(m, ids, gold) < 1e-4);
  }
}

TEST_CASE("rows outside every context window receive no gradient") {
  Rng rng(8);
  const RnnModel m = random_rnn(rng, 8, 3, 4, 2, 1);
  const std::vector<int> ids{2, 3, 4};
  const Gradients g = bptt_gradients(m, ids, std::vector<int>{0, 1, 0});
  for (const auto& [row, grad] : g.embeddings) {
    CHECK((row == 1 || row == 2 || row == 3 || row == 4));
  }
  CHECK_FALSE(g.embeddings.count(7));
}

TEST_CASE("training") {
  Rng rng(3);
  RnnModel base = random_rnn(rng, 10, 4, 8, 3, 1, 0.1);
  std::vector<LabeledSequence> data;
  for (int s = 0; s < 20; ++s) {
    LabeledSequence seq;
    for (int t = 0; t < 6; ++t) {
      const int id = 2 + static_cast<int>(rng.below(10));
      seq.ids.push_back(id);
      seq.gold.push_back(id % 3);
    }
    data.push_back(seq);
  }
  Hyperparams hp;
  hp.epochs = 5;
  hp.learning_rate = 0.1;
  hp.seed = 12;

  SUBCASE("loss decreases on a memorizable corpus") {
    // Small initial weights sit on a plateau; a larger step escapes it.
    RnnModel m = base;
    Hyperparams fast = hp;
    fast.epochs = 10;
    fast.learning_rate = 0.3;
    const TrainReport r = train(m, data, fast);
    REQUIRE(r.epoch_loss.size() == 10);
    for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1] * 1.05);
    CHECK(r.epoch_loss.back() < 0.1 * r.epoch_loss.front());
  }
  SUBCASE("zero learning rate leaves the model unchanged") {
    RnnModel m = base;
    Hyperparams frozen = hp;
    frozen.learning_rate = 0.0;
    train(m, data, frozen);
    CHECK(m.U == base.U);
    CHECK(m.table.vectors == base.table.vectors);
  }
  SUBCASE("same seed, same trajectory") {
    RnnModel a = base, b = base;
    train(a, data, hp);
    train(b, data, hp);
    CHECK(a.U == b.U);
    CHECK(a.V == b.V);
    CHECK(a.W == b.W);
    CHECK(a.h0 == b.h0);
    CHECK(a.table.vectors == b.table.vectors);
  }
  SUBCASE("early stopping keeps the best epoch") {
    RnnModel m = base;
    Hyperparams long_run = hp;
    long_run.epochs = 30;
    long_run.patience = 2;
    int calls = 0;
    // A scorer that peaks at the second epoch.
    const TrainReport r = train(m, data, long_run, [&](const RnnModel&) {
      ++calls;
      return calls == 2 ? 1.0 : 0.5;
    });
    CHECK(r.best_epoch == 2);
    CHECK(r.epoch_loss.size() == 4);
  }
  SUBCASE("divergence aborts") {
    RnnModel m = base;
    Hyperparams wild = hp;
    wild.learning_rate = 1e300;
    CHECK_THROWS_AS(train(m, data, wild), DivergenceError);
  }
}

TEST_CASE("argmax ties go to the lowest label") {
  Rng rng(1);
  RnnModel m = random_rnn(rng, 4, 3, 4, 3, 1);
  m.W.setZero();
  CHECK(predict_labels(m, std::vector<int>{2, 3, 4}) == std::vector<int>{0, 0, 0});
}

TEST_CASE("presets") {
  const Hyperparams t = preset_config(TaggerTask::Timex3, 100);
  CHECK(t.hidden == 80);
  CHECK(t.context == 2);
  CHECK(t.learning_rate == 0.01);
  CHECK(preset_config(TaggerTask::Event, 300).hidden == 256);
  const Hyperparams tok = preset_config(TaggerTask::Tokenizer, 100);
  CHECK(tok.dim == 16);
  CHECK(2 * tok.context + 1 == 11);
  CHECK(tok.pad == 5);
  CHECK(preset_config(TaggerTask::Pos, 100).context == 2);
  CHECK(parse_tagger_task("tokenizer") == TaggerTask::Tokenizer);
  CHECK_THROWS(parse_tagger_task("chunk"));
}

TEST_CASE("hyperparameter search") {
  SearchSpace word;
  Hyperparams base;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Hyperparams h = sample_hyperparams(word, base, s);
    CHECK(h.hidden >= 48);
    CHECK(h.hidden <= 384);
    CHECK(h.context >= 2);
    CHECK(h.context <= 6);
    CHECK(std::find(word.learning_rates.begin(), word.learning_rates.end(), h.learning_rate) !=
          word.learning_rates.end());
  }
  SearchSpace chars;
  chars.char_level = true;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Hyperparams h = sample_hyperparams(chars, base, s);
    CHECK((h.dim == 16 || h.dim == 32));
    CHECK(h.pad >= 0);
    CHECK(h.pad <= 5);
  }
  const auto one = random_grid_search(word, 1, base, [](const Hyperparams&) { return 0.3; }, 4);
  REQUIRE(one.trials.size() == 1);
  CHECK(one.best == one.trials[0].params);
  const auto tied = random_grid_search(word, 5, base, [](const Hyperparams&) { return 0.3; }, 4);
  CHECK(tied.best == tied.trials[0].params);
  const auto by_hidden =
      random_grid_search(word, 6, base, [](const Hyperparams& h) { return static_cast<double>(h.hidden); }, 4);
  for (const auto& t : by_hidden.trials) CHECK(t.params.hidden <= by_hidden.best.hidden);
  CHECK_THROWS(random_grid_search(word, 0, base, [](const Hyperparams&) { return 0.0; }, 4));
}

TEST_CASE("serialization is lossless") {
  Rng rng(21);
  const RnnModel m = random_rnn(rng, 7, 3, 4, 3, 2);
  TempDir dir("rnn-save");
  save_rnn_model(dir / "m.json", m);
  const RnnModel back = load_rnn_model(dir / "m.json");
  CHECK(back.U == m.U);
  CHECK(back.V == m.V);
  CHECK(back.W == m.W);
  CHECK(back.h0 == m.h0);
  CHECK(back.table.vectors == m.table.vectors);
  CHECK(back.vocab == m.vocab);
  CHECK(back.labels == m.labels);
  CHECK(back.context == m.context);
  CHECK(model_to_json(back) == model_to_json(m));
}

}  // TEST_SUITE
