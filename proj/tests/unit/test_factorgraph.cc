#include <doctest.h>

#include <cmath>

#include "fixtures.h"
#include "oracles.h"
#include "tempie/error.h"
#include "tempie/factorgraph.h"

using namespace tempie;
using tempie::testing::make_doc;
using tempie::testing::random_chain;
using tempie::testing::random_loopy;
using tempie::testing::RandomGraph;
using tempie::testing::token_span;

namespace {

double max_marginal_gap(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) gap = std::max(gap, std::abs(a[i][k] - b[i][k]));
  }
  return gap;
}

// Sentences "x y" where the gold label of every token is fixed by its word.
std::vector<TrainingGraph> perfect_feature_data(Weights& w) {
  std::vector<TrainingGraph> data;
  const int fa = w.features.intern("word=a"), fb = w.features.intern("word=b");
  w.sync_features();
  for (int s = 0; s < 6; ++s) {
    TrainingGraph tg;
    for (int t = 0; t < 4; ++t) {
      const bool is_a = (s + t) % 3 == 0;
      tg.graph.variables.push_back({w.num_labels(), {0, s, t}});
      tg.graph.factors.push_back({FactorKind::Unigram, t, -1, {is_a ? fa : fb}, {}});
      if (t > 0) tg.graph.factors.push_back({FactorKind::Transition, t - 1, t, {}, {}});
      tg.gold.push_back(is_a ? 1 : 0);
    }
    data.push_back(tg);
  }
  return data;
}

}  // namespace

TEST_SUITE("factorgraph") {

TEST_CASE("model kinds") {
  CHECK(parse_model_kind("lr") == ModelKind::Lr);
  CHECK(parse_model_kind("skip") == ModelKind::Skip);
  CHECK_THROWS_AS(parse_model_kind("hmm"), ConfigError);
}

TEST_CASE("log potentials are linear in the weights") {
  Rng rng(1);
  RandomGraph g = random_chain(rng, 3, 3, 2.0);
  Weights zero = g.weights;
  std::fill(zero.params.begin(), zero.params.end(), 0.0);
  Weights doubled = g.weights;
  for (double& w : doubled.params) w *= 2;
  const std::vector<int> assignment{2, 0, 1};
  for (const Factor& f : g.graph.factors) {
    CHECK(log_potential(f, assignment, zero) == 0.0);
    CHECK(log_potential(f, assignment, doubled) == doctest::Approx(2 * log_potential(f, assignment, g.weights)));
  }
  Weights three({"A", "B"});
  for (const char* name : {"p", "q", "r"}) three.features.intern(name);
  three.sync_features();
  for (std::size_t i = 0; i < three.params.size(); ++i) three.params[i] = 0.5 * static_cast<double>(i);
  const Factor f{FactorKind::Unigram, 0, -1, {0, 1, 2}, {}};
  CHECK(log_potential(f, std::vector<int>{1}, three) ==
        doctest::Approx(three.unary(0, 1) + three.unary(1, 1) + three.unary(2, 1)));
}

TEST_CASE("exact chain inference") {
  SUBCASE("zero weights") {
    Rng rng(2);
    RandomGraph g = random_chain(rng, 5, 3, 0.0);
    const Marginals m = forward_backward(g.graph, g.weights);
    for (const auto& p : m.probabilities) {
      for (double v : p) CHECK(std::abs(v - 1.0 / 3) < 1e-12);
    }
    CHECK(std::abs(m.log_partition - 5 * std::log(3.0)) < 1e-10);
    CHECK(viterbi(g.graph, g.weights) == std::vector<int>(5, 0));
    CHECK(std::abs(brute_force_marginals(g.graph, g.weights).log_partition - 5 * std::log(3.0)) < 1e-10);
  }
  SUBCASE("single token equals softmax of unary scores") {
    Rng rng(3);
    RandomGraph g = random_chain(rng, 1, 4, 2.0);
    const auto scores = unary_scores(g.graph, 0, g.weights);
    double z = 0.0;
    for (double s : scores) z += std::exp(s);
    const Marginals m = forward_backward(g.graph, g.weights);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(m.probabilities[0][k] - std::exp(scores[k]) / z) < 1e-12);
  }
  SUBCASE("sticky transitions give a constant sequence") {
    Rng rng(4);
    RandomGraph g = random_chain(rng, 6, 3, 0.0);
    g.weights.pair(FactorKind::Transition, 2, 2) = 5.0;
    CHECK(viterbi(g.graph, g.weights) == std::vector<int>(6, 2));
  }
  SUBCASE("random chains agree with enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      RandomGraph g = random_chain(rng, 1 + static_cast<int>(rng.below(6)), 2 + static_cast<int>(rng.below(3)), 2.0);
      const Marginals exact = forward_backward(g.graph, g.weights);
      const Marginals brute = brute_force_marginals(g.graph, g.weights);
      CHECK(max_marginal_gap(exact.probabilities, brute.probabilities) < 1e-10);
      CHECK(std::abs(exact.log_partition - brute.log_partition) < 1e-10);
      CHECK(viterbi(g.graph, g.weights) == brute_force_argmax(g.graph, g.weights));
    }
  }
  SUBCASE("skip factors are rejected by exact inference") {
    Rng rng(6);
    RandomGraph g = random_loopy(rng, 4, 2, 1.0);
    CHECK_THROWS_AS(forward_backward(g.graph, g.weights), ModelKindError);
    CHECK_THROWS_AS(viterbi(g.graph, g.weights), ModelKindError);
  }
}

TEST_CASE("enumeration limits") {
  Rng rng(7);
  RandomGraph one = random_chain(rng, 1, 4, 0.0);
  const Marginals m = brute_force_marginals(one.graph, one.weights);
  for (double p : m.probabilities[0]) CHECK(p == doctest::Approx(0.25));
  RandomGraph big = random_loopy(rng, 21, 0, 1.0);
  CHECK_THROWS_AS(brute_force_marginals(big.graph, big.weights), SizeError);
}

TEST_CASE("graph validation") {
  FactorGraph g;
  g.variables = {{2, {}}, {2, {}}, {2, {}}};
  g.factors = {{FactorKind::Transition, 0, 2, {}, {}}};
  CHECK_THROWS(g.validate());
  g.factors = {{FactorKind::Skip, 0, 5, {}, {}}};
  CHECK_THROWS(g.validate());
}

TEST_CASE("Gibbs sampling") {
  SUBCASE("independent variables converge to their softmax") {
    Rng rng(8);
    RandomGraph g = random_loopy(rng, 5, 0, 1.5);
    const auto est = gibbs_marginals(g.graph, g.weights, {2000, 100, 3});
    CHECK(max_marginal_gap(est, brute_force_marginals(g.graph, g.weights).probabilities) < 0.02);
  }
  SUBCASE("loopy graphs match enumeration and runs are reproducible") {
    Rng rng(9);
    RandomGraph g = random_loopy(rng, 8, 10, 1.0);
    const auto est = gibbs_marginals(g.graph, g.weights, {5000, 500, 11});
    CHECK(max_marginal_gap(est, brute_force_marginals(g.graph, g.weights).probabilities) < 0.02);
    CHECK(gibbs_marginals(g.graph, g.weights, {5000, 500, 11}) == est);
    for (const auto& p : est) CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
  }
  SUBCASE("sweeps must exceed burn-in") {
    Rng rng(10);
    RandomGraph g = random_loopy(rng, 3, 1, 1.0);
    CHECK_THROWS(gibbs_marginals(g.graph, g.weights, {100, 100, 1}));
    CHECK_THROWS(gibbs_marginals(g.graph, g.weights, {100, -1, 1}));
  }
}

TEST_CASE("prediction modes") {
  Rng rng(12);
  // Gibbs decodes per-variable marginals, so compare against the exact
  // marginal argmax wherever the top two labels are clearly separated.
  int agree = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomGraph g = random_chain(rng, 6, 3, 2.0);
    const Marginals exact = forward_backward(g.graph, g.weights);
    const auto gibbs = predict(g.graph, g.weights, InferenceMode::Gibbs, {2000, 200, 5});
    for (std::size_t i = 0; i < gibbs.size(); ++i) {
      std::vector<double> p = exact.probabilities[i];
      const auto best = std::max_element(p.begin(), p.end()) - p.begin();
      std::vector<double> sorted = p;
      std::sort(sorted.rbegin(), sorted.rend());
      if (sorted[0] - sorted[1] < 0.05) continue;
      agree += gibbs[i] == best;
      ++total;
    }
  }
  REQUIRE(total > 60);
  CHECK(agree == total);

  // Unigram-only graphs decode to the per-variable argmax.
  RandomGraph lr = random_loopy(rng, 6, 0, 2.0);
  const auto labels = predict(lr.graph, lr.weights, InferenceMode::Exact);
  for (int v = 0; v < 6; ++v) {
    const auto s = unary_scores(lr.graph, v, lr.weights);
    CHECK(labels[static_cast<std::size_t>(v)] == (s[1] > s[0] ? 1 : 0));
  }
}

TEST_CASE("model nesting: zero pairwise weights reproduce logistic regression") {
  Rng rng(13);
  RandomGraph chain = random_chain(rng, 6, 3, 2.0);
  const std::size_t pairs = chain.weights.unary_offset();
  for (std::size_t i = 0; i < pairs; ++i) chain.weights.params[i] = 0.0;
  FactorGraph unigram_only = chain.graph;
  std::erase_if(unigram_only.factors, [](const Factor& f) { return f.kind != FactorKind::Unigram; });
  CHECK(predict(chain.graph, chain.weights, InferenceMode::Exact) ==
        predict(unigram_only, chain.weights, InferenceMode::Exact));
}

TEST_CASE("objective gradients match finite differences") {
  Rng rng(14);
  std::vector<TrainingGraph> chains;
  for (int i = 0; i < 3; ++i) {
    RandomGraph g = random_chain(rng, 4, 3, 1.0);
    std::vector<int> gold;
    for (int t = 0; t < 4; ++t) gold.push_back(static_cast<int>(rng.below(3)));
    chains.push_back({g.graph, gold, {}});
  }
  // All chains share feature ids 0..3, so any one weight table covers them.
  const Weights w = random_chain(rng, 4, 3, 1.0).weights;
  CHECK(testing::objective_gradient_error(
            w, [&](const Weights& x, std::vector<double>* g) { return crf_objective(chains, x, 0.5, g); }) < 1e-4);

  std::vector<TrainingGraph> loopy;
  for (int i = 0; i < 3; ++i) {
    RandomGraph g = random_loopy(rng, 5, 4, 1.0);
    std::vector<int> gold;
    for (int v = 0; v < 5; ++v) gold.push_back(static_cast<int>(rng.below(2)));
    loopy.push_back({g.graph, gold, {}});
  }
  const Weights lw = random_loopy(rng, 5, 0, 1.0).weights;
  CHECK(testing::objective_gradient_error(lw, [&](const Weights& x, std::vector<double>* g) {
          return pseudolikelihood_objective(loopy, x, 0.5, g);
        }) < 1e-4);
}

TEST_CASE("training") {
  SUBCASE("a perfectly predictive feature is learned") {
    Weights w({"O", "B-EVENT", "I-EVENT"});
    const auto data = perfect_feature_data(w);
    TrainOptions opt;
    opt.l2 = 0.01;
    opt.epochs = 20;
    TrainLog log;
    const Weights trained = train_crf(data, w, opt, &log);
    for (const TrainingGraph& tg : data) CHECK(viterbi(tg.graph, trained) == tg.gold);
    REQUIRE(log.objective.size() == 20);
    CHECK(log.objective[1] >= log.objective[0]);
    CHECK(log.objective[2] >= log.objective[1]);
  }
  SUBCASE("stronger L2 shrinks the weights") {
    Weights w({"O", "B-EVENT", "I-EVENT"});
    const auto data = perfect_feature_data(w);
    TrainOptions weak, strong;
    weak.l2 = 0.1;
    strong.l2 = 1.0;
    weak.learning_rate = strong.learning_rate = 0.05;
    CHECK(train_crf(data, w, strong).squared_norm() < train_crf(data, w, weak).squared_norm());
  }
  SUBCASE("different seeds reach similar objectives") {
    Weights w({"O", "B-EVENT", "I-EVENT"});
    const auto data = perfect_feature_data(w);
    TrainOptions a, b;
    a.epochs = b.epochs = 40;
    a.learning_rate = b.learning_rate = 0.05;
    a.seed = 1;
    b.seed = 2;
    const double oa = crf_objective(data, train_crf(data, w, a), a.l2, nullptr);
    const double ob = crf_objective(data, train_crf(data, w, b), b.l2, nullptr);
    CHECK(std::abs(oa - ob) <= 0.01 * std::max(std::abs(oa), std::abs(ob)));
  }
  SUBCASE("pseudo-likelihood without pairwise factors is logistic regression") {
    Weights w({"O", "B-EVENT", "I-EVENT"});
    auto data = perfect_feature_data(w);
    for (TrainingGraph& tg : data) {
      std::erase_if(tg.graph.factors, [](const Factor& f) { return f.kind != FactorKind::Unigram; });
    }
    Rng rng(15);
    for (double& p : w.params) p = rng.uniform(-1, 1);
    CHECK(pseudolikelihood_objective(data, w, 1.0, nullptr) == doctest::Approx(crf_objective(data, w, 1.0, nullptr)));
  }
  SUBCASE("divergence aborts") {
    Weights w({"O", "B-EVENT", "I-EVENT"});
    const auto data = perfect_feature_data(w);
    TrainOptions wild;
    wild.learning_rate = 1e308;
    CHECK_THROWS_AS(train_crf(data, w, wild), DivergenceError);
  }
}

TEST_CASE("building graphs from documents") {
  Document doc = make_doc("d", {{"Severe", "pain", "in", "the", "chest"}, {"The", "pain", "resolved"}});
  doc.gold_spans = {token_span(doc, 0, 1, 1, kEvent), token_span(doc, 1, 1, 1, kEvent)};
  Weights w({"O", "B-EVENT", "I-EVENT"});
  const GraphFeatureConfig config{FeatureRun::Run2, {}};
  const auto count = [](const FactorGraph& g, FactorKind k) {
    return std::count_if(g.factors.begin(), g.factors.end(), [k](const Factor& f) { return f.kind == k; });
  };
  const FactorGraph lr = build_training_graph(doc, config, ModelKind::Lr, 1, w);
  CHECK(count(lr, FactorKind::Unigram) == 8);
  CHECK(count(lr, FactorKind::Transition) == 0);
  const FactorGraph crf = build_training_graph(doc, config, ModelKind::Crf, 1, w);
  CHECK(count(crf, FactorKind::Transition) == 4 + 2);
  const FactorGraph skip = build_training_graph(doc, config, ModelKind::Skip, 1, w);
  // "pain"/"pain" and "the"/"The" across adjacent sentences.
  CHECK(count(skip, FactorKind::Skip) == 2);
  CHECK(count(build_training_graph(doc, config, ModelKind::Skip, 0, w), FactorKind::Skip) == 0);
  CHECK_NOTHROW(skip.validate());

  // Features unseen in training are dropped at prediction time.
  const Weights empty({"O", "B-EVENT", "I-EVENT"});
  const FactorGraph cold = build_graph(doc, config, ModelKind::Lr, 1, empty);
  for (const Factor& f : cold.factors) CHECK(f.features.empty());
}

TEST_CASE("weights TSV round-trip") {
  Rng rng(16);
  RandomGraph g = random_chain(rng, 3, 3, 2.0);
  const std::string text = write_weights_tsv(g.weights);
  const Weights back = read_weights_tsv(text, g.weights.labels);
  CHECK(write_weights_tsv(back) == text);
  for (int f = 0; f < 3; ++f) {
    const int id = back.features.lookup(g.weights.features.name(f));
    for (int k = 0; k < 3; ++k) CHECK(back.unary(id, k) == g.weights.unary(f, k));
  }
  CHECK_THROWS(read_weights_tsv("bogus line\n", g.weights.labels));
}

}  // TEST_SUITE
