#include <doctest.h>

#include "fixtures.h"
#include "tempie/docreltime.h"
#include "tempie/error.h"
#include "tempie/synthetic.h"

using namespace tempie;
using tempie::testing::make_doc;
using tempie::testing::TempDir;
using tempie::testing::token_span;

namespace {

std::vector<Document> small_corpus(int documents, std::uint64_t seed) {
  GeneratorSpec spec = default_generator_spec();
  spec.documents = documents;
  return generate_synthetic_corpus(spec, seed);
}

Phase2Config quick_config() {
  Phase2Config c;
  c.unigram_training.epochs = 3;
  c.skip_training.epochs = 3;
  c.gibbs = {300, 30, 4};
  return c;
}

}  // namespace

TEST_SUITE("docreltime") {

TEST_CASE("nearest time mention by midpoint distance") {
  const std::vector<Span> none;
  CHECK_FALSE(nearest_timex3(Span{10, 14, "EVENT", {}}, none).has_value());
  const std::vector<Span> one{{30, 34, "TIMEX3", {}}};
  CHECK(nearest_timex3(Span{0, 4, "EVENT", {}}, one) == 0u);
  const std::vector<Span> both{{0, 4, "TIMEX3", {}}, {20, 24, "TIMEX3", {}}};
  CHECK(nearest_timex3(Span{10, 14, "EVENT", {}}, both) == 0u);
  CHECK(nearest_timex3(Span{11, 15, "EVENT", {}}, both) == 1u);
}

TEST_CASE("graph structure") {
  Document d = make_doc("d", {{"Pain", "and", "fever", "since", "12/29/08"}}, Date{2010, 1, 5});
  d.gold_spans = {token_span(d, 0, 0, 0, kEvent, DocRelTime::Before), token_span(d, 0, 2, 2, kEvent, DocRelTime::Before),
                  token_span(d, 0, 4, 4, kTimex3)};
  Phase2Model model{quick_config(), Weights(docreltime_labels()), {}};
  const Phase2Graph g = build_phase2_graph(d, model);
  CHECK(g.graph.variables.size() == 3);
  CHECK(std::count_if(g.graph.factors.begin(), g.graph.factors.end(),
                      [](const Factor& f) { return f.kind == FactorKind::Skip; }) == 2);
  REQUIRE(g.timex_labels.size() == 1);
  CHECK(g.timex_labels[0] == DocRelTime::Before);

  // A strong prior pins the time mention's marginal to its rule label.
  model.config.timex_prior = 50.0;
  const Phase2Graph pinned = build_phase2_graph(d, model);
  const auto m = brute_force_marginals(pinned.graph, model.weights);
  CHECK(m.probabilities[2][static_cast<int>(DocRelTime::Before)] > 0.999999);

  Document no_time = d;
  no_time.gold_spans.pop_back();
  const Phase2Graph lr_only = build_phase2_graph(no_time, model);
  for (const Factor& f : lr_only.graph.factors) CHECK(f.kind == FactorKind::Unigram);
}

TEST_CASE("event features") {
  Document d = make_doc("d", {{"Seen", "today"}, {"Chest", "pain", "resolved", "."}});
  d.gold_spans = {token_span(d, 1, 1, 1, kEvent), token_span(d, 0, 1, 1, kTimex3)};
  const auto tokens = flat_tokens(d);
  const auto timexes = d.spans_of(kTimex3);
  const FeatureVector f = event_features(d, tokens, d.gold_spans[0], timexes);
  for (const char* expected : {"win.left1=chest", "win.right1=resolved", "win.left2=<PAD>", "case.lower"}) {
    CHECK(std::count(f.begin(), f.end(), expected) == 1);
  }
  CHECK(std::is_sorted(f.begin(), f.end()));
}

TEST_CASE("training and prediction") {
  const auto train = small_corpus(120, 3);
  const auto test = small_corpus(20, 4);
  const Phase2Model model = train_phase2(train, quick_config(), 9);

  SUBCASE("same seed, same model") {
    const Phase2Model again = train_phase2(train, quick_config(), 9);
    CHECK(again.weights.params == model.weights.params);
    CHECK(again.associations == model.associations);
  }
  SUBCASE("every event receives one label, deterministically") {
    for (const Document& d : test) {
      for (Phase2Mode mode : {Phase2Mode::Lr, Phase2Mode::LrSkip}) {
        const auto p = predict_docreltime(d, model, mode);
        CHECK(p.size() == d.spans_of(kEvent).size());
        CHECK(predict_docreltime(d, model, mode) == p);
      }
    }
  }
  SUBCASE("lr mode ignores what time mentions resolve to") {
    Phase2Model no_associations = model;
    no_associations.associations.clear();
    for (const Document& d : test) {
      Document shifted = d;
      shifted.doctime = d.doctime.add_days(-4000);
      shifted.revisions.clear();
      const auto a = predict_docreltime(d, model, Phase2Mode::Lr);
      CHECK(predict_docreltime(shifted, model, Phase2Mode::Lr) == a);
      CHECK(predict_docreltime(d, no_associations, Phase2Mode::Lr) == a);
    }
  }
  SUBCASE("zero skip weights make lr+skip equal lr") {
    Phase2Model flat = model;
    const std::size_t off = flat.weights.pair_offset(FactorKind::Skip);
    for (std::size_t i = 0; i < 16; ++i) flat.weights.params[off + i] = 0.0;
    for (const Document& d : test) {
      CHECK(predict_docreltime(d, flat, Phase2Mode::LrSkip) == predict_docreltime(d, flat, Phase2Mode::Lr));
    }
  }
  SUBCASE("planted agreement gives a diagonal-dominant skip matrix") {
    for (int a = 0; a < kNumDocRelTime; ++a) {
      for (int b = 0; b < kNumDocRelTime; ++b) {
        if (a != b) CHECK(model.weights.pair(FactorKind::Skip, a, a) > model.weights.pair(FactorKind::Skip, a, b));
      }
    }
  }
  SUBCASE("save and load") {
    TempDir dir("phase2-save");
    save_phase2_model(dir.path(), model);
    const Phase2Model back = load_phase2_model(dir.path());
    CHECK(back.weights.params.size() == model.weights.params.size());
    CHECK(write_weights_tsv(back.weights) == write_weights_tsv(model.weights));
    CHECK(back.associations == model.associations);
    for (const Document& d : test) {
      CHECK(predict_docreltime(d, back, Phase2Mode::LrSkip) == predict_docreltime(d, model, Phase2Mode::LrSkip));
    }
  }
}

TEST_CASE("zero epochs give uniform beliefs") {
  Phase2Config c = quick_config();
  c.unigram_training.epochs = 0;
  c.skip_training.epochs = 0;
  const auto train = small_corpus(10, 5);
  const Phase2Model model = train_phase2(train, c, 1);
  const Phase2Graph g = build_phase2_graph(train[0], model);
  for (double s : unary_scores(g.graph, 0, model.weights)) CHECK(s == 0.0);
}

TEST_CASE("training needs labeled events") {
  auto docs = small_corpus(5, 6);
  for (Document& d : docs) {
    for (Span& s : d.gold_spans) s.doc_rel_time.reset();
  }
  CHECK_THROWS_AS(train_phase2(docs, quick_config(), 1), DataError);
}

TEST_CASE("predictions TSV round-trip") {
  const std::vector<DocumentPredictions> p{
      {"doc-1", {{Span{0, 4, "EVENT", {}}, DocRelTime::After}, {Span{9, 12, "EVENT", {}}, DocRelTime::BeforeOverlap}}},
      {"doc-2", {}}};
  const std::string text = write_predictions_tsv(p);
  CHECK(text.find("doc-1\t0\t4\tAfter") != std::string::npos);
  CHECK(write_predictions_tsv(read_predictions_tsv(text)) == text);
  CHECK(parse_phase2_mode("lr") == Phase2Mode::Lr);
  CHECK_THROWS_AS(parse_phase2_mode("skip"), ConfigError);
}

}  // TEST_SUITE
