#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "fixtures.h"
#include "tempie/embeddings.h"
#include "tempie/error.h"
#include "tempie/features.h"

using namespace tempie;
using tempie::testing::make_doc;
using tempie::testing::token_span;

namespace {

PhraseDictionary dict_of(std::initializer_list<const char*> phrases) {
  PhraseDictionary d;
  d.klass = "EVENT";
  for (const char* p : phrases) {
    d.entries[p] = 1.0;
    d.max_length = std::max<std::size_t>(d.max_length, std::count(p, p + std::strlen(p), ' ') + 1);
  }
  return d;
}

std::vector<std::string> words(std::initializer_list<const char*> ws) { return {ws.begin(), ws.end()}; }

bool includes(const FeatureVector& big, const FeatureVector& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("memorization dictionary keeps phrases labeled at least half the time") {
  // "chest pain" occurs three times; two are gold EVENT spans. "cough" once of three.
  Document a = make_doc("a", {{"chest", "pain", "today"}, {"no", "cough", "."}});
  Document b = make_doc("b", {{"Chest", "pain", "again"}, {"cough", "resolved"}});
  Document c = make_doc("c", {{"denies", "chest", "pain"}, {"cough", "."}});
  a.gold_spans = {token_span(a, 0, 0, 1, kEvent), token_span(a, 1, 1, 1, kEvent)};
  b.gold_spans = {token_span(b, 0, 0, 1, kEvent)};
  const std::vector<Document> corpus{a, b, c};
  const PhraseDictionary d = build_memorization_dict(corpus, kEvent);
  REQUIRE(d.contains("chest pain"));
  CHECK(d.entries.at("chest pain") == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(d.contains("cough"));
  CHECK(d.max_length == 2);

  Document only = make_doc("o", {{"aspirin", "given"}});
  only.gold_spans = {token_span(only, 0, 0, 0, kEvent)};
  const std::vector<Document> single{only};
  CHECK(build_memorization_dict(single, kEvent).entries.at("aspirin") == 1.0);
}

TEST_CASE("dictionary TSV round-trip") {
  const PhraseDictionary d = dict_of({"chest pain", "fever"});
  const PhraseDictionary back = read_dictionary_tsv(write_dictionary_tsv(d), "EVENT");
  CHECK(back.entries == d.entries);
  CHECK(back.max_length == d.max_length);
}

TEST_CASE("greedy longest-match dictionary lookup") {
  CHECK(match_dictionary(words({"a", "b"}), dict_of({})) == std::vector<DictFlag>{DictFlag::None, DictFlag::None});
  CHECK(match_dictionary(words({"chest", "pain"}), dict_of({"chest pain", "pain"})) ==
        std::vector<DictFlag>{DictFlag::Begin, DictFlag::Inside});
  CHECK(match_dictionary(words({"a", "b", "c"}), dict_of({"a b", "b c"})) ==
        std::vector<DictFlag>{DictFlag::Begin, DictFlag::Inside, DictFlag::None});
  CHECK(match_dictionary(words({"pain", "pain"}), dict_of({"pain"})) ==
        std::vector<DictFlag>{DictFlag::Begin, DictFlag::Begin});
}

TEST_CASE("letter case") {
  CHECK(letter_case("CT") == "allcaps");
  CHECK(letter_case("Chest") == "initcap");
  CHECK(letter_case("pain") == "lower");
  CHECK(letter_case("iPhone") == "mixed");
  CHECK(letter_case("12/29") == "nonalpha");
}

TEST_CASE("feature templates per run") {
  const Document doc = make_doc("d", {{"MRI", "shows", "chest", "pain"}});
  const auto dicts = std::vector<PhraseDictionary>{dict_of({"chest pain"})};
  const std::vector<std::string> pos{"NN", "VBZ", "NN", "NN"};
  const SentenceContext ctx = make_sentence_context(doc.sentences[0].tokens, dicts, &pos);

  const FeatureVector run1 = extract_features(ctx, 0, FeatureRun::Run1);
  const FeatureVector expected{"case.allcaps",           "dict.EVENT.0=none",        "dict.EVENT.left1=<PAD>",
                               "dict.EVENT.left2=<PAD>", "dict.EVENT.right1=none",   "dict.EVENT.right2=B"};
  CHECK(run1 == expected);

  for (std::size_t i = 0; i < 4; ++i) {
    const FeatureVector r1 = extract_features(ctx, i, FeatureRun::Run1);
    const FeatureVector r2 = extract_features(ctx, i, FeatureRun::Run2);
    const FeatureVector r3 = extract_features(ctx, i, FeatureRun::Run3);
    CHECK(includes(r2, r1));
    CHECK(includes(r3, r2));
    CHECK(std::is_sorted(r3.begin(), r3.end()));
    CHECK(std::adjacent_find(r3.begin(), r3.end()) == r3.end());
    CHECK(extract_features(ctx, i, FeatureRun::Run3) == r3);
  }
  const FeatureVector start = extract_features(ctx, 0, FeatureRun::Run2);
  CHECK(std::count(start.begin(), start.end(), "win.left1=<PAD>") == 1);
  CHECK(std::count(start.begin(), start.end(), "win.left2=<PAD>") == 1);
  CHECK(std::count(start.begin(), start.end(), "win.0=mri") == 1);
  const FeatureVector with_pos = extract_features(ctx, 3, FeatureRun::Run3);
  CHECK(std::count(with_pos.begin(), with_pos.end(), "pos.left2=VBZ") == 1);

  const SentenceContext no_pos = make_sentence_context(doc.sentences[0].tokens, dicts, nullptr);
  CHECK_THROWS_AS(extract_features(no_pos, 0, FeatureRun::Run3), ConfigError);
  CHECK_THROWS(parse_feature_run(4));
}

}  // TEST_SUITE
