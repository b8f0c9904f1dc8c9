#include <doctest.h>

#include <sstream>

#include "fixtures.h"
#include "tempie/corpus.h"
#include "tempie/error.h"
#include "tempie/synthetic.h"

using namespace tempie;
using tempie::testing::make_doc;
using tempie::testing::TempDir;
using tempie::testing::token_span;

TEST_SUITE("corpus") {

TEST_CASE("date arithmetic and ISO parsing") {
  CHECK(Date{1970, 1, 1}.serial() == 0);
  CHECK(Date{2000, 3, 1}.serial() - Date{2000, 2, 28}.serial() == 2);
  CHECK(Date::from_serial(Date{2016, 2, 29}.serial()) == Date{2016, 2, 29});
  CHECK(Date{2010, 1, 31}.add_days(1) == Date{2010, 2, 1});
  CHECK(Date::parse_iso("2008-12-29") == Date{2008, 12, 29});
  CHECK_THROWS_AS(Date::parse_iso("2009-02-29"), std::invalid_argument);
  CHECK_THROWS_AS(Date::parse_iso("2009-2-1x"), std::invalid_argument);
  CHECK(days_in_month(1900, 2) == 28);
  CHECK(days_in_month(2000, 2) == 29);
}

TEST_CASE("DocRelTime labels parse their canonical spellings") {
  for (DocRelTime l : {DocRelTime::Before, DocRelTime::Overlap, DocRelTime::BeforeOverlap, DocRelTime::After}) {
    CHECK(parse_doc_rel_time(to_string(l)) == l);
  }
  CHECK(parse_doc_rel_time("before/overlap") == DocRelTime::BeforeOverlap);
  CHECK_THROWS_AS(parse_doc_rel_time("During"), std::invalid_argument);
}

TEST_CASE("validation catches broken offsets, revisions and overlapping spans") {
  Document doc = make_doc("d", {{"Pain", "resolved", "."}});
  CHECK_NOTHROW(doc.validate());

  Document bad_surface = doc;
  bad_surface.sentences[0].tokens[0].surface = "Pian";
  CHECK_THROWS_AS(bad_surface.validate(), ValidationError);

  Document bad_revision = doc;
  bad_revision.revisions = {Date{2009, 1, 1}};
  CHECK_THROWS_AS(bad_revision.validate(), ValidationError);

  Document overlapping = doc;
  overlapping.gold_spans = {token_span(doc, 0, 0, 1, kEvent), token_span(doc, 0, 1, 1, kEvent)};
  CHECK_THROWS_AS(overlapping.validate(), ValidationError);

  // Different layers may overlap.
  Document layered = doc;
  layered.gold_spans = {token_span(doc, 0, 0, 1, kEvent), token_span(doc, 0, 1, 1, kTimex3)};
  CHECK_NOTHROW(layered.validate());
}

TEST_CASE("a two-sentence CoNLL block with one B/I pair loads as one span") {
  std::istringstream in(
      "#doc note-1 2010-01-05 2010-01-20\n"
      "Chest\t0\t5\tNN\tB-EVENT\n"
      "pain\t6\t10\tNN\tI-EVENT\n"
      ".\t10\t11\t.\tO\n"
      "\n"
      "Better\t12\t18\tJJR\tO\n"
      "today\t19\t24\tNN\tO\n");
  const auto docs = read_conll(in);
  REQUIRE(docs.size() == 1);
  const Document& d = docs[0];
  CHECK(d.id == "note-1");
  CHECK(d.doctime == Date{2010, 1, 5});
  CHECK(d.revisions == std::vector<Date>{Date{2010, 1, 20}});
  CHECK(d.sentences.size() == 2);
  REQUIRE(d.gold_spans.size() == 1);
  CHECK(d.gold_spans[0].begin == 0);
  CHECK(d.gold_spans[0].end == 10);
  CHECK(d.gold_spans[0].klass == "EVENT");
  CHECK(d.text.substr(0, 10) == "Chest pain");
  REQUIRE(d.pos_tags.has_value());
  CHECK((*d.pos_tags)[1] == std::vector<std::string>{"JJR", "NN"});
}

TEST_CASE("CoNLL parse errors carry line numbers") {
  std::istringstream in("#doc a 2010-01-05\nword\t0\t4\tNN\n");
  try {
    read_conll(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream offsets("#doc a 2010-01-05\nword\t0\t3\tNN\tO\n");
  CHECK_THROWS_AS(read_conll(offsets), ParseError);
}

TEST_CASE("empty files load as no documents") {
  TempDir dir("corpus-empty");
  write_file_atomic(dir / "empty.conll", "");
  write_file_atomic(dir / "empty.json", "");
  CHECK(load_corpus(dir / "empty.conll", CorpusFormat::Conll).empty());
  CHECK(load_corpus(dir / "empty.json", CorpusFormat::Json).empty());
}

TEST_CASE("JSON round-trips byte-identically and CoNLL preserves documents") {
  GeneratorSpec spec = default_generator_spec();
  spec.documents = 15;
  const auto docs = generate_synthetic_corpus(spec, 11);
  TempDir dir("corpus-roundtrip");
  save_corpus(dir / "a.json", docs, CorpusFormat::Json);
  const auto loaded = load_corpus(dir / "a.json", CorpusFormat::Json);
  CHECK(loaded == docs);
  save_corpus(dir / "b.json", loaded, CorpusFormat::Json);
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));

  save_corpus(dir / "a.conll", docs, CorpusFormat::Conll);
  const auto from_conll = load_corpus(dir / "a.conll", CorpusFormat::Conll);
  REQUIRE(from_conll.size() == docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CHECK(from_conll[i].id == docs[i].id);
    CHECK(from_conll[i].sentences == docs[i].sentences);
    CHECK(from_conll[i].doctime == docs[i].doctime);
    CHECK(from_conll[i].revisions == docs[i].revisions);
    CHECK(from_conll[i].pos_tags == docs[i].pos_tags);
    // CoNLL has no DocRelTime column.
    auto spans = docs[i].gold_spans;
    for (Span& s : spans) s.doc_rel_time.reset();
    CHECK(from_conll[i].gold_spans == spans);
  }
}

TEST_CASE("unknown JSON fields are rejected") {
  CHECK_THROWS_AS(read_json_corpus(R"([{"id":"a","text":"","sentences":[],"doctime":"2010-01-01","extra":1}])"),
                  CorpusError);
}

TEST_CASE("flat tokens and token ranges") {
  const Document doc = make_doc("d", {{"a", "b"}, {"c", "d", "e"}});
  const auto tokens = flat_tokens(doc);
  REQUIRE(tokens.size() == 5);
  const auto r = token_range(tokens, token_span(doc, 1, 0, 1, kEvent));
  REQUIRE(r.has_value());
  CHECK(r->first == 2);
  CHECK(r->second == 3);
  CHECK_FALSE(token_range(tokens, Span{0, 2, "X", {}}).has_value());
}

}  // TEST_SUITE
