#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "fixtures.h"
#include "tempie/commands.h"
#include "tempie/corpus.h"

using namespace tempie;
using tempie::testing::TempDir;
using Json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::string& command, const std::filesystem::path& config, std::optional<std::string> mode = {},
            std::optional<std::filesystem::path> out_dir = {}) {
  CommandOptions o;
  o.command = command;
  o.config = config;
  o.mode = std::move(mode);
  o.out = out_dir;
  std::ostringstream out, err;
  const int code = run_command(o, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path write_config(const TempDir& dir, const std::string& name, const Json& j) {
  const auto path = dir / name;
  write_file_atomic(path, j.dump(2));
  return path;
}

// A small corpus pair under dir/data.
void synthesize(const TempDir& dir) {
  const auto cfg = write_config(dir, "synth.json",
                                {{"seed", 3}, {"synth", {{"documents", 40}, {"test_documents", 10}}}, {"output", {{"dir", "data"}}}});
  REQUIRE(run("synth", cfg).code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes parseable, reproducible corpora") {
  TempDir dir("cli-synth");
  synthesize(dir);
  const auto docs = load_corpus(dir / "data/corpus.json", CorpusFormat::Json);
  CHECK(docs.size() == 40);
  CHECK(load_corpus(dir / "data/corpus.conll", CorpusFormat::Conll).size() == 40);
  CHECK(load_corpus(dir / "data/test.json", CorpusFormat::Json).size() == 10);
  CHECK(std::filesystem::exists(dir / "data/resolved_config.synth.json"));
  const std::string first = read_file(dir / "data/corpus.conll");
  synthesize(dir);
  CHECK(read_file(dir / "data/corpus.conll") == first);
}

TEST_CASE("configuration errors exit with code 2") {
  TempDir dir("cli-errors");
  const auto no_corpus = write_config(dir, "a.json", {{"task", "crf-run2"}});
  const Outcome missing = run("train", no_corpus);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("train") != std::string::npos);

  const auto absent = write_config(dir, "b.json", {{"task", "crf-run2"}, {"corpus", {{"train", "nowhere.json"}}}});
  CHECK(run("train", absent).code == 2);
  CHECK(run("train", write_config(dir, "c.json", {{"task", "crf-run9"}})).code == 2);
  CHECK(run("train", write_config(dir, "d.json", {{"task", "crf-run2"}, {"colour", 1}})).code == 2);
  CHECK(run("train", write_config(dir, "e.json", {{"model", {{"kynd", "crf"}}}})).code == 2);
  CHECK(run("train", dir / "does-not-exist.json").code == 2);
  CHECK(run("frobnicate", no_corpus).code == 2);

  std::vector<std::string> args{"tempie", "train"};
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  CHECK(cli_main(static_cast<int>(argv.size()), argv.data()) == 2);
}

TEST_CASE("train, tag and eval agree on the training-set score") {
  TempDir dir("cli-crf");
  synthesize(dir);
  const Json cfg{{"task", "crf-run2"},
                 {"seed", 5},
                 {"corpus",
                  {{"train", "data/corpus.json"},
                   {"input", "data/corpus.json"},
                   {"gold", "data/corpus.json"},
                   {"predictions", "tagged/tagged.json"}}},
                 {"model", {{"path", "crf/model"}}},
                 {"training", {{"epochs", 3}}},
                 {"eval", {{"class", "TIMEX3"}, {"mode", "exact"}}},
                 {"output", {{"dir", "crf"}}}};
  const auto path = write_config(dir, "crf.json", cfg);
  REQUIRE(run("train", path).code == 0);
  CHECK(std::filesystem::exists(dir / "crf/model/weights.tsv"));
  CHECK(std::filesystem::exists(dir / "crf/resolved_config.train.json"));
  const Json resolved = Json::parse(read_file(dir / "crf/resolved_config.train.json"));
  CHECK(resolved["training"]["epochs"] == 3);
  CHECK(resolved["training"]["learning_rate"].is_number());

  REQUIRE(run("tag", path, std::nullopt, dir / "tagged").code == 0);
  const Outcome e = run("eval", path, std::nullopt, dir / "report");
  REQUIRE(e.code == 0);
  const Json report = Json::parse(read_file(dir / "report/report.json"));
  const Json log = Json::parse(read_file(dir / "crf/train_log.json"));
  REQUIRE(report.size() == 1);
  CHECK(std::abs(report[0]["f1"].get<double>() - log["train_score"]["f1"].get<double>()) < 1e-6);
  CHECK(log["epochs"].size() == 3);
  CHECK(e.out.find("TIMEX3 (exact)") != std::string::npos);

  // Gibbs decoding of a chain model through --mode.
  CHECK(run("tag", path, "gibbs", dir / "gibbs").code == 0);
  CHECK(run("tag", path, "annealing", dir / "bad").code == 2);
  // A phase 1 model cannot serve predict.
  CHECK(run("predict", path, std::nullopt, dir / "p").code == 2);
}

TEST_CASE("eval of gold against itself and with mismatched ids") {
  TempDir dir("cli-eval");
  synthesize(dir);
  const auto self = write_config(dir, "self.json",
                                 {{"corpus", {{"gold", "data/test.json"}, {"predictions", "data/test.json"}}}});
  const Outcome o = run("eval", self);
  REQUIRE(o.code == 0);
  for (const auto& row : Json::parse(read_file(dir / "out/report.json"))) CHECK(row["f1"] == 1.0);
  CHECK(o.out.find("TIMEX3 (overlap)") != std::string::npos);

  const auto mismatched = write_config(dir, "mm.json",
                                       {{"corpus", {{"gold", "data/test.json"}, {"predictions", "data/corpus.json"}}}});
  const Outcome bad = run("eval", mismatched);
  CHECK(bad.code == 1);
  CHECK(bad.err.find("synth-00040") != std::string::npos);
}

TEST_CASE("empty input gives empty output") {
  TempDir dir("cli-empty");
  synthesize(dir);
  write_file_atomic(dir / "empty.json", "");
  const auto train = write_config(dir, "t.json",
                                  {{"task", "crf-run1"},
                                   {"corpus", {{"train", "data/corpus.json"}, {"input", "empty.json"}}},
                                   {"model", {{"path", "out/model"}}},
                                   {"training", {{"epochs", 1}}}});
  REQUIRE(run("train", train).code == 0);
  const Outcome tagged = run("tag", train, std::nullopt, dir / "tagged");
  CHECK(tagged.code == 0);
  CHECK(load_corpus(dir / "tagged/tagged.json", CorpusFormat::Json).empty());
}

TEST_CASE("phase 2 train, predict and label scoring") {
  TempDir dir("cli-phase2");
  synthesize(dir);
  const auto path = write_config(dir, "p2.json",
                                 {{"task", "phase2"},
                                  {"seed", 2},
                                  {"corpus",
                                   {{"train", "data/corpus.json"},
                                    {"input", "data/test.json"},
                                    {"gold", "data/test.json"},
                                    {"predictions", "pred/predictions.tsv"}}},
                                  {"model", {{"path", "out/model"}}},
                                  {"training", {{"epochs", 2}, {"gibbs_sweeps", 200}, {"gibbs_burn_in", 20}}}});
  REQUIRE(run("train", path).code == 0);
  REQUIRE(run("predict", path, std::nullopt, dir / "pred").code == 0);
  const std::string first = read_file(dir / "pred/predictions.tsv");
  REQUIRE(run("predict", path, std::nullopt, dir / "pred").code == 0);
  CHECK(read_file(dir / "pred/predictions.tsv") == first);
  const Outcome e = run("eval", path, std::nullopt, dir / "report");
  REQUIRE(e.code == 0);
  CHECK(e.out.find("DocRelTime micro") != std::string::npos);
  CHECK(run("predict", path, "lr", dir / "lr").code == 0);
  CHECK(run("tag", path, std::nullopt, dir / "t").code == 2);
}

TEST_CASE("RNN training, tagging and grid search") {
  TempDir dir("cli-rnn");
  synthesize(dir);
  const auto path = write_config(dir, "rnn.json",
                                 {{"task", "timex3"},
                                  {"seed", 4},
                                  {"corpus", {{"train", "data/corpus.json"}, {"dev", "data/test.json"}, {"input", "data/test.json"}}},
                                  {"model", {{"path", "out/model"}, {"dim", 16}}},
                                  {"training", {{"epochs", 2}, {"hidden", 12}, {"budget", 2}}}});
  REQUIRE(run("train", path).code == 0);
  const Json log = Json::parse(read_file(dir / "out/train_log.json"));
  CHECK(log["epochs"].size() == 2);
  CHECK(log["epochs"][0].contains("dev_f1"));
  REQUIRE(run("tag", path, std::nullopt, dir / "tagged").code == 0);
  CHECK(load_corpus(dir / "tagged/tagged.json", CorpusFormat::Json).size() == 10);
  REQUIRE(run("grid-search", path, std::nullopt, dir / "search").code == 0);
  const Json search = Json::parse(read_file(dir / "search/search.json"));
  CHECK(search["trials"].size() == 2);
}

}  // TEST_SUITE
