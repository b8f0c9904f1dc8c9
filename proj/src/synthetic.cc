#include "tempie/synthetic.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tempie/docreltime.h"
#include "tempie/error.h"
#include "tempie/rng.h"
#include "tempie/temporal.h"

namespace tempie {

using Json = nlohmann::ordered_json;

GeneratorSpec default_generator_spec() {
  GeneratorSpec spec;
  using enum DocRelTime;
  spec.timex_phrases = {
      {"currently", Overlap, {}, 1.0},      {"today", Overlap, {}, 1.0},
      {"at this time", Overlap, {}, 1.0},   {"now", Overlap, {}, 1.0},
      {"this morning", Overlap, {}, 1.0},   {"presently", Overlap, {}, 1.0},
      {"two weeks ago", Before, {}, 1.0},   {"3 years ago", Before, {}, 1.0},
      {"last year", Before, {}, 1.0},       {"previously", Before, {}, 1.0},
      {"yesterday", Before, {}, 1.0},       {"several months ago", Before, {}, 1.0},
      {"next week", After, {}, 1.0},        {"in 3 months", After, {}, 1.0},
      {"tomorrow", After, {}, 1.0},         {"next year", After, {}, 1.0},
      {"recently", BeforeOverlap, {}, 1.0}, {"over the past year", BeforeOverlap, {}, 1.0},
      {"lately", BeforeOverlap, {}, 1.0},
  };
  spec.event_phrases = {
      {"chest pain", {}},   {"nausea", {}},        {"colonoscopy", Before}, {"biopsy", Before},
      {"hypertension", Overlap}, {"shortness of breath", {}}, {"fever", {}}, {"rash", {}},
      {"surgery", After},   {"chemotherapy", {}}, {"diabetes", Overlap},  {"headache", {}},
      {"CT scan", {}},      {"MRI", {}},          {"fatigue", {}},        {"weight loss", {}},
  };
  spec.decoy_phrases = {"today", "now", "tomorrow", "recently", "yesterday", "currently"};
  spec.templates = {
      "{TIMEX} the patient reported {EVENT} .",
      "The patient was seen {TIMEX} and noted to have {EVENT} .",
      "{EVENT} was documented in the chart {TIMEX} .",
      "{TIMEX} , she was evaluated for {EVENT} in clinic .",
      "According to the note from {TIMEX} , a {EVENT} was performed .",
      "He describes {EVENT} that started {TIMEX} .",
      "Family history is notable for {EVENT} .",
      "The patient denies any {EVENT} .",
      "Review of systems is positive for {EVENT} .",
      "Follow up is planned {TIMEX} .",
      "Labs were drawn {TIMEX} and reviewed with the patient .",
      "Vital signs are stable .",
      "Will continue to monitor closely .",
      "The patient was counseled on diet and exercise .",
      "Please check the {DECOY} column of the flowsheet .",
  };
  spec.pos_lexicon = {
      {"the", "DT"},        {"a", "DT"},          {"any", "DT"},       {"patient", "NN"},
      {"reported", "VBD"},  {"was", "VBD"},       {"were", "VBD"},     {"seen", "VBN"},
      {"and", "CC"},        {"noted", "VBN"},     {"to", "TO"},        {"have", "VB"},
      {"documented", "VBN"}, {"in", "IN"},        {"chart", "NN"},     {"she", "PRP"},
      {"he", "PRP"},        {"evaluated", "VBN"}, {"for", "IN"},       {"clinic", "NN"},
      {"according", "VBG"}, {"note", "NN"},       {"from", "IN"},      {"performed", "VBN"},
      {"describes", "VBZ"}, {"that", "WDT"},      {"started", "VBD"},  {"family", "NN"},
      {"history", "NN"},    {"is", "VBZ"},        {"notable", "JJ"},   {"denies", "VBZ"},
      {"review", "NN"},     {"of", "IN"},         {"systems", "NNS"},  {"positive", "JJ"},
      {"follow", "VB"},     {"up", "RP"},         {"planned", "VBN"},  {"labs", "NNS"},
      {"drawn", "VBN"},     {"reviewed", "VBN"},  {"with", "IN"},      {"vital", "JJ"},
      {"signs", "NNS"},     {"are", "VBP"},       {"stable", "JJ"},    {"will", "MD"},
      {"continue", "VB"},   {"monitor", "VB"},    {"closely", "RB"},   {"counseled", "VBN"},
      {"on", "IN"},         {"diet", "NN"},       {"exercise", "NN"},  {"please", "UH"},
      {"check", "VB"},      {"column", "NN"},     {"flowsheet", "NN"}, {"currently", "RB"},
      {"today", "NN"},      {"at", "IN"},         {"this", "DT"},      {"time", "NN"},
      {"now", "RB"},        {"morning", "NN"},    {"presently", "RB"}, {"two", "CD"},
      {"weeks", "NNS"},     {"ago", "RB"},        {"years", "NNS"},    {"last", "JJ"},
      {"year", "NN"},       {"previously", "RB"}, {"yesterday", "NN"}, {"several", "JJ"},
      {"months", "NNS"},    {"next", "JJ"},       {"week", "NN"},      {"tomorrow", "NN"},
      {"recently", "RB"},   {"over", "IN"},       {"past", "JJ"},      {"lately", "RB"},
      {"shortness", "NN"},  {"breath", "NN"},     {"weight", "NN"},    {"loss", "NN"},
      {"january", "NNP"},   {"february", "NNP"},  {"march", "NNP"},    {"april", "NNP"},
      {"may", "NNP"},       {"june", "NNP"},      {"july", "NNP"},     {"august", "NNP"},
      {"september", "NNP"}, {"october", "NNP"},   {"november", "NNP"}, {"december", "NNP"},
  };
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

DocRelTime label_from_json(const Json& j) {
  try {
    return parse_doc_rel_time(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad DocRelTime label: ") + e.what());
  }
}

Date date_from_json(const Json& j) {
  try {
    return Date::parse_iso(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad date: ") + e.what());
  }
}

}  // namespace

GeneratorSpec generator_spec_from_json(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("generator spec is not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"documents", "min_sentences", "max_sentences", "doctime_start", "doctime_end", "revision_probability",
              "max_revision_days", "date_fraction", "tendency_strength", "event_prior_strength", "timex_phrases",
              "event_phrases", "decoy_phrases", "templates", "pos_lexicon"},
             "generator spec");
  GeneratorSpec spec = default_generator_spec();
  try {
    if (root.contains("documents")) spec.documents = root["documents"].get<int>();
    if (root.contains("min_sentences")) spec.min_sentences = root["min_sentences"].get<int>();
    if (root.contains("max_sentences")) spec.max_sentences = root["max_sentences"].get<int>();
    if (root.contains("doctime_start")) spec.doctime_start = date_from_json(root["doctime_start"]);
    if (root.contains("doctime_end")) spec.doctime_end = date_from_json(root["doctime_end"]);
    if (root.contains("revision_probability")) spec.revision_probability = root["revision_probability"].get<double>();
    if (root.contains("max_revision_days")) spec.max_revision_days = root["max_revision_days"].get<int>();
    if (root.contains("date_fraction")) spec.date_fraction = root["date_fraction"].get<double>();
    if (root.contains("tendency_strength")) spec.tendency_strength = root["tendency_strength"].get<double>();
    if (root.contains("event_prior_strength")) spec.event_prior_strength = root["event_prior_strength"].get<double>();
    if (root.contains("timex_phrases")) {
      spec.timex_phrases.clear();
      for (const Json& t : root["timex_phrases"]) {
        check_keys(t, {"phrase", "tendency", "strength", "weight"}, "timex phrase");
        TimexPhrase p;
        p.phrase = t.at("phrase").get<std::string>();
        p.tendency = label_from_json(t.at("tendency"));
        if (t.contains("strength") && !t["strength"].is_null()) p.strength = t["strength"].get<double>();
        if (t.contains("weight")) p.weight = t["weight"].get<double>();
        spec.timex_phrases.push_back(std::move(p));
      }
    }
    if (root.contains("event_phrases")) {
      spec.event_phrases.clear();
      for (const Json& e : root["event_phrases"]) {
        check_keys(e, {"phrase", "tendency"}, "event phrase");
        EventPhrase p;
        p.phrase = e.at("phrase").get<std::string>();
        if (e.contains("tendency") && !e["tendency"].is_null()) p.tendency = label_from_json(e["tendency"]);
        spec.event_phrases.push_back(std::move(p));
      }
    }
    if (root.contains("decoy_phrases")) spec.decoy_phrases = root["decoy_phrases"].get<std::vector<std::string>>();
    if (root.contains("templates")) spec.templates = root["templates"].get<std::vector<std::string>>();
    if (root.contains("pos_lexicon")) {
      spec.pos_lexicon.clear();
      for (const auto& [word, tag] : root["pos_lexicon"].items()) spec.pos_lexicon.emplace_back(word, tag.get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed generator spec: ") + e.what());
  }
  return spec;
}

std::string generator_spec_to_json(const GeneratorSpec& spec) {
  Json root;
  root["documents"] = spec.documents;
  root["min_sentences"] = spec.min_sentences;
  root["max_sentences"] = spec.max_sentences;
  root["doctime_start"] = spec.doctime_start.iso();
  root["doctime_end"] = spec.doctime_end.iso();
  root["revision_probability"] = spec.revision_probability;
  root["max_revision_days"] = spec.max_revision_days;
  root["date_fraction"] = spec.date_fraction;
  root["tendency_strength"] = spec.tendency_strength;
  root["event_prior_strength"] = spec.event_prior_strength;
  root["timex_phrases"] = Json::array();
  for (const TimexPhrase& t : spec.timex_phrases) {
    Json j;
    j["phrase"] = t.phrase;
    j["tendency"] = std::string(to_string(t.tendency));
    j["strength"] = t.strength ? Json(*t.strength) : Json(nullptr);
    j["weight"] = t.weight;
    root["timex_phrases"].push_back(std::move(j));
  }
  root["event_phrases"] = Json::array();
  for (const EventPhrase& e : spec.event_phrases) {
    Json j;
    j["phrase"] = e.phrase;
    j["tendency"] = e.tendency ? Json(std::string(to_string(*e.tendency))) : Json(nullptr);
    root["event_phrases"].push_back(std::move(j));
  }
  root["decoy_phrases"] = spec.decoy_phrases;
  root["templates"] = spec.templates;
  root["pos_lexicon"] = Json::object();
  for (const auto& [word, tag] : spec.pos_lexicon) root["pos_lexicon"][word] = tag;
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Generation

std::string render_date(const Date& date, int style) {
  static const std::array<const char*, 12> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                                      "July",    "August",   "September", "October", "November", "December"};
  const std::string month = kMonths[static_cast<std::size_t>(date.month - 1)];
  char buf[64];
  switch (((style % kDateStyles) + kDateStyles) % kDateStyles) {
    case 0: std::snprintf(buf, sizeof buf, "%d/%d/%02d", date.month, date.day, date.year % 100); break;
    case 1: std::snprintf(buf, sizeof buf, "%d/%d/%04d", date.month, date.day, date.year); break;
    case 2: std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", date.year, date.month, date.day); break;
    case 3: std::snprintf(buf, sizeof buf, "%02d-%s-%04d", date.day, month.substr(0, 3).c_str(), date.year); break;
    case 4: std::snprintf(buf, sizeof buf, "%s %d", month.c_str(), date.day); break;
    case 5: std::snprintf(buf, sizeof buf, "%s %d , %04d", month.c_str(), date.day, date.year); break;
    default: std::snprintf(buf, sizeof buf, "%s %04d", month.c_str(), date.year); break;
  }
  return buf;
}

namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool attaches_left(std::string_view token) { return token == "." || token == ","; }

std::string pos_of(const std::string& surface, const std::map<std::string, std::string>& lexicon) {
  std::string lower;
  for (char c : surface) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (const auto it = lexicon.find(lower); it != lexicon.end()) return it->second;
  if (std::any_of(surface.begin(), surface.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return "CD";
  }
  if (std::none_of(surface.begin(), surface.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); })) {
    return surface;
  }
  return "NN";
}

DocRelTime other_label(DocRelTime label, Rng& rng) {
  int k = static_cast<int>(rng.below(kNumDocRelTime - 1));
  if (k >= static_cast<int>(label)) ++k;
  return static_cast<DocRelTime>(k);
}

// A mention planted while rendering: its span plus where it came from.
struct Planted {
  Span span;
  int phrase = -1;  // index into the timex or event lexicon; -1 for dates
};

class DocumentBuilder {
 public:
  explicit DocumentBuilder(Document& doc) : doc_(doc) {}

  void begin_sentence(bool newline) {
    if (!doc_.text.empty()) doc_.text += newline ? "\n" : " ";
    doc_.sentences.emplace_back();
  }

  // Appends tokens; returns the covered character range.
  std::pair<int, int> append(const std::vector<std::string>& words, bool capitalize_first) {
    int first = -1;
    for (std::string w : words) {
      Sentence& s = doc_.sentences.back();
      if (capitalize_first && s.tokens.empty() && !w.empty()) {
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      }
      if (!s.tokens.empty() && !attaches_left(w)) doc_.text += ' ';
      const int begin = static_cast<int>(doc_.text.size());
      doc_.text += w;
      s.tokens.push_back(Token{w, begin, static_cast<int>(doc_.text.size())});
      if (first < 0) first = begin;
    }
    return {first, static_cast<int>(doc_.text.size())};
  }

 private:
  Document& doc_;
};

Date pick_date(const Date& doctime, const Date& last_revision, Rng& rng) {
  switch (rng.below(3)) {
    case 0: return doctime.add_days(-rng.between(1, 1500));
    case 1: return doctime.add_days(rng.between(0, static_cast<int>(last_revision.serial() - doctime.serial())));
    default: return last_revision.add_days(rng.between(1, 400));
  }
}

void validate_spec(const GeneratorSpec& spec) {
  if (spec.documents < 0) throw ConfigError("documents must be non-negative");
  if (spec.documents == 0) return;
  if (spec.timex_phrases.empty()) throw ConfigError("generator spec has an empty timex lexicon");
  if (spec.event_phrases.empty()) throw ConfigError("generator spec has an empty event lexicon");
  if (spec.templates.empty()) throw ConfigError("generator spec has no sentence templates");
  if (spec.min_sentences < 1 || spec.max_sentences < spec.min_sentences) {
    throw ConfigError("need 1 <= min_sentences <= max_sentences");
  }
  if (spec.doctime_end < spec.doctime_start) throw ConfigError("doctime_end precedes doctime_start");
  for (double p : {spec.revision_probability, spec.date_fraction, spec.tendency_strength, spec.event_prior_strength}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("generator probabilities must lie in [0, 1]");
  }
  if (spec.max_revision_days < 1) throw ConfigError("max_revision_days must be at least 1");
  for (const TimexPhrase& t : spec.timex_phrases) {
    if (split_words(t.phrase).empty()) throw ConfigError("empty timex phrase");
    if (parse_date_expression(t.phrase)) throw ConfigError("timex phrase '" + t.phrase + "' parses as a date");
    if (!(t.weight > 0.0)) throw ConfigError("timex phrase weights must be positive");
    if (t.strength && !(*t.strength >= 0.0 && *t.strength <= 1.0)) throw ConfigError("strength must lie in [0, 1]");
  }
  for (const EventPhrase& e : spec.event_phrases) {
    if (split_words(e.phrase).empty()) throw ConfigError("empty event phrase");
  }
  for (const std::string& t : spec.templates) {
    if (t.find("{DECOY}") != std::string::npos && spec.decoy_phrases.empty()) {
      throw ConfigError("a template uses {DECOY} but the decoy lexicon is empty");
    }
    if (split_words(t).empty()) throw ConfigError("empty sentence template");
  }
}

Document generate_document(const GeneratorSpec& spec, std::uint64_t seed, int index,
                           const std::map<std::string, std::string>& lexicon, std::span<const double> timex_weights) {
  Rng rng(derive_seed(seed, "document-" + std::to_string(index)));
  Document doc;
  char id[32];
  std::snprintf(id, sizeof id, "synth-%05d", index);
  doc.id = id;
  const auto lo = spec.doctime_start.serial(), hi = spec.doctime_end.serial();
  doc.doctime = Date::from_serial(lo + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(hi - lo) + 1)));
  if (rng.bernoulli(spec.revision_probability)) {
    const int n = rng.between(1, 3);
    for (int k = 0; k < n; ++k) doc.revisions.push_back(doc.doctime.add_days(rng.between(1, spec.max_revision_days)));
    std::sort(doc.revisions.begin(), doc.revisions.end());
    doc.revisions.erase(std::unique(doc.revisions.begin(), doc.revisions.end()), doc.revisions.end());
  }
  const Date last_revision = doc.revisions.empty() ? doc.doctime : doc.revisions.back();

  std::vector<Planted> timexes, events;
  DocumentBuilder builder(doc);
  const int sentences = rng.between(spec.min_sentences, spec.max_sentences);
  for (int s = 0; s < sentences; ++s) {
    builder.begin_sentence(rng.bernoulli(0.2));
    const std::vector<std::string> parts = split_words(rng.pick(spec.templates));
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const bool first = p == 0;
      if (parts[p] == "{TIMEX}") {
        Planted t;
        std::vector<std::string> words;
        if (rng.bernoulli(spec.date_fraction)) {
          words = split_words(render_date(pick_date(doc.doctime, last_revision, rng), rng.between(0, kDateStyles - 1)));
        } else {
          t.phrase = static_cast<int>(rng.categorical(timex_weights));
          words = split_words(spec.timex_phrases[static_cast<std::size_t>(t.phrase)].phrase);
        }
        const auto [b, e] = builder.append(words, first);
        t.span = Span{b, e, std::string(kTimex3), std::nullopt};
        timexes.push_back(std::move(t));
      } else if (parts[p] == "{EVENT}") {
        Planted ev;
        ev.phrase = static_cast<int>(rng.below(spec.event_phrases.size()));
        const auto [b, e] = builder.append(split_words(spec.event_phrases[static_cast<std::size_t>(ev.phrase)].phrase), first);
        ev.span = Span{b, e, std::string(kEvent), std::nullopt};
        events.push_back(std::move(ev));
      } else if (parts[p] == "{DECOY}") {
        builder.append(split_words(rng.pick(spec.decoy_phrases)), first);
      } else {
        builder.append({parts[p]}, first);
      }
    }
  }

  // Time mention labels: dates through the canonicalization path, phrases
  // by their planted tendency.
  for (const Planted& t : timexes) doc.gold_spans.push_back(t.span);
  const std::vector<std::optional<Date>> dates = resolve_document_dates(doc);
  std::vector<Span> timex_spans;
  std::vector<double> strengths;
  for (std::size_t i = 0; i < timexes.size(); ++i) {
    Span& span = doc.gold_spans[i];
    if (timexes[i].phrase < 0) {
      span.doc_rel_time = classify_date_docreltime(*dates[i], doc.doctime, doc.revisions);
      strengths.push_back(spec.tendency_strength);
    } else {
      const TimexPhrase& phrase = spec.timex_phrases[static_cast<std::size_t>(timexes[i].phrase)];
      span.doc_rel_time = phrase.tendency;
      strengths.push_back(phrase.strength.value_or(spec.tendency_strength));
    }
    timex_spans.push_back(span);
  }
  for (Planted& ev : events) {
    if (const auto near = nearest_timex3(ev.span, timex_spans)) {
      const DocRelTime anchor = *timex_spans[*near].doc_rel_time;
      ev.span.doc_rel_time = rng.bernoulli(strengths[*near]) ? anchor : other_label(anchor, rng);
    } else {
      const auto& tendency = spec.event_phrases[static_cast<std::size_t>(ev.phrase)].tendency;
      if (tendency && rng.bernoulli(spec.event_prior_strength)) {
        ev.span.doc_rel_time = *tendency;
      } else {
        ev.span.doc_rel_time = static_cast<DocRelTime>(rng.below(kNumDocRelTime));
      }
    }
    doc.gold_spans.push_back(ev.span);
  }
  std::sort(doc.gold_spans.begin(), doc.gold_spans.end(), span_less);

  std::vector<std::vector<std::string>> pos;
  for (const Sentence& s : doc.sentences) {
    std::vector<std::string>& tags = pos.emplace_back();
    for (const Token& t : s.tokens) tags.push_back(pos_of(t.surface, lexicon));
  }
  doc.pos_tags = std::move(pos);
  return doc;
}

}  // namespace

std::vector<Document> generate_synthetic_corpus(const GeneratorSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  const std::map<std::string, std::string> lexicon(spec.pos_lexicon.begin(), spec.pos_lexicon.end());
  std::vector<double> weights;
  for (const TimexPhrase& t : spec.timex_phrases) weights.push_back(t.weight);
  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(spec.documents));
  for (int d = 0; d < spec.documents; ++d) {
    docs.push_back(generate_document(spec, seed, d, lexicon, weights));
    docs.back().validate();
  }
  return docs;
}

}  // namespace tempie
