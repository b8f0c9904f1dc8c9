#include "tempie/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tempie/iob2.h"

namespace tempie {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

int parse_offset(const std::string& field, std::size_t line) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size()) throw ParseError(line, "bad offset '" + field + "'");
  return value;
}

Date parse_date_field(const std::string& field, std::size_t line) {
  try {
    return Date::parse_iso(field);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
}

}  // namespace

std::string_view to_string(DocRelTime label) {
  switch (label) {
    case DocRelTime::Before: return "Before";
    case DocRelTime::Overlap: return "Overlap";
    case DocRelTime::BeforeOverlap: return "Before/Overlap";
    case DocRelTime::After: return "After";
  }
  return "?";
}

DocRelTime parse_doc_rel_time(std::string_view text) {
  const std::string t = lower(text);
  if (t == "before") return DocRelTime::Before;
  if (t == "overlap") return DocRelTime::Overlap;
  if (t == "before/overlap" || t == "before_overlap") return DocRelTime::BeforeOverlap;
  if (t == "after") return DocRelTime::After;
  throw std::invalid_argument("unknown DocRelTime label '" + std::string(text) + "'");
}

bool span_less(const Span& a, const Span& b) {
  return std::tie(a.begin, a.end, a.klass) < std::tie(b.begin, b.end, b.klass);
}

std::vector<Span> Document::spans_of(std::string_view klass) const {
  std::vector<Span> out;
  for (const Span& s : gold_spans) {
    if (s.klass == klass) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), span_less);
  return out;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const Sentence& s : sentences) n += s.size();
  return n;
}

void Document::validate() const {
  const auto fail = [this](const std::string& what) {
    throw ValidationError("document '" + id + "': " + what);
  };
  const int text_size = static_cast<int>(text.size());
  int previous_end = 0;
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const Sentence& sentence = sentences[si];
    if (sentence.tokens.empty()) fail("sentence " + std::to_string(si) + " is empty");
    for (const Token& tok : sentence.tokens) {
      if (tok.begin >= tok.end) fail("token '" + tok.surface + "' has empty range");
      if (tok.begin < previous_end) fail("token '" + tok.surface + "' overlaps or is out of order");
      if (tok.end > text_size) fail("token '" + tok.surface + "' extends past text");
      if (text.compare(tok.begin, tok.end - tok.begin, tok.surface) != 0) {
        fail("token surface '" + tok.surface + "' differs from text at [" +
             std::to_string(tok.begin) + "," + std::to_string(tok.end) + ")");
      }
      previous_end = tok.end;
    }
  }
  for (const Date& r : revisions) {
    if (r < doctime) fail("revision " + r.iso() + " precedes doctime " + doctime.iso());
  }
  if (pos_tags) {
    if (pos_tags->size() != sentences.size()) fail("pos_tags sentence count mismatch");
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      if ((*pos_tags)[si].size() != sentences[si].size()) {
        fail("pos_tags length mismatch in sentence " + std::to_string(si));
      }
    }
  }
  std::map<std::string, std::vector<Span>> by_class;
  for (const Span& s : gold_spans) {
    if (s.begin >= s.end) fail("span [" + std::to_string(s.begin) + "," + std::to_string(s.end) + ") is empty");
    if (s.begin < 0 || s.end > text_size) fail("span extends past text");
    by_class[s.klass].push_back(s);
  }
  for (auto& [klass, spans] : by_class) {
    std::sort(spans.begin(), spans.end(), span_less);
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].begin < spans[i - 1].end) fail("overlapping " + klass + " spans");
    }
  }
}

CorpusFormat parse_corpus_format(std::string_view name) {
  const std::string n = lower(name);
  if (n == "conll") return CorpusFormat::Conll;
  if (n == "json") return CorpusFormat::Json;
  throw std::invalid_argument("unknown corpus format '" + std::string(name) + "'");
}

CorpusFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? CorpusFormat::Json : CorpusFormat::Conll;
}

// CoNLL layout: "#doc id doctime [revisions...]" headers, one token per line
// as surface TAB begin TAB end TAB pos TAB iob2, blank lines between sentences.
std::vector<Document> read_conll(std::istream& in) {
  std::vector<Document> docs;
  std::vector<std::vector<Iob2Tag>> doc_tags;
  std::vector<bool> doc_has_pos;
  Sentence current;
  std::vector<std::string> current_pos;
  std::vector<Iob2Tag> current_tags;

  const auto flush_sentence = [&]() {
    if (current.tokens.empty()) return;
    Document& doc = docs.back();
    doc.sentences.push_back(std::move(current));
    if (!doc.pos_tags) doc.pos_tags.emplace();
    doc.pos_tags->push_back(std::move(current_pos));
    doc_tags.push_back(std::move(current_tags));
    current = {};
    current_pos.clear();
    current_tags.clear();
  };

  struct Pending {
    std::size_t first_sentence_tags;
  };
  std::vector<Pending> pending;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence();
      continue;
    }
    if (line.rfind("#doc", 0) == 0) {
      flush_sentence();
      std::istringstream header(line.substr(4));
      std::string id, doctime, rev;
      if (!(header >> id >> doctime)) throw ParseError(line_no, "document header needs id and doctime");
      Document doc;
      doc.id = id;
      doc.doctime = parse_date_field(doctime, line_no);
      while (header >> rev) doc.revisions.push_back(parse_date_field(rev, line_no));
      docs.push_back(std::move(doc));
      doc_has_pos.push_back(false);
      pending.push_back({doc_tags.size()});
      continue;
    }
    if (docs.empty()) throw ParseError(line_no, "token line before any #doc header");
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 tab-separated columns, found " + std::to_string(fields.size()));
    }
    Token tok{fields[0], parse_offset(fields[1], line_no), parse_offset(fields[2], line_no)};
    if (tok.surface.empty() || tok.begin < 0 || tok.end - tok.begin != static_cast<int>(tok.surface.size())) {
      throw ParseError(line_no, "token offsets do not match surface length");
    }
    try {
      current_tags.push_back(Iob2Tag::parse(fields[4]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    if (fields[3] != "_") doc_has_pos.back() = true;
    current_pos.push_back(fields[3]);
    current.tokens.push_back(std::move(tok));
  }
  flush_sentence();

  for (std::size_t d = 0; d < docs.size(); ++d) {
    Document& doc = docs[d];
    int length = 0;
    for (const Sentence& s : doc.sentences) length = std::max(length, s.end());
    doc.text.assign(static_cast<std::size_t>(length), ' ');
    for (const Sentence& s : doc.sentences) {
      for (const Token& t : s.tokens) doc.text.replace(t.begin, t.end - t.begin, t.surface);
    }
    const std::size_t first = pending[d].first_sentence_tags;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      for (Span& span : decode_iob2(doc_tags[first + si], doc.sentences[si].tokens)) {
        doc.gold_spans.push_back(std::move(span));
      }
    }
    if (!doc_has_pos[d]) doc.pos_tags.reset();
    doc.validate();
  }
  return docs;
}

void write_conll(std::ostream& out, const std::vector<Document>& docs) {
  for (const Document& doc : docs) {
    if (doc.id.empty() || doc.id.find_first_of(" \t\n") != std::string::npos) {
      throw CorpusError("document id '" + doc.id + "' cannot be written as CoNLL");
    }
    out << "#doc " << doc.id << ' ' << doc.doctime.iso();
    for (const Date& r : doc.revisions) out << ' ' << r.iso();
    out << '\n';
    std::vector<Span> spans = doc.gold_spans;
    std::sort(spans.begin(), spans.end(), span_less);
    std::vector<bool> used(spans.size(), false);
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const Sentence& s = doc.sentences[si];
      std::vector<Span> inside;
      for (std::size_t k = 0; k < spans.size(); ++k) {
        if (spans[k].begin >= s.begin() && spans[k].end <= s.end()) {
          inside.push_back(spans[k]);
          used[k] = true;
        }
      }
      TagSequence tags;
      try {
        tags = encode_iob2(inside, s.tokens);
      } catch (const std::invalid_argument& e) {
        throw CorpusError("document '" + doc.id + "': " + e.what());
      }
      for (std::size_t ti = 0; ti < s.size(); ++ti) {
        const Token& t = s.tokens[ti];
        if (t.surface.find_first_of("\t\n") != std::string::npos) {
          throw CorpusError("token with tab or newline cannot be written as CoNLL");
        }
        const std::string& pos = doc.pos_tags ? (*doc.pos_tags)[si][ti] : std::string("_");
        out << t.surface << '\t' << t.begin << '\t' << t.end << '\t' << pos << '\t'
            << tags[ti].str() << '\n';
      }
      out << '\n';
    }
    for (std::size_t k = 0; k < spans.size(); ++k) {
      if (!used[k]) throw CorpusError("document '" + doc.id + "': span crosses a sentence boundary");
    }
  }
}

namespace {

ordered_json document_to_json(const Document& doc) {
  ordered_json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["doctime"] = doc.doctime.iso();
  j["revisions"] = ordered_json::array();
  for (const Date& r : doc.revisions) j["revisions"].push_back(r.iso());
  j["sentences"] = ordered_json::array();
  for (const Sentence& s : doc.sentences) {
    ordered_json tokens = ordered_json::array();
    for (const Token& t : s.tokens) {
      tokens.push_back(ordered_json{{"surface", t.surface}, {"begin", t.begin}, {"end", t.end}});
    }
    j["sentences"].push_back(ordered_json{{"tokens", std::move(tokens)}});
  }
  j["pos_tags"] = doc.pos_tags ? ordered_json(*doc.pos_tags) : ordered_json(nullptr);
  j["gold_spans"] = ordered_json::array();
  for (const Span& s : doc.gold_spans) {
    ordered_json span{{"begin", s.begin}, {"end", s.end}, {"class", s.klass}};
    span["doc_rel_time"] =
        s.doc_rel_time ? ordered_json(std::string(to_string(*s.doc_rel_time))) : ordered_json(nullptr);
    j["gold_spans"].push_back(std::move(span));
  }
  return j;
}

Document document_from_json(const ordered_json& j) {
  static const std::vector<std::string> kKeys = {"id",        "text",     "doctime",   "revisions",
                                                 "sentences", "pos_tags", "gold_spans"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw CorpusError("unknown document field '" + key + "'");
    }
  }
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.text = j.at("text").get<std::string>();
  doc.doctime = Date::parse_iso(j.at("doctime").get<std::string>());
  for (const auto& r : j.at("revisions")) doc.revisions.push_back(Date::parse_iso(r.get<std::string>()));
  for (const auto& s : j.at("sentences")) {
    Sentence sentence;
    for (const auto& t : s.at("tokens")) {
      sentence.tokens.push_back(
          Token{t.at("surface").get<std::string>(), t.at("begin").get<int>(), t.at("end").get<int>()});
    }
    doc.sentences.push_back(std::move(sentence));
  }
  if (j.contains("pos_tags") && !j.at("pos_tags").is_null()) {
    doc.pos_tags = j.at("pos_tags").get<std::vector<std::vector<std::string>>>();
  }
  for (const auto& s : j.at("gold_spans")) {
    Span span{s.at("begin").get<int>(), s.at("end").get<int>(), s.at("class").get<std::string>(), {}};
    if (s.contains("doc_rel_time") && !s.at("doc_rel_time").is_null()) {
      span.doc_rel_time = parse_doc_rel_time(s.at("doc_rel_time").get<std::string>());
    }
    doc.gold_spans.push_back(std::move(span));
  }
  doc.validate();
  return doc;
}

}  // namespace

std::vector<Document> read_json_corpus(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    // byte offset -> line number
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(line, e.what());
  }
  std::vector<Document> docs;
  try {
    for (const auto& d : root.at("documents")) docs.push_back(document_from_json(d));
  } catch (const ordered_json::exception& e) {
    throw CorpusError(std::string("malformed corpus JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return docs;
}

std::string write_json_corpus(const std::vector<Document>& docs) {
  ordered_json root;
  root["documents"] = ordered_json::array();
  for (const Document& d : docs) root["documents"].push_back(document_to_json(d));
  return root.dump(1) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw CorpusError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (!std::filesystem::exists(path)) throw CorpusError("corpus file '" + path.string() + "' does not exist");
  if (format == CorpusFormat::Json) return read_json_corpus(read_file(path));
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open '" + path.string() + "'");
  return read_conll(in);
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs,
                 CorpusFormat format) {
  if (format == CorpusFormat::Json) {
    write_file_atomic(path, write_json_corpus(docs));
    return;
  }
  std::ostringstream out;
  write_conll(out, docs);
  write_file_atomic(path, out.str());
}

}  // namespace tempie

namespace tempie {

std::vector<Token> flat_tokens(const Document& doc) {
  std::vector<Token> out;
  out.reserve(doc.token_count());
  for (const Sentence& s : doc.sentences) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> token_range(std::span<const Token> tokens,
                                                               const Span& span) {
  const auto first = std::lower_bound(tokens.begin(), tokens.end(), span.begin,
                                      [](const Token& t, int offset) { return t.begin < offset; });
  if (first == tokens.end() || first->begin != span.begin) return std::nullopt;
  for (auto it = first; it != tokens.end() && it->begin < span.end; ++it) {
    if (it->end == span.end) {
      return std::make_pair(static_cast<std::size_t>(first - tokens.begin()),
                            static_cast<std::size_t>(it - tokens.begin()));
    }
  }
  return std::nullopt;
}

}  // namespace tempie
