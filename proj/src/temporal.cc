#include "tempie/temporal.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <sstream>

#include "tempie/embeddings.h"

namespace tempie {

namespace {

std::optional<int> month_number(std::string name) {
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::array<const char*, 12> kFull = {"january", "february", "march",     "april",
                                                    "may",     "june",     "july",      "august",
                                                    "september", "october", "november", "december"};
  for (int m = 0; m < 12; ++m) {
    const std::string full = kFull[m];
    if (name == full || name == full.substr(0, 3)) return m + 1;
  }
  if (name == "sept") return 9;
  return std::nullopt;
}

int expand_year(const std::string& digits) {
  const int y = std::stoi(digits);
  if (digits.size() == 2) return y <= 29 ? 2000 + y : 1900 + y;
  return y;
}

bool plausible_month_day(int month, int day) { return month >= 1 && month <= 12 && day >= 1 && day <= 31; }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;
const char* const kMonthPattern =
    "(january|february|march|april|may|june|july|august|september|october|november|december|"
    "jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)";

}  // namespace

std::optional<PartialDate> parse_date_expression(std::string_view raw) {
  static const std::regex kSlash(R"(^(\d{1,2})/(\d{1,2})/(\d{4}|\d{2})$)", kIcase);
  static const std::regex kIso(R"(^(\d{4})-(\d{1,2})-(\d{1,2})$)", kIcase);
  static const std::regex kDayMonYear(std::string(R"(^(\d{1,2})-)") + kMonthPattern + R"(-(\d{4})$)", kIcase);
  static const std::regex kMonthDay(
      std::string("^") + kMonthPattern + R"(\.?\s+(\d{1,2})(?:st|nd|rd|th)?(?:\s*,?\s*(\d{4}))?$)", kIcase);
  static const std::regex kMonthYear(std::string("^") + kMonthPattern + R"(\.?\s*,?\s+(\d{4})$)", kIcase);
  static const std::regex kYear(R"(^(19|20)(\d{2})$)", kIcase);

  const std::string text = trim(raw);
  std::smatch m;
  if (std::regex_match(text, m, kSlash)) {
    const int month = std::stoi(m[1]), day = std::stoi(m[2]);
    if (!plausible_month_day(month, day)) return std::nullopt;
    return PartialDate{expand_year(m[3]), month, day};
  }
  if (std::regex_match(text, m, kIso)) {
    const int month = std::stoi(m[2]), day = std::stoi(m[3]);
    if (!plausible_month_day(month, day)) return std::nullopt;
    return PartialDate{std::stoi(m[1]), month, day};
  }
  if (std::regex_match(text, m, kDayMonYear)) {
    const int day = std::stoi(m[1]);
    const int month = *month_number(m[2]);
    if (!plausible_month_day(month, day)) return std::nullopt;
    return PartialDate{std::stoi(m[3]), month, day};
  }
  if (std::regex_match(text, m, kMonthYear)) {
    return PartialDate{std::stoi(m[2]), *month_number(m[1]), std::nullopt};
  }
  if (std::regex_match(text, m, kMonthDay)) {
    const int month = *month_number(m[1]);
    const int day = std::stoi(m[2]);
    if (!plausible_month_day(month, day)) return std::nullopt;
    PartialDate d{std::nullopt, month, day};
    if (m[3].matched) d.year = std::stoi(m[3]);
    return d;
  }
  if (std::regex_match(text, m, kYear)) {
    return PartialDate{std::stoi(text), std::nullopt, std::nullopt};
  }
  return std::nullopt;
}

Date resolve_partial_date(const PartialDate& date, std::span<const Date> preceding, const Date& doctime) {
  Date out;
  if (date.year) {
    out.year = *date.year;
  } else {
    out.year = preceding.empty() ? doctime.year : preceding.back().year;
  }
  out.month = std::clamp(date.month.value_or(1), 1, 12);
  out.day = std::clamp(date.day.value_or(1), 1, days_in_month(out.year, out.month));
  return out;
}

DocRelTime classify_date_docreltime(const Date& date, const Date& doctime, std::span<const Date> revisions) {
  Date last = doctime;
  for (const Date& r : revisions) last = std::max(last, r);
  if (date < doctime) return DocRelTime::Before;
  if (date <= last) return DocRelTime::Overlap;
  return DocRelTime::After;
}

std::string mention_phrase(const Document& doc, std::span<const Token> tokens, const Span& mention) {
  std::string phrase;
  const auto range = token_range(tokens, mention);
  if (!range) return normalize_word(doc.text.substr(mention.begin, mention.end - mention.begin));
  for (std::size_t i = range->first; i <= range->second; ++i) {
    if (!phrase.empty()) phrase += ' ';
    phrase += normalize_word(tokens[i].surface);
  }
  return phrase;
}

namespace {

std::string mention_text(const Document& doc, const Span& span) {
  return doc.text.substr(span.begin, span.end - span.begin);
}

std::size_t token_gap(std::pair<std::size_t, std::size_t> a, std::pair<std::size_t, std::size_t> b) {
  if (a.second < b.first) return b.first - a.second;
  if (b.second < a.first) return a.first - b.second;
  return 0;
}

}  // namespace

PhraseAssociations learn_phrase_associations(std::span<const Document> corpus, int proximity) {
  std::map<std::string, std::array<int, kNumDocRelTime>> tallies;
  for (const Document& doc : corpus) {
    const std::vector<Token> tokens = flat_tokens(doc);
    const std::vector<Span> events = doc.spans_of(kEvent);
    std::vector<std::pair<std::size_t, std::size_t>> event_ranges;
    std::vector<DocRelTime> event_labels;
    for (const Span& e : events) {
      const auto r = token_range(tokens, e);
      if (!r || !e.doc_rel_time) continue;
      event_ranges.push_back(*r);
      event_labels.push_back(*e.doc_rel_time);
    }
    for (const Span& t : doc.spans_of(kTimex3)) {
      if (parse_date_expression(mention_text(doc, t))) continue;
      const auto r = token_range(tokens, t);
      if (!r) continue;
      for (std::size_t k = 0; k < event_ranges.size(); ++k) {
        if (token_gap(*r, event_ranges[k]) > static_cast<std::size_t>(proximity)) continue;
        // Created on first nearby event only, so isolated phrases stay absent.
        auto& counts = tallies.try_emplace(mention_phrase(doc, tokens, t)).first->second;
        ++counts[static_cast<int>(event_labels[k])];
      }
    }
  }
  PhraseAssociations out;
  for (const auto& [phrase, counts] : tallies) {
    int support = 0, best = 0;
    for (int l = 0; l < kNumDocRelTime; ++l) {
      support += counts[l];
      if (counts[l] > counts[best]) best = l;
    }
    if (support == 0) continue;
    out[phrase] = PhraseAssociation{static_cast<DocRelTime>(best),
                                    static_cast<double>(counts[best]) / support, support};
  }
  return out;
}

std::vector<std::optional<Date>> resolve_document_dates(const Document& doc) {
  std::vector<std::optional<Date>> out;
  std::vector<Date> preceding;
  for (const Span& t : doc.spans_of(kTimex3)) {
    const auto partial = parse_date_expression(mention_text(doc, t));
    if (!partial) {
      out.emplace_back();
      continue;
    }
    const Date d = resolve_partial_date(*partial, preceding, doc.doctime);
    preceding.push_back(d);
    out.emplace_back(d);
  }
  return out;
}

std::vector<std::optional<DocRelTime>> label_document_timex3(const Document& doc,
                                                             const PhraseAssociations& associations,
                                                             double min_confidence, int min_support) {
  const std::vector<Token> tokens = flat_tokens(doc);
  const std::vector<Span> timexes = doc.spans_of(kTimex3);
  const std::vector<std::optional<Date>> dates = resolve_document_dates(doc);
  std::vector<std::optional<DocRelTime>> out;
  for (std::size_t i = 0; i < timexes.size(); ++i) {
    if (dates[i]) {
      out.emplace_back(classify_date_docreltime(*dates[i], doc.doctime, doc.revisions));
      continue;
    }
    const auto it = associations.find(mention_phrase(doc, tokens, timexes[i]));
    if (it != associations.end() && it->second.confidence >= min_confidence &&
        it->second.support >= min_support) {
      out.emplace_back(it->second.label);
    } else {
      out.emplace_back();
    }
  }
  return out;
}

std::optional<DocRelTime> label_timex3(const Span& mention, const Document& doc,
                                       const PhraseAssociations& associations, double min_confidence,
                                       int min_support) {
  const std::vector<Span> timexes = doc.spans_of(kTimex3);
  const auto it = std::find_if(timexes.begin(), timexes.end(), [&](const Span& s) {
    return s.begin == mention.begin && s.end == mention.end;
  });
  if (it != timexes.end()) {
    return label_document_timex3(doc, associations, min_confidence, min_support)[static_cast<std::size_t>(
        it - timexes.begin())];
  }
  // Not one of the document's TIMEX3 spans: resolve against the dates before it.
  if (const auto partial = parse_date_expression(mention_text(doc, mention))) {
    std::vector<Date> preceding;
    const std::vector<std::optional<Date>> dates = resolve_document_dates(doc);
    for (std::size_t i = 0; i < timexes.size() && timexes[i].begin < mention.begin; ++i) {
      if (dates[i]) preceding.push_back(*dates[i]);
    }
    return classify_date_docreltime(resolve_partial_date(*partial, preceding, doc.doctime), doc.doctime,
                                    doc.revisions);
  }
  const auto a = associations.find(mention_phrase(doc, flat_tokens(doc), mention));
  if (a != associations.end() && a->second.confidence >= min_confidence && a->second.support >= min_support) {
    return a->second.label;
  }
  return std::nullopt;
}

std::string write_associations_tsv(const PhraseAssociations& associations) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [phrase, a] : associations) {
    out << phrase << '\t' << to_string(a.label) << '\t' << a.confidence << '\t' << a.support << '\n';
  }
  return out.str();
}

PhraseAssociations read_associations_tsv(std::string_view text) {
  PhraseAssociations out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string phrase, label, confidence, support;
    if (!std::getline(row, phrase, '\t') || !std::getline(row, label, '\t') ||
        !std::getline(row, confidence, '\t') || !std::getline(row, support)) {
      throw ParseError(line_no, "expected phrase, label, confidence, support");
    }
    try {
      out[phrase] = PhraseAssociation{parse_doc_rel_time(label), std::stod(confidence), std::stoi(support)};
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace tempie
