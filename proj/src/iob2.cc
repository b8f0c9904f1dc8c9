#include "tempie/iob2.h"

#include <algorithm>
#include <map>

namespace tempie {

std::string Iob2Tag::str() const {
  switch (kind) {
    case Kind::O: return "O";
    case Kind::B: return "B-" + klass;
    case Kind::I: return "I-" + klass;
  }
  return "O";
}

Iob2Tag Iob2Tag::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() > 2 && text[1] == '-') {
    if (text[0] == 'B') return begin(text.substr(2));
    if (text[0] == 'I') return inside(text.substr(2));
  }
  throw std::invalid_argument("bad IOB2 tag '" + std::string(text) + "'");
}

TagSequence encode_iob2(std::span<const Span> spans, std::span<const Token> units) {
  TagSequence tags(units.size());
  std::vector<bool> covered(units.size(), false);
  for (const Span& span : spans) {
    const auto first = std::find_if(units.begin(), units.end(),
                                    [&](const Token& u) { return u.begin == span.begin; });
    const auto last = std::find_if(units.begin(), units.end(),
                                   [&](const Token& u) { return u.end == span.end; });
    if (first == units.end() || last == units.end() || last < first) {
      throw AlignmentError("span [" + std::to_string(span.begin) + "," + std::to_string(span.end) +
                           ") " + span.klass + " does not align with unit boundaries");
    }
    const auto lo = static_cast<std::size_t>(first - units.begin());
    const auto hi = static_cast<std::size_t>(last - units.begin());
    for (std::size_t i = lo; i <= hi; ++i) {
      if (covered[i]) {
        throw AlignmentError("span [" + std::to_string(span.begin) + "," + std::to_string(span.end) +
                             ") " + span.klass + " overlaps another span");
      }
      covered[i] = true;
      tags[i] = i == lo ? Iob2Tag::begin(span.klass) : Iob2Tag::inside(span.klass);
    }
  }
  return tags;
}

std::vector<Span> decode_iob2(std::span<const Iob2Tag> tags, std::span<const Token> units) {
  if (tags.size() != units.size()) {
    throw std::invalid_argument("decode_iob2: " + std::to_string(tags.size()) + " tags for " +
                                std::to_string(units.size()) + " units");
  }
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Iob2Tag& tag = tags[i];
    if (tag.is_outside()) {
      open = false;
      continue;
    }
    const bool continues = tag.kind == Iob2Tag::Kind::I && open && spans.back().klass == tag.klass;
    if (continues) {
      spans.back().end = units[i].end;
    } else {
      spans.push_back(Span{units[i].begin, units[i].end, tag.klass, {}});
      open = true;
    }
  }
  return spans;
}

TagSequence repair_span_classes(std::span<const Iob2Tag> tags) {
  TagSequence out(tags.begin(), tags.end());
  std::size_t i = 0;
  while (i < out.size()) {
    if (out[i].is_outside()) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < out.size() && out[j].kind == Iob2Tag::Kind::I) ++j;
    // Majority class over [i, j); first-seen order breaks ties toward the head.
    std::vector<std::pair<std::string, int>> counts;
    for (std::size_t k = i; k < j; ++k) {
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& c) { return c.first == out[k].klass; });
      if (it == counts.end()) {
        counts.emplace_back(out[k].klass, 1);
      } else {
        ++it->second;
      }
    }
    const auto best = std::max_element(counts.begin(), counts.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    const std::string klass = best->first;
    out[i] = Iob2Tag::begin(klass);
    for (std::size_t k = i + 1; k < j; ++k) out[k] = Iob2Tag::inside(klass);
    i = j;
  }
  return out;
}

TagSequence repair_iob2(std::span<const Iob2Tag> tags) {
  TagSequence out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].kind != Iob2Tag::Kind::I) continue;
    const bool continues = i > 0 && !out[i - 1].is_outside() && out[i - 1].klass == out[i].klass;
    if (!continues) out[i].kind = Iob2Tag::Kind::B;
  }
  return out;
}

bool is_valid_iob2(std::span<const Iob2Tag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != Iob2Tag::Kind::I) continue;
    if (i == 0 || tags[i - 1].is_outside() || tags[i - 1].klass != tags[i].klass) return false;
  }
  return true;
}

TagSequence document_char_tags(const Document& doc) {
  TagSequence tags(doc.text.size());
  for (const Sentence& s : doc.sentences) {
    for (std::size_t ti = 0; ti < s.size(); ++ti) {
      const Token& t = s.tokens[ti];
      const std::string_view klass = ti + 1 == s.size() ? kEndClass : kWordClass;
      for (int c = t.begin; c < t.end; ++c) {
        tags[c] = c == t.begin ? Iob2Tag::begin(klass) : Iob2Tag::inside(klass);
      }
    }
  }
  return tags;
}

CharSequence char_sequence(const Document& doc, std::size_t sentence_index, int pad) {
  const Sentence& s = doc.sentences.at(sentence_index);
  const int lo = std::max(0, s.begin() - std::max(pad, 0));
  const int hi = std::min(static_cast<int>(doc.text.size()), s.end() + std::max(pad, 0));
  const TagSequence all = document_char_tags(doc);
  CharSequence out;
  for (int c = lo; c < hi; ++c) {
    out.chars.push_back(Token{std::string(1, doc.text[c]), c, c + 1});
    out.tags.push_back(all[c]);
  }
  return out;
}

TagSequence sentence_tags(const Document& doc, std::size_t sentence_index, std::string_view klass) {
  const Sentence& s = doc.sentences.at(sentence_index);
  std::vector<Span> inside;
  for (const Span& span : doc.gold_spans) {
    if (span.klass == klass && span.begin >= s.begin() && span.end <= s.end()) inside.push_back(span);
  }
  return encode_iob2(inside, s.tokens);
}

}  // namespace tempie
