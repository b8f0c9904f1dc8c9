#include "tempie/features.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "tempie/embeddings.h"
#include "tempie/error.h"

namespace tempie {

namespace {

std::string join(std::span<const std::string> words, std::size_t begin, std::size_t length) {
  std::string out;
  for (std::size_t k = begin; k < begin + length; ++k) {
    if (k > begin) out += ' ';
    out += words[k];
  }
  return out;
}

constexpr std::array<int, 5> kOffsets = {-2, -1, 0, 1, 2};

std::string_view offset_name(int offset) {
  switch (offset) {
    case -2: return "left2";
    case -1: return "left1";
    case 0: return "0";
    case 1: return "right1";
    case 2: return "right2";
  }
  return "?";
}

std::string_view flag_name(DictFlag flag) {
  switch (flag) {
    case DictFlag::None: return "none";
    case DictFlag::Begin: return "B";
    case DictFlag::Inside: return "I";
  }
  return "none";
}

}  // namespace

PhraseDictionary build_memorization_dict(std::span<const Document> corpus, std::string_view klass) {
  PhraseDictionary dict;
  dict.klass = std::string(klass);

  // Normalized sentences and their gold spans as token index pairs.
  struct Prepared {
    std::vector<std::string> words;
    std::set<std::pair<std::size_t, std::size_t>> gold;
  };
  std::vector<Prepared> sentences;
  std::set<std::string> candidates;
  std::size_t max_length = 0;
  for (const Document& doc : corpus) {
    const std::vector<Span> spans = doc.spans_of(klass);
    for (const Sentence& s : doc.sentences) {
      Prepared p;
      for (const Token& t : s.tokens) p.words.push_back(normalize_word(t.surface));
      for (const Span& span : spans) {
        if (span.begin < s.begin() || span.end > s.end()) continue;
        if (const auto r = token_range(s.tokens, span)) {
          p.gold.insert(*r);
          candidates.insert(join(p.words, r->first, r->second - r->first + 1));
          max_length = std::max(max_length, r->second - r->first + 1);
        }
      }
      sentences.push_back(std::move(p));
    }
  }

  std::map<std::string, std::pair<int, int>> counts;  // phrase -> (entity, total)
  for (const Prepared& p : sentences) {
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      for (std::size_t len = 1; len <= max_length && i + len <= p.words.size(); ++len) {
        const std::string phrase = join(p.words, i, len);
        if (!candidates.count(phrase)) continue;
        auto& [entity, total] = counts[phrase];
        ++total;
        if (p.gold.count({i, i + len - 1})) ++entity;
      }
    }
  }
  for (const auto& [phrase, c] : counts) {
    const double ratio = static_cast<double>(c.first) / c.second;
    if (ratio >= 0.5) {
      dict.entries[phrase] = ratio;
      const auto words = static_cast<std::size_t>(std::count(phrase.begin(), phrase.end(), ' ') + 1);
      dict.max_length = std::max(dict.max_length, words);
    }
  }
  return dict;
}

std::string write_dictionary_tsv(const PhraseDictionary& dict) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [phrase, ratio] : dict.entries) out << phrase << '\t' << ratio << '\n';
  return out.str();
}

PhraseDictionary read_dictionary_tsv(std::string_view text, std::string klass) {
  PhraseDictionary dict;
  dict.klass = std::move(klass);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected phrase TAB ratio");
    const std::string phrase = line.substr(0, tab);
    double ratio = 0.0;
    try {
      ratio = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad ratio");
    }
    if (ratio < 0.5) throw ParseError(line_no, "dictionary ratio below 0.5");
    dict.entries[phrase] = ratio;
    dict.max_length = std::max<std::size_t>(dict.max_length, std::count(phrase.begin(), phrase.end(), ' ') + 1);
  }
  return dict;
}

std::vector<DictFlag> match_dictionary(std::span<const std::string> normalized, const PhraseDictionary& dict) {
  std::vector<DictFlag> flags(normalized.size(), DictFlag::None);
  std::size_t i = 0;
  while (i < normalized.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(dict.max_length, normalized.size() - i); len >= 1; --len) {
      if (dict.contains(join(normalized, i, len))) {
        matched = len;
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    flags[i] = DictFlag::Begin;
    for (std::size_t k = 1; k < matched; ++k) flags[i + k] = DictFlag::Inside;
    i += matched;
  }
  return flags;
}

FeatureRun parse_feature_run(int run) {
  if (run < 1 || run > 3) throw ConfigError("feature run must be 1, 2 or 3");
  return static_cast<FeatureRun>(run);
}

SentenceContext make_sentence_context(std::span<const Token> tokens, std::span<const PhraseDictionary> dicts,
                                      const std::vector<std::string>* pos) {
  SentenceContext ctx;
  for (const Token& t : tokens) {
    ctx.surfaces.push_back(t.surface);
    ctx.normalized.push_back(normalize_word(t.surface));
  }
  for (const PhraseDictionary& d : dicts) {
    ctx.dict_classes.push_back(d.klass);
    ctx.dict_flags.push_back(match_dictionary(ctx.normalized, d));
  }
  if (pos) ctx.pos = *pos;
  return ctx;
}

std::string_view letter_case(std::string_view surface) {
  int alpha = 0, upper = 0;
  bool first_upper = false, first_seen = false;
  for (char ch : surface) {
    const auto c = static_cast<unsigned char>(ch);
    if (!std::isalpha(c)) continue;
    ++alpha;
    if (std::isupper(c)) ++upper;
    if (!first_seen) {
      first_seen = true;
      first_upper = std::isupper(c) != 0;
    }
  }
  if (alpha == 0) return "nonalpha";
  if (upper == alpha) return "allcaps";
  if (upper == 0) return "lower";
  if (upper == 1 && first_upper) return "initcap";
  return "mixed";
}

FeatureVector extract_features(const SentenceContext& s, std::size_t index, FeatureRun run) {
  if (run == FeatureRun::Run3 && !s.pos) throw ConfigError("feature run 3 requires POS tags");
  const auto n = static_cast<long>(s.normalized.size());
  FeatureVector out;
  out.push_back("case." + std::string(letter_case(s.surfaces[index])));
  for (int off : kOffsets) {
    const long p = static_cast<long>(index) + off;
    const bool inside = p >= 0 && p < n;
    const std::string name(offset_name(off));
    for (std::size_t d = 0; d < s.dict_flags.size(); ++d) {
      const std::string value =
          inside ? std::string(flag_name(s.dict_flags[d][static_cast<std::size_t>(p)])) : std::string(kPadToken);
      out.push_back("dict." + s.dict_classes[d] + "." + name + "=" + value);
    }
    if (run != FeatureRun::Run1) {
      out.push_back("win." + name + "=" + (inside ? s.normalized[static_cast<std::size_t>(p)] : std::string(kPadToken)));
    }
    if (run == FeatureRun::Run3) {
      out.push_back("pos." + name + "=" + (inside ? (*s.pos)[static_cast<std::size_t>(p)] : std::string(kPadToken)));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace tempie
