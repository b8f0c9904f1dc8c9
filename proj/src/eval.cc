#include "tempie/eval.h"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "tempie/error.h"

namespace tempie {

PrfScore PrfScore::from_counts(long tp, long fp, long fn) {
  PrfScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

PrfScore& PrfScore::operator+=(const PrfScore& other) {
  *this = from_counts(tp + other.tp, fp + other.fp, fn + other.fn);
  return *this;
}

MatchMode parse_match_mode(std::string_view name) {
  if (name == "exact") return MatchMode::Exact;
  if (name == "overlap") return MatchMode::Overlap;
  throw ConfigError("unknown match mode '" + std::string(name) + "' (expected exact or overlap)");
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::Exact ? "exact" : "overlap"; }

PrfScore score_spans(std::span<const Span> gold, std::span<const Span> pred, MatchMode mode) {
  std::vector<Span> g(gold.begin(), gold.end()), p(pred.begin(), pred.end());
  std::sort(g.begin(), g.end(), span_less);
  std::sort(p.begin(), p.end(), span_less);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size() && g[j].begin < g[i].end; ++j) {
      if (g[j].klass == g[i].klass) {
        throw ValidationError("overlapping gold spans of class " + g[i].klass + " at offsets " +
                              std::to_string(g[i].begin) + " and " + std::to_string(g[j].begin));
      }
    }
  }
  long tp = 0;
  if (mode == MatchMode::Exact) {
    std::multiset<std::tuple<int, int, std::string>> remaining;
    for (const Span& s : g) remaining.emplace(s.begin, s.end, s.klass);
    for (const Span& s : p) {
      const auto it = remaining.find({s.begin, s.end, s.klass});
      if (it != remaining.end()) {
        remaining.erase(it);
        ++tp;
      }
    }
  } else {
    std::vector<bool> used(g.size(), false);
    for (const Span& s : p) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!used[i] && g[i].klass == s.klass && g[i].begin < s.end && s.begin < g[i].end) {
          used[i] = true;
          ++tp;
          break;
        }
      }
    }
  }
  return PrfScore::from_counts(tp, static_cast<long>(p.size()) - tp, static_cast<long>(g.size()) - tp);
}

PrfScore score_corpus(std::span<const Document> gold, std::span<const Document> pred, std::string_view klass,
                      MatchMode mode) {
  std::map<std::string, const Document*> by_id;
  for (const Document& d : pred) by_id[d.id] = &d;
  std::set<std::string> gold_ids;
  for (const Document& d : gold) gold_ids.insert(d.id);
  std::vector<std::string> unpaired;
  for (const Document& d : gold) {
    if (!by_id.count(d.id)) unpaired.push_back(d.id + " (gold only)");
  }
  for (const Document& d : pred) {
    if (!gold_ids.count(d.id)) unpaired.push_back(d.id + " (predictions only)");
  }
  if (!unpaired.empty()) {
    std::string msg = "document ids do not match:";
    for (const std::string& id : unpaired) msg += " " + id;
    throw std::invalid_argument(msg);
  }
  const auto select = [&](const Document& d) {
    if (klass.empty()) return d.gold_spans;
    return d.spans_of(klass);
  };
  PrfScore total = PrfScore::from_counts(0, 0, 0);
  for (const Document& d : gold) total += score_spans(select(d), select(*by_id[d.id]), mode);
  return total;
}

LabelScores score_labels(const std::map<std::string, std::string>& gold, const std::map<std::string, std::string>& pred) {
  std::vector<std::string> mismatched;
  for (const auto& [key, label] : gold) {
    if (!pred.count(key)) mismatched.push_back(key);
  }
  for (const auto& [key, label] : pred) {
    if (!gold.count(key)) mismatched.push_back(key);
  }
  if (!mismatched.empty()) {
    std::string msg = "label keys differ between gold and predictions:";
    for (const std::string& key : mismatched) msg += " " + key;
    throw std::invalid_argument(msg);
  }
  LabelScores out;
  std::set<std::string> classes;
  for (const auto& [key, label] : gold) classes.insert(label);
  for (const auto& [key, label] : pred) classes.insert(label);
  long correct = 0;
  std::map<std::string, std::array<long, 3>> counts;  // tp, fp, fn
  for (const std::string& c : classes) counts[c] = {0, 0, 0};
  for (const auto& [key, g] : gold) {
    const std::string& p = pred.at(key);
    if (g == p) {
      ++correct;
      ++counts[g][0];
    } else {
      ++counts[p][1];
      ++counts[g][2];
    }
  }
  const long wrong = static_cast<long>(gold.size()) - correct;
  out.micro = PrfScore::from_counts(correct, wrong, wrong);
  for (const auto& [c, n] : counts) out.per_class[c] = PrfScore::from_counts(n[0], n[1], n[2]);
  return out;
}

TagSequence ensemble_vote(std::span<const TagSequence> sequences) {
  if (sequences.empty()) return {};
  const std::size_t n = sequences.front().size();
  for (const TagSequence& s : sequences) {
    if (s.size() != n) throw std::invalid_argument("ensemble_vote: tag sequences differ in length");
  }
  TagSequence out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, int> votes;
    for (const TagSequence& s : sequences) ++votes[s[i].str()];
    int best = 0;
    std::string winner;
    bool tied = false;
    for (const auto& [tag, count] : votes) {
      if (count > best) {
        best = count;
        winner = tag;
        tied = false;
      } else if (count == best) {
        tied = true;
      }
    }
    out[i] = tied ? Iob2Tag::outside() : Iob2Tag::parse(winner);
  }
  return repair_iob2(out);
}

std::string format_report_table(std::span<const ReportRow> rows) {
  std::size_t width = 4;
  for (const ReportRow& r : rows) width = std::max(width, r.name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %7s  %7s  %7s\n", static_cast<int>(width), "name", "precision",
                "recall", "f1", "tp", "fp", "fn");
  out += buf;
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.6f  %9.6f  %9.6f  %7ld  %7ld  %7ld\n", static_cast<int>(width),
                  r.name.c_str(), r.score.precision, r.score.recall, r.score.f1, r.score.tp, r.score.fp, r.score.fn);
    out += buf;
  }
  return out;
}

std::string format_report_json(std::span<const ReportRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ReportRow& r : rows) {
    arr.push_back({{"name", r.name},
                   {"precision", r.score.precision},
                   {"recall", r.score.recall},
                   {"f1", r.score.f1},
                   {"tp", r.score.tp},
                   {"fp", r.score.fp},
                   {"fn", r.score.fn}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace tempie
