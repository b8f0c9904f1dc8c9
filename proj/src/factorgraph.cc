#include "tempie/factorgraph.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "tempie/embeddings.h"
#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> softmax_of(std::span<const double> scores) {
  const double z = log_sum_exp(scores);
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = std::exp(scores[i] - z);
  return p;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lr") return ModelKind::Lr;
  if (name == "crf") return ModelKind::Crf;
  if (name == "skip") return ModelKind::Skip;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected lr, crf or skip)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lr: return "lr";
    case ModelKind::Crf: return "crf";
    case ModelKind::Skip: return "skip";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parameters

int FeatureIndex::lookup(std::string_view name) const {
  const auto it = ids_.find(std::string(name));
  return it == ids_.end() ? -1 : it->second;
}

int FeatureIndex::intern(const std::string& name) {
  const auto [it, added] = ids_.try_emplace(name, static_cast<int>(names_.size()));
  if (added) names_.push_back(name);
  return it->second;
}

Weights::Weights(std::vector<std::string> label_names) : labels(std::move(label_names)) {
  if (labels.empty()) throw ConfigError("a label set must not be empty");
  params.assign(unary_offset(), 0.0);
}

int Weights::label_index(std::string_view name) const {
  const auto it = std::find(labels.begin(), labels.end(), name);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

std::size_t Weights::pair_offset(FactorKind kind) const {
  const std::size_t block = labels.size() * labels.size();
  switch (kind) {
    case FactorKind::Transition: return 0;
    case FactorKind::Skip: return block;
    case FactorKind::Equality: return 2 * block;
    case FactorKind::Unigram: break;
  }
  throw std::invalid_argument("unigram factors have no pair block");
}

void Weights::sync_features() { params.resize(unary_offset() + features.size() * labels.size(), 0.0); }

double Weights::squared_norm() const {
  return std::inner_product(params.begin(), params.end(), params.begin(), 0.0);
}

bool Weights::all_finite() const {
  return std::all_of(params.begin(), params.end(), [](double w) { return std::isfinite(w); });
}

namespace {

char kind_code(FactorKind kind) {
  switch (kind) {
    case FactorKind::Transition: return 'T';
    case FactorKind::Skip: return 'S';
    case FactorKind::Equality: return 'E';
    case FactorKind::Unigram: return 'U';
  }
  return '?';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string write_weights_tsv(const Weights& weights) {
  std::vector<std::pair<std::string, double>> rows;
  const int L = weights.num_labels();
  for (FactorKind kind : {FactorKind::Transition, FactorKind::Skip, FactorKind::Equality}) {
    for (int a = 0; a < L; ++a) {
      for (int b = 0; b < L; ++b) {
        rows.emplace_back(std::string(1, kind_code(kind)) + "|" + weights.labels[a] + "|" + weights.labels[b],
                          weights.pair(kind, a, b));
      }
    }
  }
  for (std::size_t f = 0; f < weights.features.size(); ++f) {
    for (int l = 0; l < L; ++l) {
      rows.emplace_back("U|" + weights.labels[l] + "|" + weights.features.name(static_cast<int>(f)),
                        weights.unary(static_cast<int>(f), l));
    }
  }
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [key, value] : rows) out += key + "\t" + format_double(value) + "\n";
  return out;
}

Weights read_weights_tsv(std::string_view text, std::vector<std::string> labels) {
  Weights weights(std::move(labels));
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::tuple<int, int, double>> unary;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string::npos ? std::string::npos : line.find('|', bar1 + 1);
    if (tab == std::string::npos || bar2 == std::string::npos || bar2 > tab || bar1 != 1) {
      throw ParseError(line_no, "expected KIND|a|b TAB value");
    }
    double value = 0.0;
    try {
      value = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad weight value");
    }
    const std::string first = line.substr(2, bar2 - 2);
    const std::string second = line.substr(bar2 + 1, tab - bar2 - 1);
    const char code = line[0];
    if (code == 'U') {
      const int label = weights.label_index(first);
      if (label < 0) throw ParseError(line_no, "unknown label '" + first + "'");
      unary.emplace_back(weights.features.intern(second), label, value);
      continue;
    }
    const int a = weights.label_index(first), b = weights.label_index(second);
    if (a < 0 || b < 0) throw ParseError(line_no, "unknown label pair");
    switch (code) {
      case 'T': weights.pair(FactorKind::Transition, a, b) = value; break;
      case 'S': weights.pair(FactorKind::Skip, a, b) = value; break;
      case 'E': weights.pair(FactorKind::Equality, a, b) = value; break;
      default: throw ParseError(line_no, "unknown weight kind");
    }
  }
  weights.sync_features();
  for (const auto& [f, l, v] : unary) weights.params[weights.unary_index(f, l)] = v;
  return weights;
}

// ---------------------------------------------------------------------------
// Graph structure

bool FactorGraph::has_kind(FactorKind kind) const {
  return std::any_of(factors.begin(), factors.end(), [kind](const Factor& f) { return f.kind == kind; });
}

std::vector<std::vector<int>> FactorGraph::incident() const {
  std::vector<std::vector<int>> out(variables.size());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    out[static_cast<std::size_t>(factors[i].a)].push_back(static_cast<int>(i));
    if (factors[i].kind != FactorKind::Unigram) out[static_cast<std::size_t>(factors[i].b)].push_back(static_cast<int>(i));
  }
  return out;
}

void FactorGraph::validate() const {
  const int n = static_cast<int>(variables.size());
  for (const LabelVariable& v : variables) {
    if (v.domain_size <= 0) throw std::invalid_argument("label variable with empty domain");
  }
  for (const Factor& f : factors) {
    if (f.a < 0 || f.a >= n) throw std::invalid_argument("factor scope references a missing variable");
    if (f.kind == FactorKind::Unigram) continue;
    if (f.b < 0 || f.b >= n || f.b == f.a) throw std::invalid_argument("pairwise factor needs two distinct variables");
    if (f.kind == FactorKind::Transition && f.b != f.a + 1) {
      throw std::invalid_argument("transition factors must join consecutive variables");
    }
  }
}

double log_potential(const Factor& factor, std::span<const int> assignment, const Weights& weights) {
  const int ya = assignment[static_cast<std::size_t>(factor.a)];
  if (factor.kind == FactorKind::Unigram) {
    double s = factor.offsets.empty() ? 0.0 : factor.offsets[static_cast<std::size_t>(ya)];
    for (int f : factor.features) s += weights.unary(f, ya);
    return s;
  }
  return weights.pair(factor.kind, ya, assignment[static_cast<std::size_t>(factor.b)]);
}

std::vector<double> unary_scores(const FactorGraph& graph, int variable, const Weights& weights) {
  const int L = weights.num_labels();
  std::vector<double> scores(static_cast<std::size_t>(L), 0.0);
  for (const Factor& f : graph.factors) {
    if (f.kind != FactorKind::Unigram || f.a != variable) continue;
    for (int y = 0; y < L; ++y) {
      double s = f.offsets.empty() ? 0.0 : f.offsets[static_cast<std::size_t>(y)];
      for (int feat : f.features) s += weights.unary(feat, y);
      scores[static_cast<std::size_t>(y)] += s;
    }
  }
  return scores;
}

namespace {

// Unary score table for every variable, computed in one pass over the factors.
std::vector<std::vector<double>> all_unary_scores(const FactorGraph& graph, const Weights& weights) {
  const int L = weights.num_labels();
  std::vector<std::vector<double>> scores(graph.variables.size(), std::vector<double>(static_cast<std::size_t>(L), 0.0));
  for (const Factor& f : graph.factors) {
    if (f.kind != FactorKind::Unigram) continue;
    auto& row = scores[static_cast<std::size_t>(f.a)];
    for (int y = 0; y < L; ++y) {
      double s = f.offsets.empty() ? 0.0 : f.offsets[static_cast<std::size_t>(y)];
      for (int feat : f.features) s += weights.unary(feat, y);
      row[static_cast<std::size_t>(y)] += s;
    }
  }
  return scores;
}

void check_domains(const FactorGraph& graph, const Weights& weights) {
  for (const LabelVariable& v : graph.variables) {
    if (v.domain_size != weights.num_labels()) {
      throw std::invalid_argument("variable domain size differs from the weights' label set");
    }
  }
}

// Chain decomposition: link[i] holds the summed transition matrix between
// variable i and i + 1 (empty when they are not joined).
struct ChainStructure {
  std::vector<std::vector<double>> link;
  std::vector<std::pair<std::size_t, std::size_t>> chains;  // inclusive ranges
};

ChainStructure chain_structure(const FactorGraph& graph, const Weights& weights) {
  for (const Factor& f : graph.factors) {
    if (f.kind == FactorKind::Skip || f.kind == FactorKind::Equality) {
      throw ModelKindError("exact chain inference does not support skip or equality factors");
    }
  }
  graph.validate();
  check_domains(graph, weights);
  const std::size_t n = graph.variables.size();
  const auto L = static_cast<std::size_t>(weights.num_labels());
  ChainStructure cs;
  cs.link.assign(n, {});
  for (const Factor& f : graph.factors) {
    if (f.kind != FactorKind::Transition) continue;
    auto& m = cs.link[static_cast<std::size_t>(f.a)];
    if (m.empty()) m.assign(L * L, 0.0);
    for (std::size_t k = 0; k < L * L; ++k) m[k] += weights.params[weights.pair_offset(FactorKind::Transition) + k];
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n || cs.link[i].empty()) {
      cs.chains.emplace_back(start, i);
      start = i + 1;
    }
  }
  return cs;
}

struct ChainTables {
  std::vector<std::vector<double>> unary, alpha, beta;
  ChainStructure structure;
  double log_partition = 0.0;
};

ChainTables run_forward_backward(const FactorGraph& graph, const Weights& weights) {
  ChainTables t;
  t.structure = chain_structure(graph, weights);
  t.unary = all_unary_scores(graph, weights);
  const std::size_t n = graph.variables.size();
  const auto L = static_cast<std::size_t>(weights.num_labels());
  t.alpha.assign(n, std::vector<double>(L));
  t.beta.assign(n, std::vector<double>(L, 0.0));
  std::vector<double> buf(L);
  for (const auto& [s, e] : t.structure.chains) {
    t.alpha[s] = t.unary[s];
    for (std::size_t i = s + 1; i <= e; ++i) {
      const auto& T = t.structure.link[i - 1];
      for (std::size_t y = 0; y < L; ++y) {
        for (std::size_t yp = 0; yp < L; ++yp) buf[yp] = t.alpha[i - 1][yp] + T[yp * L + y];
        t.alpha[i][y] = t.unary[i][y] + log_sum_exp(buf);
      }
    }
    for (std::size_t i = e; i > s; --i) {
      const auto& T = t.structure.link[i - 1];
      for (std::size_t y = 0; y < L; ++y) {
        for (std::size_t yn = 0; yn < L; ++yn) buf[yn] = T[y * L + yn] + t.unary[i][yn] + t.beta[i][yn];
        t.beta[i - 1][y] = log_sum_exp(buf);
      }
    }
    t.log_partition += log_sum_exp(t.alpha[e]);
  }
  return t;
}

double chain_log_partition(const ChainTables& t, std::size_t chain) {
  return log_sum_exp(t.alpha[t.structure.chains[chain].second]);
}

}  // namespace

Marginals forward_backward(const FactorGraph& graph, const Weights& weights) {
  const ChainTables t = run_forward_backward(graph, weights);
  const auto L = static_cast<std::size_t>(weights.num_labels());
  Marginals m;
  m.log_partition = t.log_partition;
  m.probabilities.assign(graph.variables.size(), std::vector<double>(L));
  for (std::size_t c = 0; c < t.structure.chains.size(); ++c) {
    const auto [s, e] = t.structure.chains[c];
    const double z = chain_log_partition(t, c);
    for (std::size_t i = s; i <= e; ++i) {
      for (std::size_t y = 0; y < L; ++y) m.probabilities[i][y] = std::exp(t.alpha[i][y] + t.beta[i][y] - z);
    }
  }
  return m;
}

std::vector<int> viterbi(const FactorGraph& graph, const Weights& weights) {
  const ChainStructure cs = chain_structure(graph, weights);
  const auto unary = all_unary_scores(graph, weights);
  const std::size_t n = graph.variables.size();
  const auto L = static_cast<std::size_t>(weights.num_labels());
  std::vector<int> out(n, 0);
  std::vector<std::vector<double>> delta(n, std::vector<double>(L));
  std::vector<std::vector<int>> back(n, std::vector<int>(L, 0));
  for (const auto& [s, e] : cs.chains) {
    delta[s] = unary[s];
    for (std::size_t i = s + 1; i <= e; ++i) {
      const auto& T = cs.link[i - 1];
      for (std::size_t y = 0; y < L; ++y) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t yp = 0; yp < L; ++yp) {
          const double v = delta[i - 1][yp] + T[yp * L + y];
          if (v > best) {
            best = v;
            arg = static_cast<int>(yp);
          }
        }
        delta[i][y] = unary[i][y] + best;
        back[i][y] = arg;
      }
    }
    out[e] = static_cast<int>(argmax_lowest(delta[e]));
    for (std::size_t i = e; i > s; --i) out[i - 1] = back[i][static_cast<std::size_t>(out[i])];
  }
  return out;
}

namespace {

double total_score(const FactorGraph& graph, std::span<const int> assignment, const Weights& weights) {
  double s = 0.0;
  for (const Factor& f : graph.factors) s += log_potential(f, assignment, weights);
  return s;
}

// Calls visit(assignment) for every joint state; variable 0 varies fastest,
// so states arrive in increasing order compared from the last variable.
template <typename Visit>
void enumerate_states(const FactorGraph& graph, Visit visit) {
  double states = 1.0;
  for (const LabelVariable& v : graph.variables) states *= v.domain_size;
  if (states > 1e6) throw SizeError("state space too large for enumeration");
  std::vector<int> assignment(graph.variables.size(), 0);
  while (true) {
    visit(std::span<const int>(assignment));
    std::size_t i = 0;
    while (i < assignment.size()) {
      if (++assignment[i] < graph.variables[i].domain_size) break;
      assignment[i] = 0;
      ++i;
    }
    if (i == assignment.size()) return;
  }
}

}  // namespace

Marginals brute_force_marginals(const FactorGraph& graph, const Weights& weights) {
  graph.validate();
  check_domains(graph, weights);
  std::vector<double> scores;
  std::vector<std::vector<int>> states;
  enumerate_states(graph, [&](std::span<const int> a) {
    scores.push_back(total_score(graph, a, weights));
    states.emplace_back(a.begin(), a.end());
  });
  Marginals m;
  m.log_partition = log_sum_exp(scores);
  m.probabilities.assign(graph.variables.size(), std::vector<double>(static_cast<std::size_t>(weights.num_labels()), 0.0));
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double p = std::exp(scores[k] - m.log_partition);
    for (std::size_t i = 0; i < states[k].size(); ++i) m.probabilities[i][static_cast<std::size_t>(states[k][i])] += p;
  }
  return m;
}

std::vector<int> brute_force_argmax(const FactorGraph& graph, const Weights& weights) {
  graph.validate();
  check_domains(graph, weights);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> arg;
  enumerate_states(graph, [&](std::span<const int> a) {
    const double s = total_score(graph, a, weights);
    if (arg.empty() || s > best) {
      best = s;
      arg.assign(a.begin(), a.end());
    }
  });
  return arg;
}

std::vector<std::vector<double>> gibbs_marginals(const FactorGraph& graph, const Weights& weights,
                                                 const GibbsConfig& config) {
  if (config.burn_in < 0 || config.sweeps <= config.burn_in) {
    throw std::invalid_argument("gibbs_marginals: need sweeps > burn_in >= 0");
  }
  graph.validate();
  check_domains(graph, weights);
  const std::size_t n = graph.variables.size();
  const auto L = static_cast<std::size_t>(weights.num_labels());
  const auto unary = all_unary_scores(graph, weights);
  const auto incident = graph.incident();
  Rng rng(config.seed);

  std::vector<int> state(n);
  for (std::size_t i = 0; i < n; ++i) state[i] = static_cast<int>(argmax_lowest(unary[i]));

  std::vector<std::vector<double>> estimate(n, std::vector<double>(L, 0.0));
  std::vector<double> scores(L);
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    const bool record = sweep >= config.burn_in;
    for (std::size_t i = 0; i < n; ++i) {
      scores = unary[i];
      for (int fid : incident[i]) {
        const Factor& f = graph.factors[static_cast<std::size_t>(fid)];
        if (f.kind == FactorKind::Unigram) continue;
        const bool first = static_cast<std::size_t>(f.a) == i;
        const int other = state[static_cast<std::size_t>(first ? f.b : f.a)];
        for (std::size_t y = 0; y < L; ++y) {
          scores[y] += first ? weights.pair(f.kind, static_cast<int>(y), other)
                             : weights.pair(f.kind, other, static_cast<int>(y));
        }
      }
      const std::vector<double> p = softmax_of(scores);
      state[i] = static_cast<int>(rng.categorical(p));
      if (record) {
        for (std::size_t y = 0; y < L; ++y) estimate[i][y] += p[y];
      }
    }
  }
  const double kept = config.sweeps - config.burn_in;
  for (auto& row : estimate) {
    for (double& v : row) v /= kept;
  }
  return estimate;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Adds scale * d(log-likelihood)/dw of one graph's chains into grad; returns
// the log-likelihood.
double accumulate_crf(const TrainingGraph& g, const Weights& weights, double scale, double* grad) {
  const ChainTables t = run_forward_backward(g.graph, weights);
  const auto L = static_cast<std::size_t>(weights.num_labels());
  const double ll = total_score(g.graph, g.gold, weights) - t.log_partition;
  if (grad == nullptr) return ll;

  std::vector<std::vector<double>> marg(g.graph.variables.size(), std::vector<double>(L));
  for (std::size_t c = 0; c < t.structure.chains.size(); ++c) {
    const auto [s, e] = t.structure.chains[c];
    const double z = chain_log_partition(t, c);
    for (std::size_t i = s; i <= e; ++i) {
      for (std::size_t y = 0; y < L; ++y) marg[i][y] = std::exp(t.alpha[i][y] + t.beta[i][y] - z);
    }
  }
  const std::size_t trans = weights.pair_offset(FactorKind::Transition);
  for (const Factor& f : g.graph.factors) {
    const auto a = static_cast<std::size_t>(f.a);
    if (f.kind == FactorKind::Unigram) {
      for (int feat : f.features) {
        const std::size_t base = weights.unary_index(feat, 0);
        grad[base + static_cast<std::size_t>(g.gold[a])] += scale;
        for (std::size_t y = 0; y < L; ++y) grad[base + y] -= scale * marg[a][y];
      }
      continue;
    }
    // Transition between a and a + 1: pairwise marginal from alpha/beta.
    std::size_t c = 0;
    while (t.structure.chains[c].second < a) ++c;
    const double z = chain_log_partition(t, c);
    const auto& T = t.structure.link[a];
    grad[trans + static_cast<std::size_t>(g.gold[a]) * L + static_cast<std::size_t>(g.gold[a + 1])] += scale;
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t yn = 0; yn < L; ++yn) {
        const double p = std::exp(t.alpha[a][y] + T[y * L + yn] + t.unary[a + 1][yn] + t.beta[a + 1][yn] - z);
        grad[trans + y * L + yn] -= scale * p;
      }
    }
  }
  return ll;
}

// Adds scale * d(pseudo-log-likelihood)/dw of one graph into grad.
double accumulate_pl(const TrainingGraph& g, const Weights& weights, double scale, double* grad) {
  g.graph.validate();
  check_domains(g.graph, weights);
  const auto L = static_cast<std::size_t>(weights.num_labels());
  const auto unary = all_unary_scores(g.graph, weights);
  const auto incident = g.graph.incident();
  double pll = 0.0;
  std::vector<double> scores(L);
  for (std::size_t i = 0; i < g.graph.variables.size(); ++i) {
    if (!g.targets.empty() && !g.targets[i]) continue;
    scores = unary[i];
    for (int fid : incident[i]) {
      const Factor& f = g.graph.factors[static_cast<std::size_t>(fid)];
      if (f.kind == FactorKind::Unigram) continue;
      const bool first = static_cast<std::size_t>(f.a) == i;
      const int other = g.gold[static_cast<std::size_t>(first ? f.b : f.a)];
      for (std::size_t y = 0; y < L; ++y) {
        scores[y] += first ? weights.pair(f.kind, static_cast<int>(y), other) : weights.pair(f.kind, other, static_cast<int>(y));
      }
    }
    const std::vector<double> p = softmax_of(scores);
    const auto gold = static_cast<std::size_t>(g.gold[i]);
    pll += std::log(p[gold]);
    if (grad == nullptr) continue;
    for (int fid : incident[i]) {
      const Factor& f = g.graph.factors[static_cast<std::size_t>(fid)];
      if (f.kind == FactorKind::Unigram) {
        for (int feat : f.features) {
          const std::size_t base = weights.unary_index(feat, 0);
          grad[base + gold] += scale;
          for (std::size_t y = 0; y < L; ++y) grad[base + y] -= scale * p[y];
        }
        continue;
      }
      const bool first = static_cast<std::size_t>(f.a) == i;
      const int other = g.gold[static_cast<std::size_t>(first ? f.b : f.a)];
      for (std::size_t y = 0; y < L; ++y) {
        const double d = (y == gold ? 1.0 : 0.0) - p[y];
        const std::size_t k = first ? weights.pair_index(f.kind, static_cast<int>(y), other)
                                    : weights.pair_index(f.kind, other, static_cast<int>(y));
        grad[k] += scale * d;
      }
    }
  }
  return pll;
}

using Accumulator = double (*)(const TrainingGraph&, const Weights&, double, double*);

double objective(std::span<const TrainingGraph> data, const Weights& weights, double l2,
                 std::vector<double>* gradient, Accumulator acc) {
  if (gradient) gradient->assign(weights.params.size(), 0.0);
  double total = 0.0;
  for (const TrainingGraph& g : data) total += acc(g, weights, 1.0, gradient ? gradient->data() : nullptr);
  total -= 0.5 * l2 * weights.squared_norm();
  if (gradient) {
    for (std::size_t k = 0; k < weights.params.size(); ++k) (*gradient)[k] -= l2 * weights.params[k];
  }
  return total;
}

Weights run_sgd(std::span<const TrainingGraph> items, Weights w, const TrainOptions& options, TrainLog* log,
                Accumulator acc) {
  w.sync_features();
  const std::size_t pairwise_end = w.unary_offset();
  const auto trainable = [&](std::size_t k) { return k < pairwise_end ? options.train_pairwise : options.train_unigram; };
  Rng rng(options.seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double n = std::max<double>(1.0, static_cast<double>(items.size()));
  std::vector<double> step(w.params.size(), 0.0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      std::fill(step.begin(), step.end(), 0.0);
      acc(items[idx], w, options.learning_rate, step.data());
      const double decay = 1.0 - options.learning_rate * options.l2 / n;
      for (std::size_t k = 0; k < w.params.size(); ++k) {
        if (trainable(k)) w.params[k] = w.params[k] * decay + step[k];
      }
    }
    const double value = objective(items, w, options.l2, nullptr, acc);
    if (!std::isfinite(value) || !w.all_finite()) {
      throw DivergenceError("training objective became non-finite in epoch " + std::to_string(epoch + 1));
    }
    if (log) log->objective.push_back(value);
  }
  return w;
}

}  // namespace

double crf_objective(std::span<const TrainingGraph> data, const Weights& weights, double l2,
                     std::vector<double>* gradient) {
  return objective(data, weights, l2, gradient, accumulate_crf);
}

double pseudolikelihood_objective(std::span<const TrainingGraph> data, const Weights& weights, double l2,
                                  std::vector<double>* gradient) {
  return objective(data, weights, l2, gradient, accumulate_pl);
}

std::vector<TrainingGraph> split_chains(const TrainingGraph& g) {
  const std::size_t n = g.graph.variables.size();
  std::vector<bool> linked(n, false);
  for (const Factor& f : g.graph.factors) {
    if (f.kind == FactorKind::Transition) linked[static_cast<std::size_t>(f.a)] = true;
  }
  std::vector<TrainingGraph> out;
  std::vector<std::size_t> chain_of(n), local(n);
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n || !linked[i]) {
      TrainingGraph chain;
      for (std::size_t k = start; k <= i; ++k) {
        chain_of[k] = out.size();
        local[k] = k - start;
        chain.graph.variables.push_back(g.graph.variables[k]);
        chain.gold.push_back(g.gold[k]);
        if (!g.targets.empty()) chain.targets.push_back(g.targets[k]);
      }
      out.push_back(std::move(chain));
      start = i + 1;
    }
  }
  for (const Factor& f : g.graph.factors) {
    if (f.kind != FactorKind::Unigram && f.kind != FactorKind::Transition) continue;
    Factor copy = f;
    copy.a = static_cast<int>(local[static_cast<std::size_t>(f.a)]);
    if (f.kind == FactorKind::Transition) copy.b = copy.a + 1;
    out[chain_of[static_cast<std::size_t>(f.a)]].graph.factors.push_back(std::move(copy));
  }
  return out;
}

Weights train_crf(std::span<const TrainingGraph> data, Weights init, const TrainOptions& options, TrainLog* log) {
  std::vector<TrainingGraph> chains;
  for (const TrainingGraph& g : data) {
    for (TrainingGraph& c : split_chains(g)) chains.push_back(std::move(c));
  }
  return run_sgd(chains, std::move(init), options, log, accumulate_crf);
}

Weights train_pseudolikelihood(std::span<const TrainingGraph> data, Weights init, const TrainOptions& options,
                               TrainLog* log) {
  return run_sgd(data, std::move(init), options, log, accumulate_pl);
}

std::vector<int> predict(const FactorGraph& graph, const Weights& weights, InferenceMode mode,
                         const GibbsConfig& gibbs) {
  if (mode == InferenceMode::Exact) return viterbi(graph, weights);
  if (graph.variables.empty()) return {};
  const auto marginals = gibbs_marginals(graph, weights, gibbs);
  std::vector<int> out;
  out.reserve(marginals.size());
  for (const auto& m : marginals) out.push_back(static_cast<int>(argmax_lowest(m)));
  return out;
}

// ---------------------------------------------------------------------------
// Graph construction for token labeling

namespace {

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; });
}

template <typename FeatureId>
FactorGraph build_graph_impl(const Document& doc, const GraphFeatureConfig& config, ModelKind kind, int skip_window,
                             int num_labels, FeatureId feature_id) {
  FactorGraph graph;
  std::vector<std::string> normalized;
  std::vector<int> sentence_of;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const Sentence& s = doc.sentences[si];
    const std::vector<std::string>* pos = doc.pos_tags ? &(*doc.pos_tags)[si] : nullptr;
    const SentenceContext ctx = make_sentence_context(s.tokens, config.dictionaries, pos);
    const int first = static_cast<int>(graph.variables.size());
    for (std::size_t ti = 0; ti < s.size(); ++ti) {
      const int var = static_cast<int>(graph.variables.size());
      graph.variables.push_back(LabelVariable{num_labels, Anchor{0, static_cast<int>(si), static_cast<int>(ti)}});
      Factor unigram{FactorKind::Unigram, var, -1, {}, {}};
      for (const std::string& name : extract_features(ctx, ti, config.run)) {
        const int id = feature_id(name);
        if (id >= 0) unigram.features.push_back(id);
      }
      graph.factors.push_back(std::move(unigram));
      if (kind != ModelKind::Lr && ti > 0) graph.factors.push_back(Factor{FactorKind::Transition, var - 1, var, {}, {}});
      normalized.push_back(ctx.normalized[ti]);
      sentence_of.push_back(static_cast<int>(si));
    }
    (void)first;
  }
  if (kind == ModelKind::Skip) {
    std::map<std::string, std::vector<int>> occurrences;
    for (std::size_t v = 0; v < normalized.size(); ++v) {
      if (has_alnum(normalized[v])) occurrences[normalized[v]].push_back(static_cast<int>(v));
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [word, vars] : occurrences) {
      for (std::size_t i = 0; i < vars.size(); ++i) {
        for (std::size_t j = i + 1; j < vars.size(); ++j) {
          if (sentence_of[static_cast<std::size_t>(vars[j])] - sentence_of[static_cast<std::size_t>(vars[i])] > skip_window) break;
          pairs.emplace_back(vars[i], vars[j]);
        }
      }
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [a, b] : pairs) graph.factors.push_back(Factor{FactorKind::Skip, a, b, {}, {}});
  }
  return graph;
}

}  // namespace

FactorGraph build_graph(const Document& doc, const GraphFeatureConfig& config, ModelKind kind, int skip_window,
                        const Weights& weights) {
  return build_graph_impl(doc, config, kind, skip_window, weights.num_labels(),
                          [&](const std::string& name) { return weights.features.lookup(name); });
}

FactorGraph build_training_graph(const Document& doc, const GraphFeatureConfig& config, ModelKind kind,
                                 int skip_window, Weights& weights) {
  FactorGraph g = build_graph_impl(doc, config, kind, skip_window, weights.num_labels(),
                                   [&](const std::string& name) { return weights.features.intern(name); });
  weights.sync_features();
  return g;
}

}  // namespace tempie
