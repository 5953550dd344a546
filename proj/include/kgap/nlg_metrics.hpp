#pragma once

// Sentence-level BLEU and METEOR over token sequences, and the per-model
// aggregate used to score generated templates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/parallel.hpp"
#include "kgap/template_engine.hpp"
#include "kgap/text.hpp"

namespace kgap {

inline constexpr int kBleuMaxOrder = 4;
inline constexpr double kBleuEpsilon = 1e-9;  // stands in for a zero n-gram precision

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(const Tokens& toks, int n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (toks.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::vector<std::string_view> g(toks.begin() + i, toks.begin() + i + n);
    ++counts[g];
  }
  return counts;
}

}  // namespace detail

// Modified (clipped) n-gram precision of `candidate` against `references`.
// Returns {matches, total}.
inline std::pair<std::size_t, std::size_t> modified_precision(const Tokens& candidate,
                                                              std::span<const Tokens> references, int n) {
  auto cand = detail::ngram_counts(candidate, n);
  std::map<std::vector<std::string_view>, std::size_t> max_ref;
  for (const auto& ref : references) {
    for (const auto& [g, c] : detail::ngram_counts(ref, n)) {
      auto& m = max_ref[g];
      m = std::max(m, c);
    }
  }
  std::size_t matches = 0, total = 0;
  for (const auto& [g, c] : cand) {
    total += c;
    auto it = max_ref.find(g);
    if (it != max_ref.end()) matches += std::min(c, it->second);
  }
  return {matches, total};
}

// Uniform-weight geometric mean of the clipped 1..4-gram precisions times the
// brevity penalty exp(1 - r/c) (c < r), where r is the reference length
// closest to c (shorter wins ties). A zero precision, including an order with
// no candidate n-grams, counts as kBleuEpsilon.
inline double bleu(const Tokens& candidate, std::span<const Tokens> references) {
  if (candidate.empty() || references.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    auto [matches, total] = modified_precision(candidate, references, n);
    double p = (total == 0 || matches == 0) ? kBleuEpsilon : static_cast<double>(matches) / total;
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(references.front().size());
  for (const auto& ref : references) {
    double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * std::exp(log_sum / kBleuMaxOrder), 0.0, 1.0);
}

inline double bleu(const Tokens& candidate, const Tokens& reference) {
  return bleu(candidate, std::span<const Tokens>(&reference, 1));
}

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-match unigram alignment with the maximum number of matches and, among
// those, the fewest chunks (runs contiguous in both sentences). Branch and
// bound over candidate positions; `node_budget` caps the search on
// pathological inputs, in which case the best alignment found is returned.
inline Alignment meteor_alignment(const Tokens& candidate, const Tokens& reference,
                                  std::size_t node_budget = 2'000'000) {
  std::map<std::string_view, std::vector<std::size_t>> ref_pos;
  for (std::size_t j = 0; j < reference.size(); ++j) ref_pos[reference[j]].push_back(j);
  std::map<std::string_view, std::size_t> cand_count;
  for (const auto& t : candidate) ++cand_count[t];

  // Skips allowed per token type so that the match count stays maximal.
  std::map<std::string_view, std::size_t> skips;
  std::size_t max_matches = 0;
  for (const auto& [t, cc] : cand_count) {
    auto it = ref_pos.find(t);
    std::size_t cr = it == ref_pos.end() ? 0 : it->second.size();
    max_matches += std::min(cc, cr);
    skips[t] = cc - std::min(cc, cr);
  }
  if (max_matches == 0) return {0, 0};

  const std::size_t n = candidate.size();
  std::vector<bool> used(reference.size(), false);
  std::vector<long> match_of(n, -1);
  std::size_t best_links = 0;
  bool found = false;
  std::size_t nodes = 0;

  // links = number of i with match_of[i-1] + 1 == match_of[i]; chunks = m - links.
  auto search = [&](auto&& self, std::size_t i, std::size_t links) -> void {
    if (++nodes > node_budget && found) return;
    if (i == n) {
      if (!found || links > best_links) {
        best_links = links;
        found = true;
      }
      return;
    }
    if (found && links + (n - i) <= best_links) return;

    const auto& tok = candidate[i];
    const long prev = i > 0 ? match_of[i - 1] : -2;
    auto it = ref_pos.find(tok);
    if (it != ref_pos.end()) {
      // Extending the previous match is tried first; it is never worse locally.
      std::vector<std::size_t> order;
      for (auto j : it->second) {
        if (!used[j] && static_cast<long>(j) == prev + 1) order.push_back(j);
      }
      for (auto j : it->second) {
        if (!used[j] && static_cast<long>(j) != prev + 1) order.push_back(j);
      }
      for (auto j : order) {
        used[j] = true;
        match_of[i] = static_cast<long>(j);
        self(self, i + 1, links + (static_cast<long>(j) == prev + 1 ? 1 : 0));
        used[j] = false;
        match_of[i] = -1;
      }
    }
    auto& budget = skips[tok];
    if (budget > 0) {
      --budget;
      self(self, i + 1, links);
      ++budget;
    }
  };
  search(search, 0, 0);
  return {max_matches, max_matches - best_links};
}

inline double meteor_from_alignment(const Alignment& a, std::size_t cand_len, std::size_t ref_len,
                                    const MeteorParams& params = {}) {
  if (a.matches == 0 || cand_len == 0 || ref_len == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / static_cast<double>(cand_len);
  const double recall = m / static_cast<double>(ref_len);
  const double fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return std::clamp(fmean * (1.0 - penalty), 0.0, 1.0);
}

inline double meteor(const Tokens& candidate, const Tokens& reference, const MeteorParams& params = {}) {
  return meteor_from_alignment(meteor_alignment(candidate, reference), candidate.size(), reference.size(),
                               params);
}

struct MetricReport {
  KnowledgeGap kg = KnowledgeGap::Attribute;
  PathMode mode = PathMode::Triple;
  double bleu = 0.0;
  double meteor = 0.0;
  std::size_t n_novel = 0;
  std::size_t n_existing = 0;
  bool empty = true;  // no generations were scored
};

struct Generation {
  Template generated;
  Template reference;
};

// Mean sentence-level BLEU and METEOR over (generated, reference) pairs plus
// novelty counts against the training templates.
inline MetricReport evaluate_generated(std::span<const Generation> generations,
                                       const std::set<Tokens>& training_templates, KnowledgeGap kg,
                                       PathMode mode, std::size_t threads = 1) {
  MetricReport report;
  report.kg = kg;
  report.mode = mode;
  if (generations.empty()) return report;
  report.empty = false;

  auto scores = parallel_map(
      generations,
      [](const Generation& g) {
        return std::pair{bleu(g.generated.tokens, g.reference.tokens),
                         meteor(g.generated.tokens, g.reference.tokens)};
      },
      threads);
  std::vector<double> b, m;
  for (const auto& [sb, sm] : scores) {
    b.push_back(sb);
    m.push_back(sm);
  }
  const double n = static_cast<double>(generations.size());
  report.bleu = pairwise_sum(b) / n;
  report.meteor = pairwise_sum(m) / n;
  for (const auto& g : generations) {
    if (template_novelty(g.generated, training_templates) == Novelty::Existing) {
      ++report.n_existing;
    } else {
      ++report.n_novel;
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  return {{"kg", std::string(to_string(r.kg))},
          {"mode", std::string(to_string(r.mode))},
          {"bleu", r.bleu},
          {"meteor", r.meteor},
          {"n_novel", r.n_novel},
          {"n_existing", r.n_existing},
          {"empty", r.empty}};
}

}  // namespace kgap
