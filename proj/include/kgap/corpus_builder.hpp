#pragma once

// Per-gap (path -> template) training pairs, deterministic train/val/test
// splits and split statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/gqa_ingest.hpp"
#include "kgap/graph_paths.hpp"
#include "kgap/kg_tagger.hpp"
#include "kgap/parallel.hpp"
#include "kgap/template_engine.hpp"

namespace kgap {

struct TrainingPair {
  KnowledgeGap kg = KnowledgeGap::Attribute;
  std::string question_id;
  std::string image_id;
  PathSequence path;
  Template tmpl;

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

enum class SkipReason { Untagged, MissingGraph, InsufficientEndpoints, NoPath, BadTemplate };

inline constexpr std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::Untagged: return "untagged";
    case SkipReason::MissingGraph: return "missing_graph";
    case SkipReason::InsufficientEndpoints: return "insufficient_endpoints";
    case SkipReason::NoPath: return "no_path";
    case SkipReason::BadTemplate: return "bad_template";
  }
  return "?";
}

struct BuildStats {
  std::size_t questions = 0;
  std::size_t pairs = 0;
  std::map<SkipReason, std::size_t> skipped;
};

struct BuildOptions {
  PathMode mode = PathMode::Triple;
  std::size_t max_length = kDefaultMaxPathLength;
  std::optional<KnowledgeGap> only_gap;  // restrict output to one gap
  std::size_t threads = 1;
};

// One pair per (question, tagged gap). The path joins the first two located
// objects of the question; questions that cannot produce a path or template
// are skipped with a reason.
inline std::vector<TrainingPair> build_pairs(std::span<const QuestionRecord> questions,
                                             std::span<const TagResult> tags, const GraphIndex& graphs,
                                             const BuildOptions& opts, BuildStats* stats = nullptr) {
  std::map<std::string_view, const TagResult*> tag_index;
  for (const auto& t : tags) tag_index.emplace(t.question_id, &t);

  struct Outcome {
    std::vector<TrainingPair> pairs;
    std::optional<SkipReason> skipped;
  };

  auto process = [&](const QuestionRecord& q) -> Outcome {
    auto t = tag_index.find(q.question_id);
    if (t == tag_index.end() || t->second->tags.empty()) return {{}, SkipReason::Untagged};
    std::vector<KnowledgeGap> gaps;
    for (const auto& [gap, src] : t->second->tags) {
      if (!opts.only_gap || *opts.only_gap == gap) gaps.push_back(gap);
    }
    if (gaps.empty()) return {{}, SkipReason::Untagged};

    auto g = graphs.find(q.image_id);
    if (g == graphs.end()) return {{}, SkipReason::MissingGraph};
    const auto& sg = g->second;
    auto located = locate_question_objects(q, sg);
    if (located.size() < 2) return {{}, SkipReason::InsufficientEndpoints};
    auto path = extract_path(sg, located[0], located[1], opts.mode, opts.max_length);
    if (!path) return {{}, SkipReason::NoPath};
    Template tmpl;
    try {
      tmpl = extract_template(q, sg);
    } catch (const ValidationError&) {
      return {{}, SkipReason::BadTemplate};
    }
    Outcome out;
    for (auto gap : gaps) out.pairs.push_back({gap, q.question_id, q.image_id, *path, tmpl});
    return out;
  };

  auto outcomes = parallel_map(questions, process, opts.threads);
  std::vector<TrainingPair> pairs;
  if (stats) stats->questions += questions.size();
  for (auto& o : outcomes) {
    if (o.skipped) {
      if (stats) ++stats->skipped[*o.skipped];
      continue;
    }
    if (stats) stats->pairs += o.pairs.size();
    for (auto& p : o.pairs) pairs.push_back(std::move(p));
  }
  return pairs;
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const {
    if (train < 0 || val < 0 || test < 0) throw ValidationError("split ratios must be non-negative");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
  }
};

struct CorpusSplit {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> val;
  std::vector<TrainingPair> test;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Shuffle key for a question under a seed. Platform independent.
inline std::uint64_t shuffle_key(std::uint64_t seed, std::string_view question_id) {
  return detail::splitmix64(detail::fnv1a64(question_id) ^ detail::splitmix64(seed));
}

// Split sizes for n items: train = round(r_train * n), val = round(r_val * n)
// (clamped to what is left), test = remainder.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
  auto round_to = [&](double x) {
    return std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(x * static_cast<double>(n))));
  };
  std::size_t n_train = round_to(r.train);
  std::size_t n_val = std::min(n - n_train, round_to(r.val));
  return {n_train, n_val, n - n_train - n_val};
}

// Orders pairs by the seeded question key (ties broken by the pair content,
// so the result does not depend on input order) and slices contiguously.
inline CorpusSplit split_corpus(std::vector<TrainingPair> pairs, const SplitRatios& ratios,
                                std::uint64_t seed) {
  ratios.validate();
  std::vector<std::pair<std::uint64_t, std::size_t>> keys;
  keys.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) keys.emplace_back(shuffle_key(seed, pairs[i].question_id), i);
  std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
    const auto& pa = pairs[a.second];
    const auto& pb = pairs[b.second];
    return std::tie(a.first, pa.question_id, pa.kg, pa.path.tokens, pa.tmpl.tokens) <
           std::tie(b.first, pb.question_id, pb.kg, pb.path.tokens, pb.tmpl.tokens);
  });

  auto [n_train, n_val, n_test] = split_sizes(pairs.size(), ratios);
  CorpusSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    auto& dst = k < n_train ? split.train : (k < n_train + n_val ? split.val : split.test);
    dst.push_back(std::move(pairs[keys[k].second]));
  }
  return split;
}

struct SplitStats {
  std::size_t n_examples = 0;
  std::size_t n_unique_templates = 0;
  std::size_t n_unique_paths = 0;

  friend bool operator==(const SplitStats&, const SplitStats&) = default;
};

struct CorpusStats {
  SplitStats train;
  SplitStats val;
  SplitStats test;
};

inline SplitStats split_stats(std::span<const TrainingPair> pairs) {
  std::set<Tokens> templates, paths;
  for (const auto& p : pairs) {
    templates.insert(p.tmpl.tokens);
    paths.insert(p.path.tokens);
  }
  return {pairs.size(), templates.size(), paths.size()};
}

inline CorpusStats corpus_stats(const CorpusSplit& split) {
  return {split_stats(split.train), split_stats(split.val), split_stats(split.test)};
}

inline nlohmann::json corpus_record_json(const TrainingPair& p) {
  return {{"L", p.path.length},
          {"image_id", p.image_id},
          {"kg", std::string(to_string(p.kg))},
          {"n_attr", p.tmpl.n_attr},
          {"path_tokens", p.path.tokens},
          {"question_id", p.question_id},
          {"template_tokens", p.tmpl.tokens}};
}

// Corpus records carry only the rendered path, so endpoints are not restored.
inline TrainingPair corpus_record_from_json(const nlohmann::json& j) {
  TrainingPair p;
  auto kg = parse_gap(j.at("kg").get<std::string>());
  if (!kg || !is_taggable(*kg)) throw ValidationError("bad kg in corpus record");
  p.kg = *kg;
  p.question_id = j.at("question_id").get<std::string>();
  p.image_id = j.at("image_id").get<std::string>();
  p.path.tokens = j.at("path_tokens").get<Tokens>();
  p.path.length = j.at("L").get<std::size_t>();
  p.tmpl = Template::from_tokens(j.at("template_tokens").get<Tokens>());
  return p;
}

inline nlohmann::ordered_json to_json(const CorpusStats& s, KnowledgeGap kg, PathMode mode,
                                      std::uint64_t seed) {
  auto row = [](std::string_view name, const SplitStats& st) {
    return nlohmann::ordered_json{{"split", name},
                                  {"n_examples", st.n_examples},
                                  {"n_unique_templates", st.n_unique_templates},
                                  {"n_unique_paths", st.n_unique_paths}};
  };
  return {{"kg", std::string(to_string(kg))},
          {"mode", std::string(to_string(mode))},
          {"seed", seed},
          {"splits", {row("train", s.train), row("val", s.val), row("test", s.test)}}};
}

}  // namespace kgap
