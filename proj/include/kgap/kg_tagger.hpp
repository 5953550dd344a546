#pragma once

// Three-stage rule tagger: detailed type, then global group, then semantic
// filters from the functional program. A gap assigned by an earlier stage is
// never reassigned by a later one, so each gap appears at most once per
// question and keeps the provenance of the first stage that matched it.

#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/parallel.hpp"
#include "kgap/text.hpp"

namespace kgap {

struct GapKeywords {
  std::set<std::string> detailed_types;
  std::set<std::string> global_groups;
  std::set<std::string> semantic_filters;

  std::set<std::string>& for_source(TagSource s) {
    switch (s) {
      case TagSource::DetailedType: return detailed_types;
      case TagSource::GlobalGroup: return global_groups;
      case TagSource::SemanticFilter: return semantic_filters;
    }
    return detailed_types;
  }
  const std::set<std::string>& for_source(TagSource s) const {
    return const_cast<GapKeywords*>(this)->for_source(s);
  }
};

inline constexpr std::string_view json_key(TagSource s) {
  switch (s) {
    case TagSource::DetailedType: return "detailed_types";
    case TagSource::GlobalGroup: return "global_groups";
    case TagSource::SemanticFilter: return "semantic_filters";
  }
  return "?";
}

class KgMappingTable {
 public:
  // Registers `keyword` for `gap` in the stage `source`. Keywords are stored
  // lowercased and trimmed; a keyword already bound to a different gap in the
  // same stage is rejected.
  void add(KnowledgeGap gap, TagSource source, std::string_view keyword) {
    if (!is_taggable(gap)) {
      throw ValidationError("gap '" + std::string(to_string(gap)) + "' is not taggable");
    }
    auto kw = normalize_keyword(keyword);
    if (kw.empty()) throw ValidationError("empty keyword for gap " + std::string(to_string(gap)));
    auto& stage = lookup_[index(source)];
    auto [it, inserted] = stage.emplace(kw, gap);
    if (!inserted && it->second != gap) {
      throw ValidationError("keyword '" + kw + "' maps to both " +
                            std::string(to_string(it->second)) + " and " +
                            std::string(to_string(gap)) + " in " +
                            std::string(json_key(source)));
    }
    gaps_[gap].for_source(source).insert(kw);
  }

  std::optional<KnowledgeGap> lookup(TagSource source, std::string_view keyword) const {
    const auto& stage = lookup_[index(source)];
    auto it = stage.find(normalize_keyword(keyword));
    if (it == stage.end()) return std::nullopt;
    return it->second;
  }

  const GapKeywords& keywords(KnowledgeGap gap) const {
    static const GapKeywords kEmpty;
    auto it = gaps_.find(gap);
    return it == gaps_.end() ? kEmpty : it->second;
  }

  // Asset format: {"<gap>": {"detailed_types": [...], "global_groups": [...],
  // "semantic_filters": [...]}, ...}. Missing arrays are treated as empty.
  static KgMappingTable from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("mapping asset must be a JSON object");
    KgMappingTable table;
    for (const auto& [name, entry] : j.items()) {
      auto gap = parse_gap(name);
      if (!gap) throw ValidationError("unknown gap '" + name + "' in mapping asset");
      if (!entry.is_object()) throw ValidationError("mapping entry for " + name + " is not an object");
      for (auto source : kTagSources) {
        auto it = entry.find(std::string(json_key(source)));
        if (it == entry.end() || it->is_null()) continue;
        if (!it->is_array()) {
          throw ValidationError(name + "." + std::string(json_key(source)) + " is not an array");
        }
        for (const auto& kw : *it) {
          if (!kw.is_string()) throw ValidationError("non-string keyword under " + name);
          table.add(*gap, source, kw.get<std::string>());
        }
      }
    }
    return table;
  }

  static KgMappingTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open mapping asset " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed mapping asset ") + path, e.byte);
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (auto gap : kTaggableGaps) {
      const auto& kw = keywords(gap);
      nlohmann::json entry = nlohmann::json::object();
      for (auto source : kTagSources) entry[std::string(json_key(source))] = kw.for_source(source);
      j[std::string(to_string(gap))] = std::move(entry);
    }
    return j;
  }

  // Copy with every keyword of one stage dropped.
  KgMappingTable without_stage(TagSource source) const {
    KgMappingTable copy = *this;
    copy.lookup_[index(source)].clear();
    for (auto& [gap, kw] : copy.gaps_) kw.for_source(source).clear();
    return copy;
  }

 private:
  static std::size_t index(TagSource s) { return static_cast<std::size_t>(s); }

  std::map<KnowledgeGap, GapKeywords> gaps_;
  std::array<std::map<std::string, KnowledgeGap>, 3> lookup_;
};

// Which program steps count as semantic filters: an operation made of one of
// `verbs` followed by a category, e.g. "filter size" or "verify material".
struct FilterPattern {
  std::set<std::string> verbs = {"filter", "verify", "choose", "query"};
};

// Category of every step whose operation reads "<verb> <category>", in
// program order, duplicates kept. Bare verbs yield nothing.
inline std::vector<std::string> extract_semantic_filters(std::span<const FunctionalStep> program,
                                                         const FilterPattern& pattern = {}) {
  std::vector<std::string> out;
  for (const auto& step : program) {
    auto op = trim(step.operation);
    auto sp = op.find_first_of(" \t");
    if (sp == std::string_view::npos) continue;
    if (!pattern.verbs.contains(to_lower(op.substr(0, sp)))) continue;
    auto category = normalize_keyword(op.substr(sp + 1));
    if (!category.empty()) out.push_back(std::move(category));
  }
  return out;
}

struct TagResult {
  std::string question_id;
  std::string text;
  std::map<KnowledgeGap, TagSource> tags;  // one entry per gap

  bool has(KnowledgeGap g) const { return tags.contains(g); }

  friend bool operator==(const TagResult&, const TagResult&) = default;
};

// Annotation values that matched no keyword in their stage.
struct TagDiagnostics {
  std::map<std::string, std::size_t> unknown_detailed_types;
  std::map<std::string, std::size_t> unknown_global_groups;
  std::size_t untagged = 0;

  void merge(const TagDiagnostics& o) {
    for (const auto& [k, n] : o.unknown_detailed_types) unknown_detailed_types[k] += n;
    for (const auto& [k, n] : o.unknown_global_groups) unknown_global_groups[k] += n;
    untagged += o.untagged;
  }
};

inline TagResult tag_question(const QuestionRecord& q, const KgMappingTable& table,
                              TagDiagnostics* diag = nullptr, const FilterPattern& pattern = {}) {
  TagResult r{q.question_id, q.text, {}};

  if (auto gap = table.lookup(TagSource::DetailedType, q.detailed_type)) {
    r.tags.emplace(*gap, TagSource::DetailedType);
  } else if (diag && !trim(q.detailed_type).empty()) {
    ++diag->unknown_detailed_types[normalize_keyword(q.detailed_type)];
  }

  if (auto gap = table.lookup(TagSource::GlobalGroup, q.global_group)) {
    r.tags.emplace(*gap, TagSource::GlobalGroup);  // no-op if already present
  } else if (diag && !trim(q.global_group).empty()) {
    ++diag->unknown_global_groups[normalize_keyword(q.global_group)];
  }

  for (const auto& category : extract_semantic_filters(q.semantic_program, pattern)) {
    if (auto gap = table.lookup(TagSource::SemanticFilter, category)) {
      r.tags.emplace(*gap, TagSource::SemanticFilter);
    }
  }

  if (diag && r.tags.empty()) ++diag->untagged;
  return r;
}

inline std::vector<TagResult> tag_corpus(std::span<const QuestionRecord> questions,
                                         const KgMappingTable& table, std::size_t threads = 1,
                                         TagDiagnostics* diag = nullptr) {
  struct Tagged {
    TagResult result;
    TagDiagnostics diag;
  };
  auto tagged = parallel_map(
      questions,
      [&](const QuestionRecord& q) {
        Tagged t;
        t.result = tag_question(q, table, &t.diag);
        return t;
      },
      threads);
  std::vector<TagResult> out;
  out.reserve(tagged.size());
  for (auto& t : tagged) {
    if (diag) diag->merge(t.diag);
    out.push_back(std::move(t.result));
  }
  return out;
}

inline nlohmann::json to_json(const TagResult& r) {
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& [gap, src] : r.tags) {
    tags.push_back({{"gap", std::string(to_string(gap))}, {"source", std::string(to_string(src))}});
  }
  return {{"question_id", r.question_id}, {"tags", std::move(tags)}, {"text", r.text}};
}

inline TagResult tag_result_from_json(const nlohmann::json& j) {
  TagResult r;
  r.question_id = j.at("question_id").get<std::string>();
  if (auto it = j.find("text"); it != j.end() && it->is_string()) r.text = it->get<std::string>();
  for (const auto& t : j.at("tags")) {
    auto gap = parse_gap(t.at("gap").get<std::string>());
    auto src = parse_source(t.at("source").get<std::string>());
    if (!gap || !is_taggable(*gap) || !src) {
      throw ValidationError("bad tag entry in record " + r.question_id);
    }
    if (!r.tags.emplace(*gap, *src).second) {
      throw ValidationError("duplicate gap in record " + r.question_id);
    }
  }
  return r;
}

// ---- distribution report -------------------------------------------------

struct DistributionRow {
  std::size_t total = 0;   // questions tagged with the gap
  std::size_t unique = 0;  // distinct question strings among them
  std::array<std::size_t, 3> by_source{};  // indexed by TagSource
};

struct DistributionReport {
  std::map<KnowledgeGap, DistributionRow> rows;  // every taggable gap present
  std::size_t questions = 0;
  std::size_t untagged = 0;
};

inline DistributionReport distribution_report(std::span<const TagResult> results) {
  DistributionReport report;
  std::map<KnowledgeGap, std::set<std::string>> texts;
  for (auto gap : kTaggableGaps) report.rows[gap];
  for (const auto& r : results) {
    ++report.questions;
    if (r.tags.empty()) ++report.untagged;
    for (const auto& [gap, src] : r.tags) {
      auto& row = report.rows[gap];
      ++row.total;
      ++row.by_source[static_cast<std::size_t>(src)];
      texts[gap].insert(r.text);
    }
  }
  for (auto& [gap, row] : report.rows) row.unique = texts[gap].size();
  return report;
}

inline nlohmann::json to_json(const DistributionReport& report) {
  nlohmann::json gaps = nlohmann::json::object();
  for (const auto& [gap, row] : report.rows) {
    gaps[std::string(to_string(gap))] = {
        {"total", row.total},
        {"unique", row.unique},
        {"by_source",
         {{"detailed", row.by_source[0]}, {"group", row.by_source[1]}, {"semantic", row.by_source[2]}}}};
  }
  return {{"gaps", std::move(gaps)}, {"questions", report.questions}, {"untagged", report.untagged}};
}

}  // namespace kgap
