#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgap/error.hpp"

namespace kgap {

struct Relation {
  std::string predicate;  // e.g. "to the left of"
  std::string target;     // object_id in the same graph

  friend bool operator==(const Relation&, const Relation&) = default;
};

struct SgObject {
  std::string object_id;
  std::string name;
  std::vector<std::string> attributes;
  std::vector<Relation> relations;

  friend bool operator==(const SgObject&, const SgObject&) = default;
};

struct SceneGraph {
  std::string image_id;
  std::map<std::string, SgObject> objects;  // keyed by object_id

  const SgObject* find(const std::string& id) const {
    auto it = objects.find(id);
    return it == objects.end() ? nullptr : &it->second;
  }

  const SgObject& at(const std::string& id) const {
    auto it = objects.find(id);
    if (it == objects.end()) {
      throw ValidationError("unknown object id '" + id + "' in image " + image_id);
    }
    return it->second;
  }

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

// Throws ValidationError on empty names/attributes/predicates or relations
// whose target is not in the graph.
inline void validate(const SceneGraph& sg) {
  for (const auto& [id, obj] : sg.objects) {
    if (obj.object_id != id) {
      throw ValidationError("object key '" + id + "' does not match object_id '" +
                            obj.object_id + "'");
    }
    if (obj.name.empty()) throw ValidationError("object " + id + " has an empty name");
    for (const auto& a : obj.attributes) {
      if (a.empty()) throw ValidationError("object " + id + " has an empty attribute");
    }
    for (const auto& r : obj.relations) {
      if (r.predicate.empty()) {
        throw ValidationError("object " + id + " has a relation with an empty predicate");
      }
      if (!sg.objects.contains(r.target)) {
        throw ValidationError("object " + id + " relates to unknown object '" + r.target + "'");
      }
    }
  }
}

// Half-open token interval [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string key() const {
    return end == begin + 1 ? std::to_string(begin)
                            : std::to_string(begin) + ":" + std::to_string(end);
  }

  // Parses "3" (= [3,4)) or "3:5" (= [3,5)).
  static TokenSpan parse(std::string_view key) {
    auto to_index = [&](std::string_view s) -> std::size_t {
      if (s.empty()) throw ValidationError("bad annotation span '" + std::string(key) + "'");
      std::size_t v = 0;
      for (char c : s) {
        if (c < '0' || c > '9') {
          throw ValidationError("bad annotation span '" + std::string(key) + "'");
        }
        v = v * 10 + static_cast<std::size_t>(c - '0');
      }
      return v;
    };
    auto colon = key.find(':');
    if (colon == std::string_view::npos) {
      auto b = to_index(key);
      return {b, b + 1};
    }
    TokenSpan span{to_index(key.substr(0, colon)), to_index(key.substr(colon + 1))};
    if (span.end <= span.begin) {
      throw ValidationError("empty annotation span '" + std::string(key) + "'");
    }
    return span;
  }

  friend auto operator<=>(const TokenSpan&, const TokenSpan&) = default;
};

struct FunctionalStep {
  std::string operation;  // e.g. "filter size"
  std::string argument;   // e.g. "large"
  std::vector<std::size_t> dependencies;

  friend bool operator==(const FunctionalStep&, const FunctionalStep&) = default;
};

struct QuestionRecord {
  std::string question_id;
  std::string image_id;
  std::string text;
  std::string answer;
  std::string detailed_type;
  std::string global_group;
  std::vector<FunctionalStep> semantic_program;
  std::map<TokenSpan, std::string> object_annotations;

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

enum class KnowledgeGap {
  Attribute,
  Direction,
  Location,
  Material,
  Reasoning,
  Sentiment,
  Size,
  State,
  // Simulated-only gaps; never produced by the tagger.
  Context,
  EntityResolution,
  Explanatory,
  Inverse,
};

inline constexpr std::array<KnowledgeGap, 8> kTaggableGaps = {
    KnowledgeGap::Attribute, KnowledgeGap::Direction, KnowledgeGap::Location,
    KnowledgeGap::Material,  KnowledgeGap::Reasoning, KnowledgeGap::Sentiment,
    KnowledgeGap::Size,      KnowledgeGap::State,
};

inline constexpr std::array<KnowledgeGap, 4> kSimulatedGaps = {
    KnowledgeGap::Context, KnowledgeGap::EntityResolution, KnowledgeGap::Explanatory,
    KnowledgeGap::Inverse,
};

inline constexpr bool is_taggable(KnowledgeGap g) {
  return static_cast<int>(g) <= static_cast<int>(KnowledgeGap::State);
}

inline constexpr std::string_view to_string(KnowledgeGap g) {
  switch (g) {
    case KnowledgeGap::Attribute: return "attribute";
    case KnowledgeGap::Direction: return "direction";
    case KnowledgeGap::Location: return "location";
    case KnowledgeGap::Material: return "material";
    case KnowledgeGap::Reasoning: return "reasoning";
    case KnowledgeGap::Sentiment: return "sentiment";
    case KnowledgeGap::Size: return "size";
    case KnowledgeGap::State: return "state";
    case KnowledgeGap::Context: return "context";
    case KnowledgeGap::EntityResolution: return "entity_resolution";
    case KnowledgeGap::Explanatory: return "explanatory";
    case KnowledgeGap::Inverse: return "inverse";
  }
  return "?";
}

inline std::optional<KnowledgeGap> parse_gap(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(KnowledgeGap::Inverse); ++i) {
    auto g = static_cast<KnowledgeGap>(i);
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

enum class TagSource { DetailedType, GlobalGroup, SemanticFilter };

inline constexpr std::array<TagSource, 3> kTagSources = {
    TagSource::DetailedType, TagSource::GlobalGroup, TagSource::SemanticFilter};

inline constexpr std::string_view to_string(TagSource s) {
  switch (s) {
    case TagSource::DetailedType: return "detailed";
    case TagSource::GlobalGroup: return "group";
    case TagSource::SemanticFilter: return "semantic";
  }
  return "?";
}

inline std::optional<TagSource> parse_source(std::string_view s) {
  for (auto src : kTagSources) {
    if (to_string(src) == s) return src;
  }
  return std::nullopt;
}

enum class PathMode { Triple, Path };

inline constexpr std::string_view to_string(PathMode m) {
  return m == PathMode::Triple ? "triple" : "path";
}

inline std::optional<PathMode> parse_mode(std::string_view s) {
  if (s == "triple") return PathMode::Triple;
  if (s == "path") return PathMode::Path;
  return std::nullopt;
}

}  // namespace kgap
