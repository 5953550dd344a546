#pragma once

// Scene-graph paths between question-mentioned objects, rendered into the
// encoder token sequence: endpoint objects as attributes + name, predicates
// verbatim, and every interior object replaced by "IO".

#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/text.hpp"

namespace kgap {

inline constexpr const char* kInteriorObjectToken = "IO";
inline constexpr std::size_t kDefaultMaxPathLength = 5;

struct PathSequence {
  Tokens tokens;
  std::size_t length = 0;  // edge count L
  std::pair<std::string, std::string> endpoints;
  std::size_t endpoint_attribute_count = 0;
  std::vector<std::string> nodes;  // object ids from first to second endpoint

  friend bool operator==(const PathSequence&, const PathSequence&) = default;
};

// Attributes in stored order followed by the name, lowercased and split on
// whitespace.
inline Tokens render_object(const SgObject& o) {
  Tokens out;
  for (const auto& a : o.attributes) {
    for (auto& w : split_words(to_lower(a))) out.push_back(std::move(w));
  }
  for (auto& w : split_words(to_lower(o.name))) out.push_back(std::move(w));
  return out;
}

// Object ids referenced by the question's annotations, by ascending token
// position, first occurrence kept. Ids missing from the graph are skipped and
// counted in `missing`.
inline std::vector<std::string> locate_question_objects(const QuestionRecord& q, const SceneGraph& sg,
                                                        std::size_t* missing = nullptr) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [span, id] : q.object_annotations) {
    if (!sg.objects.contains(id)) {
      if (missing) ++*missing;
      continue;
    }
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

// Predicate linking a and b: the first a->b relation in stored order, else
// the first b->a relation.
inline std::optional<std::string> edge_predicate(const SceneGraph& sg, const std::string& a,
                                                 const std::string& b) {
  for (const auto& r : sg.at(a).relations) {
    if (r.target == b) return r.predicate;
  }
  for (const auto& r : sg.at(b).relations) {
    if (r.target == a) return r.predicate;
  }
  return std::nullopt;
}

// Renders a node sequence whose consecutive members are adjacent.
inline PathSequence render_path(const SceneGraph& sg, const std::vector<std::string>& nodes) {
  if (nodes.size() < 2) throw ValidationError("a path needs at least two nodes");
  PathSequence p;
  p.nodes = nodes;
  p.length = nodes.size() - 1;
  p.endpoints = {nodes.front(), nodes.back()};
  const auto& first = sg.at(nodes.front());
  const auto& last = sg.at(nodes.back());
  p.endpoint_attribute_count = first.attributes.size() + last.attributes.size();

  p.tokens = render_object(first);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    auto pred = edge_predicate(sg, nodes[i - 1], nodes[i]);
    if (!pred) {
      throw ValidationError("no relation between " + nodes[i - 1] + " and " + nodes[i]);
    }
    for (auto& w : split_words(*pred)) p.tokens.push_back(std::move(w));
    if (i + 1 < nodes.size()) {
      p.tokens.emplace_back(kInteriorObjectToken);
    } else {
      for (auto& w : render_object(last)) p.tokens.push_back(std::move(w));
    }
  }
  return p;
}

inline std::optional<PathSequence> extract_triple(const SceneGraph& sg, const std::string& o1,
                                                  const std::string& o2) {
  sg.at(o1);
  sg.at(o2);
  if (o1 == o2 || !edge_predicate(sg, o1, o2)) return std::nullopt;
  return render_path(sg, {o1, o2});
}

// Undirected neighbour sets, self-loops dropped. Sorted for deterministic
// tie-breaking.
inline std::map<std::string, std::set<std::string>> undirected_adjacency(const SceneGraph& sg) {
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& [id, o] : sg.objects) {
    adj[id];
    for (const auto& r : o.relations) {
      if (r.target == id) continue;
      adj[id].insert(r.target);
      adj[r.target].insert(id);
    }
  }
  return adj;
}

// Shortest simple path from o1 to o2 with at most max_length edges,
// traversing relations in either direction. Among shortest paths the one
// with the lexicographically smallest object-id sequence wins.
inline std::optional<PathSequence> extract_simple_path(const SceneGraph& sg, const std::string& o1,
                                                       const std::string& o2,
                                                       std::size_t max_length = kDefaultMaxPathLength) {
  sg.at(o1);
  sg.at(o2);
  if (max_length < 1) throw ValidationError("max path length must be at least 1");
  if (o1 == o2) return std::nullopt;

  auto adj = undirected_adjacency(sg);

  // Distances to o2, explored up to max_length.
  std::map<std::string, std::size_t> dist{{o2, 0}};
  std::queue<std::string> frontier;
  frontier.push(o2);
  while (!frontier.empty()) {
    auto cur = frontier.front();
    frontier.pop();
    auto d = dist[cur];
    if (d == max_length) continue;
    for (const auto& next : adj[cur]) {
      if (dist.emplace(next, d + 1).second) frontier.push(next);
    }
  }
  auto it = dist.find(o1);
  if (it == dist.end()) return std::nullopt;

  // Every step toward o2 strictly decreases the distance, so the walk is
  // simple; taking the smallest eligible id at each step yields the
  // lexicographically smallest shortest path.
  std::vector<std::string> nodes{o1};
  for (auto remaining = it->second; remaining > 0; --remaining) {
    for (const auto& next : adj[nodes.back()]) {
      auto d = dist.find(next);
      if (d != dist.end() && d->second == remaining - 1) {
        nodes.push_back(next);
        break;
      }
    }
  }
  return render_path(sg, nodes);
}

inline std::optional<PathSequence> extract_path(const SceneGraph& sg, const std::string& o1,
                                                const std::string& o2, PathMode mode,
                                                std::size_t max_length) {
  return mode == PathMode::Triple ? extract_triple(sg, o1, o2)
                                  : extract_simple_path(sg, o1, o2, max_length);
}

// Objects with neither incoming nor outgoing relations, in id order.
inline std::vector<std::string> isolated_objects(const SceneGraph& sg) {
  std::set<std::string> linked;
  for (const auto& [id, o] : sg.objects) {
    if (!o.relations.empty()) linked.insert(id);
    for (const auto& r : o.relations) linked.insert(r.target);
  }
  std::vector<std::string> out;
  for (const auto& [id, o] : sg.objects) {
    if (!linked.contains(id)) out.push_back(id);
  }
  return out;
}

inline nlohmann::json path_record_json(const std::string& question_id, const std::string& image_id,
                                       const PathSequence& p) {
  return {{"L", p.length},
          {"endpoint_attribute_count", p.endpoint_attribute_count},
          {"endpoints", {p.endpoints.first, p.endpoints.second}},
          {"image_id", image_id},
          {"question_id", question_id},
          {"tokens", p.tokens}};
}

}  // namespace kgap
