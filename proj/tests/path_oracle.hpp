#pragma once

// Exhaustive reference for shortest-path extraction: enumerates every simple
// path between two objects and picks the shortest, breaking ties by the
// lexicographically smallest object-id sequence.

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgap/domain.hpp"

namespace kgap::test {

inline void all_simple_paths(const SceneGraph& sg, const std::string& cur, const std::string& goal,
                             std::vector<std::string>& stack, std::vector<std::vector<std::string>>& out) {
  if (cur == goal) {
    out.push_back(stack);
    return;
  }
  std::set<std::string> next;
  for (const auto& r : sg.objects.at(cur).relations) next.insert(r.target);
  for (const auto& [id, o] : sg.objects) {
    for (const auto& r : o.relations) {
      if (r.target == cur) next.insert(id);
    }
  }
  for (const auto& n : next) {
    bool on_stack = false;
    for (const auto& s : stack) on_stack |= s == n;
    if (on_stack) continue;
    stack.push_back(n);
    all_simple_paths(sg, n, goal, stack, out);
    stack.pop_back();
  }
}

inline std::optional<std::vector<std::string>> oracle_path(const SceneGraph& sg, const std::string& o1,
                                                           const std::string& o2, std::size_t max_length) {
  if (o1 == o2) return std::nullopt;
  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> stack{o1};
  all_simple_paths(sg, o1, o2, stack, paths);
  std::optional<std::vector<std::string>> best;
  for (const auto& p : paths) {
    if (p.size() - 1 > max_length) continue;
    if (!best || p.size() < best->size() || (p.size() == best->size() && p < *best)) best = p;
  }
  return best;
}

// Random graph with up to `max_nodes` objects and `max_edges` relations,
// self loops and parallel edges included.
inline SceneGraph random_graph(std::mt19937& rng, int max_nodes = 8, int max_edges = 14) {
  static const char* names[] = {"man", "shirt", "cup", "table", "dog", "tree", "car", "hat"};
  static const char* attrs[] = {"red", "large", "old", "wooden"};
  static const char* preds[] = {"on", "near", "to the left of", "wearing", "holding"};
  SceneGraph sg;
  sg.image_id = "rand";
  int n = 2 + static_cast<int>(rng() % (max_nodes - 1));
  for (int i = 0; i < n; ++i) {
    auto id = "n" + std::to_string(i);
    SgObject o{id, names[rng() % 8], {}, {}};
    for (unsigned k = rng() % 3; k > 0; --k) o.attributes.push_back(attrs[rng() % 4]);
    sg.objects[id] = o;
  }
  int m = static_cast<int>(rng() % (max_edges + 1));
  for (int e = 0; e < m; ++e) {
    auto s = "n" + std::to_string(rng() % n);
    auto t = "n" + std::to_string(rng() % n);
    sg.objects[s].relations.push_back({preds[rng() % 5], t});
  }
  return sg;
}

}  // namespace kgap::test
