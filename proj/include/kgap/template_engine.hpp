#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/graph_paths.hpp"
#include "kgap/text.hpp"

namespace kgap {

inline constexpr std::string_view kObjToken = "OBJ";
inline constexpr std::string_view kAttrToken = "ATTRIBUTE";

struct Template {
  Tokens tokens;
  std::size_t n_obj = 0;
  std::size_t n_attr = 0;

  static Template from_tokens(Tokens tokens) {
    Template t;
    t.tokens = std::move(tokens);
    t.n_obj = static_cast<std::size_t>(std::count(t.tokens.begin(), t.tokens.end(), kObjToken));
    t.n_attr = static_cast<std::size_t>(std::count(t.tokens.begin(), t.tokens.end(), kAttrToken));
    return t;
  }

  static Template parse(std::string_view text) { return from_tokens(tokenize(text)); }

  // Soft check: most templates end in "?".
  bool well_formed() const { return !tokens.empty() && tokens.back() == "?"; }

  std::string str() const { return detokenize(tokens); }

  friend bool operator==(const Template&, const Template&) = default;
};

// Object ids referenced in the functional program: GQA step arguments carry
// them in parentheses, e.g. "table (722332)" or "_,on,s (12,34)".
inline std::vector<std::string> program_object_refs(std::span<const FunctionalStep> program) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& step : program) {
    std::string_view arg = step.argument;
    std::size_t pos = 0;
    while ((pos = arg.find('(', pos)) != std::string_view::npos) {
      auto close = arg.find(')', pos);
      if (close == std::string_view::npos) break;
      auto inner = arg.substr(pos + 1, close - pos - 1);
      std::size_t start = 0;
      while (start <= inner.size()) {
        auto comma = inner.find(',', start);
        auto piece = trim(inner.substr(start, comma == std::string_view::npos ? inner.npos : comma - start));
        if (!piece.empty() && piece != "-" && seen.emplace(piece).second) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      pos = close + 1;
    }
  }
  return out;
}

// Objects the question talks about: annotated objects first (by token
// position), then objects referenced by the program. Only ids present in the
// graph are returned.
inline std::vector<std::string> mentioned_objects(const QuestionRecord& q, const SceneGraph& sg) {
  auto out = locate_question_objects(q, sg);
  std::set<std::string> seen(out.begin(), out.end());
  for (auto& id : program_object_refs(q.semantic_program)) {
    if (sg.objects.contains(id) && seen.insert(id).second) out.push_back(std::move(id));
  }
  return out;
}

// Replaces each annotated object span with one "OBJ" and then every
// attribute of a mentioned object that occurs verbatim (case-insensitive,
// whole tokens) with one "ATTRIBUTE". Multi-word attributes match contiguous
// token runs; longer attributes are tried first.
inline Template extract_template(const QuestionRecord& q, const SceneGraph& sg) {
  auto tokens = tokenize(q.text);

  std::vector<TokenSpan> spans;
  for (const auto& [span, id] : q.object_annotations) spans.push_back(span);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].end > tokens.size()) {
      throw ValidationError("annotation span " + spans[i].key() + " outside question " + q.question_id);
    }
    if (i > 0 && spans[i].begin < spans[i - 1].end) {
      throw ValidationError("overlapping annotation spans " + spans[i - 1].key() + " and " +
                            spans[i].key() + " in question " + q.question_id);
    }
  }

  struct Slot {
    std::string token;
    bool placeholder = false;
  };
  std::vector<Slot> slots;
  std::size_t next_span = 0;
  for (std::size_t i = 0; i < tokens.size();) {
    if (next_span < spans.size() && spans[next_span].begin == i) {
      slots.push_back({std::string(kObjToken), true});
      i = spans[next_span++].end;
    } else {
      slots.push_back({tokens[i++], false});
    }
  }

  std::vector<Tokens> phrases;
  for (const auto& id : mentioned_objects(q, sg)) {
    for (const auto& attr : sg.at(id).attributes) {
      auto words = split_words(to_lower(attr));
      if (!words.empty()) phrases.push_back(std::move(words));
    }
  }
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const Tokens& a, const Tokens& b) { return a.size() > b.size(); });

  Tokens out;
  for (std::size_t i = 0; i < slots.size();) {
    std::size_t matched = 0;
    if (!slots[i].placeholder) {
      for (const auto& phrase : phrases) {
        if (i + phrase.size() > slots.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
          ok = !slots[i + k].placeholder && to_lower(slots[i + k].token) == phrase[k];
        }
        if (ok) {
          matched = phrase.size();
          break;
        }
      }
    }
    if (matched) {
      out.emplace_back(kAttrToken);
      i += matched;
    } else {
      out.push_back(std::move(slots[i++].token));
    }
  }
  return Template::from_tokens(std::move(out));
}

enum class AttributeFillOrder { FirstEndpointFirst, SecondEndpointFirst };

// Fills "OBJ" slots left to right with the names of `objects` and
// "ATTRIBUTE" slots left to right with their attributes (objects in the
// given order, attributes in stored order). Throws PopulationError naming the
// first slot that cannot be filled.
inline std::string fill_template(const Template& t, const std::vector<const SgObject*>& objects,
                                 AttributeFillOrder order = AttributeFillOrder::FirstEndpointFirst) {
  std::vector<std::string> attrs;
  auto add_attrs = [&](const SgObject* o) {
    if (o) attrs.insert(attrs.end(), o->attributes.begin(), o->attributes.end());
  };
  if (order == AttributeFillOrder::FirstEndpointFirst) {
    for (const auto* o : objects) add_attrs(o);
  } else {
    for (auto it = objects.rbegin(); it != objects.rend(); ++it) add_attrs(*it);
  }

  Tokens out;
  std::size_t n_obj = 0, n_attr = 0;
  for (const auto& tok : t.tokens) {
    if (tok == kObjToken) {
      if (n_obj >= objects.size()) throw PopulationError(std::string(kObjToken), n_obj);
      out.push_back(to_lower(objects[n_obj++]->name));
    } else if (tok == kAttrToken) {
      if (n_attr >= attrs.size()) throw PopulationError(std::string(kAttrToken), n_attr);
      out.push_back(attrs[n_attr++]);
    } else if (tok == kInteriorObjectToken) {
      throw PopulationError(kInteriorObjectToken, 0);
    } else {
      out.push_back(tok);
    }
  }
  return detokenize(out);
}

// Populates a template from the endpoints of a path.
inline std::string populate_template(const Template& t, const PathSequence& p, const SceneGraph& sg,
                                     AttributeFillOrder order = AttributeFillOrder::FirstEndpointFirst) {
  return fill_template(t, {&sg.at(p.endpoints.first), &sg.at(p.endpoints.second)}, order);
}

enum class Novelty { Novel, Existing };

inline Novelty template_novelty(const Template& t, const std::set<Tokens>& training_templates) {
  return training_templates.contains(t.tokens) ? Novelty::Existing : Novelty::Novel;
}

inline nlohmann::json template_record_json(std::optional<KnowledgeGap> kg, const Template& t,
                                           const std::optional<std::string>& source_question_id = {}) {
  nlohmann::json j = {{"kg", kg ? nlohmann::json(std::string(to_string(*kg))) : nlohmann::json()},
                      {"n_attr", t.n_attr},
                      {"n_obj", t.n_obj},
                      {"tokens", t.tokens}};
  if (source_question_id) j["source_question_id"] = *source_question_id;
  return j;
}

}  // namespace kgap
