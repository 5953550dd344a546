#pragma once

// Generators for gap types the tagger cannot find in the dataset: inverse,
// context, entity-resolution and explanatory gaps.

#include <array>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/graph_paths.hpp"
#include "kgap/template_engine.hpp"
#include "kgap/text.hpp"

namespace kgap {

enum class Pos { Verb, Adjective, Determiner, Existential, Other };

inline constexpr std::array<Pos, 4> kInversePos = {Pos::Verb, Pos::Adjective, Pos::Determiner,
                                                   Pos::Existential};

inline constexpr std::string_view to_string(Pos p) {
  switch (p) {
    case Pos::Verb: return "verb";
    case Pos::Adjective: return "adjective";
    case Pos::Determiner: return "determiner";
    case Pos::Existential: return "existential";
    case Pos::Other: return "other";
  }
  return "?";
}

inline std::optional<Pos> parse_pos(std::string_view s) {
  for (auto p : kInversePos) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

// Coarse POS tag per token.
using PosTagger = std::function<std::vector<Pos>(const Tokens&)>;

// Dictionary tagger: each known lowercase token has one coarse tag, all
// other tokens are Other.
class ClosedLexiconTagger {
 public:
  ClosedLexiconTagger() {
    for (auto w : {"all", "some", "no", "any", "both", "either", "neither"}) add(w, Pos::Determiner);
    add("there", Pos::Existential);
  }

  void add(std::string_view token, Pos pos) { lexicon_[to_lower(token)] = pos; }

  Pos tag(std::string_view token) const {
    auto it = lexicon_.find(to_lower(token));
    return it == lexicon_.end() ? Pos::Other : it->second;
  }

  std::vector<Pos> operator()(const Tokens& tokens) const {
    std::vector<Pos> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(tag(t));
    return out;
  }

  // {"verb": [...], "adjective": [...], "determiner": [...], "existential": [...]},
  // merged over the built-in determiners and existentials.
  static ClosedLexiconTagger from_json(const nlohmann::json& j) {
    ClosedLexiconTagger tagger;
    for (const auto& [name, words] : j.items()) {
      auto pos = parse_pos(name);
      if (!pos) throw ValidationError("unknown POS class '" + name + "'");
      for (const auto& w : words) tagger.add(w.get<std::string>(), *pos);
    }
    return tagger;
  }

 private:
  std::map<std::string, Pos> lexicon_;
};

class AntonymLexicon {
 public:
  // Stores the pair in both directions.
  void add(Pos pos, std::string_view a, std::string_view b) {
    auto la = normalize_keyword(a), lb = normalize_keyword(b);
    if (la.empty() || lb.empty() || split_words(la).size() != 1 || split_words(lb).size() != 1) {
      throw ValidationError("antonyms must be single tokens: '" + la + "' / '" + lb + "'");
    }
    if (la == lb) return;
    entries_[pos][la].insert(lb);
    entries_[pos][lb].insert(la);
  }

  const std::set<std::string>& antonyms(Pos pos, std::string_view token) const {
    static const std::set<std::string> kNone;
    auto p = entries_.find(pos);
    if (p == entries_.end()) return kNone;
    auto it = p->second.find(to_lower(token));
    return it == p->second.end() ? kNone : it->second;
  }

  // {"<pos>": {"<token>": ["<antonym>", ...]}}
  static AntonymLexicon from_json(const nlohmann::json& j) {
    AntonymLexicon lex;
    for (const auto& [name, table] : j.items()) {
      auto pos = parse_pos(name);
      if (!pos) throw ValidationError("unknown POS class '" + name + "'");
      for (const auto& [token, list] : table.items()) {
        for (const auto& a : list) lex.add(*pos, token, a.get<std::string>());
      }
    }
    return lex;
  }

 private:
  std::map<Pos, std::map<std::string, std::set<std::string>>> entries_;
};

class ConceptLexicon {
 public:
  void add(std::string_view concept_name, std::string_view used_for) {
    auto phrase = std::string(trim(used_for));
    if (!phrase.empty()) used_for_[normalize_keyword(concept_name)].insert(phrase);
  }

  const std::set<std::string>& used_for(std::string_view concept_name) const {
    static const std::set<std::string> kNone;
    auto it = used_for_.find(normalize_keyword(concept_name));
    return it == used_for_.end() ? kNone : it->second;
  }

  // {"<name>": {"used_for": [...]}}
  static ConceptLexicon from_json(const nlohmann::json& j) {
    ConceptLexicon lex;
    for (const auto& [name, entry] : j.items()) {
      if (auto it = entry.find("used_for"); it != entry.end()) {
        for (const auto& u : *it) lex.add(name, u.get<std::string>());
      }
    }
    return lex;
  }

 private:
  std::map<std::string, std::set<std::string>> used_for_;
};

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON in " + path, e.byte);
  }
}

struct SimulatedQuestion {
  std::string text;
  KnowledgeGap gap = KnowledgeGap::Inverse;
  std::string image_id;
  std::string provenance;  // source question id or object id
  std::optional<std::string> answer;

  friend bool operator==(const SimulatedQuestion&, const SimulatedQuestion&) = default;
};

inline nlohmann::json to_json(const SimulatedQuestion& s) {
  return {{"answer", s.answer ? nlohmann::json(*s.answer) : nlohmann::json()},
          {"gap", std::string(to_string(s.gap))},
          {"image_id", s.image_id},
          {"provenance", s.provenance},
          {"text", s.text}};
}

namespace detail {

// Gives `word` the capitalisation of `like` when `like` starts uppercase.
inline std::string match_case(std::string word, std::string_view like) {
  if (!like.empty() && !word.empty() && std::isupper(static_cast<unsigned char>(like.front()))) {
    word.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(word.front())));
  }
  return word;
}

}  // namespace detail

// Substitutes one antonym at a time for verbs, adjectives, determiners and
// existentials. An antonym already present anywhere in the question is never
// substituted; candidates are kept only if they occur verbatim in
// `dataset_questions`.
inline std::vector<SimulatedQuestion> generate_inverse_questions(
    const QuestionRecord& q, const AntonymLexicon& lex, const PosTagger& pos,
    const std::set<std::string>& dataset_questions) {
  auto tokens = tokenize(q.text);
  auto tags = pos(tokens);
  if (tags.size() != tokens.size()) throw ValidationError("POS tagger returned a wrong tag count");
  std::set<std::string> present;
  for (const auto& t : tokens) present.insert(to_lower(t));

  std::vector<SimulatedQuestion> out;
  std::set<std::string> emitted;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tags[i] == Pos::Other) continue;
    for (const auto& antonym : lex.antonyms(tags[i], tokens[i])) {
      if (present.contains(antonym)) continue;
      auto candidate = tokens;
      candidate[i] = detail::match_case(antonym, tokens[i]);
      auto text = detokenize(candidate);
      if (!dataset_questions.contains(text) || !emitted.insert(text).second) continue;
      out.push_back({std::move(text), KnowledgeGap::Inverse, q.image_id, q.question_id, std::nullopt});
    }
  }
  return out;
}

// One question per isolated object, from a template with exactly one OBJ
// slot. Objects whose attributes cannot fill the template are skipped.
inline std::vector<SimulatedQuestion> simulate_context_gaps(const SceneGraph& sg, const Template& t) {
  if (t.n_obj != 1) throw ValidationError("context template needs exactly one OBJ slot");
  std::vector<SimulatedQuestion> out;
  for (const auto& id : isolated_objects(sg)) {
    try {
      out.push_back({fill_template(t, {&sg.at(id)}), KnowledgeGap::Context, sg.image_id, id, std::nullopt});
    } catch (const PopulationError&) {
    }
  }
  return out;
}

// True when an annotated object shares its name with another object of the
// graph, i.e. the mention is ambiguous.
inline bool detect_entity_resolution_gap(const QuestionRecord& q, const SceneGraph& sg) {
  std::map<std::string, std::size_t> name_count;
  for (const auto& [id, o] : sg.objects) ++name_count[to_lower(o.name)];
  for (const auto& id : locate_question_objects(q, sg)) {
    if (name_count[to_lower(sg.at(id).name)] > 1) return true;
  }
  return false;
}

inline std::vector<SimulatedQuestion> simulate_explanatory_gaps(const SceneGraph& sg,
                                                                const ConceptLexicon& lex) {
  std::vector<SimulatedQuestion> out;
  for (const auto& [id, o] : sg.objects) {
    const auto& uses = lex.used_for(o.name);
    if (uses.empty()) continue;
    Tokens answer(uses.begin(), uses.end());
    out.push_back({"What is the " + to_lower(o.name) + " used for?", KnowledgeGap::Explanatory,
                   sg.image_id, id, join(answer, ", ")});
  }
  return out;
}

}  // namespace kgap
