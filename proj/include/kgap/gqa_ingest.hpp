#pragma once

// Streaming ingestion of GQA-format scene-graph and question files, plus the
// canonical line-delimited serialization used between pipeline stages.

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgap/domain.hpp"
#include "kgap/error.hpp"
#include "kgap/json_stream.hpp"
#include "kgap/text.hpp"

namespace kgap {

using GraphIndex = std::map<std::string, SceneGraph>;

struct RecordError {
  std::string key;
  std::string message;
};

struct IngestStats {
  std::size_t yielded = 0;
  std::size_t errors = 0;
  std::vector<RecordError> samples;  // first kMaxSamples errors

  static constexpr std::size_t kMaxSamples = 100;

  std::size_t records() const { return yielded + errors; }

  void record_error(std::string key, std::string message) {
    ++errors;
    if (samples.size() < kMaxSamples) samples.push_back({std::move(key), std::move(message)});
  }
};

namespace detail {

inline std::string string_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(std::string("field '") + name + "' is not a string");
  return it->get<std::string>();
}

inline const nlohmann::json* object_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return nullptr;
  if (!it->is_object()) throw ValidationError(std::string("field '") + name + "' is not an object");
  return &*it;
}

inline const nlohmann::json* array_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return nullptr;
  if (!it->is_array()) throw ValidationError(std::string("field '") + name + "' is not an array");
  return &*it;
}

}  // namespace detail

// Builds a SceneGraph from one GQA scene-graph entry. Throws ValidationError
// for missing `objects`, wrongly typed fields or dangling relation targets.
inline SceneGraph scene_graph_from_gqa(const std::string& image_id, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scene graph is not an object");
  const auto* objects = detail::object_field(j, "objects");
  if (!objects) throw ValidationError("missing 'objects'");
  SceneGraph sg;
  sg.image_id = image_id;
  for (const auto& [id, o] : objects->items()) {
    if (!o.is_object()) throw ValidationError("object " + id + " is not an object");
    SgObject obj;
    obj.object_id = id;
    obj.name = detail::string_field(o, "name");
    if (const auto* attrs = detail::array_field(o, "attributes")) {
      for (const auto& a : *attrs) {
        if (!a.is_string()) throw ValidationError("object " + id + " has a non-string attribute");
        obj.attributes.push_back(a.get<std::string>());
      }
    }
    if (const auto* rels = detail::array_field(o, "relations")) {
      for (const auto& r : *rels) {
        if (!r.is_object()) throw ValidationError("object " + id + " has a malformed relation");
        obj.relations.push_back({detail::string_field(r, "name"), detail::string_field(r, "object")});
      }
    }
    sg.objects.emplace(id, std::move(obj));
  }
  validate(sg);
  return sg;
}

// Throws ValidationError for spans outside the token bounds of the text or
// forward dependencies in the program.
inline void validate(const QuestionRecord& q) {
  if (q.image_id.empty()) throw ValidationError("empty image id");
  auto n_tokens = tokenize(q.text).size();
  for (const auto& [span, id] : q.object_annotations) {
    if (span.end <= span.begin || span.end > n_tokens) {
      throw ValidationError("annotation span " + span.key() + " outside " +
                            std::to_string(n_tokens) + " question tokens");
    }
    if (id.empty()) throw ValidationError("annotation span " + span.key() + " has no object id");
  }
  for (std::size_t i = 0; i < q.semantic_program.size(); ++i) {
    for (auto dep : q.semantic_program[i].dependencies) {
      if (dep >= i) {
        throw ValidationError("step " + std::to_string(i) + " depends on later step " +
                              std::to_string(dep));
      }
    }
  }
}

inline QuestionRecord question_from_gqa(const std::string& question_id, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("question is not an object");
  if (!j.contains("question") || !j["question"].is_string()) {
    throw ValidationError("missing 'question'");
  }
  if (!j.contains("imageId") || !j["imageId"].is_string()) {
    throw ValidationError("missing 'imageId'");
  }
  QuestionRecord q;
  q.question_id = question_id;
  q.text = j["question"].get<std::string>();
  q.image_id = j["imageId"].get<std::string>();
  q.answer = detail::string_field(j, "answer");
  if (const auto* types = detail::object_field(j, "types")) {
    q.detailed_type = detail::string_field(*types, "detailed");
  }
  if (const auto* groups = detail::object_field(j, "groups")) {
    q.global_group = detail::string_field(*groups, "global");
  }
  if (const auto* program = detail::array_field(j, "semantic")) {
    for (const auto& s : *program) {
      if (!s.is_object()) throw ValidationError("malformed semantic step");
      FunctionalStep step;
      step.operation = detail::string_field(s, "operation");
      step.argument = detail::string_field(s, "argument");
      if (const auto* deps = detail::array_field(s, "dependencies")) {
        for (const auto& d : *deps) {
          if (!d.is_number_unsigned()) throw ValidationError("malformed step dependency");
          step.dependencies.push_back(d.get<std::size_t>());
        }
      }
      q.semantic_program.push_back(std::move(step));
    }
  }
  if (const auto* ann = detail::object_field(j, "annotations")) {
    if (const auto* qa = detail::object_field(*ann, "question")) {
      for (const auto& [key, id] : qa->items()) {
        if (!id.is_string()) throw ValidationError("annotation " + key + " is not a string");
        q.object_annotations.emplace(TokenSpan::parse(key), id.get<std::string>());
      }
    }
  }
  validate(q);
  return q;
}

// Streaming reader over a GQA file. `Convert` maps (key, json) to a record
// and throws ValidationError for record-level problems; such records are
// skipped and tallied in stats() without interrupting the stream.
template <typename Record, Record (*Convert)(const std::string&, const nlohmann::json&)>
class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : reader_(in) {}

  std::optional<Record> next() {
    while (auto member = reader_.next()) {
      try {
        Record r = Convert(member->key, member->value);
        ++stats_.yielded;
        return r;
      } catch (const ValidationError& e) {
        stats_.record_error(member->key, e.what());
      } catch (const nlohmann::json::exception& e) {
        stats_.record_error(member->key, e.what());
      }
    }
    return std::nullopt;
  }

  const IngestStats& stats() const { return stats_; }

 private:
  ObjectStreamReader reader_;
  IngestStats stats_;
};

using SceneGraphReader = RecordReader<SceneGraph, &scene_graph_from_gqa>;
using QuestionReader = RecordReader<QuestionRecord, &question_from_gqa>;

template <typename Reader>
auto read_all(std::istream& in, IngestStats* stats = nullptr) {
  Reader reader(in);
  std::vector<std::decay_t<decltype(*reader.next())>> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  if (stats) *stats = reader.stats();
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

inline GraphIndex index_graphs(std::vector<SceneGraph> graphs) {
  GraphIndex index;
  for (auto& g : graphs) {
    auto id = g.image_id;
    index.insert_or_assign(std::move(id), std::move(g));
  }
  return index;
}

// ---- canonical serialization --------------------------------------------
//
// nlohmann::json stores object members in a std::map, so dump() emits keys in
// alphabetical order, which is the canonical field order.

inline nlohmann::json to_json(const SceneGraph& sg) {
  nlohmann::json objects = nlohmann::json::object();
  for (const auto& [id, o] : sg.objects) {
    nlohmann::json rels = nlohmann::json::array();
    for (const auto& r : o.relations) rels.push_back({{"predicate", r.predicate}, {"target", r.target}});
    objects[id] = {{"attributes", o.attributes}, {"name", o.name}, {"relations", std::move(rels)}};
  }
  return {{"image_id", sg.image_id}, {"objects", std::move(objects)}};
}

inline SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph sg;
  sg.image_id = j.at("image_id").get<std::string>();
  for (const auto& [id, o] : j.at("objects").items()) {
    SgObject obj;
    obj.object_id = id;
    obj.name = o.at("name").get<std::string>();
    obj.attributes = o.at("attributes").get<std::vector<std::string>>();
    for (const auto& r : o.at("relations")) {
      obj.relations.push_back({r.at("predicate").get<std::string>(), r.at("target").get<std::string>()});
    }
    sg.objects.emplace(id, std::move(obj));
  }
  validate(sg);
  return sg;
}

inline nlohmann::json to_json(const QuestionRecord& q) {
  nlohmann::json program = nlohmann::json::array();
  for (const auto& s : q.semantic_program) {
    program.push_back({{"argument", s.argument},
                       {"dependencies", s.dependencies},
                       {"operation", s.operation}});
  }
  nlohmann::json ann = nlohmann::json::object();
  for (const auto& [span, id] : q.object_annotations) ann[span.key()] = id;
  return {{"answer", q.answer},
          {"detailed_type", q.detailed_type},
          {"global_group", q.global_group},
          {"image_id", q.image_id},
          {"object_annotations", std::move(ann)},
          {"question_id", q.question_id},
          {"semantic_program", std::move(program)},
          {"text", q.text}};
}

inline QuestionRecord question_from_json(const nlohmann::json& j) {
  QuestionRecord q;
  q.answer = j.at("answer").get<std::string>();
  q.detailed_type = j.at("detailed_type").get<std::string>();
  q.global_group = j.at("global_group").get<std::string>();
  q.image_id = j.at("image_id").get<std::string>();
  for (const auto& [key, id] : j.at("object_annotations").items()) {
    q.object_annotations.emplace(TokenSpan::parse(key), id.get<std::string>());
  }
  q.question_id = j.at("question_id").get<std::string>();
  for (const auto& s : j.at("semantic_program")) {
    q.semantic_program.push_back({s.at("operation").get<std::string>(),
                                  s.at("argument").get<std::string>(),
                                  s.at("dependencies").get<std::vector<std::size_t>>()});
  }
  q.text = j.at("text").get<std::string>();
  validate(q);
  return q;
}

// ---- cross-file validation ----------------------------------------------

struct DanglingObject {
  std::string question_id;
  std::string object_id;

  friend bool operator==(const DanglingObject&, const DanglingObject&) = default;
};

struct ValidationReport {
  std::vector<std::string> missing_image;
  std::vector<DanglingObject> dangling_object;

  std::size_t findings() const { return missing_image.size() + dangling_object.size(); }
};

inline ValidationReport validate_corpus(const GraphIndex& graphs,
                                        const std::vector<QuestionRecord>& questions) {
  ValidationReport report;
  for (const auto& q : questions) {
    auto it = graphs.find(q.image_id);
    if (it == graphs.end()) {
      report.missing_image.push_back(q.question_id);
      continue;
    }
    std::set<std::string> seen;
    for (const auto& [span, id] : q.object_annotations) {
      if (!it->second.objects.contains(id) && seen.insert(id).second) {
        report.dangling_object.push_back({q.question_id, id});
      }
    }
  }
  return report;
}

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json dangling = nlohmann::json::array();
  for (const auto& d : r.dangling_object) {
    dangling.push_back({{"object_id", d.object_id}, {"question_id", d.question_id}});
  }
  return {{"dangling_object", std::move(dangling)}, {"missing_image", r.missing_image}};
}

}  // namespace kgap
