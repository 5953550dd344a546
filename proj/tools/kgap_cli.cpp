#include "kgap_cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "kgap/kgap.hpp"

namespace kgap::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = std::make_shared<spdlog::logger>("kgap", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  return log;
}

void configure_logging() {
  auto level = spdlog::level::info;
  if (const char* env = std::getenv("KGAP_LOG")) {
    std::string v = to_lower(env);
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  logger()->set_level(level);
}

// ---- output --------------------------------------------------------------

// Writes `content` to a sibling temp file and renames it over `path`.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
  logger()->info("wrote {}", path.string());
}

template <typename Range, typename ToJson>
std::string jsonl(const Range& records, ToJson to_json_fn) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_fn(r).dump();
    out += '\n';
  }
  return out;
}

// ---- input ---------------------------------------------------------------

std::vector<QuestionRecord> load_questions(const std::string& path) {
  auto in = open_input(path);
  IngestStats stats;
  auto questions = read_all<QuestionReader>(in, &stats);
  logger()->info("{}: {} questions, {} rejected", path, stats.yielded, stats.errors);
  for (const auto& e : stats.samples) logger()->debug("question {}: {}", e.key, e.message);
  return questions;
}

GraphIndex load_graphs(const std::string& path) {
  auto in = open_input(path);
  IngestStats stats;
  auto graphs = read_all<SceneGraphReader>(in, &stats);
  logger()->info("{}: {} scene graphs, {} rejected", path, stats.yielded, stats.errors);
  for (const auto& e : stats.samples) logger()->debug("scene graph {}: {}", e.key, e.message);
  return index_graphs(std::move(graphs));
}

template <typename Fn>
void read_jsonl(const std::string& path, Fn fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0, offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed JSON",
                       line_offset + (e.byte ? e.byte - 1 : 0));
    }
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<TagResult> load_tags(const std::string& path) {
  std::vector<TagResult> tags;
  read_jsonl(path, [&](const json& j) { tags.push_back(tag_result_from_json(j)); });
  return tags;
}

// ---- option helpers ------------------------------------------------------

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError("missing required option --" + flag);
}

PathMode mode_from(const std::string& s) {
  auto m = parse_mode(s);
  if (!m) throw UsageError("--mode must be 'triple' or 'path', got '" + s + "'");
  return *m;
}

KnowledgeGap taggable_gap_from(const std::string& s) {
  auto g = parse_gap(to_lower(s));
  if (!g || !is_taggable(*g)) throw UsageError("unknown knowledge gap '" + s + "'");
  return *g;
}

void check_max_length(std::size_t max_l) {
  if (max_l < 1 || max_l > 5) throw UsageError("--max-l must be within [1, 5]");
}

SplitRatios ratios_from(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(std::string(trim(item)), &used));
    } catch (const std::exception&) {
      throw UsageError("bad --ratios value '" + s + "'");
    }
  }
  if (parts.size() != 3) throw UsageError("--ratios needs three comma-separated values");
  SplitRatios r{parts[0], parts[1], parts[2]};
  try {
    r.validate();
  } catch (const ValidationError& e) {
    throw UsageError(std::string("--ratios: ") + e.what());
  }
  return r;
}

std::string config_value_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ',';
      out += config_value_string(item);
    }
    return out;
  }
  return v.dump();
}

// Fills options not given on the command line from the JSON config file.
void merge_config(CLI::App& app, CLI::App* sub, const std::string& config_path) {
  if (config_path.empty()) return;
  json config;
  try {
    config = load_json_file(config_path);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!config.is_object()) throw UsageError("config file must hold a JSON object");
  for (auto* scope : {&app, sub}) {
    for (auto* opt : scope->get_options()) {
      const auto& name = opt->get_single_name();
      if (name.empty() || name == "config" || name == "help" || opt->count() > 0) continue;
      auto it = config.find(name);
      if (it == config.end() || it->is_null()) continue;
      opt->add_result(config_value_string(*it));
      opt->run_callback();
    }
  }
}

// ---- subcommands ---------------------------------------------------------

struct Options {
  std::size_t threads = 1;
  std::string config;
  std::string questions;
  std::string scene_graphs;
  std::string mapping;
  std::string tags;
  std::string out;
  std::string out_dir;
  std::string mode;
  std::size_t max_l = kDefaultMaxPathLength;
  std::string kg;
  std::uint64_t seed = 13;
  std::string ratios = "0.8,0.1,0.1";
  std::string templates;
  std::string paths;
  std::string type;
  std::string antonyms;
  std::string pos_lexicon;
  std::string concepts;
  std::string template_text;
  std::string generated;
  std::string references;
  std::string training;
};

int cmd_ingest(const Options& o) {
  require(o.scene_graphs, "scene-graphs");
  require(o.questions, "questions");
  require(o.out_dir, "out-dir");
  auto graphs = load_graphs(o.scene_graphs);
  auto questions = load_questions(o.questions);
  auto report = validate_corpus(graphs, questions);
  logger()->info("validation: {} missing images, {} dangling objects", report.missing_image.size(),
                 report.dangling_object.size());
  fs::path dir = o.out_dir;
  std::vector<SceneGraph> graph_list;
  for (const auto& [id, g] : graphs) graph_list.push_back(g);
  write_atomic(dir / "scene_graphs.jsonl", jsonl(graph_list, [](const SceneGraph& g) { return to_json(g); }));
  write_atomic(dir / "questions.jsonl", jsonl(questions, [](const QuestionRecord& q) { return to_json(q); }));
  write_atomic(dir / "validation.json", to_json(report).dump(2) + "\n");
  return kOk;
}

int cmd_tag(const Options& o) {
  require(o.questions, "questions");
  require(o.mapping, "mapping");
  require(o.out, "out");
  auto table = KgMappingTable::load(o.mapping);
  auto questions = load_questions(o.questions);
  TagDiagnostics diag;
  auto results = tag_corpus(questions, table, o.threads, &diag);
  logger()->info("tagged {} questions, {} without any gap", results.size(), diag.untagged);
  for (const auto& [k, n] : diag.unknown_detailed_types) logger()->debug("unmapped detailed type '{}': {}", k, n);
  for (const auto& [k, n] : diag.unknown_global_groups) logger()->debug("unmapped global group '{}': {}", k, n);
  write_atomic(o.out, jsonl(results, [](const TagResult& r) { return to_json(r); }));
  return kOk;
}

int cmd_report(const Options& o) {
  require(o.tags, "tags");
  require(o.out, "out");
  auto tags = load_tags(o.tags);
  write_atomic(o.out, to_json(distribution_report(tags)).dump(2) + "\n");
  return kOk;
}

int cmd_extract_paths(const Options& o) {
  require(o.questions, "questions");
  require(o.scene_graphs, "scene-graphs");
  require(o.out, "out");
  auto mode = mode_from(o.mode.empty() ? "path" : o.mode);
  check_max_length(o.max_l);
  auto graphs = load_graphs(o.scene_graphs);
  auto questions = load_questions(o.questions);
  auto lines = parallel_map(
      questions,
      [&](const QuestionRecord& q) -> std::string {
        auto g = graphs.find(q.image_id);
        if (g == graphs.end()) return {};
        auto located = locate_question_objects(q, g->second);
        if (located.size() < 2) return {};
        auto p = extract_path(g->second, located[0], located[1], mode, o.max_l);
        if (!p) return {};
        return path_record_json(q.question_id, q.image_id, *p).dump() + "\n";
      },
      o.threads);
  std::string out;
  std::size_t n = 0;
  for (const auto& l : lines) {
    if (l.empty()) continue;
    out += l;
    ++n;
  }
  logger()->info("extracted {} paths from {} questions", n, questions.size());
  write_atomic(o.out, out);
  return kOk;
}

int cmd_build_corpus(const Options& o) {
  require(o.questions, "questions");
  require(o.scene_graphs, "scene-graphs");
  if (o.tags.empty()) require(o.mapping, "mapping");
  BuildOptions build;
  build.mode = mode_from(o.mode.empty() ? "triple" : o.mode);
  build.max_length = build.mode == PathMode::Triple ? 1 : o.max_l;
  check_max_length(o.max_l);
  build.threads = o.threads;
  std::vector<KnowledgeGap> gaps;
  if (o.kg.empty()) {
    gaps.assign(kTaggableGaps.begin(), kTaggableGaps.end());
  } else {
    gaps.push_back(taggable_gap_from(o.kg));
  }
  auto ratios = ratios_from(o.ratios);

  auto graphs = load_graphs(o.scene_graphs);
  auto questions = load_questions(o.questions);
  std::vector<TagResult> tags;
  if (!o.tags.empty()) {
    tags = load_tags(o.tags);
  } else {
    tags = tag_corpus(questions, KgMappingTable::load(o.mapping), o.threads);
  }

  BuildStats stats;
  auto pairs = build_pairs(questions, tags, graphs, build, &stats);
  for (const auto& [reason, n] : stats.skipped) logger()->info("skipped {} questions: {}", n, to_string(reason));

  fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  for (auto gap : gaps) {
    std::vector<TrainingPair> selected;
    for (const auto& p : pairs) {
      if (p.kg == gap) selected.push_back(p);
    }
    auto split = split_corpus(std::move(selected), ratios, o.seed);
    std::string stem = std::string(to_string(gap)) + "_" + std::string(to_string(build.mode));
    auto record = [](const TrainingPair& p) { return corpus_record_json(p); };
    write_atomic(dir / (stem + "_train.jsonl"), jsonl(split.train, record));
    write_atomic(dir / (stem + "_val.jsonl"), jsonl(split.val, record));
    write_atomic(dir / (stem + "_test.jsonl"), jsonl(split.test, record));
    write_atomic(dir / (stem + "_stats.json"), to_json(corpus_stats(split), gap, build.mode, o.seed).dump(2) + "\n");
  }
  return kOk;
}

int cmd_populate(const Options& o) {
  require(o.templates, "templates");
  require(o.paths, "paths");
  require(o.scene_graphs, "scene-graphs");
  require(o.out, "out");
  auto graphs = load_graphs(o.scene_graphs);

  struct PathRecord {
    std::string image_id;
    PathSequence path;
  };
  std::map<std::string, PathRecord> paths;
  read_jsonl(o.paths, [&](const json& j) {
    PathRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.path.tokens = j.at("tokens").get<Tokens>();
    r.path.length = j.at("L").get<std::size_t>();
    const auto& ends = j.at("endpoints");
    r.path.endpoints = {ends.at(0).get<std::string>(), ends.at(1).get<std::string>()};
    r.path.endpoint_attribute_count = j.at("endpoint_attribute_count").get<std::size_t>();
    paths.insert_or_assign(j.at("question_id").get<std::string>(), std::move(r));
  });

  std::string out;
  std::size_t written = 0, failed = 0, unmatched = 0;
  read_jsonl(o.templates, [&](const json& j) {
    auto t = Template::from_tokens(j.at("tokens").get<Tokens>());
    auto src = j.find("source_question_id");
    if (src == j.end() || !src->is_string() || !paths.contains(src->get<std::string>())) {
      ++unmatched;
      return;
    }
    const auto& qid = src->get<std::string>();
    const auto& rec = paths.at(qid);
    auto g = graphs.find(rec.image_id);
    if (g == graphs.end()) {
      ++unmatched;
      return;
    }
    try {
      auto text = populate_template(t, rec.path, g->second);
      json row = {{"image_id", rec.image_id},
                  {"kg", j.value("kg", json())},
                  {"question", text},
                  {"source_question_id", qid},
                  {"template_tokens", t.tokens}};
      out += row.dump() + "\n";
      ++written;
    } catch (const PopulationError& e) {
      ++failed;
      logger()->debug("template for {} not populated: {}", qid, e.what());
    } catch (const ValidationError& e) {
      ++failed;
      logger()->debug("template for {} not populated: {}", qid, e.what());
    }
  });
  logger()->info("populated {} templates, {} unfillable, {} without a path", written, failed, unmatched);
  write_atomic(o.out, out);
  return kOk;
}

int cmd_simulate(const Options& o) {
  require(o.type, "type");
  require(o.out, "out");
  std::vector<SimulatedQuestion> generated;

  if (o.type == "inverse") {
    require(o.questions, "questions");
    require(o.antonyms, "antonyms");
    auto lex = AntonymLexicon::from_json(load_json_file(o.antonyms));
    ClosedLexiconTagger tagger;
    if (!o.pos_lexicon.empty()) tagger = ClosedLexiconTagger::from_json(load_json_file(o.pos_lexicon));
    auto questions = load_questions(o.questions);
    std::set<std::string> dataset;
    for (const auto& q : questions) dataset.insert(q.text);
    PosTagger pos = tagger;
    auto per_question = parallel_map(
        questions, [&](const QuestionRecord& q) { return generate_inverse_questions(q, lex, pos, dataset); },
        o.threads);
    for (auto& v : per_question) generated.insert(generated.end(), v.begin(), v.end());
  } else if (o.type == "context") {
    require(o.scene_graphs, "scene-graphs");
    require(o.template_text, "template");
    auto t = Template::parse(o.template_text);
    if (t.n_obj != 1) throw UsageError("--template must contain exactly one OBJ slot");
    for (const auto& [id, sg] : load_graphs(o.scene_graphs)) {
      auto v = simulate_context_gaps(sg, t);
      generated.insert(generated.end(), v.begin(), v.end());
    }
  } else if (o.type == "entity-resolution") {
    require(o.questions, "questions");
    require(o.scene_graphs, "scene-graphs");
    auto graphs = load_graphs(o.scene_graphs);
    for (const auto& q : load_questions(o.questions)) {
      auto g = graphs.find(q.image_id);
      if (g != graphs.end() && detect_entity_resolution_gap(q, g->second)) {
        generated.push_back({q.text, KnowledgeGap::EntityResolution, q.image_id, q.question_id, std::nullopt});
      }
    }
  } else if (o.type == "explanatory") {
    require(o.scene_graphs, "scene-graphs");
    require(o.concepts, "concepts");
    auto lex = ConceptLexicon::from_json(load_json_file(o.concepts));
    for (const auto& [id, sg] : load_graphs(o.scene_graphs)) {
      auto v = simulate_explanatory_gaps(sg, lex);
      generated.insert(generated.end(), v.begin(), v.end());
    }
  } else {
    throw UsageError("--type must be one of inverse, context, entity-resolution, explanatory");
  }
  logger()->info("generated {} {} questions", generated.size(), o.type);
  write_atomic(o.out, jsonl(generated, [](const SimulatedQuestion& s) { return to_json(s); }));
  return kOk;
}

int cmd_evaluate(const Options& o) {
  require(o.generated, "generated");
  require(o.references, "references");
  require(o.training, "training");
  require(o.kg, "kg");
  require(o.out, "out");
  auto kg = taggable_gap_from(o.kg);
  auto mode = mode_from(o.mode.empty() ? "triple" : o.mode);

  std::set<Tokens> training;
  read_jsonl(o.training, [&](const json& j) {
    auto p = corpus_record_from_json(j);
    if (p.kg == kg) training.insert(p.tmpl.tokens);
  });
  std::map<std::string, Template> references;
  read_jsonl(o.references, [&](const json& j) {
    auto p = corpus_record_from_json(j);
    if (p.kg == kg) references.emplace(p.question_id, p.tmpl);
  });

  std::vector<Generation> generations;
  std::size_t unmatched = 0;
  read_jsonl(o.generated, [&](const json& j) {
    if (j.contains("kg") && j["kg"].is_string() && j["kg"].get<std::string>() != to_string(kg)) return;
    auto src = j.find("source_question_id");
    if (src == j.end() || !src->is_string() || !references.contains(src->get<std::string>())) {
      ++unmatched;
      return;
    }
    generations.push_back({Template::from_tokens(j.at("tokens").get<Tokens>()),
                           references.at(src->get<std::string>())});
  });
  if (unmatched) logger()->warn("{} generated templates had no reference and were skipped", unmatched);
  auto report = evaluate_generated(generations, training, kg, mode, o.threads);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  rows.push_back(to_json(report));
  write_atomic(o.out, rows.dump(2) + "\n");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  configure_logging();
  Options o;
  CLI::App app{"Knowledge-gap dataset toolkit for scene-graph VQA questions", "kgap"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", o.config, "JSON config file; explicit flags take precedence");

  auto* ingest = app.add_subcommand("ingest", "Parse and validate GQA files into canonical JSONL");
  ingest->add_option("--scene-graphs", o.scene_graphs, "GQA scene-graph JSON");
  ingest->add_option("--questions", o.questions, "GQA questions JSON");
  ingest->add_option("--out-dir", o.out_dir, "Output directory");

  auto* tag = app.add_subcommand("tag", "Tag questions with knowledge gaps");
  tag->add_option("--questions", o.questions, "GQA questions JSON");
  tag->add_option("--mapping", o.mapping, "Gap mapping asset (kg_mapping.json)");
  tag->add_option("--out", o.out, "Tags JSONL");

  auto* report = app.add_subcommand("report", "Per-gap distribution report");
  report->add_option("--tags", o.tags, "Tags JSONL");
  report->add_option("--out", o.out, "Report JSON");

  auto* paths = app.add_subcommand("extract-paths", "Extract scene-graph paths between question objects");
  paths->add_option("--questions", o.questions, "GQA questions JSON");
  paths->add_option("--scene-graphs", o.scene_graphs, "GQA scene-graph JSON");
  paths->add_option("--mode", o.mode, "triple or path (default path)");
  paths->add_option("--max-l", o.max_l, "Maximum path length, 1..5");
  paths->add_option("--out", o.out, "Paths JSONL");

  auto* corpus = app.add_subcommand("build-corpus", "Build per-gap training corpora and splits");
  corpus->add_option("--questions", o.questions, "GQA questions JSON");
  corpus->add_option("--scene-graphs", o.scene_graphs, "GQA scene-graph JSON");
  corpus->add_option("--mapping", o.mapping, "Gap mapping asset, used when --tags is absent");
  corpus->add_option("--tags", o.tags, "Precomputed tags JSONL");
  corpus->add_option("--kg", o.kg, "Restrict to one gap (default: all taggable gaps)");
  corpus->add_option("--mode", o.mode, "triple or path (default triple)");
  corpus->add_option("--max-l", o.max_l, "Maximum path length for path mode, 1..5");
  corpus->add_option("--seed", o.seed, "Split seed");
  corpus->add_option("--ratios", o.ratios, "train,val,test ratios");
  corpus->add_option("--out-dir", o.out_dir, "Output directory (default .)");

  auto* populate = app.add_subcommand("populate", "Fill generated templates from their source paths");
  populate->add_option("--templates", o.templates, "Templates JSONL with source_question_id");
  populate->add_option("--paths", o.paths, "Paths JSONL from extract-paths");
  populate->add_option("--scene-graphs", o.scene_graphs, "GQA scene-graph JSON");
  populate->add_option("--out", o.out, "Populated questions JSONL");

  auto* simulate = app.add_subcommand("simulate", "Generate inverse/context/entity-resolution/explanatory gaps");
  simulate->add_option("--type", o.type, "inverse, context, entity-resolution or explanatory");
  simulate->add_option("--questions", o.questions, "GQA questions JSON");
  simulate->add_option("--scene-graphs", o.scene_graphs, "GQA scene-graph JSON");
  simulate->add_option("--antonyms", o.antonyms, "Antonym lexicon JSON");
  simulate->add_option("--pos-lexicon", o.pos_lexicon, "Closed POS lexicon JSON");
  simulate->add_option("--concepts", o.concepts, "Concept lexicon JSON");
  simulate->add_option("--template", o.template_text, "Context-gap template with one OBJ slot");
  simulate->add_option("--out", o.out, "Simulated questions JSONL");

  auto* evaluate = app.add_subcommand("evaluate", "Score generated templates with BLEU and METEOR");
  evaluate->add_option("--generated", o.generated, "Generated templates JSONL");
  evaluate->add_option("--references", o.references, "Test-split corpus JSONL");
  evaluate->add_option("--training", o.training, "Train-split corpus JSONL");
  evaluate->add_option("--kg", o.kg, "Knowledge gap of the model");
  evaluate->add_option("--mode", o.mode, "triple or path (default triple)");
  evaluate->add_option("--out", o.out, "Metric report JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return kOk;
    }
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    merge_config(app, sub, o.config);
    if (o.threads < 1) throw UsageError("--threads must be positive");
    const auto name = sub->get_name();
    if (name == "ingest") return cmd_ingest(o);
    if (name == "tag") return cmd_tag(o);
    if (name == "report") return cmd_report(o);
    if (name == "extract-paths") return cmd_extract_paths(o);
    if (name == "build-corpus") return cmd_build_corpus(o);
    if (name == "populate") return cmd_populate(o);
    if (name == "simulate") return cmd_simulate(o);
    if (name == "evaluate") return cmd_evaluate(o);
    throw UsageError("unknown subcommand " + name);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return kUsageError;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return kUsageError;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kInputError;
  }
}

}  // namespace kgap::cli
