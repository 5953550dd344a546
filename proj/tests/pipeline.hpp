#pragma once

// Runs every subcommand over the bundled fixture into one directory and
// returns the produced files. Generated templates for `evaluate` and
// `populate` are stood in for by the corpus templates themselves.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kgap_cli.hpp"
#include "test_support.hpp"

namespace kgap::test {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("kgap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline int run_cli(std::vector<std::string> args) { return cli::run(args); }

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Turns corpus records into template records keyed by their question.
inline std::string templates_from_corpus(const fs::path& corpus) {
  std::ifstream in(corpus);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    out += nlohmann::json{{"kg", j.at("kg")},
                          {"source_question_id", j.at("question_id")},
                          {"tokens", j.at("template_tokens")}}
               .dump() +
           "\n";
  }
  return out;
}

struct PipelineResult {
  std::vector<int> exit_codes;
  std::map<std::string, std::string> files;  // file name -> content
};

inline PipelineResult run_pipeline(const fs::path& dir, std::size_t threads) {
  const auto q = fixture_path("fixture_questions.json");
  const auto sg = fixture_path("fixture_scene_graphs.json");
  const auto t = std::to_string(threads);
  const auto d = dir.string();
  PipelineResult r;
  auto step = [&](std::vector<std::string> args) { r.exit_codes.push_back(run_cli(std::move(args))); };

  step({"--threads", t, "ingest", "--scene-graphs", sg, "--questions", q, "--out-dir", d + "/ingest"});
  step({"--threads", t, "tag", "--questions", q, "--mapping", data_path("kg_mapping.json"), "--out", d + "/tags.jsonl"});
  step({"report", "--tags", d + "/tags.jsonl", "--out", d + "/report.json"});
  step({"--threads", t, "extract-paths", "--questions", q, "--scene-graphs", sg, "--mode", "path", "--max-l", "5",
        "--out", d + "/paths.jsonl"});
  step({"--threads", t, "extract-paths", "--questions", q, "--scene-graphs", sg, "--mode", "triple", "--out",
        d + "/triples.jsonl"});
  for (const char* mode : {"triple", "path"}) {
    step({"--threads", t, "build-corpus", "--questions", q, "--scene-graphs", sg, "--tags", d + "/tags.jsonl",
          "--mode", mode, "--seed", "13", "--ratios", "0.8,0.1,0.1", "--out-dir", d + "/corpus"});
  }
  write_file(dir / "generated.jsonl",
             templates_from_corpus(dir / "corpus/direction_path_train.jsonl") +
                 templates_from_corpus(dir / "corpus/sentiment_triple_train.jsonl") +
                 templates_from_corpus(dir / "corpus/sentiment_triple_test.jsonl"));
  // The fixture test splits are too small to hold references, so the
  // train split serves as both.
  step({"--threads", t, "evaluate", "--generated", d + "/generated.jsonl", "--references",
        d + "/corpus/direction_path_train.jsonl", "--training", d + "/corpus/direction_path_train.jsonl", "--kg",
        "direction", "--mode", "path", "--out", d + "/metrics.json"});
  step({"populate", "--templates", d + "/generated.jsonl", "--paths", d + "/triples.jsonl", "--scene-graphs", sg,
        "--out", d + "/populated.jsonl"});
  step({"--threads", t, "simulate", "--type", "inverse", "--questions", q, "--antonyms", data_path("antonyms.json"),
        "--pos-lexicon", data_path("pos_lexicon.json"), "--out", d + "/inverse.jsonl"});
  step({"simulate", "--type", "context", "--scene-graphs", sg, "--template", "Where is the OBJ ?", "--out",
        d + "/context.jsonl"});
  step({"simulate", "--type", "entity-resolution", "--questions", q, "--scene-graphs", sg, "--out",
        d + "/entity.jsonl"});
  step({"simulate", "--type", "explanatory", "--scene-graphs", sg, "--concepts", data_path("concepts.json"), "--out",
        d + "/explanatory.jsonl"});

  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) r.files[fs::relative(entry.path(), dir).generic_string()] = slurp(entry.path().string());
  }
  return r;
}

}  // namespace kgap::test
