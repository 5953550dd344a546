#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>
#include <string>

#include "test_support.hpp"

using namespace kgap;
using namespace kgap::test;

namespace {

template <typename Reader>
auto read_string(const std::string& s, IngestStats* stats = nullptr) {
  std::istringstream in(s);
  return read_all<Reader>(in, stats);
}

}  // namespace

TEST_CASE("minimal scene graph", "[ingest]") {
  IngestStats stats;
  auto graphs = read_string<SceneGraphReader>(
      R"({"2407890":{"objects":{"o1":{"name":"cup","attributes":["large"],"relations":[{"name":"on","object":"o2"}]},"o2":{"name":"table","attributes":[],"relations":[]}}}})",
      &stats);
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].image_id == "2407890");
  CHECK(graphs[0].objects.size() == 2);
  CHECK(graphs[0].objects.at("o1").relations == std::vector<Relation>{{"on", "o2"}});
  CHECK(graphs[0].objects.at("o1").attributes == std::vector<std::string>{"large"});
  CHECK(stats.yielded == 1);
  CHECK(stats.errors == 0);
}

TEST_CASE("empty map yields nothing", "[ingest]") {
  CHECK(read_string<SceneGraphReader>("{}").empty());
  CHECK(read_string<QuestionReader>("  { }\n").empty());
}

TEST_CASE("record-level errors are skipped and counted", "[ingest]") {
  IngestStats stats;
  auto graphs = read_string<SceneGraphReader>(
      R"({"a":{"objects":{"o1":{"name":"cup","relations":[{"name":"on","object":"o9"}]}}},
          "b":{"width":3},
          "c":{"objects":{}}})",
      &stats);
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].image_id == "c");
  CHECK(stats.errors == 2);
  CHECK(stats.records() == 3);
  REQUIRE(stats.samples.size() == 2);
  CHECK(stats.samples[0].key == "a");
  CHECK(stats.samples[1].key == "b");
}

TEST_CASE("malformed JSON is fatal with a byte offset", "[ingest]") {
  std::string doc = R"({"a":{"objects":{}}, "b":{"objects":{]}})";
  std::istringstream in(doc);
  SceneGraphReader reader(in);
  CHECK(reader.next().has_value());
  try {
    reader.next();
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == doc.find(']'));
  }

  for (const char* bad : {"", "[1]", R"({"a":1)", R"({"a" 1})", R"({"a":{}} x)", R"({"a":"unterminated)"}) {
    std::istringstream s(bad);
    CHECK_THROWS_AS(read_all<SceneGraphReader>(s), ParseError);
  }
}

TEST_CASE("questions: worked example fields", "[ingest]") {
  auto qs = read_string<QuestionReader>(R"({"q1":{
      "imageId":"2407890","question":"Are there any large mouse pads?","answer":"yes",
      "types":{"detailed":"existAttr"},"groups":{"global":null},
      "semantic":[{"operation":"filter size","argument":"large","dependencies":[]}]}})");
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].detailed_type == "existAttr");
  CHECK(qs[0].global_group == "");
  REQUIRE(qs[0].semantic_program.size() == 1);
  CHECK(qs[0].semantic_program[0].operation == "filter size");
  CHECK(qs[0].semantic_program[0].argument == "large");
  CHECK(qs[0].object_annotations.empty());
}

TEST_CASE("questions: validation", "[ingest]") {
  IngestStats stats;
  auto qs = read_string<QuestionReader>(R"({
      "fwd":{"imageId":"i","question":"a b c?","semantic":[
          {"operation":"select","argument":"x","dependencies":[]},
          {"operation":"filter","argument":"y","dependencies":[2]},
          {"operation":"exist","argument":"","dependencies":[1]}]},
      "noimg":{"question":"x?"},
      "notext":{"imageId":"i"},
      "span":{"imageId":"i","question":"a b?","annotations":{"question":{"5":"o1"}}},
      "ok":{"imageId":"i","question":"a b?","annotations":{"question":{"0:2":"o1"}}}})",
                                        &stats);
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].question_id == "ok");
  CHECK(qs[0].object_annotations.at(TokenSpan{0, 2}) == "o1");
  CHECK(stats.errors == 4);
}

TEST_CASE("token span keys", "[ingest]") {
  CHECK(TokenSpan::parse("3") == TokenSpan{3, 4});
  CHECK(TokenSpan::parse("3:5") == TokenSpan{3, 5});
  CHECK(TokenSpan::parse("3:5").key() == "3:5");
  CHECK(TokenSpan::parse("7").key() == "7");
  CHECK_THROWS_AS(TokenSpan::parse("5:5"), ValidationError);
  CHECK_THROWS_AS(TokenSpan::parse("x"), ValidationError);
  CHECK_THROWS_AS(TokenSpan::parse(""), ValidationError);
}

TEST_CASE("streaming parse equals whole-document parse", "[ingest]") {
  auto raw = nlohmann::json::parse(slurp(fixture_path("fixture_questions.json")));
  std::vector<QuestionRecord> whole;
  for (const auto& [id, j] : raw.items()) whole.push_back(question_from_gqa(id, j));
  auto streamed = fixture_questions();
  // nlohmann iterates keys sorted; the stream follows document order.
  std::sort(streamed.begin(), streamed.end(),
            [](const auto& a, const auto& b) { return a.question_id < b.question_id; });
  CHECK(streamed == whole);
  CHECK(streamed.size() == 50);

  auto graphs_raw = nlohmann::json::parse(slurp(fixture_path("fixture_scene_graphs.json")));
  auto graphs = fixture_graphs();
  CHECK(graphs.size() == 10);
  for (const auto& g : graphs) CHECK(scene_graph_from_gqa(g.image_id, graphs_raw.at(g.image_id)) == g);
}

TEST_CASE("canonical serialization round-trips", "[ingest]") {
  for (const auto& g : fixture_graphs()) {
    auto line = to_json(g).dump();
    CHECK(scene_graph_from_json(nlohmann::json::parse(line)) == g);
    CHECK(to_json(scene_graph_from_json(nlohmann::json::parse(line))).dump() == line);
  }
  for (const auto& q : fixture_questions()) {
    auto line = to_json(q).dump();
    CHECK(question_from_json(nlohmann::json::parse(line)) == q);
  }
}

TEST_CASE("canonical round-trip on random records", "[ingest][property]") {
  std::mt19937 rng(7);
  auto word = [&] {
    static const char* words[] = {"cup", "on", "a b", "\"quoted\"", "üñí", "x\\y", "left of", "0"};
    return std::string(words[rng() % 8]);
  };
  for (int round = 0; round < 200; ++round) {
    SceneGraph g;
    g.image_id = "img" + std::to_string(round);
    int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      auto id = "o" + std::to_string(i);
      SgObject o{id, word(), {}, {}};
      for (unsigned k = rng() % 3; k > 0; --k) o.attributes.push_back(word());
      g.objects[id] = o;
    }
    for (unsigned e = rng() % 8; e > 0; --e) {
      auto s = "o" + std::to_string(rng() % n), t = "o" + std::to_string(rng() % n);
      g.objects[s].relations.push_back({word(), t});
    }
    CHECK(scene_graph_from_json(nlohmann::json::parse(to_json(g).dump())) == g);

    QuestionRecord q;
    q.question_id = "q" + std::to_string(round);
    q.image_id = g.image_id;
    q.text = word() + " " + word() + " " + word() + "?";
    q.answer = word();
    q.detailed_type = word();
    q.global_group = rng() % 2 ? word() : "";
    for (std::size_t s = 0; s < rng() % 4; ++s) {
      FunctionalStep step{word(), word(), {}};
      if (s > 0) step.dependencies.push_back(rng() % s);
      q.semantic_program.push_back(step);
    }
    q.object_annotations[TokenSpan{0, 1}] = "o0";
    CHECK(question_from_json(nlohmann::json::parse(to_json(q).dump())) == q);
  }
}

TEST_CASE("canonical lines have alphabetical keys", "[ingest]") {
  auto g = make_graph({{{"o1", "cup", {"large"}}, {"o2", "table", {}}}, {{"o1", "on", "o2"}}}, "2407890");
  CHECK(to_json(g).dump() ==
        R"({"image_id":"2407890","objects":{"o1":{"attributes":["large"],"name":"cup","relations":[{"predicate":"on","target":"o2"}]},"o2":{"attributes":[],"name":"table","relations":[]}}})");
}

TEST_CASE("validate_corpus", "[ingest]") {
  GraphIndex graphs;
  graphs["i1"] = make_graph({{{"a", "cup", {}}, {"b", "table", {}}}, {}}, "i1");
  graphs["i2"] = make_graph({{{"c", "dog", {}}}, {}}, "i2");

  SECTION("all references resolvable") {
    std::vector<QuestionRecord> qs{make_question("q1", "cup table ?", {{"0", "a"}, {"1", "b"}}, "i1")};
    CHECK(validate_corpus(graphs, qs).findings() == 0);
  }
  SECTION("unknown image") {
    std::vector<QuestionRecord> qs{make_question("q1", "x ?", {}, "i9")};
    auto r = validate_corpus(graphs, qs);
    CHECK(r.missing_image == std::vector<std::string>{"q1"});
    CHECK(r.dangling_object.empty());
  }
  SECTION("dangling objects match a brute-force cross-check") {
    std::mt19937 rng(3);
    const char* ids[] = {"a", "b", "c", "d", "zz"};
    const char* images[] = {"i1", "i2", "i3"};
    std::vector<QuestionRecord> qs;
    for (int i = 0; i < 10; ++i) {
      auto q = make_question("q" + std::to_string(i), "w0 w1 w2 w3 ?", {}, images[rng() % 3]);
      for (unsigned k = 0; k < 4; ++k) {
        if (rng() % 2) q.object_annotations[TokenSpan{k, k + 1}] = ids[rng() % 5];
      }
      qs.push_back(q);
    }
    std::set<std::pair<std::string, std::string>> expected_dangling;
    std::set<std::string> expected_missing;
    for (const auto& q : qs) {
      bool image_known = false;
      for (const auto& [img, g] : graphs) image_known |= img == q.image_id;
      if (!image_known) {
        expected_missing.insert(q.question_id);
        continue;
      }
      for (const auto& [span, oid] : q.object_annotations) {
        bool found = false;
        for (const auto& [id, o] : graphs.at(q.image_id).objects) found |= id == oid;
        if (!found) expected_dangling.emplace(q.question_id, oid);
      }
    }
    auto r = validate_corpus(graphs, qs);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& d : r.dangling_object) got.emplace(d.question_id, d.object_id);
    CHECK(got == expected_dangling);
    CHECK(got.size() == r.dangling_object.size());
    CHECK(std::set<std::string>(r.missing_image.begin(), r.missing_image.end()) == expected_missing);
    CHECK(!expected_dangling.empty());
    CHECK(!expected_missing.empty());
  }
}

TEST_CASE("bundled fixture is internally consistent", "[ingest]") {
  auto r = validate_corpus(index_graphs(fixture_graphs()), fixture_questions());
  CHECK(r.findings() == 0);
}
