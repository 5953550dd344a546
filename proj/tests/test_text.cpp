#include <catch_amalgamated.hpp>

#include <vector>

#include "kgap/parallel.hpp"
#include "kgap/text.hpp"

using namespace kgap;

TEST_CASE("tokenize detaches trailing punctuation", "[text]") {
  CHECK(tokenize("Are there any large mouse pads?") ==
        Tokens{"Are", "there", "any", "large", "mouse", "pads", "?"});
  CHECK(tokenize("Which are healthier, the pizza or the peppers?") ==
        Tokens{"Which", "are", "healthier", ",", "the", "pizza", "or", "the", "peppers", "?"});
  CHECK(tokenize("lady's hair?") == Tokens{"lady's", "hair", "?"});
  CHECK(tokenize("  spaced   out  ") == Tokens{"spaced", "out"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("?") == Tokens{"?"});
}

TEST_CASE("detokenize inverts tokenize on single-spaced text", "[text]") {
  for (const char* s : {"Is the happy spectator to the right of the cap?",
                        "Which is younger, the players or the man?", "What place is this?", "a b c"}) {
    CHECK(detokenize(tokenize(s)) == s);
  }
  CHECK(detokenize({}) == "");
}

TEST_CASE("keyword normalization", "[text]") {
  CHECK(normalize_keyword("  Face Expression ") == "face expression");
  CHECK(normalize_keyword("") == "");
  CHECK(join({"a", "b"}, "_") == "a_b");
}

TEST_CASE("parallel_map preserves order for any thread count", "[parallel]") {
  std::vector<int> xs(1000);
  for (int i = 0; i < 1000; ++i) xs[i] = i;
  auto serial = parallel_map(xs, [](int x) { return x * x; }, 1);
  for (std::size_t t : {2u, 3u, 8u, 64u, 5000u}) {
    CHECK(parallel_map(xs, [](int x) { return x * x; }, t) == serial);
  }
  CHECK(parallel_map(std::vector<int>{}, [](int x) { return x; }, 4).empty());
}

TEST_CASE("parallel_map rethrows the lowest-index failure", "[parallel]") {
  std::vector<int> xs(100);
  for (int i = 0; i < 100; ++i) xs[i] = i;
  auto fn = [](int x) {
    if (x == 17 || x == 80) throw std::runtime_error(std::to_string(x));
    return x;
  };
  for (std::size_t t : {1u, 4u}) {
    try {
      parallel_map(xs, fn, t);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "17");
    }
  }
}

TEST_CASE("pairwise_sum", "[parallel]") {
  std::vector<double> xs(1000, 0.1);
  CHECK(pairwise_sum(xs) == Catch::Approx(100.0).epsilon(1e-12));
  CHECK(pairwise_sum({}) == 0.0);
}
