#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elq/encoder.hpp"
#include "elq/error.hpp"
#include "test_util.hpp"

using namespace elq;
using elqtest::TempDir;

TEST_CASE("tokenize lowercases, splits, strips edge punctuation") {
  auto q = tokenize("Who is Shaq?");
  CHECK(q.tokens == std::vector<std::string>{"who", "is", "shaq"});

  auto upper = tokenize("WHO IS SHAQ");
  CHECK(upper.tokens == q.tokens);

  CHECK(tokenize("  ").size() == 0);
  CHECK(tokenize("").size() == 0);
  CHECK(tokenize("'quoted' (parens) trailing...").tokens ==
        std::vector<std::string>{"quoted", "parens", "trailing"});
  CHECK(tokenize("don't stop").tokens == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("t07~100~42").tokens == std::vector<std::string>{"t07~100~42"});
}

TEST_CASE("base embeddings are unit-norm and determined by (seed, token)") {
  SyntheticEncoder a(7, 32, 32);
  SyntheticEncoder b(7, 32, 32);
  SyntheticEncoder other_seed(8, 32, 32);

  for (const char* tok : {"who", "shaq", "x", "t0~100~42"}) {
    Vec va = a.base_embedding(tok);
    Vec vb = b.base_embedding(tok);
    CHECK(va == vb);
    CHECK(norm(va) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(va != other_seed.base_embedding(tok));
  }
}

TEST_CASE("noise aliases perturb the stem vector by about sigma") {
  SyntheticEncoder enc(3, 64, 64);
  Vec clean = enc.base_embedding("t0");
  Vec noisy = enc.base_embedding("t0~100~42");
  Vec other = enc.base_embedding("t0~100~43");

  CHECK(norm(noisy) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(noisy != clean);
  CHECK(noisy != other);
  CHECK(dot(std::span<const double>(clean), std::span<const double>(noisy)) > 0.9);
}

TEST_CASE("encode is deterministic and respects the projection") {
  SyntheticEncoder enc(1, 8, 8);  // identity projection by default
  auto q = tokenize("x y x");
  QuestionEmbeddings emb = enc.encode(q);
  REQUIRE(emb.matrix.rows == 3);
  CHECK(emb.matrix.row_span(0) == emb.matrix.row_span(2));

  SUBCASE("zero projection and bias give a zero matrix") {
    enc.projection().fill(0.0);
    QuestionEmbeddings zero = enc.encode(q);
    for (double v : zero.matrix.data) CHECK(v == 0.0);
  }

  SUBCASE("output is linear in projection and bias") {
    for (double& v : enc.bias()) v = 0.5;
    QuestionEmbeddings once = enc.encode(q);
    for (double& v : enc.projection().data) v *= 2.0;
    for (double& v : enc.bias()) v *= 2.0;
    QuestionEmbeddings twice = enc.encode(q);
    for (size_t i = 0; i < once.matrix.data.size(); ++i)
      CHECK(twice.matrix.data[i] == doctest::Approx(2.0 * once.matrix.data[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(enc.encode(tokenize("  ")), Error);
}

TEST_CASE("entity embeddings average title tokens and normalize") {
  SyntheticEncoder enc(11, 16, 16);

  Vec single = enc.entity_embedding("alpha");
  CHECK(single == enc.base_embedding("alpha"));

  CHECK(enc.entity_embedding("a b") == enc.entity_embedding("b a"));
  CHECK(norm(enc.entity_embedding("some longer title")) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(enc.entity_embedding("  "), Error);
}

TEST_CASE("fixed map pads or truncates entity embeddings across dims") {
  SyntheticEncoder wide(5, 8, 12);
  Vec padded = wide.entity_embedding("alpha");
  REQUIRE(padded.size() == 12);
  for (size_t i = 8; i < 12; ++i) CHECK(padded[i] == 0.0);
  CHECK(norm(padded) == doctest::Approx(1.0).epsilon(1e-9));

  SyntheticEncoder narrow(5, 8, 4);
  Vec truncated = narrow.entity_embedding("alpha");
  REQUIRE(truncated.size() == 4);
  CHECK(norm(truncated) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("precomputed embeddings round-trip and validate") {
  TempDir dir("precomputed");
  SyntheticEncoder enc(2, 4, 4);
  std::vector<TokenizedQuestion> questions = {tokenize("a b c", "q0"), tokenize("d e", "q1")};
  std::vector<QuestionEmbeddings> embs = {enc.encode(questions[0]), enc.encode(questions[1])};

  write_precomputed(dir.file("q.bin"), embs);
  auto loaded = load_precomputed(dir.file("q.bin"), questions);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].matrix.rows == 3);
  CHECK(loaded[1].matrix.rows == 2);
  for (size_t i = 0; i < loaded[0].matrix.data.size(); ++i)
    CHECK(loaded[0].matrix.data[i] ==
          doctest::Approx(embs[0].matrix.data[i]).epsilon(1e-6));

  SUBCASE("row/token mismatch errors") {
    std::vector<TokenizedQuestion> wrong = {tokenize("a b c d", "q0"), questions[1]};
    CHECK_THROWS_AS(load_precomputed(dir.file("q.bin"), wrong), Error);
  }

  SUBCASE("unknown question id errors") {
    std::vector<TokenizedQuestion> only_one = {questions[0]};
    CHECK_THROWS_AS(load_precomputed(dir.file("q.bin"), only_one), Error);
  }

  SUBCASE("empty container loads to an empty list") {
    write_precomputed(dir.file("empty.bin"), {});
    CHECK(load_precomputed(dir.file("empty.bin"), questions).empty());
  }
}
