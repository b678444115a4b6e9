#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elq/spans.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace elq;

TEST_CASE("span counts match the closed form and brute force") {
  CHECK(span_count(5, 10) == 15);
  CHECK(span_count(12, 10) == elqtest::oracle_enumerate_spans(12, 10).size());
  CHECK(span_count(12, 10) == 75);

  auto one = enumerate_spans(1, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == SpanCandidate{0, 0});

  for (int n = 1; n <= 64; ++n) {
    for (int max_len : {1, 5, 10}) {
      auto spans = enumerate_spans(n, max_len);
      auto brute = elqtest::oracle_enumerate_spans(n, max_len);
      CHECK(spans.size() == span_count(n, max_len));
      CHECK(spans.size() == brute.size());
      CHECK(std::equal(spans.begin(), spans.end(), brute.begin()));
    }
  }
}

TEST_CASE("spans come out ordered by (start, end) with valid lengths") {
  auto spans = enumerate_spans(9, 4);
  for (size_t i = 0; i < spans.size(); ++i) {
    CHECK(spans[i].length() <= 4);
    CHECK(spans[i].start <= spans[i].end);
    if (i) CHECK(spans[i - 1] < spans[i]);
  }
}

namespace {

QuestionEmbeddings embeddings_from(Mat m) {
  QuestionEmbeddings emb;
  emb.question = tokenize("placeholder");
  emb.matrix = std::move(m);
  return emb;
}

}  // namespace

TEST_CASE("zero heads score every span at p = 0.5") {
  auto emb = embeddings_from(elqtest::gaussian_mat(6, 4, 21));
  HeadWeights heads = HeadWeights::zeros(4);
  auto spans = enumerate_spans(6, 3);
  auto scored = mention_scores(emb, heads, spans);
  for (const ScoredMention& m : scored) {
    CHECK(m.logit == 0.0);
    CHECK(std::exp(m.log_p_mention) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("hand-computed logistic value") {
  // s_start = s_end = 1 and a mention sum of 2 over the full span.
  Mat m(2, 1);
  m.at(0, 0) = 1.0;
  m.at(1, 0) = 1.0;
  auto emb = embeddings_from(std::move(m));
  HeadWeights heads{{1.0}, {1.0}, {1.0}};
  std::vector<SpanCandidate> spans = {{0, 1}};
  auto scored = mention_scores(emb, heads, spans);
  CHECK(scored[0].logit == doctest::Approx(4.0));
  CHECK(std::exp(scored[0].log_p_mention) == doctest::Approx(0.98201379).epsilon(1e-6));
}

TEST_CASE("start scores are linear in w_start") {
  auto emb = embeddings_from(elqtest::gaussian_mat(5, 3, 33));
  HeadWeights heads{elqtest::gaussian_vec(3, 1), elqtest::gaussian_vec(3, 2),
                    elqtest::gaussian_vec(3, 3)};
  TokenScores base = token_scores(emb, heads);
  for (double& v : heads.w_start) v *= 2.0;
  TokenScores doubled = token_scores(emb, heads);
  for (size_t t = 0; t < 5; ++t) {
    CHECK(doubled.start[t] == doctest::Approx(2.0 * base.start[t]).epsilon(1e-12));
    CHECK(doubled.end[t] == base.end[t]);
  }
}

TEST_CASE("prefix-sum logits agree with naive per-span sums") {
  auto emb = embeddings_from(elqtest::gaussian_mat(24, 8, 77));
  HeadWeights heads{elqtest::gaussian_vec(8, 4), elqtest::gaussian_vec(8, 5),
                    elqtest::gaussian_vec(8, 6)};
  auto spans = enumerate_spans(24, 10);
  auto scored = mention_scores(emb, heads, spans);
  TokenScores ts = token_scores(emb, heads);
  for (const ScoredMention& m : scored) {
    double naive = ts.start[m.span.start] + ts.end[m.span.end];
    for (int t = m.span.start; t <= m.span.end; ++t) naive += ts.mention[t];
    CHECK(m.logit == doctest::Approx(naive).epsilon(1e-6));
  }
}

TEST_CASE("mention probability increases in each score component") {
  auto emb = embeddings_from(Mat(3, 1, 1.0));  // every token embedding is [1]
  std::vector<SpanCandidate> spans = {{0, 2}};
  HeadWeights heads{{0.2}, {0.3}, {0.1}};
  double base = mention_scores(emb, heads, spans)[0].log_p_mention;

  for (int which = 0; which < 3; ++which) {
    HeadWeights bumped = heads;
    (which == 0 ? bumped.w_start : which == 1 ? bumped.w_end : bumped.w_mention)[0] += 0.05;
    double after = mention_scores(emb, bumped, spans)[0].log_p_mention;
    CHECK(after > base);
  }
}

TEST_CASE("log_sigmoid is stable at extreme logits") {
  CHECK(log_sigmoid(800.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(log_sigmoid(800.0)));
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_sigmoid(-800.0)));
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  for (double x : {-5.0, -0.5, 0.0, 0.5, 5.0}) CHECK(log_sigmoid(x) <= 0.0);
}

TEST_CASE("dimension mismatch between heads and embeddings is rejected") {
  auto emb = embeddings_from(elqtest::gaussian_mat(3, 4, 5));
  HeadWeights heads = HeadWeights::zeros(5);
  auto spans = enumerate_spans(3, 2);
  CHECK_THROWS_AS(mention_scores(emb, heads, spans), Error);
}
