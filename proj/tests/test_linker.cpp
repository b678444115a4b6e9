#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elq/error.hpp"
#include "elq/linker.hpp"
#include "test_util.hpp"

using namespace elq;

namespace {

QuestionEmbeddings embeddings_from(Mat m) {
  QuestionEmbeddings emb;
  emb.question = tokenize("placeholder");
  emb.matrix = std::move(m);
  return emb;
}

}  // namespace

TEST_CASE("mention_rep is the exact arithmetic mean") {
  Mat m(3, 2);
  m.at(0, 0) = 1.0;
  m.at(0, 1) = 0.0;
  m.at(1, 0) = 0.0;
  m.at(1, 1) = 1.0;
  m.at(2, 0) = 4.0;
  m.at(2, 1) = 4.0;
  auto emb = embeddings_from(std::move(m));

  MentionRep single = mention_rep(emb, {2, 2});
  CHECK(single.y == Vec{4.0, 4.0});

  MentionRep pair = mention_rep(emb, {0, 1});
  CHECK(pair.y == Vec{0.5, 0.5});

  Mat same(2, 2);
  same.at(0, 0) = same.at(1, 0) = 0.25;
  same.at(0, 1) = same.at(1, 1) = -0.75;
  MentionRep identical = mention_rep(embeddings_from(std::move(same)), {0, 1});
  CHECK(identical.y == Vec{0.25, -0.75});

  CHECK_THROWS_AS(mention_rep(emb, {1, 3}), Error);
}

TEST_CASE("score_entities softmaxes over exactly the given candidates") {
  FloatMat rows(3, 2);
  rows.row(0)[0] = 1.0f;  // e0 = (1, 0)
  rows.row(1)[1] = 1.0f;  // e1 = (0, 1)
  rows.row(2)[0] = 1.0f;  // e2 = (1, 0) duplicate direction
  EntityCatalog catalog = elqtest::make_catalog(std::move(rows));

  MentionRep rep{{0, 0}, {1.0, 0.0}};

  SUBCASE("one candidate has probability one") {
    std::vector<int> cands = {1};
    CandidateSet set = score_entities(rep, cands, catalog);
    REQUIRE(set.entries.size() == 1);
    CHECK(set.entries[0].log_p == 0.0);
  }

  SUBCASE("two equal scores split evenly, tie broken by lower index") {
    std::vector<int> cands = {2, 0};
    CandidateSet set = score_entities(rep, cands, catalog);
    REQUIRE(set.entries.size() == 2);
    CHECK(set.entries[0].entity == 0);
    CHECK(set.entries[1].entity == 2);
    CHECK(std::exp(set.entries[0].log_p) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::exp(set.entries[1].log_p) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("softmax(1, 0) from the basis construction") {
    std::vector<int> cands = {0, 1};
    CandidateSet set = score_entities(rep, cands, catalog);
    CHECK(set.entries[0].entity == 0);
    CHECK(set.entries[0].score == doctest::Approx(1.0));
    CHECK(set.entries[1].score == doctest::Approx(0.0));
    CHECK(std::exp(set.entries[0].log_p) == doctest::Approx(0.7310585786).epsilon(1e-9));
    CHECK(std::exp(set.entries[1].log_p) == doctest::Approx(0.2689414214).epsilon(1e-9));
  }

  SUBCASE("empty candidate set is an error") {
    std::vector<int> none;
    CHECK_THROWS_AS(score_entities(rep, none, catalog), Error);
  }
}

TEST_CASE("log-softmax invariances") {
  Vec scores = elqtest::gaussian_vec(12, 17, 3.0);
  Vec base = log_softmax(scores);

  Vec shifted = scores;
  for (double& s : shifted) s += 41.5;
  Vec after = log_softmax(shifted);
  for (size_t i = 0; i < base.size(); ++i)
    CHECK(std::abs(after[i] - base[i]) <= 1e-9);

  double total = 0.0;
  for (double lp : base) total += std::exp(lp);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  size_t argmax_s = std::max_element(scores.begin(), scores.end()) - scores.begin();
  size_t argmax_p = std::max_element(base.begin(), base.end()) - base.begin();
  CHECK(argmax_s == argmax_p);
}

TEST_CASE("probabilities over random candidate sets sum to one") {
  EntityCatalog catalog = elqtest::make_catalog(elqtest::gaussian_rows(20, 6, 5));
  for (uint64_t trial = 0; trial < 10; ++trial) {
    MentionRep rep{{0, 0}, elqtest::gaussian_vec(6, 100 + trial)};
    std::vector<int> cands = {0, 3, 7, 11, 19};
    CandidateSet set = score_entities(rep, cands, catalog);
    double total = 0.0;
    for (const CandidateEntry& e : set.entries) {
      total += std::exp(e.log_p);
      CHECK(e.log_p <= 0.0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    for (size_t i = 1; i < set.entries.size(); ++i)
      CHECK(set.entries[i - 1].score >= set.entries[i].score);
  }
}
