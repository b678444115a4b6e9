#pragma once

// Independent brute-force oracles used by tests and the acceptance suite.
// These deliberately avoid the production code paths they check: span sums
// are naive per-span loops, softmaxes are explicit, top-k is a full sort.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/decoder.hpp"
#include "elq/encoder.hpp"
#include "elq/index.hpp"
#include "elq/spans.hpp"
#include "elq/types.hpp"

namespace elqtest {

inline std::vector<elq::SpanCandidate> oracle_enumerate_spans(int n, int max_len) {
  std::vector<elq::SpanCandidate> spans;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (j - i + 1 <= max_len) spans.push_back({i, j});
  return spans;
}

inline std::vector<elq::SearchHit> oracle_search(const elq::EntityCatalog& catalog,
                                                 const elq::Vec& query, int k) {
  std::vector<elq::SearchHit> hits;
  for (size_t e = 0; e < catalog.size(); ++e) {
    double s = 0.0;
    auto row = catalog.embedding(e);
    for (size_t i = 0; i < row.size(); ++i) s += static_cast<double>(row[i]) * query[i];
    hits.push_back({static_cast<int>(e), s});
  }
  std::sort(hits.begin(), hits.end(), [](const elq::SearchHit& a, const elq::SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  if (hits.size() > static_cast<size_t>(k)) hits.resize(static_cast<size_t>(k));
  return hits;
}

struct OracleOutcome {
  std::vector<elq::LinkedPrediction> survivors;
  std::vector<elq::LinkedPrediction> predictions;
  bool mention_fallback = false;
  bool forced_top1 = false;
};

inline OracleOutcome oracle_decode(const elq::QuestionEmbeddings& emb,
                                   const elq::HeadWeights& heads,
                                   const elq::EntityCatalog& catalog,
                                   const elq::DecoderConfig& config) {
  int n = static_cast<int>(emb.matrix.rows);
  size_t h = emb.matrix.cols;

  struct Scored {
    elq::SpanCandidate span;
    double log_p;
  };
  std::vector<Scored> all;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (j - i + 1 > config.max_span_len) continue;
      double logit = 0.0;
      for (size_t k = 0; k < h; ++k) logit += heads.w_start[k] * emb.matrix.at(i, k);
      for (size_t k = 0; k < h; ++k) logit += heads.w_end[k] * emb.matrix.at(j, k);
      for (int t = i; t <= j; ++t)
        for (size_t k = 0; k < h; ++k) logit += heads.w_mention[k] * emb.matrix.at(t, k);
      double log_p = logit >= 0.0 ? -std::log1p(std::exp(-logit))
                                  : logit - std::log1p(std::exp(logit));
      all.push_back({{i, j}, log_p});
    }
  }

  std::vector<Scored> selected;
  for (const Scored& s : all)
    if (s.log_p >= config.gamma) selected.push_back(s);
  OracleOutcome outcome;
  if (selected.empty()) {
    outcome.mention_fallback = true;
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
      if (a.log_p != b.log_p) return a.log_p > b.log_p;
      if (a.span.start != b.span.start) return a.span.start < b.span.start;
      return a.span.end < b.span.end;
    });
    for (const Scored& s : all) {
      selected.push_back(s);
      if (selected.size() == static_cast<size_t>(config.fallback_mentions)) break;
    }
  }

  std::vector<elq::LinkedPrediction> pairs;
  for (const Scored& mention : selected) {
    elq::Vec rep(h, 0.0);
    for (int t = mention.span.start; t <= mention.span.end; ++t)
      for (size_t k = 0; k < h; ++k) rep[k] += emb.matrix.at(t, k);
    for (double& v : rep) v /= mention.span.length();

    struct EntityScore {
      int entity;
      double score;
    };
    std::vector<EntityScore> scores;
    for (size_t e = 0; e < catalog.size(); ++e) {
      double s = 0.0;
      auto row = catalog.embedding(e);
      for (size_t k = 0; k < h; ++k) s += static_cast<double>(row[k]) * rep[k];
      scores.push_back({static_cast<int>(e), s});
    }
    std::sort(scores.begin(), scores.end(), [](const EntityScore& a, const EntityScore& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.entity < b.entity;
    });
    if (scores.size() > static_cast<size_t>(config.top_k_entities))
      scores.resize(static_cast<size_t>(config.top_k_entities));

    double mx = scores.front().score;
    for (const EntityScore& s : scores) mx = std::max(mx, s.score);
    double z = 0.0;
    for (const EntityScore& s : scores) z += std::exp(s.score - mx);
    for (const EntityScore& s : scores) {
      double log_p_entity = s.score - mx - std::log(z);
      elq::LinkedPrediction pred;
      pred.entity = s.entity;
      pred.entity_id = catalog.record(static_cast<size_t>(s.entity)).id;
      pred.span = mention.span;
      pred.log_mention = mention.log_p;
      pred.log_entity = log_p_entity;
      pred.joint = mention.log_p + log_p_entity;
      pairs.push_back(std::move(pred));
    }
  }

  for (const elq::LinkedPrediction& p : pairs)
    if (p.joint >= config.gamma) outcome.survivors.push_back(p);

  auto by_joint = [](const elq::LinkedPrediction& a, const elq::LinkedPrediction& b) {
    if (a.joint != b.joint) return a.joint > b.joint;
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    if (a.span.end != b.span.end) return a.span.end < b.span.end;
    return a.entity_id < b.entity_id;
  };

  std::vector<elq::LinkedPrediction> pool = outcome.survivors;
  if (pool.empty() && outcome.mention_fallback && !pairs.empty()) {
    outcome.forced_top1 = true;
    pool = {*std::min_element(pairs.begin(), pairs.end(), by_joint)};
  }

  std::sort(pool.begin(), pool.end(), by_joint);
  for (const elq::LinkedPrediction& p : pool) {
    bool conflict = false;
    for (const elq::LinkedPrediction& kept : outcome.predictions)
      if (p.span.start <= kept.span.end && kept.span.start <= p.span.end) conflict = true;
    if (!conflict) outcome.predictions.push_back(p);
  }
  std::sort(outcome.predictions.begin(), outcome.predictions.end(),
            [](const elq::LinkedPrediction& a, const elq::LinkedPrediction& b) {
              if (a.span.start != b.span.start) return a.span.start < b.span.start;
              if (a.span.end != b.span.end) return a.span.end < b.span.end;
              return a.entity_id < b.entity_id;
            });
  return outcome;
}

}  // namespace elqtest
