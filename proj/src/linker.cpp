#include "elq/linker.hpp"

#include <algorithm>
#include <cmath>

#include "elq/error.hpp"

namespace elq {

MentionRep mention_rep(const QuestionEmbeddings& emb, const SpanCandidate& span) {
  int n = static_cast<int>(emb.matrix.rows);
  if (span.start < 0 || span.end < span.start || span.end >= n)
    fail(ErrorCategory::config, "invalid span for mention representation");

  size_t h = emb.matrix.cols;
  Vec y(h, 0.0);
  for (int t = span.start; t <= span.end; ++t) {
    const double* row = emb.matrix.row(static_cast<size_t>(t));
    for (size_t k = 0; k < h; ++k) y[k] += row[k];
  }
  double inv = 1.0 / static_cast<double>(span.length());
  for (double& v : y) v *= inv;
  return {span, std::move(y)};
}

Vec log_softmax(std::span<const double> scores) {
  double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  double lse = mx + std::log(sum);
  Vec out(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] - lse;
  return out;
}

CandidateSet score_entities(const MentionRep& rep, std::span<const int> candidates,
                            const EntityCatalog& catalog) {
  if (candidates.empty()) fail(ErrorCategory::config, "empty entity candidate set");

  CandidateSet set;
  set.span = rep.span;
  set.entries.reserve(candidates.size());
  Vec scores(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    int e = candidates[i];
    scores[i] = dot(catalog.embedding(static_cast<size_t>(e)), std::span<const double>(rep.y));
    set.entries.push_back({e, scores[i], 0.0});
  }
  Vec log_p = log_softmax(scores);
  for (size_t i = 0; i < candidates.size(); ++i) set.entries[i].log_p = log_p[i];

  std::sort(set.entries.begin(), set.entries.end(), [](const CandidateEntry& a, const CandidateEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  return set;
}

}  // namespace elq
