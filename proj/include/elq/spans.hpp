#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "elq/encoder.hpp"
#include "elq/types.hpp"

namespace elq {

// Token-inclusive span [start, end], 0-based.
struct SpanCandidate {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool overlaps(const SpanCandidate& other) const {
    return start <= other.end && other.start <= end;
  }
  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
  friend auto operator<=>(const SpanCandidate&, const SpanCandidate&) = default;
};

struct HeadWeights {
  Vec w_start;
  Vec w_end;
  Vec w_mention;

  static HeadWeights zeros(size_t dim) { return {Vec(dim, 0.0), Vec(dim, 0.0), Vec(dim, 0.0)}; }
};

struct ScoredMention {
  SpanCandidate span;
  double logit = 0.0;          // s_start(i) + s_end(j) + sum of s_mention over the span
  double log_p_mention = 0.0;  // log sigmoid(logit), always <= 0
};

// log sigmoid(x) without overflow for large |x|.
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Number of spans of length <= max_len in a sequence of n tokens:
// L(L+1)/2 + (n-L)L when n >= L, else n(n+1)/2.
size_t span_count(int n, int max_len);

// All candidate spans ordered by (start, end) ascending.
std::vector<SpanCandidate> enumerate_spans(int n, int max_len);

// Scores every candidate span. Per-token start/end/mention dot products are
// computed once; span mention sums come from a prefix sum.
std::vector<ScoredMention> mention_scores(const QuestionEmbeddings& emb,
                                          const HeadWeights& heads,
                                          std::span<const SpanCandidate> spans);

// Per-token scores backing mention_scores; exposed for the training loop.
struct TokenScores {
  Vec start;        // w_start . q_i
  Vec end;          // w_end . q_j
  Vec mention;      // w_mention . q_t
  Vec mention_csum; // mention_csum[t] = sum of mention[0..t-1]
};

TokenScores token_scores(const QuestionEmbeddings& emb, const HeadWeights& heads);

inline double span_logit(const TokenScores& s, const SpanCandidate& span) {
  return s.start[span.start] + s.end[span.end] +
         (s.mention_csum[span.end + 1] - s.mention_csum[span.start]);
}

}  // namespace elq
