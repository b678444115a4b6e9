#include "elq/spans.hpp"

#include <algorithm>

#include "elq/error.hpp"

namespace elq {

size_t span_count(int n, int max_len) {
  if (n < 1 || max_len < 1) return 0;
  auto nn = static_cast<size_t>(n);
  auto ll = static_cast<size_t>(max_len);
  if (nn >= ll) return ll * (ll + 1) / 2 + (nn - ll) * ll;
  return nn * (nn + 1) / 2;
}

std::vector<SpanCandidate> enumerate_spans(int n, int max_len) {
  std::vector<SpanCandidate> spans;
  spans.reserve(span_count(n, max_len));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n && j - i + 1 <= max_len; ++j) spans.push_back({i, j});
  return spans;
}

TokenScores token_scores(const QuestionEmbeddings& emb, const HeadWeights& heads) {
  size_t n = emb.matrix.rows;
  size_t h = emb.matrix.cols;
  if (heads.w_start.size() != h || heads.w_end.size() != h || heads.w_mention.size() != h)
    fail(ErrorCategory::config, "head weight dimension does not match embeddings");

  TokenScores s;
  s.start.resize(n);
  s.end.resize(n);
  s.mention.resize(n);
  s.mention_csum.assign(n + 1, 0.0);
  for (size_t t = 0; t < n; ++t) {
    auto q = emb.matrix.row_span(t);
    s.start[t] = dot(std::span<const double>(heads.w_start), q);
    s.end[t] = dot(std::span<const double>(heads.w_end), q);
    s.mention[t] = dot(std::span<const double>(heads.w_mention), q);
    s.mention_csum[t + 1] = s.mention_csum[t] + s.mention[t];
  }
  return s;
}

std::vector<ScoredMention> mention_scores(const QuestionEmbeddings& emb,
                                          const HeadWeights& heads,
                                          std::span<const SpanCandidate> spans) {
  TokenScores s = token_scores(emb, heads);
  int n = static_cast<int>(emb.matrix.rows);

  std::vector<ScoredMention> out;
  out.reserve(spans.size());
  for (const SpanCandidate& span : spans) {
    if (span.start < 0 || span.end < span.start || span.end >= n)
      fail(ErrorCategory::config, "span out of range for question of length " + std::to_string(n));
    double logit = span_logit(s, span);
    out.push_back({span, logit, log_sigmoid(logit)});
  }
  return out;
}

}  // namespace elq
