#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "elq/types.hpp"

namespace elq {

struct TokenizedQuestion {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;

  size_t size() const { return tokens.size(); }
};

// Lowercases, splits on whitespace, strips punctuation from token edges.
// Deterministic; empty input yields zero tokens.
TokenizedQuestion tokenize(std::string_view raw_text, std::string id = "");

struct QuestionEmbeddings {
  TokenizedQuestion question;
  Mat matrix;  // one row per token
};

// Deterministic stand-in for a neural question encoder. Each token has a
// fixed unit-norm base embedding derived from (seed, token string) alone;
// the only trainable parameters are an affine projection on top of it.
//
// Tokens of the form "stem~<millisigma>~<nonce>" resolve to the stem's base
// vector displaced by a pseudo-random perturbation of norm millisigma/1000,
// renormalized. Workload generation uses these aliases to plant noisy
// mention tokens while keeping base() a pure function of (seed, token).
class SyntheticEncoder {
 public:
  SyntheticEncoder(uint64_t seed, size_t base_dim, size_t dim);

  // Unit-norm base embedding, identical across processes and platforms.
  Vec base_embedding(std::string_view token) const;

  // n x base_dim matrix of base embeddings.
  Mat base_matrix(const TokenizedQuestion& q) const;

  // Applies the trainable projection: row_i = base_i^T P + b.
  QuestionEmbeddings encode(const TokenizedQuestion& q) const;
  Mat project(const Mat& base) const;

  // Unit-normalized average of the title tokens' base embeddings, carried
  // to output dim by the fixed pad/truncate map. Not affected by training.
  Vec entity_embedding(std::string_view title) const;

  uint64_t seed() const { return seed_; }
  size_t base_dim() const { return base_dim_; }
  size_t dim() const { return dim_; }

  Mat& projection() { return projection_; }
  const Mat& projection() const { return projection_; }
  Vec& bias() { return bias_; }
  const Vec& bias() const { return bias_; }

 private:
  uint64_t seed_;
  size_t base_dim_;
  size_t dim_;
  Mat projection_;  // base_dim x dim, initialized to the fixed map
  Vec bias_;        // dim
};

// Precomputed per-question embedding container: "ELQQ", u32 count, then per
// question a length-prefixed id, u32 rows, u32 dim, row-major f32 data.
void write_precomputed(const std::string& path, const std::vector<QuestionEmbeddings>& all);

// Pairs stored matrices with the given questions by id. Errors on ids not in
// `questions` and on row-count/token-count mismatches.
std::vector<QuestionEmbeddings> load_precomputed(const std::string& path,
                                                 const std::vector<TokenizedQuestion>& questions);

}  // namespace elq
