#include "elq/encoder.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

#include "elq/error.hpp"
#include "elq/io.hpp"
#include "elq/rng.hpp"

namespace elq {

TokenizedQuestion tokenize(std::string_view raw_text, std::string id) {
  TokenizedQuestion q;
  q.id = std::move(id);
  q.raw_text = std::string(raw_text);

  std::string lowered;
  lowered.reserve(raw_text.size());
  for (unsigned char c : raw_text) lowered.push_back(static_cast<char>(std::tolower(c)));

  size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    size_t start = i;
    while (i < lowered.size() && !std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    if (i == start) continue;
    size_t lo = start, hi = i;
    while (lo < hi && std::ispunct(static_cast<unsigned char>(lowered[lo]))) ++lo;
    while (hi > lo && std::ispunct(static_cast<unsigned char>(lowered[hi - 1]))) --hi;
    if (hi > lo) q.tokens.emplace_back(lowered.substr(lo, hi - lo));
  }
  return q;
}

namespace {

// Pseudo-random direction of exactly the requested norm. Uniform cube draw
// followed by rescaling; avoids transcendentals so results are bit-identical
// across libm implementations.
Vec seeded_direction(uint64_t seed, size_t dim, double target_norm) {
  SplitMix64 rng(seed);
  Vec v(dim);
  for (;;) {
    for (size_t i = 0; i < dim; ++i) v[i] = rng.next_signed_unit();
    double n = norm(v);
    if (n > 1e-12) {
      double scale = target_norm / n;
      for (double& x : v) x *= scale;
      return v;
    }
  }
}

struct NoiseAlias {
  std::string_view stem;
  double sigma = 0.0;
  bool present = false;
};

// "stem~<millisigma>~<nonce>"; anything that does not parse exactly is a
// plain token.
NoiseAlias parse_noise_alias(std::string_view token) {
  NoiseAlias alias;
  size_t first = token.find('~');
  if (first == std::string_view::npos || first == 0) return alias;
  size_t second = token.find('~', first + 1);
  if (second == std::string_view::npos || second + 1 >= token.size()) return alias;
  std::string_view milli = token.substr(first + 1, second - first - 1);
  if (milli.empty()) return alias;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(milli.data(), milli.data() + milli.size(), value);
  if (ec != std::errc{} || ptr != milli.data() + milli.size()) return alias;
  alias.stem = token.substr(0, first);
  alias.sigma = static_cast<double>(value) / 1000.0;
  alias.present = true;
  return alias;
}

void normalize_in_place(Vec& v) {
  double n = norm(v);
  if (n <= 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return;
  }
  for (double& x : v) x /= n;
}

}  // namespace

SyntheticEncoder::SyntheticEncoder(uint64_t seed, size_t base_dim, size_t dim)
    : seed_(seed), base_dim_(base_dim), dim_(dim), projection_(base_dim, dim), bias_(dim, 0.0) {
  if (base_dim == 0 || dim == 0) fail(ErrorCategory::config, "encoder dims must be positive");
  for (size_t i = 0; i < std::min(base_dim, dim); ++i) projection_.at(i, i) = 1.0;
}

Vec SyntheticEncoder::base_embedding(std::string_view token) const {
  NoiseAlias alias = parse_noise_alias(token);
  std::string_view stem = alias.present ? alias.stem : token;
  Vec v = seeded_direction(hash_combine(seed_, stem), base_dim_, 1.0);
  if (alias.present && alias.sigma > 0.0) {
    Vec noise = seeded_direction(hash_combine(seed_ ^ 0x6e6f697365ULL, token), base_dim_, alias.sigma);
    for (size_t i = 0; i < base_dim_; ++i) v[i] += noise[i];
    normalize_in_place(v);
  }
  return v;
}

Mat SyntheticEncoder::base_matrix(const TokenizedQuestion& q) const {
  Mat base(q.size(), base_dim_);
  for (size_t t = 0; t < q.size(); ++t) {
    Vec v = base_embedding(q.tokens[t]);
    std::copy(v.begin(), v.end(), base.row(t));
  }
  return base;
}

Mat SyntheticEncoder::project(const Mat& base) const {
  Mat out(base.rows, dim_);
  for (size_t t = 0; t < base.rows; ++t) {
    const double* in = base.row(t);
    double* row = out.row(t);
    for (size_t j = 0; j < dim_; ++j) row[j] = bias_[j];
    for (size_t k = 0; k < base_dim_; ++k) {
      double b = in[k];
      if (b == 0.0) continue;
      const double* proj = projection_.row(k);
      for (size_t j = 0; j < dim_; ++j) row[j] += b * proj[j];
    }
  }
  return out;
}

QuestionEmbeddings SyntheticEncoder::encode(const TokenizedQuestion& q) const {
  if (q.size() == 0) fail(ErrorCategory::format, "cannot encode an empty question: " + q.id);
  return QuestionEmbeddings{q, project(base_matrix(q))};
}

Vec SyntheticEncoder::entity_embedding(std::string_view title) const {
  TokenizedQuestion toks = tokenize(title);
  if (toks.size() == 0) fail(ErrorCategory::format, "entity title has no tokens");
  Vec mean(base_dim_, 0.0);
  for (const auto& tok : toks.tokens) {
    Vec v = base_embedding(tok);
    for (size_t i = 0; i < base_dim_; ++i) mean[i] += v[i];
  }
  for (double& x : mean) x /= static_cast<double>(toks.size());
  normalize_in_place(mean);

  // Fixed map to output dim: truncate (renormalizing) or zero-pad.
  Vec out(dim_, 0.0);
  size_t copy = std::min(base_dim_, dim_);
  std::copy(mean.begin(), mean.begin() + static_cast<std::ptrdiff_t>(copy), out.begin());
  if (dim_ < base_dim_) normalize_in_place(out);
  return out;
}

static const char kPrecomputedMagic[4] = {'E', 'L', 'Q', 'Q'};

void write_precomputed(const std::string& path, const std::vector<QuestionEmbeddings>& all) {
  auto out = open_output(path);
  bin::write_magic(out, kPrecomputedMagic);
  bin::write_u32(out, static_cast<uint32_t>(all.size()));
  for (const auto& qe : all) {
    bin::write_string(out, qe.question.id);
    bin::write_u32(out, static_cast<uint32_t>(qe.matrix.rows));
    bin::write_u32(out, static_cast<uint32_t>(qe.matrix.cols));
    for (double v : qe.matrix.data) bin::write_f32(out, static_cast<float>(v));
  }
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

std::vector<QuestionEmbeddings> load_precomputed(const std::string& path,
                                                 const std::vector<TokenizedQuestion>& questions) {
  std::unordered_map<std::string, const TokenizedQuestion*> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;

  auto in = open_input(path);
  bin::expect_magic(in, kPrecomputedMagic, "precomputed embeddings");
  uint32_t count = bin::read_u32(in);
  std::vector<QuestionEmbeddings> result;
  result.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    std::string id = bin::read_string(in);
    uint32_t rows = bin::read_u32(in);
    uint32_t cols = bin::read_u32(in);
    auto it = by_id.find(id);
    if (it == by_id.end())
      fail(ErrorCategory::format, "precomputed embeddings reference unknown question id: " + id);
    if (rows != it->second->size())
      fail(ErrorCategory::format, "row count " + std::to_string(rows) + " does not match token count " +
                                      std::to_string(it->second->size()) + " for question " + id);
    QuestionEmbeddings qe;
    qe.question = *it->second;
    qe.matrix = Mat(rows, cols);
    for (size_t k = 0; k < qe.matrix.data.size(); ++k)
      qe.matrix.data[k] = static_cast<double>(bin::read_f32(in));
    if (!all_finite(std::span<const double>(qe.matrix.data)))
      fail(ErrorCategory::format, "non-finite embedding value for question " + id);
    result.push_back(std::move(qe));
  }
  return result;
}

}  // namespace elq
