#pragma once

#include <functional>
#include <string>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/dataset.hpp"
#include "elq/encoder.hpp"
#include "elq/index.hpp"
#include "elq/linker.hpp"
#include "elq/spans.hpp"

namespace elq {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 1e-2;  // desk-scale default for the small projection
  double clip_norm = 1.0;
  double warmup_fraction = 0.1;  // linear warmup, then linear decay to zero
  int hard_negatives = 10;
  int max_span_len = 10;
  uint64_t seed = 0;
};

struct LossReport {
  double loss_md = 0.0;
  double loss_ed = 0.0;
  double total = 0.0;  // exact sum of the two
};

// Gradient (or Adam moment) buffer over every trainable parameter: the
// question-side projection and the three scoring heads. Entity embeddings
// are frozen and have no slot here.
struct ParamGrads {
  Mat proj;
  Vec bias;
  Vec w_start, w_end, w_mention;

  ParamGrads() = default;
  ParamGrads(size_t base_dim, size_t dim)
      : proj(base_dim, dim),
        bias(dim, 0.0),
        w_start(dim, 0.0),
        w_end(dim, 0.0),
        w_mention(dim, 0.0) {}

  void zero();
  void scale(double factor);
  double squared_norm() const;
};

// Binary cross-entropy over all candidate spans of length <= max_len,
// averaged over the candidate count and computed in logit space. Gold spans
// longer than max_len are ignored here (the caller warns). Gradients are
// accumulated into grad_heads and grad_emb (n x h).
double md_loss(const QuestionEmbeddings& emb, const HeadWeights& heads,
               const std::vector<SpanCandidate>& gold_spans, int max_len,
               HeadWeights* grad_heads, Mat* grad_emb);

// -log softmax over {gold} + negatives at the gold entity. Negatives equal
// to gold are dropped. grad_y receives the gradient w.r.t. the mention rep.
double ed_loss(const MentionRep& rep, int gold, const std::vector<int>& negatives,
               const EntityCatalog& catalog, Vec* grad_y);

// Top `count` entities by inner product with the mention rep, gold excluded.
std::vector<int> mine_hard_negatives(const MipsIndex& index, const MentionRep& rep, int gold,
                                     int count = 10);

struct ExampleLosses {
  double md = 0.0;
  double ed = 0.0;
};

// The differentiable core of one training step: MD loss plus the ED losses
// of every gold mention against its fixed negative set, with parameter
// gradients chained through the projection. `emb` must be the projection of
// `base`; `negatives` is parallel to `gold`.
ExampleLosses example_loss(const Mat& base, const QuestionEmbeddings& emb,
                           const std::vector<GoldMention>& gold,
                           const std::vector<std::vector<int>>& negatives,
                           const HeadWeights& heads, const EntityCatalog& catalog,
                           int max_span_len, ParamGrads* grads);

// Rescales grads to max_norm when exceeded; returns the post-clip norm.
double clip_gradients(ParamGrads& grads, double max_norm);

// Joint training of projection + heads with in-loop hard-negative mining.
// Entity embeddings are never updated; the index is built once by the caller
// and queried throughout. Deterministic given config.seed.
std::vector<LossReport> train(const std::vector<TrainingExample>& dataset,
                              SyntheticEncoder& encoder, HeadWeights& heads,
                              const EntityCatalog& catalog, const MipsIndex& index,
                              const TrainConfig& config);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> params, std::span<const double> analytic, double eps);

// Checkpoint: versioned binary of projection + heads + config + seed.
void save_checkpoint(const std::string& path, const SyntheticEncoder& encoder,
                     const HeadWeights& heads, const TrainConfig& config);

struct Checkpoint {
  uint64_t encoder_seed = 0;
  size_t base_dim = 0;
  size_t dim = 0;
  TrainConfig config;
  Mat projection;
  Vec bias;
  HeadWeights heads;

  SyntheticEncoder make_encoder() const;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace elq
