#include "elq/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>

#include "elq/error.hpp"
#include "elq/io.hpp"
#include "elq/rng.hpp"

namespace elq {

namespace {

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

std::array<std::span<double>, 5> param_blocks(Mat& proj, Vec& bias, HeadWeights& heads) {
  return {std::span<double>(proj.data), std::span<double>(bias), std::span<double>(heads.w_start),
          std::span<double>(heads.w_end), std::span<double>(heads.w_mention)};
}

std::array<std::span<double>, 5> param_blocks(ParamGrads& g) {
  return {std::span<double>(g.proj.data), std::span<double>(g.bias), std::span<double>(g.w_start),
          std::span<double>(g.w_end), std::span<double>(g.w_mention)};
}

}  // namespace

void ParamGrads::zero() {
  for (auto block : param_blocks(*this)) std::fill(block.begin(), block.end(), 0.0);
}

void ParamGrads::scale(double factor) {
  for (auto block : param_blocks(*this))
    for (double& v : block) v *= factor;
}

double ParamGrads::squared_norm() const {
  double s = 0.0;
  for (auto block : param_blocks(const_cast<ParamGrads&>(*this)))
    for (double v : block) s += v * v;
  return s;
}

double md_loss(const QuestionEmbeddings& emb, const HeadWeights& heads,
               const std::vector<SpanCandidate>& gold_spans, int max_len,
               HeadWeights* grad_heads, Mat* grad_emb) {
  int n = static_cast<int>(emb.matrix.rows);
  size_t h = emb.matrix.cols;
  std::vector<SpanCandidate> spans = enumerate_spans(n, max_len);
  double count = static_cast<double>(spans.size());

  TokenScores ts = token_scores(emb, heads);

  // Per-token gradient coefficients of the summed BCE.
  Vec acc_start(static_cast<size_t>(n), 0.0);
  Vec acc_end(static_cast<size_t>(n), 0.0);
  Vec acc_mention(static_cast<size_t>(n), 0.0);

  double loss = 0.0;
  for (const SpanCandidate& span : spans) {
    bool gold = std::find(gold_spans.begin(), gold_spans.end(), span) != gold_spans.end();
    double logit = span_logit(ts, span);
    double y = gold ? 1.0 : 0.0;
    loss += softplus(logit) - y * logit;
    double coeff = (sigmoid(logit) - y) / count;
    acc_start[static_cast<size_t>(span.start)] += coeff;
    acc_end[static_cast<size_t>(span.end)] += coeff;
    for (int t = span.start; t <= span.end; ++t) acc_mention[static_cast<size_t>(t)] += coeff;
  }
  loss /= count;

  if (grad_heads || grad_emb) {
    for (int t = 0; t < n; ++t) {
      const double* q = emb.matrix.row(static_cast<size_t>(t));
      double cs = acc_start[static_cast<size_t>(t)];
      double ce = acc_end[static_cast<size_t>(t)];
      double cm = acc_mention[static_cast<size_t>(t)];
      if (grad_heads) {
        for (size_t k = 0; k < h; ++k) {
          grad_heads->w_start[k] += cs * q[k];
          grad_heads->w_end[k] += ce * q[k];
          grad_heads->w_mention[k] += cm * q[k];
        }
      }
      if (grad_emb) {
        double* g = grad_emb->row(static_cast<size_t>(t));
        for (size_t k = 0; k < h; ++k)
          g[k] += cs * heads.w_start[k] + ce * heads.w_end[k] + cm * heads.w_mention[k];
      }
    }
  }
  return loss;
}

double ed_loss(const MentionRep& rep, int gold, const std::vector<int>& negatives,
               const EntityCatalog& catalog, Vec* grad_y) {
  std::vector<int> candidates;
  candidates.reserve(negatives.size() + 1);
  candidates.push_back(gold);
  for (int e : negatives)
    if (e != gold) candidates.push_back(e);

  Vec scores(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i)
    scores[i] = dot(catalog.embedding(static_cast<size_t>(candidates[i])),
                    std::span<const double>(rep.y));
  Vec log_p = log_softmax(scores);
  double loss = -log_p[0];

  if (grad_y) {
    size_t h = rep.y.size();
    if (grad_y->size() != h) grad_y->assign(h, 0.0);
    for (size_t i = 0; i < candidates.size(); ++i) {
      double w = std::exp(log_p[i]) - (i == 0 ? 1.0 : 0.0);
      auto x = catalog.embedding(static_cast<size_t>(candidates[i]));
      for (size_t k = 0; k < h; ++k) (*grad_y)[k] += w * static_cast<double>(x[k]);
    }
  }
  return loss;
}

std::vector<int> mine_hard_negatives(const MipsIndex& index, const MentionRep& rep, int gold,
                                     int count) {
  if (count <= 0) return {};
  auto hits = index.search(rep.y, count + 1);
  std::vector<int> negatives;
  negatives.reserve(static_cast<size_t>(count));
  for (const SearchHit& h : hits) {
    if (h.entity == gold) continue;
    negatives.push_back(h.entity);
    if (negatives.size() == static_cast<size_t>(count)) break;
  }
  return negatives;
}

ExampleLosses example_loss(const Mat& base, const QuestionEmbeddings& emb,
                           const std::vector<GoldMention>& gold,
                           const std::vector<std::vector<int>>& negatives,
                           const HeadWeights& heads, const EntityCatalog& catalog,
                           int max_span_len, ParamGrads* grads) {
  if (negatives.size() != gold.size())
    fail(ErrorCategory::config, "example_loss: negatives must be parallel to gold mentions");
  size_t h = emb.matrix.cols;
  size_t base_dim = base.cols;

  Mat grad_emb(emb.matrix.rows, h);
  HeadWeights head_grads = HeadWeights::zeros(h);

  ExampleLosses losses;
  std::vector<SpanCandidate> gold_spans;
  gold_spans.reserve(gold.size());
  for (const GoldMention& g : gold) gold_spans.push_back(g.span);
  losses.md = md_loss(emb, heads, gold_spans, max_span_len, grads ? &head_grads : nullptr,
                      grads ? &grad_emb : nullptr);

  for (size_t gi = 0; gi < gold.size(); ++gi) {
    MentionRep rep = mention_rep(emb, gold[gi].span);
    Vec grad_y(h, 0.0);
    losses.ed += ed_loss(rep, gold[gi].entity, negatives[gi], catalog, grads ? &grad_y : nullptr);
    if (grads) {
      double inv_len = 1.0 / static_cast<double>(gold[gi].span.length());
      for (int t = gold[gi].span.start; t <= gold[gi].span.end; ++t) {
        double* g = grad_emb.row(static_cast<size_t>(t));
        for (size_t k = 0; k < h; ++k) g[k] += inv_len * grad_y[k];
      }
    }
  }

  if (grads) {
    // Chain question-embedding gradients through the affine projection.
    for (size_t t = 0; t < emb.matrix.rows; ++t) {
      const double* base_row = base.row(t);
      const double* g = grad_emb.row(t);
      for (size_t k = 0; k < base_dim; ++k) {
        double b = base_row[k];
        if (b == 0.0) continue;
        double* gp = grads->proj.row(k);
        for (size_t j = 0; j < h; ++j) gp[j] += b * g[j];
      }
      for (size_t j = 0; j < h; ++j) grads->bias[j] += g[j];
    }
    for (size_t k = 0; k < h; ++k) {
      grads->w_start[k] += head_grads.w_start[k];
      grads->w_end[k] += head_grads.w_end[k];
      grads->w_mention[k] += head_grads.w_mention[k];
    }
  }
  return losses;
}

double clip_gradients(ParamGrads& grads, double max_norm) {
  double gnorm = std::sqrt(grads.squared_norm());
  if (gnorm > max_norm) {
    grads.scale(max_norm / gnorm);
    return max_norm;
  }
  return gnorm;
}

std::vector<LossReport> train(const std::vector<TrainingExample>& dataset,
                              SyntheticEncoder& encoder, HeadWeights& heads,
                              const EntityCatalog& catalog, const MipsIndex& index,
                              const TrainConfig& config) {
  if (dataset.empty()) fail(ErrorCategory::config, "training dataset is empty");
  if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate < 0.0)
    fail(ErrorCategory::config, "training config values must be positive");
  size_t h = encoder.dim();
  if (heads.w_start.size() != h) heads = HeadWeights::zeros(h);

  // Gold mentions longer than the span limit cannot appear as candidates.
  std::vector<std::vector<GoldMention>> usable(dataset.size());
  size_t usable_total = 0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    for (const GoldMention& gold : dataset[i].gold) {
      if (gold.span.length() > config.max_span_len) {
        std::cerr << "warning: question " << dataset[i].question.id << " gold span ["
                  << gold.span.start << "," << gold.span.end << "] exceeds max span length "
                  << config.max_span_len << "; skipped\n";
        continue;
      }
      usable[i].push_back(gold);
      ++usable_total;
    }
  }
  if (usable_total == 0)
    fail(ErrorCategory::config, "no trainable gold mentions within max span length");

  // Base embeddings never change during training.
  std::vector<Mat> bases(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) bases[i] = encoder.base_matrix(dataset[i].question);

  size_t base_dim = encoder.base_dim();
  ParamGrads grads(base_dim, h), adam_m(base_dim, h), adam_v(base_dim, h);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  size_t batches_per_epoch = (dataset.size() + config.batch_size - 1) / config.batch_size;
  size_t total_steps = static_cast<size_t>(config.epochs) * batches_per_epoch;
  size_t warmup_steps = std::max<size_t>(1, static_cast<size_t>(config.warmup_fraction *
                                                                static_cast<double>(total_steps)));

  SplitMix64 shuffle_rng(config.seed ^ 0x5368756666ULL);
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<LossReport> reports;
  reports.reserve(static_cast<size_t>(config.epochs));
  size_t step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    double epoch_md = 0.0, epoch_ed = 0.0;
    for (size_t batch_start = 0; batch_start < order.size(); batch_start += config.batch_size) {
      size_t batch_end = std::min(order.size(), batch_start + config.batch_size);
      double batch_count = static_cast<double>(batch_end - batch_start);
      grads.zero();

      for (size_t bi = batch_start; bi < batch_end; ++bi) {
        size_t ei = order[bi];
        QuestionEmbeddings emb{dataset[ei].question, encoder.project(bases[ei])};

        // Hard negatives are re-mined from the current mention reps.
        std::vector<std::vector<int>> negatives;
        negatives.reserve(usable[ei].size());
        for (const GoldMention& gold : usable[ei]) {
          MentionRep rep = mention_rep(emb, gold.span);
          negatives.push_back(mine_hard_negatives(index, rep, gold.entity, config.hard_negatives));
        }

        ExampleLosses losses = example_loss(bases[ei], emb, usable[ei], negatives, heads, catalog,
                                            config.max_span_len, &grads);
        epoch_md += losses.md;
        epoch_ed += losses.ed;
      }

      grads.scale(1.0 / batch_count);
      clip_gradients(grads, config.clip_norm);

      ++step;
      double lr = config.learning_rate;
      if (step <= warmup_steps) {
        lr *= static_cast<double>(step) / static_cast<double>(warmup_steps);
      } else if (total_steps > warmup_steps) {
        lr *= static_cast<double>(total_steps - step) /
              static_cast<double>(total_steps - warmup_steps);
      }

      auto theta = param_blocks(encoder.projection(), encoder.bias(), heads);
      auto g = param_blocks(grads);
      auto m = param_blocks(adam_m);
      auto v = param_blocks(adam_v);
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (size_t blk = 0; blk < theta.size(); ++blk) {
        for (size_t k = 0; k < theta[blk].size(); ++k) {
          double gk = g[blk][k];
          m[blk][k] = beta1 * m[blk][k] + (1.0 - beta1) * gk;
          v[blk][k] = beta2 * v[blk][k] + (1.0 - beta2) * gk * gk;
          double mhat = m[blk][k] / bc1;
          double vhat = v[blk][k] / bc2;
          theta[blk][k] -= lr * mhat / (std::sqrt(vhat) + adam_eps);
        }
      }
    }

    double inv = 1.0 / static_cast<double>(dataset.size());
    LossReport report;
    report.loss_md = epoch_md * inv;
    report.loss_ed = epoch_ed * inv;
    report.total = report.loss_md + report.loss_ed;
    reports.push_back(report);
  }
  return reports;
}

double grad_check(const std::function<double(std::span<const double>)>& loss,
                  std::span<const double> params, std::span<const double> analytic, double eps) {
  if (params.size() != analytic.size())
    fail(ErrorCategory::config, "grad_check: parameter/gradient size mismatch");
  Vec probe(params.begin(), params.end());
  double worst = 0.0;
  for (size_t i = 0; i < probe.size(); ++i) {
    double original = probe[i];
    probe[i] = original + eps;
    double up = loss(probe);
    probe[i] = original - eps;
    double down = loss(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorCategory::internal, "grad_check: loss is not finite at perturbed parameters");
    double fd = (up - down) / (2.0 * eps);
    double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

static const char kCheckpointMagic[4] = {'E', 'L', 'Q', 'C'};
static constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const SyntheticEncoder& encoder,
                     const HeadWeights& heads, const TrainConfig& config) {
  auto out = open_output(path);
  bin::write_magic(out, kCheckpointMagic);
  bin::write_u32(out, kCheckpointVersion);
  bin::write_u64(out, encoder.seed());
  bin::write_u32(out, static_cast<uint32_t>(encoder.base_dim()));
  bin::write_u32(out, static_cast<uint32_t>(encoder.dim()));
  bin::write_u32(out, static_cast<uint32_t>(config.epochs));
  bin::write_u32(out, static_cast<uint32_t>(config.batch_size));
  bin::write_f64(out, config.learning_rate);
  bin::write_f64(out, config.clip_norm);
  bin::write_f64(out, config.warmup_fraction);
  bin::write_u32(out, static_cast<uint32_t>(config.hard_negatives));
  bin::write_u32(out, static_cast<uint32_t>(config.max_span_len));
  bin::write_u64(out, config.seed);
  for (double v : encoder.projection().data) bin::write_f64(out, v);
  for (double v : encoder.bias()) bin::write_f64(out, v);
  for (const Vec* w : {&heads.w_start, &heads.w_end, &heads.w_mention})
    for (double v : *w) bin::write_f64(out, v);
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto in = open_input(path);
  bin::expect_magic(in, kCheckpointMagic, "checkpoint");
  uint32_t version = bin::read_u32(in);
  if (version != kCheckpointVersion)
    fail(ErrorCategory::version,
         "checkpoint version " + std::to_string(version) + " is not supported");
  Checkpoint ckpt;
  ckpt.encoder_seed = bin::read_u64(in);
  ckpt.base_dim = bin::read_u32(in);
  ckpt.dim = bin::read_u32(in);
  ckpt.config.epochs = static_cast<int>(bin::read_u32(in));
  ckpt.config.batch_size = static_cast<int>(bin::read_u32(in));
  ckpt.config.learning_rate = bin::read_f64(in);
  ckpt.config.clip_norm = bin::read_f64(in);
  ckpt.config.warmup_fraction = bin::read_f64(in);
  ckpt.config.hard_negatives = static_cast<int>(bin::read_u32(in));
  ckpt.config.max_span_len = static_cast<int>(bin::read_u32(in));
  ckpt.config.seed = bin::read_u64(in);
  ckpt.projection = Mat(ckpt.base_dim, ckpt.dim);
  for (double& v : ckpt.projection.data) v = bin::read_f64(in);
  ckpt.bias.resize(ckpt.dim);
  for (double& v : ckpt.bias) v = bin::read_f64(in);
  ckpt.heads = HeadWeights::zeros(ckpt.dim);
  for (Vec* w : {&ckpt.heads.w_start, &ckpt.heads.w_end, &ckpt.heads.w_mention})
    for (double& v : *w) v = bin::read_f64(in);
  return ckpt;
}

SyntheticEncoder Checkpoint::make_encoder() const {
  SyntheticEncoder encoder(encoder_seed, base_dim, dim);
  encoder.projection() = projection;
  encoder.bias() = bias;
  return encoder;
}

}  // namespace elq
