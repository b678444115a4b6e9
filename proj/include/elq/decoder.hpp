#pragma once

#include <string>
#include <utility>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/encoder.hpp"
#include "elq/index.hpp"
#include "elq/linker.hpp"
#include "elq/spans.hpp"

namespace elq {

struct DecoderConfig {
  double gamma = -2.9;       // natural-log threshold for both stages
  int top_k_entities = 10;   // retrieved candidates per mention
  int fallback_mentions = 50;
  int max_span_len = 10;
};

struct LinkedPrediction {
  int entity = -1;
  std::string entity_id;
  SpanCandidate span;
  double log_mention = 0.0;
  double log_entity = 0.0;
  double joint = 0.0;  // log_mention + log_entity
};

struct LinkOutcome {
  // Overlap-free final predictions, sorted by span start.
  std::vector<LinkedPrediction> predictions;
  // (mention, entity) pairs that cleared the joint threshold, before overlap
  // removal. Empty when the fallback emitted a forced top-1 pair.
  std::vector<LinkedPrediction> survivors;
  bool mention_fallback = false;  // no span cleared gamma; top mentions used
  bool forced_top1 = false;       // no pair cleared gamma either; argmax emitted
};

// Spans with log_p_mention >= gamma; if none qualify, the top `fallback`
// spans with the flag set. Ordered by (log_p desc, start asc, shorter first).
std::pair<std::vector<ScoredMention>, bool> select_mentions(std::vector<ScoredMention> scored,
                                                            double gamma, int fallback);

// Greedy by joint score descending (ties: start asc, shorter first, entity id
// asc); a prediction is kept iff its span shares no token with any kept span.
// Result sorted by span start.
std::vector<LinkedPrediction> remove_overlaps(std::vector<LinkedPrediction> predictions);

// One-pass inference for a single question: score spans, threshold, retrieve
// and softmax entity candidates, threshold the joint, resolve overlaps.
LinkOutcome link(const QuestionEmbeddings& emb, const HeadWeights& heads, const MipsIndex& index,
                 const EntityCatalog& catalog, const DecoderConfig& config);

// Retrieval + softmax with gold mention boundaries injected: one argmax
// entity per gold span, no thresholds, no mention scores.
std::vector<LinkedPrediction> link_gold_spans(const QuestionEmbeddings& emb,
                                              const std::vector<SpanCandidate>& gold_spans,
                                              const MipsIndex& index, const EntityCatalog& catalog,
                                              const DecoderConfig& config);

// Predictions JSONL: {"id", "predictions": [{"entity_id", "start", "end",
// "log_mention", "log_entity", "joint"}]}, one line per question.
struct QuestionPredictions {
  std::string id;
  std::vector<LinkedPrediction> predictions;
};

void write_predictions(const std::string& path, const std::vector<QuestionPredictions>& all);
std::vector<QuestionPredictions> read_predictions(const std::string& path);

}  // namespace elq
