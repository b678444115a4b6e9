#include "elq/decoder.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "elq/error.hpp"
#include "elq/io.hpp"

namespace elq {

using nlohmann::json;

namespace {

bool mention_order(const ScoredMention& a, const ScoredMention& b) {
  if (a.log_p_mention != b.log_p_mention) return a.log_p_mention > b.log_p_mention;
  if (a.span.start != b.span.start) return a.span.start < b.span.start;
  return a.span.end < b.span.end;
}

bool joint_order(const LinkedPrediction& a, const LinkedPrediction& b) {
  if (a.joint != b.joint) return a.joint > b.joint;
  if (a.span.start != b.span.start) return a.span.start < b.span.start;
  if (a.span.end != b.span.end) return a.span.end < b.span.end;
  return a.entity_id < b.entity_id;
}

bool start_order(const LinkedPrediction& a, const LinkedPrediction& b) {
  if (a.span.start != b.span.start) return a.span.start < b.span.start;
  if (a.span.end != b.span.end) return a.span.end < b.span.end;
  return a.entity_id < b.entity_id;
}

}  // namespace

std::pair<std::vector<ScoredMention>, bool> select_mentions(std::vector<ScoredMention> scored,
                                                            double gamma, int fallback) {
  if (scored.empty()) fail(ErrorCategory::config, "select_mentions: no scored spans");

  std::vector<ScoredMention> selected;
  for (const ScoredMention& m : scored)
    if (m.log_p_mention >= gamma) selected.push_back(m);

  bool fallback_used = false;
  if (selected.empty()) {
    fallback_used = true;
    std::sort(scored.begin(), scored.end(), mention_order);
    if (scored.size() > static_cast<size_t>(fallback)) scored.resize(static_cast<size_t>(fallback));
    selected = std::move(scored);
  } else {
    std::sort(selected.begin(), selected.end(), mention_order);
  }
  return {std::move(selected), fallback_used};
}

std::vector<LinkedPrediction> remove_overlaps(std::vector<LinkedPrediction> predictions) {
  std::sort(predictions.begin(), predictions.end(), joint_order);
  std::vector<LinkedPrediction> kept;
  for (const LinkedPrediction& p : predictions) {
    bool conflict = false;
    for (const LinkedPrediction& k : kept) {
      if (p.span.overlaps(k.span)) {
        conflict = true;
        break;
      }
    }
    if (!conflict) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), start_order);
  return kept;
}

LinkOutcome link(const QuestionEmbeddings& emb, const HeadWeights& heads, const MipsIndex& index,
                 const EntityCatalog& catalog, const DecoderConfig& config) {
  int n = static_cast<int>(emb.matrix.rows);
  std::vector<SpanCandidate> spans = enumerate_spans(n, config.max_span_len);
  std::vector<ScoredMention> scored = mention_scores(emb, heads, spans);

  LinkOutcome outcome;
  auto [mentions, fallback_used] = select_mentions(std::move(scored), config.gamma,
                                                   config.fallback_mentions);
  outcome.mention_fallback = fallback_used;

  std::vector<LinkedPrediction> all_pairs;
  for (const ScoredMention& m : mentions) {
    MentionRep rep = mention_rep(emb, m.span);
    std::vector<SearchHit> hits = index.search(rep.y, config.top_k_entities);
    std::vector<int> candidates;
    candidates.reserve(hits.size());
    for (const SearchHit& h : hits) candidates.push_back(h.entity);
    CandidateSet set = score_entities(rep, candidates, catalog);
    for (const CandidateEntry& entry : set.entries) {
      LinkedPrediction pred;
      pred.entity = entry.entity;
      pred.entity_id = catalog.record(static_cast<size_t>(entry.entity)).id;
      pred.span = m.span;
      pred.log_mention = m.log_p_mention;
      pred.log_entity = entry.log_p;
      pred.joint = m.log_p_mention + entry.log_p;
      all_pairs.push_back(std::move(pred));
    }
  }

  for (const LinkedPrediction& p : all_pairs)
    if (p.joint >= config.gamma) outcome.survivors.push_back(p);

  if (!outcome.survivors.empty()) {
    outcome.predictions = remove_overlaps(outcome.survivors);
  } else if (fallback_used && !all_pairs.empty()) {
    // Fallback mentions have log p < gamma, so no joint can clear it; emit
    // the single best pair rather than nothing.
    outcome.forced_top1 = true;
    outcome.predictions = {*std::min_element(all_pairs.begin(), all_pairs.end(), joint_order)};
  }
  return outcome;
}

std::vector<LinkedPrediction> link_gold_spans(const QuestionEmbeddings& emb,
                                              const std::vector<SpanCandidate>& gold_spans,
                                              const MipsIndex& index, const EntityCatalog& catalog,
                                              const DecoderConfig& config) {
  std::vector<LinkedPrediction> out;
  for (const SpanCandidate& span : gold_spans) {
    MentionRep rep = mention_rep(emb, span);
    std::vector<SearchHit> hits = index.search(rep.y, config.top_k_entities);
    std::vector<int> candidates;
    for (const SearchHit& h : hits) candidates.push_back(h.entity);
    CandidateSet set = score_entities(rep, candidates, catalog);
    const CandidateEntry& best = set.entries.front();
    LinkedPrediction pred;
    pred.entity = best.entity;
    pred.entity_id = catalog.record(static_cast<size_t>(best.entity)).id;
    pred.span = span;
    pred.log_mention = 0.0;
    pred.log_entity = best.log_p;
    pred.joint = best.log_p;
    out.push_back(std::move(pred));
  }
  std::sort(out.begin(), out.end(), start_order);
  return out;
}

void write_predictions(const std::string& path, const std::vector<QuestionPredictions>& all) {
  auto out = open_output(path);
  for (const auto& qp : all) {
    json preds = json::array();
    for (const LinkedPrediction& p : qp.predictions)
      preds.push_back({{"entity_id", p.entity_id},
                       {"start", p.span.start},
                       {"end", p.span.end},
                       {"log_mention", p.log_mention},
                       {"log_entity", p.log_entity},
                       {"joint", p.joint}});
    json obj{{"id", qp.id}, {"predictions", preds}};
    out << obj.dump() << '\n';
  }
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

std::vector<QuestionPredictions> read_predictions(const std::string& path) {
  std::vector<QuestionPredictions> all;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCategory::format,
           path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    QuestionPredictions qp;
    qp.id = obj.at("id").get<std::string>();
    for (const auto& p : obj.value("predictions", json::array())) {
      LinkedPrediction pred;
      pred.entity_id = p.at("entity_id").get<std::string>();
      pred.span.start = p.at("start").get<int>();
      pred.span.end = p.at("end").get<int>();
      pred.log_mention = p.value("log_mention", 0.0);
      pred.log_entity = p.value("log_entity", 0.0);
      pred.joint = p.value("joint", 0.0);
      qp.predictions.push_back(std::move(pred));
    }
    all.push_back(std::move(qp));
  });
  return all;
}

}  // namespace elq
