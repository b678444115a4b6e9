#include "elq/evalmetrics.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "elq/error.hpp"

namespace elq {

using nlohmann::json;

namespace {

int overlap_size(const SpanCandidate& a, const SpanCandidate& b) {
  int lo = std::max(a.start, b.start);
  int hi = std::min(a.end, b.end);
  return hi >= lo ? hi - lo + 1 : 0;
}

std::vector<EvalTuple> dedup(std::vector<EvalTuple> tuples) {
  std::sort(tuples.begin(), tuples.end(), [](const EvalTuple& a, const EvalTuple& b) {
    if (a.span != b.span) return a.span < b.span;
    return a.entity_id < b.entity_id;
  });
  tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
  return tuples;
}

struct MatchCandidate {
  int overlap;
  size_t gi, pi;
  const EvalTuple* g;
  const EvalTuple* p;
};

size_t match_question(const std::vector<EvalTuple>& gold, const std::vector<EvalTuple>& pred,
                      bool require_entity) {
  std::vector<MatchCandidate> candidates;
  for (size_t gi = 0; gi < gold.size(); ++gi) {
    for (size_t pi = 0; pi < pred.size(); ++pi) {
      if (require_entity && gold[gi].entity_id != pred[pi].entity_id) continue;
      int ov = overlap_size(gold[gi].span, pred[pi].span);
      if (ov > 0) candidates.push_back({ov, gi, pi, &gold[gi], &pred[pi]});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MatchCandidate& a, const MatchCandidate& b) {
              if (a.overlap != b.overlap) return a.overlap > b.overlap;
              if (a.g->span != b.g->span) return a.g->span < b.g->span;
              if (a.p->span != b.p->span) return a.p->span < b.p->span;
              if (a.g->entity_id != b.g->entity_id) return a.g->entity_id < b.g->entity_id;
              return a.p->entity_id < b.p->entity_id;
            });

  std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
  size_t matched = 0;
  for (const MatchCandidate& c : candidates) {
    if (gold_used[c.gi] || pred_used[c.pi]) continue;
    gold_used[c.gi] = true;
    pred_used[c.pi] = true;
    ++matched;
  }
  return matched;
}

EvalReport run_eval(const std::vector<QuestionTuples>& gold,
                    const std::vector<QuestionTuples>& pred, bool require_entity) {
  std::unordered_map<std::string, const QuestionTuples*> pred_by_id;
  for (const auto& qp : pred) {
    if (!pred_by_id.emplace(qp.id, &qp).second)
      fail(ErrorCategory::format, "duplicate question id in predictions: " + qp.id);
  }
  std::unordered_map<std::string, bool> gold_ids;
  for (const auto& qg : gold) {
    if (!gold_ids.emplace(qg.id, true).second)
      fail(ErrorCategory::format, "duplicate question id in gold: " + qg.id);
  }
  for (const auto& qp : pred)
    if (!gold_ids.count(qp.id))
      fail(ErrorCategory::format, "prediction for unknown question id: " + qp.id);

  EvalReport report;
  static const std::vector<EvalTuple> kEmpty;
  for (const auto& qg : gold) {
    std::vector<EvalTuple> g = dedup(qg.tuples);
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = i + 1; j < g.size(); ++j)
        if (g[i].span.overlaps(g[j].span))
          fail(ErrorCategory::format, "overlapping gold spans in question " + qg.id);

    auto it = pred_by_id.find(qg.id);
    std::vector<EvalTuple> p = dedup(it == pred_by_id.end() ? kEmpty : it->second->tuples);

    size_t matched = match_question(g, p, require_entity);
    report.matched += matched;
    report.gold_total += g.size();
    report.pred_total += p.size();
    report.per_question.push_back({qg.id, matched, g.size(), p.size()});
  }

  double c = static_cast<double>(report.matched);
  report.precision = report.pred_total == 0 ? 0.0 : c / static_cast<double>(report.pred_total);
  report.recall = report.gold_total == 0 ? 0.0 : c / static_cast<double>(report.gold_total);
  double pr = report.precision + report.recall;
  report.f1 = pr == 0.0 ? 0.0 : 2.0 * report.precision * report.recall / pr;
  return report;
}

}  // namespace

EvalReport weak_match(const std::vector<QuestionTuples>& gold,
                      const std::vector<QuestionTuples>& pred) {
  return run_eval(gold, pred, true);
}

EvalReport md_only(const std::vector<QuestionTuples>& gold,
                   const std::vector<QuestionTuples>& pred) {
  return run_eval(gold, pred, false);
}

EvalReport el_only(const std::vector<QuestionTuples>& gold,
                   const std::vector<QuestionTuples>& pred) {
  std::unordered_map<std::string, const QuestionTuples*> pred_by_id;
  for (const auto& qp : pred) pred_by_id.emplace(qp.id, &qp);
  for (const auto& qg : gold) {
    auto it = pred_by_id.find(qg.id);
    std::vector<SpanCandidate> gspans, pspans;
    for (const auto& t : dedup(qg.tuples)) gspans.push_back(t.span);
    if (it != pred_by_id.end())
      for (const auto& t : dedup(it->second->tuples)) pspans.push_back(t.span);
    std::sort(gspans.begin(), gspans.end());
    std::sort(pspans.begin(), pspans.end());
    if (gspans != pspans)
      fail(ErrorCategory::config,
           "el-only evaluation requires predictions on gold mention boundaries (question " +
               qg.id + ")");
  }
  return run_eval(gold, pred, true);
}

std::string report_to_json(const EvalReport& report, bool per_question) {
  json obj{{"matched", report.matched}, {"gold", report.gold_total},
           {"pred", report.pred_total}, {"precision", report.precision},
           {"recall", report.recall},   {"f1", report.f1}};
  if (per_question) {
    json pq = json::array();
    for (const auto& q : report.per_question)
      pq.push_back({{"id", q.id}, {"matched", q.matched}, {"gold", q.gold}, {"pred", q.pred}});
    obj["per_question"] = pq;
  }
  return obj.dump();
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream out;
  out << "matched " << report.matched << " | gold " << report.gold_total << " | pred "
      << report.pred_total << "\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "precision %.4f | recall %.4f | F1 %.4f\n", report.precision,
                report.recall, report.f1);
  out << buf;
  return out.str();
}

}  // namespace elq
