#pragma once

#include <string>
#include <vector>

#include "elq/spans.hpp"

namespace elq {

struct EvalTuple {
  std::string entity_id;
  SpanCandidate span;

  friend bool operator==(const EvalTuple&, const EvalTuple&) = default;
};

// Gold or predicted tuple set for one question. Duplicate tuples collapse.
struct QuestionTuples {
  std::string id;
  std::vector<EvalTuple> tuples;
};

struct QuestionScore {
  std::string id;
  size_t matched = 0;
  size_t gold = 0;
  size_t pred = 0;
};

struct EvalReport {
  size_t matched = 0;     // |C|
  size_t gold_total = 0;  // |T|
  size_t pred_total = 0;  // |T-hat|
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<QuestionScore> per_question;
};

// Weak matching: a gold and a predicted tuple match when their entity ids are
// equal and their spans share at least one token. Matching is one-to-one,
// greedy by overlap size descending (ties by earlier gold start); counts are
// aggregated across questions before computing p, r, F1.
EvalReport weak_match(const std::vector<QuestionTuples>& gold,
                      const std::vector<QuestionTuples>& pred);

// Same matching with the entity-equality condition dropped.
EvalReport md_only(const std::vector<QuestionTuples>& gold,
                   const std::vector<QuestionTuples>& pred);

// Scores predictions made on gold mention boundaries; requires the predicted
// span set to equal the gold span set per question, which forces p = r = F1.
EvalReport el_only(const std::vector<QuestionTuples>& gold,
                   const std::vector<QuestionTuples>& pred);

std::string report_to_json(const EvalReport& report, bool per_question = true);
std::string report_to_table(const EvalReport& report);

}  // namespace elq
