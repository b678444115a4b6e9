#pragma once

#include <string>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/encoder.hpp"
#include "elq/spans.hpp"

namespace elq {

struct GoldMention {
  SpanCandidate span;
  int entity = -1;  // catalog index
};

struct TrainingExample {
  TokenizedQuestion question;
  std::vector<GoldMention> gold;  // pairwise non-overlapping
};

// Question JSONL: {"id", "text", "mentions": [{"start", "end", "entity_id"}]}
// with 0-based token-inclusive indices. Validates span bounds, pairwise
// non-overlap, and that every entity_id exists in the catalog.
std::vector<TrainingExample> read_examples(const std::string& path, const EntityCatalog& catalog);
void write_examples(const std::string& path, const std::vector<TrainingExample>& examples,
                    const EntityCatalog& catalog);

}  // namespace elq
