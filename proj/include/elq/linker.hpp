#pragma once

#include <span>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/encoder.hpp"
#include "elq/spans.hpp"
#include "elq/types.hpp"

namespace elq {

struct MentionRep {
  SpanCandidate span;
  Vec y;  // arithmetic mean of the span's token embeddings
};

struct CandidateEntry {
  int entity = -1;
  double score = 0.0;  // inner product x_e . y
  double log_p = 0.0;  // log softmax over the candidate set
};

struct CandidateSet {
  SpanCandidate span;
  std::vector<CandidateEntry> entries;  // sorted by score descending, ties by lower index
};

MentionRep mention_rep(const QuestionEmbeddings& emb, const SpanCandidate& span);

// Softmax over exactly the provided candidates. Entity probabilities over
// the full vocabulary are everywhere approximated by restriction to a
// retrieved set; pass all indices for the exact small-catalog mode.
CandidateSet score_entities(const MentionRep& rep, std::span<const int> candidates,
                            const EntityCatalog& catalog);

// Log-softmax of scores, max-subtracted.
Vec log_softmax(std::span<const double> scores);

}  // namespace elq
