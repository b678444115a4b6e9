#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/dataset.hpp"

namespace elq {

struct WorkloadSpec {
  int entities = 1000;
  int dim = 64;
  int base_dim = 64;
  int train_questions = 2000;
  int dev_questions = 0;
  int test_questions = 500;
  int min_tokens = 8;
  int max_tokens = 12;
  int min_mentions = 1;
  int max_mentions = 2;
  double sigma = 0.1;  // perturbation norm on planted token embeddings
  uint64_t seed = 0;
};

struct Workload {
  EntityCatalog catalog;
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> dev;
  std::vector<TrainingExample> test;
};

// Desk-scale synthetic benchmark. Entity titles are two-word combinations
// from a mention-word pool; filler words come from a disjoint pool. Both
// pools are rejection-sampled to sit on opposite sides of a random separating
// direction so that a linear mention scorer is learnable by construction.
// Planted mention tokens carry per-occurrence noise aliases of the title
// words. Deterministic per seed.
Workload generate_workload(const WorkloadSpec& spec);

// entities.jsonl + embeddings.bin + {train,dev,test}.jsonl under out_dir.
void write_workload(const std::string& out_dir, const Workload& workload);

}  // namespace elq
