#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elq/catalog.hpp"
#include "elq/types.hpp"

namespace elq {

enum class IndexMode { exact, hnsw };

struct HnswParams {
  int M = 32;                // max neighbors per node per layer (2M at layer 0)
  int ef_construction = 200;
  int ef_search = 256;
};

struct SearchHit {
  int entity = -1;
  double score = 0.0;  // exact inner product with the stored row

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

// Maximum-inner-product search over the catalog embedding matrix. Exact mode
// scans every row; hnsw mode is a layered navigable-small-world graph searched
// with raw dot products (no normalization). Immutable after build.
class MipsIndex {
 public:
  static MipsIndex build(const EntityCatalog& catalog, IndexMode mode,
                         HnswParams params = {}, uint64_t seed = 0);

  // Top min(k, size) hits sorted by score descending, ties by lower index.
  // Exact mode returns the true top-k; hnsw mode is approximate but scores
  // are exact inner products of the returned ids.
  std::vector<SearchHit> search(std::span<const double> query, int k) const;

  void save(const std::string& path) const;
  static MipsIndex load(const std::string& path, const EntityCatalog& catalog);

  IndexMode mode() const { return mode_; }
  size_t size() const { return size_; }
  size_t dim() const { return dim_; }
  const HnswParams& params() const { return params_; }

  // Graph introspection for tests.
  int node_level(int node) const { return levels_[static_cast<size_t>(node)]; }
  const std::vector<int>& neighbors(int node, int level) const {
    return graph_[static_cast<size_t>(node)][static_cast<size_t>(level)];
  }
  bool base_layer_connected() const;

 private:
  MipsIndex(const EntityCatalog& catalog, IndexMode mode, HnswParams params, uint64_t seed);

  double score(int node, std::span<const double> query) const;
  double score_pair(int a, int b) const;
  void insert(int node);
  int greedy_descend(std::span<const double> query, int start, int from_level,
                     int to_level) const;
  std::vector<SearchHit> search_layer(std::span<const double> query, int entry, int level,
                                      int ef) const;
  std::vector<int> select_neighbors(int node, std::vector<SearchHit>& candidates, int max_links) const;
  void link(int from, int to, int level, int max_links);

  const EntityCatalog* catalog_ = nullptr;
  IndexMode mode_ = IndexMode::exact;
  HnswParams params_;
  uint64_t seed_ = 0;
  size_t size_ = 0;
  size_t dim_ = 0;

  std::vector<int> levels_;                       // top level per node
  std::vector<std::vector<std::vector<int>>> graph_;  // node -> level -> neighbor ids
  int entry_point_ = -1;
  int max_level_ = -1;

  mutable std::vector<uint32_t> visited_;  // epoch-tagged visited marks
  mutable uint32_t visit_epoch_ = 0;
};

// Mean overlap |approx  ^ exact| / k over the query set.
double recall_at_k(const MipsIndex& approx,
                   const std::vector<std::vector<SearchHit>>& exact_results,
                   const std::vector<Vec>& queries, int k);

}  // namespace elq
