#include "elq/index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "elq/error.hpp"
#include "elq/io.hpp"
#include "elq/rng.hpp"

namespace elq {

namespace {

// Internally the graph code works in distance form (dist = -dot) so the
// usual nearest-first formulations apply unchanged.
using DistNode = std::pair<double, int>;
using MinHeap = std::priority_queue<DistNode, std::vector<DistNode>, std::greater<DistNode>>;
using MaxHeap = std::priority_queue<DistNode, std::vector<DistNode>, std::less<DistNode>>;

constexpr uint32_t kIndexVersion = 1;
const char kIndexMagic[4] = {'E', 'L', 'Q', 'I'};

}  // namespace

MipsIndex::MipsIndex(const EntityCatalog& catalog, IndexMode mode, HnswParams params,
                     uint64_t seed)
    : catalog_(&catalog),
      mode_(mode),
      params_(params),
      seed_(seed),
      size_(catalog.size()),
      dim_(catalog.dim()) {}

double MipsIndex::score(int node, std::span<const double> query) const {
  return dot(catalog_->embedding(static_cast<size_t>(node)), query);
}

double MipsIndex::score_pair(int a, int b) const {
  auto ra = catalog_->embedding(static_cast<size_t>(a));
  auto rb = catalog_->embedding(static_cast<size_t>(b));
  double s = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) s += static_cast<double>(ra[i]) * static_cast<double>(rb[i]);
  return s;
}

MipsIndex MipsIndex::build(const EntityCatalog& catalog, IndexMode mode, HnswParams params,
                           uint64_t seed) {
  if (catalog.empty()) fail(ErrorCategory::config, "cannot build an index over an empty catalog");
  MipsIndex index(catalog, mode, params, seed);
  if (mode == IndexMode::exact) return index;

  if (params.M < 2) fail(ErrorCategory::config, "hnsw M must be at least 2");
  if (params.ef_construction < 1 || params.ef_search < 1)
    fail(ErrorCategory::config, "hnsw ef parameters must be positive");

  size_t m = catalog.size();
  index.levels_.resize(m);
  index.graph_.resize(m);

  // Geometric level assignment with multiplier 1/ln(M).
  double mult = 1.0 / std::log(static_cast<double>(params.M));
  SplitMix64 rng(seed);
  for (size_t i = 0; i < m; ++i) {
    double u = 1.0 - rng.next_unit();  // (0, 1]
    int level = static_cast<int>(std::floor(-std::log(u) * mult));
    index.levels_[i] = level;
    index.graph_[i].resize(static_cast<size_t>(level) + 1);
  }
  for (size_t i = 0; i < m; ++i) index.insert(static_cast<int>(i));
  return index;
}

int MipsIndex::greedy_descend(std::span<const double> query, int start, int from_level,
                              int to_level) const {
  int cur = start;
  double best = -score(cur, query);
  for (int level = from_level; level >= to_level; --level) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int nb : graph_[static_cast<size_t>(cur)][static_cast<size_t>(level)]) {
        double d = -score(nb, query);
        if (d < best) {
          best = d;
          cur = nb;
          improved = true;
        }
      }
    }
  }
  return cur;
}

std::vector<SearchHit> MipsIndex::search_layer(std::span<const double> query, int entry,
                                               int level, int ef) const {
  std::vector<uint8_t> visited(size_, 0);
  MinHeap candidates;
  MaxHeap results;

  double d0 = -score(entry, query);
  candidates.emplace(d0, entry);
  results.emplace(d0, entry);
  visited[static_cast<size_t>(entry)] = 1;

  while (!candidates.empty()) {
    auto [dc, c] = candidates.top();
    if (results.size() >= static_cast<size_t>(ef) && dc > results.top().first) break;
    candidates.pop();

    for (int nb : graph_[static_cast<size_t>(c)][static_cast<size_t>(level)]) {
      if (visited[static_cast<size_t>(nb)]) continue;
      visited[static_cast<size_t>(nb)] = 1;
      double d = -score(nb, query);
      if (results.size() < static_cast<size_t>(ef) || d < results.top().first) {
        candidates.emplace(d, nb);
        results.emplace(d, nb);
        if (results.size() > static_cast<size_t>(ef)) results.pop();
      }
    }
  }

  std::vector<SearchHit> hits;
  hits.reserve(results.size());
  while (!results.empty()) {
    hits.push_back({results.top().second, -results.top().first});
    results.pop();
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  return hits;
}

// Nearest-first heuristic: keep a candidate only if it is closer to the new
// node than to every neighbor already kept, then fill spare slots with the
// nearest pruned candidates.
std::vector<int> MipsIndex::select_neighbors(int node, std::vector<SearchHit>& candidates,
                                             int max_links) const {
  std::vector<int> kept;
  std::vector<int> pruned;
  for (const SearchHit& cand : candidates) {
    if (cand.entity == node) continue;
    if (kept.size() >= static_cast<size_t>(max_links)) break;
    bool good = true;
    for (int r : kept) {
      if (score_pair(cand.entity, r) > cand.score) {
        good = false;
        break;
      }
    }
    if (good)
      kept.push_back(cand.entity);
    else
      pruned.push_back(cand.entity);
  }
  for (int p : pruned) {
    if (kept.size() >= static_cast<size_t>(max_links)) break;
    kept.push_back(p);
  }
  return kept;
}

void MipsIndex::link(int from, int to, int level, int max_links) {
  auto& list = graph_[static_cast<size_t>(from)][static_cast<size_t>(level)];
  if (std::find(list.begin(), list.end(), to) != list.end()) return;
  if (list.size() < static_cast<size_t>(max_links)) {
    list.push_back(to);
    return;
  }
  // Over capacity: re-select among existing neighbors plus the newcomer.
  std::vector<SearchHit> cands;
  cands.reserve(list.size() + 1);
  cands.push_back({to, score_pair(from, to)});
  for (int nb : list) cands.push_back({nb, score_pair(from, nb)});
  std::sort(cands.begin(), cands.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  list = select_neighbors(from, cands, max_links);
}

void MipsIndex::insert(int node) {
  int node_lvl = levels_[static_cast<size_t>(node)];
  if (entry_point_ < 0) {
    entry_point_ = node;
    max_level_ = node_lvl;
    return;
  }

  Vec q(dim_);
  auto row = catalog_->embedding(static_cast<size_t>(node));
  for (size_t i = 0; i < dim_; ++i) q[i] = static_cast<double>(row[i]);

  int cur = entry_point_;
  if (node_lvl < max_level_) cur = greedy_descend(q, cur, max_level_, node_lvl + 1);

  for (int level = std::min(node_lvl, max_level_); level >= 0; --level) {
    std::vector<SearchHit> hits = search_layer(q, cur, level, params_.ef_construction);
    int cap = level == 0 ? 2 * params_.M : params_.M;
    std::vector<int> selected = select_neighbors(node, hits, params_.M);
    for (int nb : selected) {
      link(node, nb, level, cap);
      link(nb, node, level, cap);
    }
    cur = hits.front().entity;
  }

  if (node_lvl > max_level_) {
    max_level_ = node_lvl;
    entry_point_ = node;
  }
}

std::vector<SearchHit> MipsIndex::search(std::span<const double> query, int k) const {
  if (query.size() != dim_) fail(ErrorCategory::config, "query dimension does not match index");
  if (k < 1) fail(ErrorCategory::config, "k must be at least 1");

  if (mode_ == IndexMode::exact) {
    std::vector<SearchHit> hits;
    hits.reserve(size_);
    for (size_t i = 0; i < size_; ++i)
      hits.push_back({static_cast<int>(i), score(static_cast<int>(i), query)});
    size_t keep = std::min(static_cast<size_t>(k), size_);
    auto cmp = [](const SearchHit& a, const SearchHit& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.entity < b.entity;
    };
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), cmp);
    hits.resize(keep);
    return hits;
  }

  int cur = entry_point_;
  if (max_level_ > 0) cur = greedy_descend(query, cur, max_level_, 1);
  int ef = std::max(params_.ef_search, k);
  std::vector<SearchHit> hits = search_layer(query, cur, 0, ef);
  if (hits.size() > static_cast<size_t>(k)) hits.resize(static_cast<size_t>(k));
  return hits;
}

bool MipsIndex::base_layer_connected() const {
  if (mode_ != IndexMode::hnsw || size_ == 0) return true;
  std::vector<uint8_t> seen(size_, 0);
  std::vector<int> stack{entry_point_};
  seen[static_cast<size_t>(entry_point_)] = 1;
  size_t count = 0;
  while (!stack.empty()) {
    int c = stack.back();
    stack.pop_back();
    ++count;
    for (int nb : graph_[static_cast<size_t>(c)][0]) {
      if (!seen[static_cast<size_t>(nb)]) {
        seen[static_cast<size_t>(nb)] = 1;
        stack.push_back(nb);
      }
    }
  }
  return count == size_;
}

void MipsIndex::save(const std::string& path) const {
  auto out = open_output(path);
  bin::write_magic(out, kIndexMagic);
  bin::write_u32(out, kIndexVersion);
  bin::write_u32(out, mode_ == IndexMode::exact ? 0 : 1);
  bin::write_u32(out, static_cast<uint32_t>(dim_));
  bin::write_u64(out, size_);
  bin::write_u32(out, static_cast<uint32_t>(params_.M));
  bin::write_u32(out, static_cast<uint32_t>(params_.ef_construction));
  bin::write_u32(out, static_cast<uint32_t>(params_.ef_search));
  bin::write_u64(out, seed_);
  bin::write_u64(out, catalog_->embedding_checksum());
  if (mode_ == IndexMode::hnsw) {
    bin::write_u32(out, static_cast<uint32_t>(entry_point_));
    bin::write_u32(out, static_cast<uint32_t>(max_level_));
    for (size_t i = 0; i < size_; ++i) bin::write_u32(out, static_cast<uint32_t>(levels_[i]));
    for (size_t i = 0; i < size_; ++i) {
      for (const auto& list : graph_[i]) {
        bin::write_u32(out, static_cast<uint32_t>(list.size()));
        for (int nb : list) bin::write_u32(out, static_cast<uint32_t>(nb));
      }
    }
  }
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

MipsIndex MipsIndex::load(const std::string& path, const EntityCatalog& catalog) {
  auto in = open_input(path);
  bin::expect_magic(in, kIndexMagic, "index");
  uint32_t version = bin::read_u32(in);
  if (version != kIndexVersion)
    fail(ErrorCategory::version,
         "index file version " + std::to_string(version) + " is not supported");
  uint32_t mode_raw = bin::read_u32(in);
  IndexMode mode = mode_raw == 0 ? IndexMode::exact : IndexMode::hnsw;
  uint32_t dim = bin::read_u32(in);
  uint64_t size = bin::read_u64(in);
  HnswParams params;
  params.M = static_cast<int>(bin::read_u32(in));
  params.ef_construction = static_cast<int>(bin::read_u32(in));
  params.ef_search = static_cast<int>(bin::read_u32(in));
  uint64_t seed = bin::read_u64(in);
  uint64_t checksum = bin::read_u64(in);

  if (dim != catalog.dim() || size != catalog.size() ||
      checksum != catalog.embedding_checksum())
    fail(ErrorCategory::version, "index file does not match the provided catalog");

  MipsIndex index(catalog, mode, params, seed);
  if (mode == IndexMode::hnsw) {
    index.entry_point_ = static_cast<int>(bin::read_u32(in));
    index.max_level_ = static_cast<int>(bin::read_u32(in));
    index.levels_.resize(size);
    for (size_t i = 0; i < size; ++i) index.levels_[i] = static_cast<int>(bin::read_u32(in));
    index.graph_.resize(size);
    for (size_t i = 0; i < size; ++i) {
      index.graph_[i].resize(static_cast<size_t>(index.levels_[i]) + 1);
      for (auto& list : index.graph_[i]) {
        uint32_t count = bin::read_u32(in);
        list.resize(count);
        for (uint32_t j = 0; j < count; ++j) list[j] = static_cast<int>(bin::read_u32(in));
      }
    }
  }
  return index;
}

double recall_at_k(const MipsIndex& approx,
                   const std::vector<std::vector<SearchHit>>& exact_results,
                   const std::vector<Vec>& queries, int k) {
  if (queries.empty()) return 1.0;
  double total = 0.0;
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    auto hits = approx.search(queries[qi], k);
    std::unordered_set<int> truth;
    for (const SearchHit& h : exact_results[qi]) truth.insert(h.entity);
    size_t overlap = 0;
    for (const SearchHit& h : hits)
      if (truth.count(h.entity)) ++overlap;
    size_t denom = std::min(static_cast<size_t>(k), exact_results[qi].size());
    total += denom == 0 ? 1.0 : static_cast<double>(overlap) / static_cast<double>(denom);
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace elq
