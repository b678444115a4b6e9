#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "elq/types.hpp"

namespace elq {

struct EntityRecord {
  std::string id;
  std::string title;
  std::string description;  // at most 128 tokens, truncated at ingest
};

// Entity inventory plus one fixed f32 embedding row per record. Immutable
// after construction; row order defines the integer index used everywhere
// downstream (search, training, decoding).
class EntityCatalog {
 public:
  EntityCatalog() = default;
  EntityCatalog(std::vector<EntityRecord> records, FloatMat embeddings);

  static EntityCatalog load(const std::string& records_path,
                            const std::string& embeddings_path);
  void save(const std::string& records_path, const std::string& embeddings_path) const;

  size_t size() const { return records_.size(); }
  size_t dim() const { return embeddings_.cols; }
  bool empty() const { return records_.empty(); }

  const EntityRecord& record(size_t index) const;
  std::span<const float> embedding(size_t index) const;
  const FloatMat& embeddings() const { return embeddings_; }

  // Index of the record with the given id, or -1.
  int find(std::string_view id) const;

  uint64_t embedding_checksum() const;

 private:
  void build_id_map();

  std::vector<EntityRecord> records_;
  FloatMat embeddings_;
  std::unordered_map<std::string, size_t> id_to_index_;
};

// First max_tokens engine tokens of text, rejoined with single spaces.
std::string truncate_description(std::string_view text, size_t max_tokens = 128);

}  // namespace elq
