#include "elq/catalog.hpp"

#include <nlohmann/json.hpp>

#include "elq/encoder.hpp"
#include "elq/error.hpp"
#include "elq/io.hpp"

namespace elq {

using nlohmann::json;

std::string truncate_description(std::string_view text, size_t max_tokens) {
  TokenizedQuestion toks = tokenize(text);
  size_t keep = std::min(max_tokens, toks.size());
  std::string out;
  for (size_t i = 0; i < keep; ++i) {
    if (i) out.push_back(' ');
    out += toks.tokens[i];
  }
  return out;
}

EntityCatalog::EntityCatalog(std::vector<EntityRecord> records, FloatMat embeddings)
    : records_(std::move(records)), embeddings_(std::move(embeddings)) {
  if (embeddings_.rows != records_.size())
    fail(ErrorCategory::format, "embedding rows do not match record count");
  if (!all_finite(std::span<const float>(embeddings_.data)))
    fail(ErrorCategory::format, "non-finite embedding value in catalog");
  build_id_map();
}

void EntityCatalog::build_id_map() {
  id_to_index_.reserve(records_.size());
  for (size_t i = 0; i < records_.size(); ++i) {
    auto [it, inserted] = id_to_index_.emplace(records_[i].id, i);
    if (!inserted) fail(ErrorCategory::format, "duplicate entity id: " + records_[i].id);
  }
}

EntityCatalog EntityCatalog::load(const std::string& records_path,
                                  const std::string& embeddings_path) {
  std::vector<EntityRecord> records;
  std::unordered_map<std::string, size_t> seen;
  for_each_line(records_path, [&](size_t lineno, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCategory::format,
           records_path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("title"))
      fail(ErrorCategory::format,
           records_path + ":" + std::to_string(lineno) + ": expected {id, title, description}");
    EntityRecord rec;
    rec.id = obj.at("id").get<std::string>();
    rec.title = obj.at("title").get<std::string>();
    rec.description = truncate_description(obj.value("description", std::string()));
    auto [it, inserted] = seen.emplace(rec.id, lineno);
    if (!inserted)
      fail(ErrorCategory::format, records_path + ":" + std::to_string(lineno) +
                                      ": duplicate entity id \"" + rec.id + "\"");
    records.push_back(std::move(rec));
  });

  FloatMat embeddings = read_embedding_file(embeddings_path);
  if (embeddings.rows != records.size())
    fail(ErrorCategory::format, "embedding file has " + std::to_string(embeddings.rows) +
                                    " rows but records file has " + std::to_string(records.size()) +
                                    " entries");
  return EntityCatalog(std::move(records), std::move(embeddings));
}

void EntityCatalog::save(const std::string& records_path,
                         const std::string& embeddings_path) const {
  auto out = open_output(records_path);
  for (const auto& rec : records_) {
    json obj{{"id", rec.id}, {"title", rec.title}, {"description", rec.description}};
    out << obj.dump() << '\n';
  }
  if (!out) fail(ErrorCategory::io, "short write: " + records_path);
  write_embedding_file(embeddings_path, embeddings_);
}

const EntityRecord& EntityCatalog::record(size_t index) const {
  if (index >= records_.size())
    fail(ErrorCategory::format, "entity index out of range: " + std::to_string(index));
  return records_[index];
}

std::span<const float> EntityCatalog::embedding(size_t index) const {
  if (index >= embeddings_.rows)
    fail(ErrorCategory::format, "entity index out of range: " + std::to_string(index));
  return embeddings_.row_span(index);
}

int EntityCatalog::find(std::string_view id) const {
  auto it = id_to_index_.find(std::string(id));
  return it == id_to_index_.end() ? -1 : static_cast<int>(it->second);
}

uint64_t EntityCatalog::embedding_checksum() const {
  return fnv1a64_bytes(embeddings_.data.data(), embeddings_.data.size() * sizeof(float));
}

}  // namespace elq
