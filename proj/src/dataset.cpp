#include "elq/dataset.hpp"

#include <nlohmann/json.hpp>

#include "elq/error.hpp"
#include "elq/io.hpp"

namespace elq {

using nlohmann::json;

std::vector<TrainingExample> read_examples(const std::string& path,
                                           const EntityCatalog& catalog) {
  std::vector<TrainingExample> examples;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    auto where = [&] { return path + ":" + std::to_string(lineno) + ": "; };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCategory::format, where() + "malformed JSON: " + e.what());
    }
    TrainingExample ex;
    ex.question = tokenize(obj.at("text").get<std::string>(), obj.at("id").get<std::string>());
    int n = static_cast<int>(ex.question.size());
    for (const auto& m : obj.value("mentions", json::array())) {
      GoldMention gold;
      gold.span.start = m.at("start").get<int>();
      gold.span.end = m.at("end").get<int>();
      std::string entity_id = m.at("entity_id").get<std::string>();
      if (gold.span.start < 0 || gold.span.end < gold.span.start || gold.span.end >= n)
        fail(ErrorCategory::format, where() + "mention span [" + std::to_string(gold.span.start) +
                                        "," + std::to_string(gold.span.end) +
                                        "] is invalid for a question of " + std::to_string(n) +
                                        " tokens");
      gold.entity = catalog.find(entity_id);
      if (gold.entity < 0)
        fail(ErrorCategory::format, where() + "unknown entity id \"" + entity_id + "\"");
      for (const auto& other : ex.gold)
        if (other.span.overlaps(gold.span))
          fail(ErrorCategory::format, where() + "gold mention spans overlap");
      ex.gold.push_back(gold);
    }
    examples.push_back(std::move(ex));
  });
  return examples;
}

void write_examples(const std::string& path, const std::vector<TrainingExample>& examples,
                    const EntityCatalog& catalog) {
  auto out = open_output(path);
  for (const auto& ex : examples) {
    json mentions = json::array();
    for (const auto& gold : ex.gold)
      mentions.push_back({{"start", gold.span.start},
                          {"end", gold.span.end},
                          {"entity_id", catalog.record(static_cast<size_t>(gold.entity)).id}});
    json obj{{"id", ex.question.id}, {"text", ex.question.raw_text}, {"mentions", mentions}};
    out << obj.dump() << '\n';
  }
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

}  // namespace elq
