#include "elq/workload.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "elq/encoder.hpp"
#include "elq/error.hpp"
#include "elq/rng.hpp"

namespace elq {

namespace {

constexpr double kPoolMargin = 0.10;
constexpr int kMentionLen = 2;

// Words whose base embedding projects onto `axis` beyond the margin, searched
// in a deterministic order.
std::vector<std::string> sample_pool(const SyntheticEncoder& encoder, const Vec& axis,
                                     const std::string& prefix, double side, size_t count) {
  std::vector<std::string> pool;
  for (uint64_t idx = 0; pool.size() < count; ++idx) {
    std::string word = prefix + std::to_string(idx);
    Vec base = encoder.base_embedding(word);
    if (side * dot(std::span<const double>(base), std::span<const double>(axis)) >= kPoolMargin)
      pool.push_back(std::move(word));
    if (idx > 1000 * count)
      fail(ErrorCategory::internal, "workload pool sampling did not converge");
  }
  return pool;
}

std::string noisy_alias(const std::string& word, double sigma, SplitMix64& rng) {
  if (sigma <= 0.0) return word;
  auto milli = static_cast<unsigned>(std::lround(sigma * 1000.0));
  return word + "~" + std::to_string(milli) + "~" + std::to_string(rng.next() % 1000000);
}

std::string question_id(const std::string& split, size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06zu", split.c_str(), k);
  return buf;
}

}  // namespace

Workload generate_workload(const WorkloadSpec& spec) {
  if (spec.entities < 1 || spec.dim < 1 || spec.base_dim < 1)
    fail(ErrorCategory::config, "workload needs at least one entity and positive dims");
  if (spec.min_tokens < kMentionLen * spec.max_mentions + (spec.max_mentions - 1) ||
      spec.min_tokens > spec.max_tokens)
    fail(ErrorCategory::config, "token budget cannot hold the requested mentions");
  if (spec.min_mentions < 1 || spec.max_mentions < spec.min_mentions)
    fail(ErrorCategory::config, "mention counts must satisfy 1 <= min <= max");

  SyntheticEncoder encoder(spec.seed, static_cast<size_t>(spec.base_dim),
                           static_cast<size_t>(spec.dim));
  SplitMix64 rng(spec.seed ^ 0x776f726b6c6f6164ULL);

  // Separating direction for the two word pools.
  Vec axis(static_cast<size_t>(spec.base_dim));
  {
    SplitMix64 axis_rng(hash_combine(spec.seed, "pool-axis"));
    for (double& v : axis) v = axis_rng.next_signed_unit();
    double n = norm(axis);
    for (double& v : axis) v /= n;
  }

  // Title pool large enough for distinct two-word combinations, with slack.
  size_t pool_size = 16;
  while (pool_size * (pool_size - 1) / 2 < static_cast<size_t>(spec.entities) * 5 / 4) ++pool_size;
  std::vector<std::string> title_pool = sample_pool(encoder, axis, "t", +1.0, pool_size);
  std::vector<std::string> filler_pool =
      sample_pool(encoder, axis, "f", -1.0, std::max<size_t>(32, pool_size / 2));

  // Entities: a deterministic shuffle of all word pairs, first `entities` kept.
  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(pool_size * (pool_size - 1) / 2);
  for (size_t i = 0; i < pool_size; ++i)
    for (size_t j = i + 1; j < pool_size; ++j) pairs.emplace_back(i, j);
  for (size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[rng.next_below(i)]);
  pairs.resize(static_cast<size_t>(spec.entities));

  std::vector<EntityRecord> records;
  records.reserve(pairs.size());
  FloatMat embeddings(pairs.size(), static_cast<size_t>(spec.dim));
  for (size_t e = 0; e < pairs.size(); ++e) {
    EntityRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "E%06zu", e);
    rec.id = idbuf;
    rec.title = title_pool[pairs[e].first] + " " + title_pool[pairs[e].second];
    rec.description = rec.title + " synthetic record";
    Vec x = encoder.entity_embedding(rec.title);
    for (size_t k = 0; k < x.size(); ++k) embeddings.row(e)[k] = static_cast<float>(x[k]);
    records.push_back(std::move(rec));
  }
  EntityCatalog catalog(std::move(records), std::move(embeddings));

  auto gen_split = [&](const std::string& split, int count) {
    std::vector<TrainingExample> out;
    out.reserve(static_cast<size_t>(count));
    for (int qi = 0; qi < count; ++qi) {
      int n = spec.min_tokens +
              static_cast<int>(rng.next_below(static_cast<uint64_t>(spec.max_tokens - spec.min_tokens + 1)));
      int mentions = spec.min_mentions +
                     static_cast<int>(rng.next_below(
                         static_cast<uint64_t>(spec.max_mentions - spec.min_mentions + 1)));

      // Mention slots: sorted starts with a one-token gap between mentions.
      std::vector<int> starts;
      for (;;) {
        starts.clear();
        for (int m = 0; m < mentions; ++m)
          starts.push_back(static_cast<int>(rng.next_below(static_cast<uint64_t>(n - kMentionLen + 1))));
        std::sort(starts.begin(), starts.end());
        bool ok = true;
        for (size_t m = 1; m < starts.size(); ++m)
          if (starts[m] < starts[m - 1] + kMentionLen + 1) ok = false;
        if (ok) break;
      }

      std::vector<int> entity_of(starts.size());
      for (size_t m = 0; m < starts.size(); ++m) {
        for (;;) {
          int e = static_cast<int>(rng.next_below(static_cast<uint64_t>(spec.entities)));
          bool fresh = true;
          for (size_t o = 0; o < m; ++o)
            if (entity_of[o] == e) fresh = false;
          if (fresh) {
            entity_of[m] = e;
            break;
          }
        }
      }

      std::vector<std::string> tokens(static_cast<size_t>(n));
      TrainingExample ex;
      for (size_t m = 0; m < starts.size(); ++m) {
        const auto& pair = pairs[static_cast<size_t>(entity_of[m])];
        tokens[static_cast<size_t>(starts[m])] = noisy_alias(title_pool[pair.first], spec.sigma, rng);
        tokens[static_cast<size_t>(starts[m]) + 1] =
            noisy_alias(title_pool[pair.second], spec.sigma, rng);
        ex.gold.push_back({{starts[m], starts[m] + kMentionLen - 1}, entity_of[m]});
      }
      for (auto& tok : tokens)
        if (tok.empty()) tok = filler_pool[rng.next_below(filler_pool.size())];

      std::string text;
      for (size_t t = 0; t < tokens.size(); ++t) {
        if (t) text.push_back(' ');
        text += tokens[t];
      }
      ex.question = tokenize(text, question_id(split, static_cast<size_t>(qi)));
      out.push_back(std::move(ex));
    }
    return out;
  };

  Workload workload{std::move(catalog), {}, {}, {}};
  workload.train = gen_split("train", spec.train_questions);
  workload.dev = gen_split("dev", spec.dev_questions);
  workload.test = gen_split("test", spec.test_questions);
  return workload;
}

void write_workload(const std::string& out_dir, const Workload& workload) {
  std::filesystem::create_directories(out_dir);
  auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
  workload.catalog.save(path("entities.jsonl"), path("embeddings.bin"));
  write_examples(path("train.jsonl"), workload.train, workload.catalog);
  write_examples(path("dev.jsonl"), workload.dev, workload.catalog);
  write_examples(path("test.jsonl"), workload.test, workload.catalog);
}

}  // namespace elq
