#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "elq/catalog.hpp"
#include "elq/types.hpp"

namespace elqtest {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("elq_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline elq::EntityCatalog make_catalog(elq::FloatMat embeddings) {
  std::vector<elq::EntityRecord> records;
  for (size_t i = 0; i < embeddings.rows; ++i)
    records.push_back({"E" + std::to_string(i), "entity " + std::to_string(i), ""});
  return elq::EntityCatalog(std::move(records), std::move(embeddings));
}

inline elq::FloatMat gaussian_rows(size_t rows, size_t cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  elq::FloatMat m(rows, cols);
  for (float& v : m.data) v = dist(rng);
  return m;
}

inline elq::Mat gaussian_mat(size_t rows, size_t cols, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  elq::Mat m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

inline elq::Vec gaussian_vec(size_t n, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  elq::Vec v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace elqtest
