#include "elq/io.hpp"

#include <bit>
#include <cstring>

namespace elq {

namespace bin {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts would need byte swaps here");
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) fail(ErrorCategory::format, "unexpected end of file");
  return v;
}

}  // namespace

void write_u32(std::ostream& out, uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, v); }

void write_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) { return read_le<uint32_t>(in); }
uint64_t read_u64(std::istream& in) { return read_le<uint64_t>(in); }
float read_f32(std::istream& in) { return read_le<float>(in); }
double read_f64(std::istream& in) { return read_le<double>(in); }

void expect_magic(std::istream& in, const char magic[4], const std::string& what) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    fail(ErrorCategory::format, "bad magic bytes: not a " + what + " file");
}

std::string read_string(std::istream& in) {
  uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) fail(ErrorCategory::format, "unexpected end of file in string");
  return s;
}

}  // namespace bin

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot open for writing: " + path);
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open for reading: " + path);
  return in;
}

static const char kEmbeddingMagic[4] = {'E', 'L', 'Q', 'E'};

void write_embedding_file(const std::string& path, const FloatMat& m) {
  auto out = open_output(path);
  bin::write_magic(out, kEmbeddingMagic);
  bin::write_u32(out, static_cast<uint32_t>(m.rows));
  bin::write_u32(out, static_cast<uint32_t>(m.cols));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!out) fail(ErrorCategory::io, "short write: " + path);
}

FloatMat read_embedding_file(const std::string& path) {
  auto in = open_input(path);
  bin::expect_magic(in, kEmbeddingMagic, "embedding");
  FloatMat m;
  m.rows = bin::read_u32(in);
  m.cols = bin::read_u32(in);
  m.data.resize(m.rows * m.cols);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!in) fail(ErrorCategory::format, "truncated embedding data: " + path);
  return m;
}

void for_each_line(const std::string& path,
                   const std::function<void(size_t, const std::string&)>& fn) {
  auto in = open_input(path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(lineno, line);
  }
}

uint64_t fnv1a64_bytes(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace elq
