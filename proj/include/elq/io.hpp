#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>

#include "elq/error.hpp"
#include "elq/types.hpp"

namespace elq {

// Little-endian binary primitives shared by all on-disk formats.
namespace bin {

void write_u32(std::ostream& out, uint32_t v);
void write_u64(std::ostream& out, uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_magic(std::ostream& out, const char magic[4]);
void write_string(std::ostream& out, const std::string& s);

uint32_t read_u32(std::istream& in);
uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
void expect_magic(std::istream& in, const char magic[4], const std::string& what);
std::string read_string(std::istream& in);

}  // namespace bin

std::ofstream open_output(const std::string& path);
std::ifstream open_input(const std::string& path);

// Embedding matrix file: "ELQE", u32 rows, u32 dim, row-major f32 data.
void write_embedding_file(const std::string& path, const FloatMat& m);
FloatMat read_embedding_file(const std::string& path);

// Calls fn(line_number, line) for each line, 1-based, skipping blank lines.
void for_each_line(const std::string& path,
                   const std::function<void(size_t, const std::string&)>& fn);

uint64_t fnv1a64_bytes(const void* data, size_t n);

}  // namespace elq
