#pragma once

// Little-endian primitive encoding shared by the table, checkpoint and feature
// file formats.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace recipetree::binary {

void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> values);
/// u32 length prefix followed by raw bytes.
void write_string(std::ostream& out, const std::string& s);
void write_magic(std::ostream& out, const char (&magic)[5]);

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::vector<double> read_f64s(std::istream& in, std::size_t count);
std::string read_string(std::istream& in);
/// Throws ValidationError unless the next four bytes equal `magic`.
void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what);

/// True when the stream has no more bytes to read.
bool at_end(std::istream& in);

}  // namespace recipetree::binary
