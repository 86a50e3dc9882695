#include "recipetree/binary_io.hpp"

#include <bit>
#include <cstring>

#include "recipetree/errors.hpp"

namespace recipetree::binary {

namespace {

template <class T>
void put(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  if (!out) throw IoError("write failed");
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) throw ValidationError("unexpected end of binary data");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t v) { put(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f64(out, v);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("write failed");
}

void write_magic(std::ostream& out, const char (&magic)[5]) {
  out.write(magic, 4);
  if (!out) throw IoError("write failed");
}

std::uint8_t read_u8(std::istream& in) { return get<std::uint8_t>(in); }
std::uint32_t read_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return get<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

std::vector<double> read_f64s(std::istream& in, std::size_t count) {
  std::vector<double> out(count);
  for (double& v : out) v = read_f64(in);
  return out;
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (in.gcount() != static_cast<std::streamsize>(n)) throw ValidationError("unexpected end of binary data");
  return s;
}

void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char got[4] = {};
  in.read(got, 4);
  if (in.gcount() != 4 || std::memcmp(got, magic, 4) != 0) {
    throw ValidationError(what + ": bad magic header");
  }
}

bool at_end(std::istream& in) { return in.peek() == std::char_traits<char>::eof(); }

}  // namespace recipetree::binary
