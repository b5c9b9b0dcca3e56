#pragma once

// Little helpers for the versioned binary model files. Values are written
// in host byte order; the header magic doubles as an endianness check.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "gmatch/error.hpp"
#include "gmatch/linalg.hpp"

namespace gmatch::binio {

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated model file");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 32)) throw FormatError("implausible string length in model file");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("truncated model file");
  return s;
}

inline void put_matrix(std::ostream& out, const RowMatrix& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

inline RowMatrix get_matrix(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
  const auto r = get<std::uint64_t>(in);
  const auto c = get<std::uint64_t>(in);
  if (r != rows || c != cols) {
    throw FormatError("matrix dimensions " + std::to_string(r) + "x" + std::to_string(c) +
                      " do not match header " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  RowMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  if (m.size() && !in.read(reinterpret_cast<char*>(m.data()),
                           static_cast<std::streamsize>(sizeof(double) * m.size()))) {
    throw FormatError("truncated model file");
  }
  return m;
}

inline void put_vector(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
}

inline std::vector<double> get_vector(std::istream& in, std::uint64_t expected) {
  const auto n = get<std::uint64_t>(in);
  if (n != expected) throw FormatError("vector length mismatch in model file");
  std::vector<double> v(n);
  if (n && !in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n))) {
    throw FormatError("truncated model file");
  }
  return v;
}

inline void expect_magic(std::istream& in, const std::string& magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw FormatError("bad magic: not a " + magic + " file");
  }
}

}  // namespace gmatch::binio
