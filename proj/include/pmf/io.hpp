#ifndef PMF_IO_HPP
#define PMF_IO_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pmf/error.hpp"
#include "pmf/field.hpp"

namespace pmf {

// ---------------------------------------------------------------------------
// PBFLD1 field files
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace detail

/// Header lines PBFLD1, m=, n=, kind=values, a blank line, then n^{2m}
/// little-endian doubles with axis 0 slowest.
inline void write_field(const std::filesystem::path& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out << "PBFLD1\nm=" << f.spec().m << "\nn=" << f.spec().n << "\nkind=values\n\n";
  for (double v : f.values()) {
    const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

/// Reads a PBFLD1 file bit for bit; the result is flagged mean-zero when its
/// grid mean passes the mean-zero tolerance.
inline Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw Error(Errc::io_error, std::string("truncated header, expected ") + what);
    return line;
  };
  if (next("magic") != "PBFLD1") throw Error(Errc::io_error, path.string() + " is not a PBFLD1 file");
  auto value_of = [&](const std::string& key) {
    const std::string l = next(key.c_str());
    if (l.rfind(key + "=", 0) != 0) throw Error(Errc::io_error, "expected header key " + key);
    return l.substr(key.size() + 1);
  };
  int m = 0, n = 0;
  try {
    m = std::stoi(value_of("m"));
    n = std::stoi(value_of("n"));
  } catch (const std::logic_error&) {
    throw Error(Errc::io_error, "malformed m/n header in " + path.string());
  }
  if (value_of("kind") != "values") throw Error(Errc::io_error, "unsupported PBFLD1 kind");
  if (!next("blank line").empty()) throw Error(Errc::io_error, "missing blank line after PBFLD1 header");
  const TorusSpec spec = make_spec(m, n);
  std::vector<double> values(spec.size());
  for (double& v : values) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw Error(Errc::io_error, "truncated PBFLD1 payload in " + path.string());
    v = std::bit_cast<double>(detail::to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::io_error, "trailing bytes in " + path.string());
  Field f = from_values(spec, std::move(values));
  return Field::unchecked(spec, f.data(), is_mean_zero(f));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated table with a fixed header; cells are written as given.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error(Errc::invalid_argument, "CSV row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) text_ << (i ? "," : "") << cells[i];
    text_ << '\n';
    return *this;
  }

  std::string str() const { return text_.str(); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    out << text_.str();
    if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
  }

 private:
  std::size_t columns_;
  std::ostringstream text_;
};

}  // namespace pmf

#endif
