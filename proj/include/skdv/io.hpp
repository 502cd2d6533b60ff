#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "skdv/diagnostics.hpp"

namespace skdv {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Little-endian byte packing
// ---------------------------------------------------------------------------

namespace bytes {

inline void put_u32(std::string& out, std::uint32_t x) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((x >> (8 * k)) & 0xffu));
}
inline void put_u64(std::string& out, std::uint64_t x) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((x >> (8 * k)) & 0xffu));
}
inline void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

class Reader {
 public:
  Reader(std::string_view data, std::string origin) : data_(data), origin_(std::move(origin)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int k = 0; k < 4; ++k) x |= static_cast<std::uint32_t>(byte(pos_ + k)) << (8 * k);
    pos_ += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int k = 0; k < 8; ++k) x |= static_cast<std::uint64_t>(byte(pos_ + k)) << (8 * k);
    pos_ += 8;
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(data_[i]); }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw IoError(origin_ + ": truncated file");
  }
  std::string_view data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace bytes

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary file and rename, so readers never see partial files.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": rename failed: " + ec.message());
}

// ---------------------------------------------------------------------------
// Snapshot: "SKDV", u32 version, u64 n, f64 length, center, t, alpha, beta,
// gamma, then n (Re u, Im u) pairs and n values of v; all little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotData {
  FieldState state;
  ModelParams params;
};

inline std::string encode_snapshot(const FieldState& s, const ModelParams& p) {
  s.validate();
  const Grid& g = *s.grid;
  std::string out = "SKDV";
  out.reserve(4 + 4 + 8 * 7 + 24 * g.size());
  bytes::put_u32(out, kSnapshotVersion);
  bytes::put_u64(out, g.size());
  bytes::put_f64(out, g.length());
  bytes::put_f64(out, g.center());
  bytes::put_f64(out, s.t);
  bytes::put_f64(out, p.alpha);
  bytes::put_f64(out, p.beta);
  bytes::put_f64(out, p.gamma);
  for (const auto& z : s.u) {
    bytes::put_f64(out, z.real());
    bytes::put_f64(out, z.imag());
  }
  for (double x : s.v) bytes::put_f64(out, x);
  return out;
}

inline SnapshotData decode_snapshot(bytes::Reader& r) {
  if (r.take(4) != "SKDV") throw IoError(r.origin() + ": not a snapshot (bad magic)");
  const auto version = r.u32();
  if (version != kSnapshotVersion) {
    throw IoError(r.origin() + ": unsupported snapshot version " + std::to_string(version));
  }
  const auto n = r.u64();
  const double length = r.f64();
  const double center = r.f64();
  const double t = r.f64();
  ModelParams p;
  p.alpha = r.f64();
  p.beta = r.f64();
  p.gamma = r.f64();
  if (n > (std::uint64_t{1} << 32) || r.remaining() < 24 * n) {
    throw IoError(r.origin() + ": truncated file");
  }
  GridPtr grid;
  try {
    grid = make_grid(static_cast<std::size_t>(n), length, center);
  } catch (const InvalidArgument& e) {
    throw IoError(r.origin() + ": invalid grid header: " + e.what());
  }
  FieldState s = FieldState::zeros(grid, t);
  for (auto& z : s.u) {
    const double re = r.f64();
    z = {re, r.f64()};
  }
  for (auto& x : s.v) x = r.f64();
  return {std::move(s), p};
}

inline void write_snapshot(const std::filesystem::path& path, const FieldState& s,
                           const ModelParams& p) {
  write_file_atomic(path, encode_snapshot(s, p));
}

inline SnapshotData read_snapshot(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  bytes::Reader r(data, path.string());
  return decode_snapshot(r);
}

// ---------------------------------------------------------------------------
// CSV time series
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"t", "i1", "i2", "i3", "j", "i", "residual_j", "residual_i"};
    for (int k = 1; k <= 8; ++k) c.push_back("a1_" + std::to_string(k));
    c.insert(c.end(), {"a2", "a3", "a4"});
    for (int k = 1; k <= 13; ++k) c.push_back("b" + std::to_string(k));
    c.insert(c.end(), {"mass_v2", "mass_u2", "mass_dv2", "mass_du2", "mass_u4", "pj", "pi",
                       "tailmin_v2", "tailmin_u2", "tailmin_dv2", "tailmin_du2", "tailmin_u4",
                       "tailmin_l2"});
    return c;
  }();
  return cols;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (s == "nan" || s == "-nan") return kNaN;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last) {
    throw IoError("cannot parse number '" + std::string(s) + "'");
  }
  return x;
}

inline std::vector<double> csv_values(const DiagnosticsRecord& r) {
  std::vector<double> v{r.t, r.conserved.i1, r.conserved.i2, r.conserved.i3, r.j, r.i};
  v.push_back(r.has_budget ? r.budget_j.residual : kNaN);
  v.push_back(r.has_budget ? r.budget_i.residual : kNaN);
  for (double a : r.budget_j.a1) v.push_back(r.has_budget ? a : kNaN);
  for (double a : {r.budget_j.a2, r.budget_j.a3, r.budget_j.a4}) v.push_back(r.has_budget ? a : kNaN);
  for (double b : r.budget_i.b) v.push_back(r.has_budget ? b : kNaN);
  for (double m : {r.mass.v2, r.mass.u2, r.mass.dv2, r.mass.du2, r.mass.u4}) {
    v.push_back(r.has_mass ? m : kNaN);
  }
  v.insert(v.end(), {r.pj, r.pi, r.tail_v2, r.tail_u2, r.tail_dv2, r.tail_du2, r.tail_u4, r.tail_l2});
  return v;
}

inline std::string csv_header() {
  std::string s;
  for (const auto& c : csv_columns()) s += (s.empty() ? "" : ",") + c;
  return s + "\n";
}

inline std::string csv_row(const DiagnosticsRecord& r) {
  std::string s;
  bool first = true;
  for (double x : csv_values(r)) {
    if (!first) s += ',';
    s += format_double(x);
    first = false;
  }
  return s + "\n";
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t index(std::string_view name) const {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] == name) return k;
    }
    throw IoError("csv has no column '" + std::string(name) + "'");
  }
  std::vector<double> column(std::string_view name) const {
    const auto k = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text, const std::string& origin = "csv") {
  CsvTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (t.columns.empty()) {
      for (auto c : cells) t.columns.emplace_back(c);
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(t.columns.size()) + " fields, found " +
                    std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) {
      try {
        row.push_back(parse_double(c));
      } catch (const IoError& e) {
        throw IoError(origin + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.string());
}

/// Throws unless the header is exactly the canonical schema.
inline void require_schema(const CsvTable& t, const std::string& origin) {
  if (t.columns != csv_columns()) throw IoError(origin + ": column schema mismatch");
}

}  // namespace skdv
