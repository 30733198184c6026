#include "mldp/path_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mldp/errors.hpp"

namespace mldp {

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  const char* p = line.c_str();
  for (;;) {
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) throw ConfigError("csv line " + std::to_string(line_no) + ": expected a number");
    out.push_back(v);
    while (*end == ' ') ++end;
    if (*end == '\0' || *end == '\r') break;
    if (*end != ',') throw ConfigError("csv line " + std::to_string(line_no) + ": expected ','");
    p = end + 1;
  }
  return out;
}

std::size_t header_columns(const std::string& header) {
  std::size_t n = 1;
  for (char c : header) n += c == ',';
  return n;
}

std::ofstream open_out(const std::string& file, bool binary) {
  std::ofstream os(file, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ConfigError("cannot open " + file + " for writing");
  return os;
}

std::ifstream open_in(const std::string& file, bool binary) {
  std::ifstream is(file, binary ? std::ios::binary : std::ios::in);
  if (!is) throw ConfigError("cannot open " + file);
  return is;
}

template <class U>
void put_le(std::ostream& os, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw ShapeError("binary path: truncated input");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_path_csv(std::ostream& os, const PathRecord& path) {
  const std::size_t n = path.dim();
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  os << '\n';
  for (std::size_t k = 0; k < path.n_times(); ++k) {
    os << format_double(path.time_grid[k]);
    for (double x : path.row(k)) os << ',' << format_double(x);
    os << '\n';
  }
}

void write_path_csv(const std::string& file, const PathRecord& path) {
  auto os = open_out(file, false);
  write_path_csv(os, path);
}

PathRecord read_path_csv(std::istream& is, TriplePtr triple, PathKind kind) {
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("path csv: empty input");
  const std::size_t n = triple->dim();
  if (header_columns(line) != n + 1) {
    throw ShapeError("path csv: " + std::to_string(header_columns(line) - 1) + " state columns, grid has " +
                     std::to_string(n));
  }
  PathRecord path;
  path.triple = std::move(triple);
  path.kind = kind;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto row = parse_row(line, line_no);
    if (row.size() != n + 1) throw ShapeError("path csv line " + std::to_string(line_no) + ": wrong column count");
    path.time_grid.push_back(row[0]);
    path.states.insert(path.states.end(), row.begin() + 1, row.end());
  }
  if (path.time_grid.empty()) throw ShapeError("path csv: no rows");
  return path;
}

PathRecord read_path_csv(const std::string& file, TriplePtr triple, PathKind kind) {
  auto is = open_in(file, false);
  return read_path_csv(is, std::move(triple), kind);
}

void write_path_binary(std::ostream& os, const PathRecord& path) {
  const DiscreteTriple& t = *path.triple;
  os.write("MLDP1", 5);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(path.kind));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.n_times()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.dim()));
  put_f64(os, t.domain_left);
  put_f64(os, t.domain_right);
  put_f64(os, t.alpha);
  for (std::size_t k = 0; k < path.n_times(); ++k) {
    put_f64(os, path.time_grid[k]);
    for (double x : path.row(k)) put_f64(os, x);
  }
}

void write_path_binary(const std::string& file, const PathRecord& path) {
  auto os = open_out(file, true);
  write_path_binary(os, path);
}

PathRecord read_path_binary(std::istream& is) {
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, "MLDP1", 5) != 0) throw ShapeError("binary path: bad magic");
  const auto kind = get_le<std::uint8_t>(is);
  if (kind > 2) throw ShapeError("binary path: unknown kind");
  const auto rows = get_le<std::uint32_t>(is);
  const auto dim = get_le<std::uint32_t>(is);
  const double left = get_f64(is);
  const double right = get_f64(is);
  const double alpha = get_f64(is);
  PathRecord path;
  path.triple = build_triple(left, right, static_cast<int>(dim) + 1, alpha);
  path.kind = static_cast<PathKind>(kind);
  path.time_grid.resize(rows);
  path.states.resize(static_cast<std::size_t>(rows) * dim);
  for (std::size_t k = 0; k < rows; ++k) {
    path.time_grid[k] = get_f64(is);
    for (std::size_t i = 0; i < dim; ++i) path.states[k * dim + i] = get_f64(is);
  }
  return path;
}

PathRecord read_path_binary(const std::string& file) {
  auto is = open_in(file, true);
  return read_path_binary(is);
}

void write_control_csv(std::ostream& os, const ControlPath& control) {
  os << 't';
  for (std::size_t j = 1; j <= control.modes; ++j) os << ",phi_" << j;
  os << '\n';
  const std::size_t nk = control.n_intervals();
  for (std::size_t k = 0; k <= nk; ++k) {
    os << format_double(control.time_grid[k]);
    for (double x : control.row(k < nk ? k : nk - 1)) os << ',' << format_double(x);
    os << '\n';
  }
}

void write_control_csv(const std::string& file, const ControlPath& control) {
  auto os = open_out(file, false);
  write_control_csv(os, control);
}

ControlPath read_control_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ShapeError("control csv: empty input");
  ControlPath c;
  c.modes = header_columns(line) - 1;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto row = parse_row(line, line_no);
    if (row.size() != c.modes + 1) throw ShapeError("control csv line " + std::to_string(line_no) + ": wrong column count");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ShapeError("control csv: need at least two time points");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    c.time_grid.push_back(rows[k][0]);
    if (k + 1 < rows.size()) c.values.insert(c.values.end(), rows[k].begin() + 1, rows[k].end());
  }
  return c;
}

ControlPath read_control_csv(const std::string& file) {
  auto is = open_in(file, false);
  return read_control_csv(is);
}

}  // namespace mldp
