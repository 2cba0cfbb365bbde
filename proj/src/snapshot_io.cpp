#include "fracsys/snapshot_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "fracsys/errors.hpp"
#include "fracsys/format.hpp"

namespace fracsys {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'W', 'C', 'S'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("snapshot truncated in header");
  return v;
}

std::array<double, 8> pack(const SystemParams& p) {
  return {p.alpha[0], p.alpha[1], p.beta[0], p.beta[1], p.rho[0], p.rho[1], p.sigma[0], p.sigma[1]};
}

}  // namespace

void write_snapshot(std::ostream& os, const SpectralGrid& grid, const SystemParams& p, const FieldPair& pair) {
  if (pair.u1.size() != grid.size() || pair.u2.size() != grid.size()) {
    throw PreconditionError("snapshot fields do not match the grid");
  }
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kSnapshotVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.n()));
  put<double>(os, grid.half_length());
  put<double>(os, pair.time);
  for (double v : pack(p)) put<double>(os, v);
  os.write(reinterpret_cast<const char*>(pair.u1.data()), static_cast<std::streamsize>(pair.u1.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(pair.u2.data()), static_cast<std::streamsize>(pair.u2.size() * sizeof(double)));
  if (!os) throw FormatError("snapshot write failed");
}

void write_snapshot(const std::filesystem::path& path, const SpectralGrid& grid, const SystemParams& p,
                    const FieldPair& pair) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_snapshot(os, grid, p, pair);
}

FieldPair read_snapshot(std::istream& is, const SpectralGrid& grid, SnapshotHeader* header) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad snapshot magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw FormatError("unsupported snapshot version " + std::to_string(version));
  SnapshotHeader h;
  h.dim = get<std::uint32_t>(is);
  h.n = get<std::uint32_t>(is);
  h.half_length = get<double>(is);
  h.time = get<double>(is);
  for (double& v : h.params) v = get<double>(is);
  if (static_cast<int>(h.dim) != grid.dim() || static_cast<int>(h.n) != grid.n() ||
      h.half_length != grid.half_length()) {
    throw FormatError("snapshot grid (dim " + std::to_string(h.dim) + ", n " + std::to_string(h.n) + ", L " +
                      fmt17(h.half_length) + ") does not match the configured grid");
  }
  FieldPair pair;
  pair.time = h.time;
  for (int i = 0; i < 2; ++i) {
    pair[i].resize(grid.size());
    const auto bytes = static_cast<std::streamsize>(grid.size() * sizeof(double));
    if (!is.read(reinterpret_cast<char*>(pair[i].data()), bytes)) throw FormatError("snapshot truncated in data");
  }
  if (header) *header = h;
  return pair;
}

FieldPair read_snapshot(const std::filesystem::path& path, const SpectralGrid& grid, SnapshotHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_snapshot(is, grid, header);
}

void write_norm_series(std::ostream& os, const NormSeries& series) {
  os << kNormSeriesHeader << '\n';
  for (const auto& r : series.rows) {
    os << fmt17(r.t);
    for (double v : r.linf) os << ',' << fmt17(v);
    for (double v : r.ls) os << ',' << (series.s ? fmt17(v) : "");
    for (double v : r.scaled) os << ',' << (series.s ? fmt17(v) : "");
    for (double v : r.mass) os << ',' << fmt17(v);
    os << ',' << r.picard_iters << '\n';
  }
}

NormSeries read_norm_series(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kNormSeriesHeader) throw FormatError("norm series header mismatch");
  NormSeries series;
  bool any_s = false;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 10) throw FormatError("norm series line " + std::to_string(lineno) + ": expected 10 columns");
    auto num = [&](std::size_t c) {
      if (cells[c].empty()) return std::numeric_limits<double>::quiet_NaN();
      try {
        return std::stod(cells[c]);
      } catch (const std::exception&) {
        throw FormatError("norm series line " + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
    };
    NormRow r;
    r.t = num(0);
    r.linf = {num(1), num(2)};
    r.ls = {num(3), num(4)};
    r.scaled = {num(5), num(6)};
    r.mass = {num(7), num(8)};
    r.picard_iters = static_cast<int>(num(9));
    any_s = any_s || !std::isnan(r.ls[0]);
    series.rows.push_back(r);
  }
  if (any_s) series.s = Pair<double>{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  return series;
}

}  // namespace fracsys
