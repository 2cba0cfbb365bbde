#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "fracsys/exponents.hpp"
#include "fracsys/grid.hpp"
#include "fracsys/solver.hpp"

namespace fracsys {

/// Binary little-endian layout: "FWCS", u32 version, u32 dim, u32 n,
/// f64 half_length, f64 time, 8 x f64 (alpha1 alpha2 beta1 beta2 rho1 rho2
/// sigma1 sigma2), then u1 and u2 row-major.
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotHeader {
  std::uint32_t dim = 0;
  std::uint32_t n = 0;
  double half_length = 0.0;
  double time = 0.0;
  std::array<double, 8> params{};
};

void write_snapshot(std::ostream& os, const SpectralGrid& grid, const SystemParams& p, const FieldPair& pair);
void write_snapshot(const std::filesystem::path& path, const SpectralGrid& grid, const SystemParams& p,
                    const FieldPair& pair);

/// Throws FormatError on bad magic/version/truncation or when the header's
/// grid differs from `grid`.
FieldPair read_snapshot(std::istream& is, const SpectralGrid& grid, SnapshotHeader* header = nullptr);
FieldPair read_snapshot(const std::filesystem::path& path, const SpectralGrid& grid,
                        SnapshotHeader* header = nullptr);

inline constexpr const char* kNormSeriesHeader =
    "t,linf_u1,linf_u2,ls_u1,ls_u2,scaled_u1,scaled_u2,mass_u1,mass_u2,picard_iters";

/// 17 significant digits; ls/scaled columns blank when the series has no s.
void write_norm_series(std::ostream& os, const NormSeries& series);
/// Parses what write_norm_series produced; blank columns come back NaN.
NormSeries read_norm_series(std::istream& is);

}  // namespace fracsys
