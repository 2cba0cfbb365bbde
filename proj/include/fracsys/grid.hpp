#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fracsys {

using Field = std::vector<double>;
using SpectralField = std::vector<std::complex<double>>;

/// Periodic box [-L, L)^d sampled with n points per axis.
///
/// Real-space samples are stored row-major with x_m = -L + m h.  Spectral
/// arrays use the FFTW r2c layout: the last axis keeps the n/2 + 1
/// non-negative wavenumbers, every other axis uses standard DFT ordering.
class SpectralGrid {
 public:
  SpectralGrid(int dim, int n, double half_length);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  double half_length() const noexcept { return half_length_; }
  double spacing() const noexcept { return 2.0 * half_length_ / n_; }
  /// h^d, the quadrature weight of one cell.
  double cell_volume() const noexcept;
  std::size_t size() const noexcept { return size_; }
  std::size_t spectral_size() const noexcept { return spectral_size_; }

  double coordinate(int m) const noexcept { return -half_length_ + m * spacing(); }
  /// Fundamental wavenumber pi / L.
  double dk() const noexcept;
  /// Signed integer wavenumber of DFT index m on a full axis.
  int signed_mode(int m) const noexcept { return m <= n_ / 2 ? m : m - n_; }

  /// Real-space multi-index of flat index.
  void unflatten(std::size_t flat, int idx[3]) const noexcept;
  /// Squared distance from the origin of flat real-space point.
  double radius2(std::size_t flat) const noexcept;
  /// Integer wavenumbers of a flat spectral index.
  void spectral_modes(std::size_t flat, int k[3]) const noexcept;
  /// Flat index of the point reflected through the origin along `axis`.
  std::size_t reflect(std::size_t flat, int axis) const noexcept;

  /// |xi|^alpha for every spectral index.
  std::vector<double> symbol_power(double alpha) const;
  /// (-1)^{k_1 + ... + k_d}: shift that moves the DFT origin to x = -L.
  std::vector<double> origin_phase() const;

  bool operator==(const SpectralGrid& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_ && half_length_ == other.half_length_;
  }

 private:
  int dim_;
  int n_;
  double half_length_;
  std::size_t size_;
  std::size_t spectral_size_;
};

/// Owns FFTW plans and aligned work buffers for one grid shape.
/// Not safe to share between threads; each worker makes its own.
class Fft {
 public:
  explicit Fft(const SpectralGrid& grid);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  const SpectralGrid& grid() const noexcept { return grid_; }

  void forward(std::span<const double> in, SpectralField& out);
  /// Normalized inverse: inverse(forward(f)) == f up to rounding.
  void inverse(std::span<const std::complex<double>> in, Field& out);

 private:
  struct Impl;
  SpectralGrid grid_;
  std::unique_ptr<Impl> impl_;
};

double norm_linf(std::span<const double> f);
/// (sum |f|^p h^d)^{1/p}
double norm_lp(std::span<const double> f, double p, double cell_volume);
double mass(std::span<const double> f, double cell_volume);

/// Make a field exactly invariant under x -> -x along every axis.
void symmetrize(const SpectralGrid& grid, Field& f);

/// Zero every spectral mode with |k| > n/3 on any axis.
void dealias_two_thirds(const SpectralGrid& grid, SpectralField& spec);

}  // namespace fracsys
