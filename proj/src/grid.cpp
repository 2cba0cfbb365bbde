#include "fracsys/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "fracsys/errors.hpp"

namespace fracsys {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpectralGrid::SpectralGrid(int dim, int n, double half_length)
    : dim_(dim), n_(n), half_length_(half_length) {
  if (dim < 1 || dim > 3) throw PreconditionError("SpectralGrid: dim must be 1, 2 or 3");
  if (n < 8 || !is_power_of_two(n))
    throw PreconditionError("SpectralGrid: n must be a power of two >= 8");
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw PreconditionError("SpectralGrid: half_length must be positive");
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
  spectral_size_ = size_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
}

double SpectralGrid::cell_volume() const noexcept { return std::pow(spacing(), dim_); }

double SpectralGrid::dk() const noexcept { return std::numbers::pi / half_length_; }

void SpectralGrid::unflatten(std::size_t flat, int idx[3]) const noexcept {
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
}

double SpectralGrid::radius2(std::size_t flat) const noexcept {
  int idx[3];
  unflatten(flat, idx);
  double r2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double x = coordinate(idx[a]);
    r2 += x * x;
  }
  return r2;
}

void SpectralGrid::spectral_modes(std::size_t flat, int k[3]) const noexcept {
  const auto last = static_cast<std::size_t>(n_ / 2 + 1);
  k[dim_ - 1] = static_cast<int>(flat % last);
  flat /= last;
  for (int a = dim_ - 2; a >= 0; --a) {
    k[a] = signed_mode(static_cast<int>(flat % static_cast<std::size_t>(n_)));
    flat /= static_cast<std::size_t>(n_);
  }
}

std::size_t SpectralGrid::reflect(std::size_t flat, int axis) const noexcept {
  int idx[3];
  unflatten(flat, idx);
  idx[axis] = (n_ - idx[axis]) % n_;
  std::size_t out = 0;
  for (int a = 0; a < dim_; ++a) out = out * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[a]);
  return out;
}

std::vector<double> SpectralGrid::symbol_power(double alpha) const {
  std::vector<double> out(spectral_size_);
  const double dk0 = dk();
  int k[3];
  for (std::size_t f = 0; f < spectral_size_; ++f) {
    spectral_modes(f, k);
    double k2 = 0.0;
    for (int a = 0; a < dim_; ++a) k2 += static_cast<double>(k[a]) * k[a];
    // |xi|^alpha = (dk^2 k2)^{alpha/2}; exact zero at the mean mode.
    out[f] = k2 == 0.0 ? 0.0 : std::pow(dk0 * dk0 * k2, 0.5 * alpha);
  }
  return out;
}

std::vector<double> SpectralGrid::origin_phase() const {
  std::vector<double> out(spectral_size_);
  int k[3];
  for (std::size_t f = 0; f < spectral_size_; ++f) {
    spectral_modes(f, k);
    int sum = 0;
    for (int a = 0; a < dim_; ++a) sum += k[a];
    out[f] = (sum % 2 == 0) ? 1.0 : -1.0;
  }
  return out;
}

struct Fft::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (real) fftw_free(real);
    if (spec) fftw_free(spec);
  }
};

Fft::Fft(const SpectralGrid& grid) : grid_(grid), impl_(std::make_unique<Impl>()) {
  int dims[3] = {grid.n(), grid.n(), grid.n()};
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->real = fftw_alloc_real(grid.size());
  impl_->spec = fftw_alloc_complex(grid.spectral_size());
  // ESTIMATE never times candidate plans, so plan choice is reproducible.
  impl_->fwd = fftw_plan_dft_r2c(grid.dim(), dims, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r(grid.dim(), dims, impl_->spec, impl_->real, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->bwd) throw std::runtime_error("Fft: FFTW planning failed");
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<const double> in, SpectralField& out) {
  std::memcpy(impl_->real, in.data(), grid_.size() * sizeof(double));
  fftw_execute(impl_->fwd);
  out.resize(grid_.spectral_size());
  std::memcpy(static_cast<void*>(out.data()), impl_->spec,
              grid_.spectral_size() * sizeof(fftw_complex));
}

void Fft::inverse(std::span<const std::complex<double>> in, Field& out) {
  // c2r destroys its input, hence the copy into the plan buffer.
  std::memcpy(impl_->spec, in.data(), grid_.spectral_size() * sizeof(fftw_complex));
  fftw_execute(impl_->bwd);
  out.resize(grid_.size());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = impl_->real[i] * scale;
}

double norm_linf(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double norm_lp(std::span<const double> f, double p, double cell_volume) {
  // Scale by the max to keep large p away from underflow.
  const double m = norm_linf(f);
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : f) acc += std::pow(std::abs(v) / m, p);
  return m * std::pow(acc * cell_volume, 1.0 / p);
}

double mass(std::span<const double> f, double cell_volume) {
  double acc = 0.0;
  for (double v : f) acc += v;
  return acc * cell_volume;
}

void symmetrize(const SpectralGrid& grid, Field& f) {
  for (int axis = 0; axis < grid.dim(); ++axis) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t j = grid.reflect(i, axis);
      if (j <= i) continue;
      const double avg = 0.5 * (f[i] + f[j]);
      f[i] = avg;
      f[j] = avg;
    }
  }
}

void dealias_two_thirds(const SpectralGrid& grid, SpectralField& spec) {
  const int cutoff = grid.n() / 3;
  int k[3];
  for (std::size_t f = 0; f < spec.size(); ++f) {
    grid.spectral_modes(f, k);
    for (int a = 0; a < grid.dim(); ++a) {
      if (std::abs(k[a]) > cutoff) {
        spec[f] = 0.0;
        break;
      }
    }
  }
}

}  // namespace fracsys
