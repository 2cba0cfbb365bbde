#include "fracsys/stable_kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fracsys/errors.hpp"

namespace fracsys {

namespace {

using std::numbers::pi;
using Gauss20 = boost::math::quadrature::gauss<double, 20>;

double sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

/// Radial normalization omega_d / (2 pi)^d.
double radial_prefactor(int d) { return sphere_area(d) / std::pow(2.0 * pi, d); }

/// Normalized radial Fourier kernel: Gamma(d/2) (2/z)^{d/2-1} J_{d/2-1}(z), equal to 1 at z = 0.
double radial_wave(int d, double z) {
  switch (d) {
    case 1:
      return std::cos(z);
    case 2:
      return ::j0(z);
    case 3:
      return std::abs(z) < 1e-6 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
    default: {
      if (z < 1e-8) return 1.0;
      const double nu = 0.5 * d - 1.0;
      return std::tgamma(0.5 * d) * std::pow(2.0 / z, nu) * std::cyl_bessel_j(nu, z);
    }
  }
}

template <class F>
double gauss_panel(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& x = Gauss20::abscissa();
  const auto& w = Gauss20::weights();
  // Boost stores the non-negative half of a symmetric rule; x[0] = 0 only
  // for odd orders.
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      acc += w[i] * f(mid);
    } else {
      acc += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
    }
  }
  return acc * half;
}

/// int_0^K e^{-t k^alpha} k^{d-1} wave(k r) dk on `panels` uniform panels,
/// with the first panel refined geometrically toward the k^alpha cusp at 0.
double radial_fourier_sum(double alpha, int d, double t, double r, double cutoff, int panels) {
  auto integrand = [&](double k) {
    return std::exp(-t * std::pow(k, alpha)) * std::pow(k, d - 1) * radial_wave(d, k * r);
  };
  const double width = cutoff / panels;
  double acc = 0.0;
  constexpr double ratio = 0.2;
  constexpr int levels = 18;
  double hi = width;
  for (int m = 0; m < levels; ++m) {
    const double lo = hi * ratio;
    acc += gauss_panel(integrand, lo, hi);
    hi = lo;
  }
  acc += gauss_panel(integrand, 0.0, hi);
  for (int p = 1; p < panels; ++p) acc += gauss_panel(integrand, p * width, (p + 1) * width);
  return acc;
}

double quadrature_density(double alpha, int d, double t, double r) {
  // Beyond this cutoff e^{-t k^alpha} k^{d-1} is below double resolution of the peak.
  const double cutoff = std::pow((40.0 + 2.0 * (d - 1)) / t, 1.0 / alpha);
  const double scale = std::tgamma(static_cast<double>(d) / alpha) /
                       (alpha * std::pow(t, static_cast<double>(d) / alpha));
  int panels = std::max(8, static_cast<int>(std::ceil(2.0 * cutoff * r / pi)));
  double prev = radial_fourier_sum(alpha, d, t, r, cutoff, panels);
  double residual = 0.0;
  constexpr int max_panels = 1 << 17;
  while (panels <= max_panels) {
    panels *= 2;
    const double next = radial_fourier_sum(alpha, d, t, r, cutoff, panels);
    residual = std::abs(next - prev);
    if (residual <= 1e-13 * scale + 1e-12 * std::abs(next)) {
      return radial_prefactor(d) * next;
    }
    prev = next;
  }
  throw NumericError("eval_density: radial quadrature did not converge", residual / scale);
}

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("stable density requires t > 0");
}

}  // namespace

KernelSpec KernelSpec::automatic(double alpha, int dim) {
  KernelSpec spec{alpha, dim, KernelMethod::fourier_quadrature};
  if (alpha == 2.0) spec.method = KernelMethod::closed_form_gaussian;
  if (alpha == 1.0) spec.method = KernelMethod::closed_form_cauchy;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw PreconditionError("KernelSpec: alpha must lie in (0, 2]");
  if (dim < 1) throw PreconditionError("KernelSpec: dim must be >= 1");
  if (method == KernelMethod::closed_form_gaussian && alpha != 2.0)
    throw PreconditionError("KernelSpec: Gaussian closed form requires alpha = 2");
  if (method == KernelMethod::closed_form_cauchy && alpha != 1.0)
    throw PreconditionError("KernelSpec: Cauchy closed form requires alpha = 1");
}

double eval_density_radial(const KernelSpec& spec, double t, double r) {
  check_time(t);
  r = std::abs(r);
  const int d = spec.dim;
  switch (spec.method) {
    case KernelMethod::closed_form_gaussian:
      return std::pow(4.0 * pi * t, -0.5 * d) * std::exp(-r * r / (4.0 * t));
    case KernelMethod::closed_form_cauchy:
      return std::tgamma(0.5 * (d + 1)) * std::pow(pi, -0.5 * (d + 1)) * t *
             std::pow(t * t + r * r, -0.5 * (d + 1));
    case KernelMethod::fourier_quadrature:
      return quadrature_density(spec.alpha, d, t, r);
  }
  return 0.0;
}

double eval_density(const KernelSpec& spec, double t, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.dim) throw PreconditionError("eval_density: point dimension mismatch");
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  return eval_density_radial(spec, t, std::sqrt(r2));
}

double density_peak(const KernelSpec& spec, double t) {
  check_time(t);
  const double d = spec.dim;
  return radial_prefactor(spec.dim) * std::tgamma(d / spec.alpha) /
         (spec.alpha * std::pow(t, d / spec.alpha));
}

double tail_constant(double alpha, int dim) {
  const double d = dim;
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (d + alpha)) /
         (std::pow(pi, 0.5 * d) * std::tgamma(1.0 - 0.5 * alpha));
}

double tail_mass_bound(const KernelSpec& spec, double t, double half_length) {
  check_time(t);
  if (spec.alpha == 2.0) {
    const double inside = std::erf(half_length / (2.0 * std::sqrt(t)));
    return 1.0 - std::pow(inside, spec.dim);
  }
  const double bound = sphere_area(spec.dim) * tail_constant(spec.alpha, spec.dim) * t *
                       std::pow(half_length, -spec.alpha) / spec.alpha;
  return std::min(1.0, bound);
}

GridDensity eval_density_grid(const KernelSpec& spec, double t, const SpectralGrid& grid) {
  check_time(t);
  if (grid.dim() != spec.dim) throw PreconditionError("eval_density_grid: grid/spec dimension mismatch");
  const auto power = grid.symbol_power(spec.alpha);
  const auto phase = grid.origin_phase();
  const double inv_cell = 1.0 / grid.cell_volume();
  SpectralField spec_values(grid.spectral_size());
  for (std::size_t f = 0; f < spec_values.size(); ++f)
    spec_values[f] = std::exp(-t * power[f]) * phase[f] * inv_cell;

  GridDensity out;
  Fft fft(grid);
  fft.inverse(spec_values, out.values);
  symmetrize(grid, out.values);

  const double peak = norm_linf(out.values);
  out.min_value = *std::min_element(out.values.begin(), out.values.end());
  if (out.min_value < -kTruncationFloor * peak) {
    throw TruncationError("eval_density_grid: negative ringing " + std::to_string(out.min_value) +
                          " exceeds the floor; refine the grid or enlarge t");
  }
  for (double& v : out.values) {
    if (v < 0.0) {
      if (v < -1e-12 * peak) ++out.clamped;
      v = 0.0;
    }
  }
  out.mass = mass(out.values, grid.cell_volume());
  out.tail_mass_bound = tail_mass_bound(spec, t, grid.half_length());
  return out;
}

double check_scaling(const KernelSpec& spec, double t, double s, std::span<const double> radii) {
  check_time(t);
  check_time(s);
  const double d = spec.dim;
  double worst = 0.0;
  for (double r : radii) {
    const double lhs = eval_density_radial(spec, t * s, r);
    const double rhs = std::pow(t, -d / spec.alpha) *
                       eval_density_radial(spec, s, std::pow(t, -1.0 / spec.alpha) * r);
    worst = std::max(worst, std::abs(lhs - rhs) / lhs);
  }
  return worst;
}

DominationResult check_monotone_domination(const KernelSpec& spec, double t, double s,
                                           std::span<const double> radii, double tol) {
  check_time(s);
  if (t < s) throw PreconditionError("check_monotone_domination requires t >= s");
  DominationResult res;
  res.min_margin = std::numeric_limits<double>::infinity();
  const double factor = std::pow(s / t, spec.dim / spec.alpha);
  for (double r : radii) {
    const double margin = eval_density_radial(spec, t, r) - factor * eval_density_radial(spec, s, r);
    res.min_margin = std::min(res.min_margin, margin);
  }
  if (radii.empty()) res.min_margin = 0.0;
  res.holds = res.min_margin >= -tol;
  return res;
}

std::vector<double> lp_norms(const KernelSpec& spec, double t, std::span<const double> mus) {
  check_time(t);
  for (double mu : mus)
    if (!(mu >= 1.0)) throw DomainError("lp_norm requires mu >= 1");
  const int d = spec.dim;
  const double ell = std::pow(t, 1.0 / spec.alpha);
  const bool heavy = spec.alpha < 2.0;
  const double r_max = (heavy ? 50.0 : 15.0) * ell;

  // Panels: four uniform ones on [0, ell], then geometric growth to r_max.
  std::vector<double> edges;
  for (int i = 0; i <= 4; ++i) edges.push_back(0.25 * i * ell);
  while (edges.back() < r_max) edges.push_back(std::min(r_max, edges.back() * 1.25));

  std::vector<double> acc(mus.size(), 0.0);
  const auto& x = Gauss20::abscissa();
  const auto& w = Gauss20::weights();
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int sign : {-1, 1}) {
        if (x[i] == 0.0 && sign > 0) continue;
        const double r = mid + sign * half * x[i];
        const double density = eval_density_radial(spec, t, r);
        const double jac = w[i] * half * std::pow(r, d - 1);
        for (std::size_t m = 0; m < mus.size(); ++m) acc[m] += jac * std::pow(density, mus[m]);
      }
    }
  }

  std::vector<double> out(mus.size());
  const double area = sphere_area(d);
  for (std::size_t m = 0; m < mus.size(); ++m) {
    double integral = area * acc[m];
    if (heavy) {
      const double mu = mus[m];
      const double amplitude = tail_constant(spec.alpha, d) * t;
      const double decay = mu * (d + spec.alpha) - d;
      integral += area * std::pow(amplitude, mu) * std::pow(r_max, -decay) / decay;
    }
    out[m] = std::pow(integral, 1.0 / mus[m]);
  }
  return out;
}

double lp_norm(const KernelSpec& spec, double t, double mu) {
  const double mus[1] = {mu};
  return lp_norms(spec, t, mus)[0];
}

double semigroup_residual(const KernelSpec& spec, double t, double s, const SpectralGrid& grid) {
  check_time(t);
  check_time(s);
  const auto pt = eval_density_grid(spec, t, grid);
  const auto ps = eval_density_grid(spec, s, grid);
  const auto pts = eval_density_grid(spec, t + s, grid);

  Fft fft(grid);
  SpectralField a, b;
  fft.forward(pt.values, a);
  fft.forward(ps.values, b);
  // Cyclic convolution of arrays anchored at x = -L lands shifted by L;
  // the (-1)^k phase undoes the shift.
  const auto phase = grid.origin_phase();
  const double cell = grid.cell_volume();
  for (std::size_t f = 0; f < a.size(); ++f) a[f] *= b[f] * (phase[f] * cell);
  Field conv;
  fft.inverse(a, conv);

  double worst = 0.0;
  for (std::size_t i = 0; i < conv.size(); ++i) worst = std::max(worst, std::abs(conv[i] - pts.values[i]));
  return worst;
}

CrossDomination cross_domination_constant(double alpha_i, double alpha_a, int dim,
                                          std::span<const double> times,
                                          std::span<const double> radii) {
  if (!(alpha_a > 0.0 && alpha_a <= alpha_i && alpha_i <= 2.0))
    throw PreconditionError("cross_domination_constant requires 0 < alpha_a <= alpha_i <= 2");
  const auto pi_spec = KernelSpec::automatic(alpha_i, dim);
  const auto pa_spec = KernelSpec::automatic(alpha_a, dim);
  CrossDomination out;
  for (double t : times) {
    const double ta = std::pow(t, alpha_a / alpha_i);
    for (double r : radii) {
      const double num = eval_density_radial(pi_spec, t, r);
      const double den = eval_density_radial(pa_spec, ta, r);
      if (num == 0.0 && den == 0.0) continue;  // both underflow: no information
      const double ratio = num / den;
      if (!std::isfinite(ratio))
        throw NumericError("cross_domination_constant: non-finite density ratio", ratio);
      if (ratio > out.c) out = {ratio, t, r};
    }
  }
  return out;
}

CrossDominationSweep cross_domination_sweep(double alpha_i, double alpha_a, int dim, double t_lo,
                                            double t_hi, double r_max, int n_times, int n_radii) {
  auto samples = [&](int nt, int nr) {
    std::vector<double> times(nt), radii(nr);
    for (int k = 0; k < nt; ++k)
      times[k] = t_lo * std::pow(t_hi / t_lo, nt == 1 ? 0.0 : static_cast<double>(k) / (nt - 1));
    for (int k = 0; k < nr; ++k) radii[k] = r_max * static_cast<double>(k) / std::max(1, nr - 1);
    return cross_domination_constant(alpha_i, alpha_a, dim, times, radii);
  };
  CrossDominationSweep sweep;
  sweep.coarse = samples(n_times, n_radii);
  sweep.refined = samples(2 * n_times - 1, 2 * n_radii - 1);
  sweep.relative_change = std::abs(sweep.refined.c - sweep.coarse.c) / sweep.refined.c;
  sweep.stable = std::isfinite(sweep.refined.c) && sweep.relative_change < 0.01;
  return sweep;
}

}  // namespace fracsys
