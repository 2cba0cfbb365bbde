#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fracsys/grid.hpp"

namespace fracsys {

enum class KernelMethod { closed_form_gaussian, closed_form_cauchy, fourier_quadrature };

/// One symmetric alpha-stable density p_alpha(t, x) on R^d, i.e. the
/// fundamental solution of d/dt + (-Delta)^{alpha/2}.
struct KernelSpec {
  double alpha = 2.0;
  int dim = 1;
  KernelMethod method = KernelMethod::closed_form_gaussian;

  /// Closed form when one exists (alpha = 2 or 1), Fourier quadrature otherwise.
  static KernelSpec automatic(double alpha, int dim);
  /// Throws PreconditionError when the invariants do not hold.
  void validate() const;
};

/// p_alpha(t, x) with |x| = r.  The density is radial, so every pointwise
/// routine below works on radii.
double eval_density_radial(const KernelSpec& spec, double t, double r);
double eval_density(const KernelSpec& spec, double t, std::span<const double> x);

/// Peak value p_alpha(t, 0) = omega_d Gamma(d/alpha) / (alpha (2 pi)^d t^{d/alpha}).
double density_peak(const KernelSpec& spec, double t);

/// Leading tail constant: p_alpha(1, x) ~ C |x|^{-d-alpha} as |x| -> inf (alpha < 2).
double tail_constant(double alpha, int dim);

/// Mass of p_alpha(t, .) outside the box [-L, L)^d.  Exact for alpha = 2,
/// an asymptotic ball-tail estimate for alpha < 2 (an upper bound at alpha = 1).
double tail_mass_bound(const KernelSpec& spec, double t, double half_length);

struct GridDensity {
  Field values;
  /// Entries in [-floor, -1e-12 * peak) that were clamped to zero.
  std::size_t clamped = 0;
  /// Most negative value before clamping.
  double min_value = 0.0;
  double mass = 0.0;
  double tail_mass_bound = 0.0;
};

/// Relative negative-ringing floor beyond which eval_density_grid throws.
inline constexpr double kTruncationFloor = 1e-6;

/// Periodized density on the grid via inverse FFT of exp(-t |xi|^alpha).
/// Throws TruncationError when ringing goes below -kTruncationFloor * peak.
GridDensity eval_density_grid(const KernelSpec& spec, double t, const SpectralGrid& grid);

/// max_r |p(ts, r) - t^{-d/alpha} p(s, t^{-1/alpha} r)| / p(ts, r)
double check_scaling(const KernelSpec& spec, double t, double s, std::span<const double> radii);

struct DominationResult {
  bool holds = true;
  double min_margin = 0.0;
};

/// p(t, r) - (s/t)^{d/alpha} p(s, r) >= -tol for every radius (t >= s > 0).
DominationResult check_monotone_domination(const KernelSpec& spec, double t, double s,
                                           std::span<const double> radii, double tol = 1e-12);

/// ||p(t, .)||_mu by radial quadrature plus the analytic heavy-tail remainder.
double lp_norm(const KernelSpec& spec, double t, double mu);
/// Same, sharing density evaluations across several exponents.
std::vector<double> lp_norms(const KernelSpec& spec, double t, std::span<const double> mus);

/// max over the grid of |(p(t) * p(s))(x) - p(t + s, x)|, convolution done spectrally.
double semigroup_residual(const KernelSpec& spec, double t, double s, const SpectralGrid& grid);

struct CrossDomination {
  double c = 0.0;
  double argmax_t = 0.0;
  double argmax_r = 0.0;
};

/// sup over samples of p_{alpha_i}(t, r) / p_{alpha_a}(t^{alpha_a/alpha_i}, r).
CrossDomination cross_domination_constant(double alpha_i, double alpha_a, int dim,
                                          std::span<const double> times,
                                          std::span<const double> radii);

struct CrossDominationSweep {
  CrossDomination coarse;
  CrossDomination refined;
  double relative_change = 0.0;
  bool stable = false;
};

/// Log-spaced time samples in [t_lo, t_hi] and uniform radii in [0, r_max],
/// repeated at twice the resolution; stable when the estimate moves < 1%.
CrossDominationSweep cross_domination_sweep(double alpha_i, double alpha_a, int dim,
                                            double t_lo, double t_hi, double r_max,
                                            int n_times, int n_radii);

}  // namespace fracsys
