#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracsys/exponents.hpp"
#include "fracsys/grid.hpp"
#include "fracsys/solver.hpp"

namespace fracsys {

struct DecayReport {
  int component = 1;
  double s_index = 0.0;
  double xi = 0.0;
  /// sup of t^xi ||u(t)||_s over t in [1, T].
  double sup_scaled = 0.0;
  /// Scaled value at the first node with t >= 1, and at T.
  double scaled_at_one = 0.0;
  double scaled_final = 0.0;
  /// Least-squares slope of log ||u(t)||_s against log t over the tail.
  double fitted_slope = 0.0;
  double slope_target = 0.0;
  bool verdict = false;
};

/// Needs at least this many nodes with t >= 1.
inline constexpr std::size_t kMinDecayNodes = 10;

/// Reads the ls/scaled columns of the series.  tail_fraction picks the last
/// part of the [1, T] nodes used for the slope fit.
std::array<DecayReport, 2> decay_report(const NormSeries& series, const DecayExponents& ex,
                                        double tail_fraction = 0.5);
/// Same, after checking that the regime carries a decay estimate.
std::array<DecayReport, 2> decay_report(const NormSeries& series, const ExponentReport& rep,
                                        double tail_fraction = 0.5);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct LinfBoundReport {
  int component = 1;
  /// sigma_i - beta_i xi_j - rho_i d beta_i / (alpha_i s_j) + 1
  double exponent = 0.0;
  double phi_linf = 0.0;
  double c = 0.0;
  /// max_t ||u(t)||_inf / (c (||phi||_inf + t^e)) - 1, clipped at 0.
  double max_exceedance = 0.0;
  double worst_t = 0.0;
  bool verdict = false;
};

/// c is the smallest constant that bounds the early part t <= T/4 of the
/// series; the check then runs on every node.  Needs a nonempty bounded window.
std::array<LinfBoundReport, 2> linf_bound_check(const NormSeries& series, const ExponentReport& rep,
                                                double tolerance = 0.05);

struct EnvelopeReport {
  int component = 1;
  double fitted_c = 0.0;
  double fitted_k = 0.0;
  double max_ratio_violation = 0.0;
  /// R_i at the t = 0 snapshot (NaN when absent).
  double ratio_at_zero = 0.0;
  /// max over t and x of |u_i / (eps p(1 + t^rho, x)) - 1| where p is above
  /// kFlatnessMask of its peak.  Zero for a purely linear run.
  double compensated_spread = 0.0;
  std::vector<double> times;
  std::vector<double> ratios;
  bool verdict = false;
};

/// Grid points whose envelope density is below this fraction of its peak are skipped.
inline constexpr double kEnvelopeMask = 1e-12;
/// Flatness is judged only where FFT roundoff (~1e-17 of the peak) stays far
/// below the tolerance; at kEnvelopeMask it alone is ~1e-5 relative.
inline constexpr double kFlatnessMask = 1e-6;

/// R_i(t) = max_x u_i(t, x) / [(1 + t^rho)^{d/alpha} p(1 + t^rho, x)] with the
/// periodized grid density, fitted as c eps (1 + t)^{-k} on t >= 1.
std::array<EnvelopeReport, 2> selfsimilar_envelope_check(const std::vector<FieldPair>& snapshots,
                                                         const SystemParams& params, double epsilon,
                                                         const SpectralGrid& grid, double tolerance = 0.10);

struct ComparisonReport {
  bool holds = true;
  /// min over snapshots and points of u - v.
  double worst_margin = 0.0;
  /// worst_margin / ||u(t)||_inf at the worst snapshot.
  double worst_relative = 0.0;
  double worst_t = 0.0;
  int worst_component = 1;
  std::size_t worst_index = 0;
};

/// u_i >= v_i - rel_tol ||u_i(t)||_inf on every shared snapshot.
ComparisonReport comparison_check(const std::vector<FieldPair>& u, const std::vector<FieldPair>& v,
                                  double rel_tol = 1e-9);

struct VerificationSummary {
  std::string run_id;
  Regime regime = Regime::NoGuarantee;
  std::optional<std::array<DecayReport, 2>> decay;
  std::optional<std::array<LinfBoundReport, 2>> linf;
  std::optional<std::array<EnvelopeReport, 2>> envelope;
  /// False when the run stopped early; the verdict is then false.
  bool completed = true;
  /// Checks that could not run, with the reason.
  std::vector<std::string> skipped;
  bool verdict() const;
};

std::string summary_key_values(const VerificationSummary& s);
inline constexpr const char* kSweepSummaryHeader =
    "run_id,regime,sup_scaled_u1,sup_scaled_u2,slope_u1,slope_u2,env_k,env_c,verdict";
std::string summary_csv_row(const VerificationSummary& s);

}  // namespace fracsys
