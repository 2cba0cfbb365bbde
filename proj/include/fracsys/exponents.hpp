#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fracsys {

/// Exponent arithmetic runs in x87 extended precision; several combinations
/// nearly cancel at window edges.
using Real = long double;

template <class T>
using Pair = std::array<T, 2>;

/// Constants of the coupled system
///   du_i/dt = rho_i t^{rho_i - 1} Delta_{alpha_i} u_i + t^{sigma_i} u_j^{beta_i},  j = 3 - i.
struct SystemParams {
  Pair<double> alpha{2.0, 2.0};
  Pair<double> beta{2.0, 2.0};
  Pair<double> rho{1.0, 1.0};
  Pair<double> sigma{0.0, 0.0};
  int dim = 1;

  /// 0 < alpha_i <= 2, beta_i > 1, rho_i > 0, sigma_i > -1, dim >= 1.
  void validate() const;
  /// Same system with the component labels exchanged.
  SystemParams swapped() const;
  /// Component with the smallest alpha (1-based); ties go to 1.
  int slow_index() const { return alpha[1] < alpha[0] ? 2 : 1; }

  bool operator==(const SystemParams&) const = default;
};

/// Open interval (lo, hi); empty when lo >= hi.
struct Interval {
  Real lo = 0;
  Real hi = 0;
  bool empty() const { return !(lo < hi); }
  bool contains(Real x) const { return lo < x && x < hi; }
  Real midpoint() const { return (lo + hi) / 2; }
};

struct WindowResult {
  Pair<Real> x_tilde{};
  Pair<Real> rho_tilde{};
  Pair<Real> k_tilde{};
  Interval window;
};

/// Global-existence window max{x~_1, x~_2} < Delta < min{1, rho~_1, rho~_2, max{k~_1, k~_2}}.
WindowResult compute_window(const SystemParams& p);

struct NormExponents {
  Pair<Real> r{};            ///< Lebesgue exponent of the initial data
  Pair<Real> s{};            ///< Lebesgue exponent of the decay estimate
  Pair<Real> xi{};           ///< decay rate of ||u_i(t)||_{s_i}
  Pair<Real> delta_small{};  ///< (d/alpha_i)(beta_i/s_j - 1/s_i)
  Pair<Real> x{};            ///< (1 + beta_i)/(beta_i beta_j - 1)
  Pair<Real> eta{};          ///< linear-term time exponent, vanishes by construction
  Pair<Real> theta{};        ///< nonlinear-term time exponent, vanishes by construction
  /// Max absolute residual over the algebraic identities the exponents obey.
  Real identity_residual = 0;
};

/// r, s, xi, delta for an admissible Delta.  Throws PreconditionError when
/// Delta is outside the window or a denominator is not positive.
NormExponents derive_norm_exponents(const SystemParams& p, Real delta);

struct AdmissibilityCheck {
  std::string name;
  int role_i = 1;  ///< 1-based index playing the role of i
  Real margin = 0;
  bool passed = false;
};

/// Every inequality the local-existence and bootstrap steps need, for both
/// role assignments (i, j) = (1, 2) and (2, 1).  Positive margin = slack.
std::vector<AdmissibilityCheck> check_admissibility(const SystemParams& p, const Pair<Real>& r,
                                                    const Pair<Real>& s);

struct KHatResult {
  Pair<Real> k_hat{};
  /// Window for essential boundedness: upper end uses max_i min{k~_i, k^_i}.
  Interval bounded_window;
};

KHatResult compute_k_hat(const SystemParams& p);

struct SelfSimilarCheck {
  bool applicable = false;
  Pair<Real> theta{};
  Real lhs = 0;  ///< (1 + max{...}) / (beta_1 beta_2 - 1)
  Real rhs = 0;  ///< d rho / alpha
};

/// Equal generators with rho <= 1 and the strict exponent inequality.
SelfSimilarCheck theorem3_check(const SystemParams& p);

enum class Regime { GlobalSmallData, GlobalSmallDataBounded, Theorem3SelfSimilar, NoGuarantee };

std::string to_string(Regime r);

struct ExponentReport {
  SystemParams params;
  int a_index = 1;
  Pair<Real> x_tilde{}, rho_tilde{}, k_tilde{}, k_hat{};
  Interval window;
  Interval window_bounded;
  /// Chosen Delta; NaN when the window is empty.
  Real delta = 0;
  NormExponents norms;
  /// Exponent of the t-term in the L-infinity bound:
  /// sigma_i - beta_i xi_j - rho_i d beta_i / (alpha_i s_j) + 1.
  Pair<Real> linf_exponent{};
  Pair<Real> theta3{};
  bool theorem3 = false;
  /// 1-based index whose k~ attains the max (ties go to 1).
  int role_i = 1;
  std::vector<AdmissibilityCheck> admissibility;
  /// All checks of the active role passed.
  bool admissible = false;
  Regime regime = Regime::NoGuarantee;

  bool has_exponents() const { return !window.empty(); }
};

/// Assemble the full report.  Default Delta is the midpoint of the bounded
/// window when it is nonempty, otherwise of the global window.
ExponentReport classify(const SystemParams& p, std::optional<double> delta = std::nullopt);

/// `key = value` lines, 17 significant digits.
std::string report_key_values(const ExponentReport& rep);
std::string report_csv_header();
std::string report_csv_row(const ExponentReport& rep);

}  // namespace fracsys
