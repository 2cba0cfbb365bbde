#include "fracsys/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracsys/errors.hpp"
#include "fracsys/format.hpp"

namespace fracsys {

namespace {

constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();

struct Lifted {
  Pair<Real> a, b, r, s;
  Real d;
};

Lifted lift(const SystemParams& p) {
  Lifted l;
  for (int i = 0; i < 2; ++i) {
    l.a[i] = p.alpha[i];
    l.b[i] = p.beta[i];
    l.r[i] = p.rho[i];
    l.s[i] = p.sigma[i];
  }
  l.d = p.dim;
  return l;
}

/// Shared numerator d rho_i rho_j (beta_i beta_j - 1); symmetric in i, j.
Real coupling_numerator(const Lifted& l, int i, int j) {
  return l.d * l.r[i] * l.r[j] * (l.b[i] * l.b[j] - 1);
}

/// alpha_j rho_i sigma_j + alpha_i beta_j rho_j sigma_i
Real sigma_mix(const Lifted& l, int i, int j) {
  return l.a[j] * l.r[i] * l.s[j] + l.a[i] * l.b[j] * l.r[j] * l.s[i];
}

/// beta_i (alpha_j rho_i + alpha_i beta_j rho_j)
Real k_denominator(const Lifted& l, int i, int j) {
  return l.b[i] * (l.a[j] * l.r[i] + l.a[i] * l.b[j] * l.r[j]);
}

void require_positive(Real v, const char* what) {
  if (!(v > 0)) {
    throw PreconditionError(std::string("inadmissible parameter/Delta combination: ") + what +
                            " denominator is " + fmt17(v));
  }
}

}  // namespace

void SystemParams::validate() const {
  for (int i = 0; i < 2; ++i) {
    const std::string k = std::to_string(i + 1);
    if (!(alpha[i] > 0.0 && alpha[i] <= 2.0)) throw PreconditionError("alpha" + k + " must lie in (0, 2]");
    if (!(beta[i] > 1.0) || !std::isfinite(beta[i])) throw PreconditionError("beta" + k + " must exceed 1");
    if (!(rho[i] > 0.0) || !std::isfinite(rho[i])) throw PreconditionError("rho" + k + " must be positive");
    if (!(sigma[i] > -1.0) || !std::isfinite(sigma[i])) throw PreconditionError("sigma" + k + " must exceed -1");
  }
  if (dim < 1) throw PreconditionError("dim must be >= 1");
}

SystemParams SystemParams::swapped() const {
  SystemParams q = *this;
  std::swap(q.alpha[0], q.alpha[1]);
  std::swap(q.beta[0], q.beta[1]);
  std::swap(q.rho[0], q.rho[1]);
  std::swap(q.sigma[0], q.sigma[1]);
  return q;
}

WindowResult compute_window(const SystemParams& p) {
  p.validate();
  const Lifted l = lift(p);
  WindowResult w;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    w.x_tilde[i] = (1 + l.b[i] + l.s[i] * (1 - l.b[i] * l.b[j])) / (l.b[i] * (1 + l.b[j]));
    w.rho_tilde[i] = l.r[i] - l.s[i];
    w.k_tilde[i] = (coupling_numerator(l, i, j) - sigma_mix(l, i, j) * l.b[i]) / k_denominator(l, i, j);
  }
  w.window.lo = std::max(w.x_tilde[0], w.x_tilde[1]);
  w.window.hi = std::min({Real{1}, w.rho_tilde[0], w.rho_tilde[1], std::max(w.k_tilde[0], w.k_tilde[1])});
  return w;
}

NormExponents derive_norm_exponents(const SystemParams& p, Real delta) {
  const auto w = compute_window(p);
  if (!w.window.contains(delta)) {
    throw PreconditionError("Delta = " + fmt17(delta) + " outside the window (" + fmt17(w.window.lo) +
                            ", " + fmt17(w.window.hi) + ")");
  }
  const Lifted l = lift(p);
  NormExponents e;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const Real num = coupling_numerator(l, i, j);
    const Real r_den = l.a[i] * l.r[j] * (1 + l.b[i]) + l.a[i] * l.r[j] * l.s[i] +
                       l.b[i] * l.a[j] * l.r[i] * l.s[j] +
                       l.b[i] * (l.a[j] * l.r[i] - l.a[i] * l.r[j]) * delta;
    const Real s_den = l.a[i] * l.r[j] * l.s[i] + l.b[i] * l.a[j] * l.r[i] * l.s[j] +
                       (l.a[i] * l.r[j] + l.b[i] * l.a[j] * l.r[i]) * delta;
    require_positive(r_den, "r");
    require_positive(s_den, "s");
    e.r[i] = num / r_den;
    e.s[i] = num / s_den;
    const Real arj = l.a[i] * l.r[j];
    e.xi[i] = (arj - delta * arj + arj * l.b[i] - delta * arj * l.b[i]) / (arj * (l.b[i] * l.b[j] - 1));
    e.x[i] = (1 + l.b[i]) / (l.b[i] * l.b[j] - 1);
  }
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    e.delta_small[i] = l.d / l.a[i] * (l.b[i] / e.s[j] - 1 / e.s[i]);
  }
  Real worst = 0;
  auto track = [&](Real residual, Real scale) {
    worst = std::max(worst, std::abs(residual) / std::max(Real{1}, std::abs(scale)));
  };
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    e.eta[i] = e.xi[i] + l.s[i] - l.b[i] * e.xi[j] - e.delta_small[i] * l.r[i] + 1;
    e.theta[i] = l.s[i] + (l.s[j] - l.b[j] * e.xi[i] - e.delta_small[j] * l.r[j] + 1) * l.b[i] -
                 e.delta_small[i] * l.r[i] + e.xi[i] + 1;
    track(e.eta[i], l.b[i] * e.xi[j]);
    track(e.theta[i], l.b[i] * l.b[j] * e.xi[i]);
    track(l.r[i] * e.delta_small[i] - l.s[i] - delta, delta);
    track(e.xi[i] - (1 - delta) * e.x[i], e.xi[i]);
    track(e.xi[i] - l.d * l.r[i] / l.a[i] * (1 / e.r[i] - 1 / e.s[i]), e.xi[i]);
  }
  e.identity_residual = worst;
  if (!(worst < 1e-9)) throw NumericError("derive_norm_exponents: identity residual too large", static_cast<double>(worst));
  return e;
}

std::vector<AdmissibilityCheck> check_admissibility(const SystemParams& p, const Pair<Real>& r,
                                                    const Pair<Real>& s) {
  const Lifted l = lift(p);
  std::vector<AdmissibilityCheck> out;
  auto at_least = [&](std::string name, int role, Real lhs, Real rhs) {
    out.push_back({std::move(name), role, lhs - rhs, lhs >= rhs});
  };
  auto less_than = [&](std::string name, int role, Real lhs, Real rhs) {
    out.push_back({std::move(name), role, rhs - lhs, lhs < rhs});
  };
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const int role = i + 1;
    at_least("r_i >= 1", role, r[i], 1);
    at_least("s_i >= 1", role, s[i], 1);
    at_least("s_j >= r_j", role, s[j], r[j]);
    at_least("s_j*beta_j >= r_i", role, s[j] * l.b[j], r[i]);
    at_least("s_i >= r_i", role, s[i], r[i]);
    at_least("s_j >= beta_i", role, s[j], l.b[i]);
    at_least("s_i*beta_i >= s_j", role, s[i] * l.b[i], s[j]);
    less_than("beta_i/s_j - 1/s_i < alpha_i/d", role, l.b[i] / s[j] - 1 / s[i], l.a[i] / l.d);
  }
  return out;
}

KHatResult compute_k_hat(const SystemParams& p) {
  const auto w = compute_window(p);
  const Lifted l = lift(p);
  KHatResult k;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    k.k_hat[i] = ((l.a[i] / l.d) * coupling_numerator(l, i, j) - sigma_mix(l, i, j) * l.b[i]) /
                 k_denominator(l, i, j);
  }
  k.bounded_window.lo = w.window.lo;
  k.bounded_window.hi = std::min({Real{1}, w.rho_tilde[0], w.rho_tilde[1],
                                  std::max(std::min(w.k_tilde[0], k.k_hat[0]), std::min(w.k_tilde[1], k.k_hat[1]))});
  return k;
}

SelfSimilarCheck theorem3_check(const SystemParams& p) {
  p.validate();
  const Lifted l = lift(p);
  SelfSimilarCheck c;
  const Real bb = l.b[0] * l.b[1] - 1;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    c.theta[i] = (1 + l.s[i] + l.b[i] * (1 + l.s[j])) / bb;
  }
  c.lhs = (1 + std::max(l.s[0] + l.b[0] * (1 + l.s[1]), l.s[1] + l.b[1] * (1 + l.s[0]))) / bb;
  c.rhs = l.d * l.r[0] / l.a[0];
  const bool same_generator = p.alpha[0] == p.alpha[1] && p.rho[0] == p.rho[1] && p.rho[0] <= 1.0;
  c.applicable = same_generator && c.lhs < c.rhs;
  return c;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::GlobalSmallData:
      return "GlobalSmallData";
    case Regime::GlobalSmallDataBounded:
      return "GlobalSmallDataBounded";
    case Regime::Theorem3SelfSimilar:
      return "Theorem3SelfSimilar";
    case Regime::NoGuarantee:
      return "NoGuarantee";
  }
  return "?";
}

ExponentReport classify(const SystemParams& p, std::optional<double> delta) {
  const auto w = compute_window(p);
  const auto kh = compute_k_hat(p);
  const auto t3 = theorem3_check(p);

  ExponentReport rep;
  rep.params = p;
  rep.a_index = p.slow_index();
  rep.x_tilde = w.x_tilde;
  rep.rho_tilde = w.rho_tilde;
  rep.k_tilde = w.k_tilde;
  rep.k_hat = kh.k_hat;
  rep.window = w.window;
  rep.window_bounded = kh.bounded_window;
  rep.theta3 = t3.theta;
  rep.theorem3 = t3.applicable;
  rep.role_i = w.k_tilde[1] > w.k_tilde[0] ? 2 : 1;

  const Pair<Real> nan_pair{kNaN, kNaN};
  rep.delta = kNaN;
  rep.norms = {nan_pair, nan_pair, nan_pair, nan_pair, nan_pair, nan_pair, nan_pair, 0};
  rep.linf_exponent = nan_pair;

  if (w.window.empty()) {
    if (delta) {
      throw PreconditionError("Delta given but the existence window (" + fmt17(w.window.lo) + ", " +
                              fmt17(w.window.hi) + ") is empty");
    }
    // Kernel-shaped data still has a guarantee when the self-similar test passes.
    rep.regime = t3.applicable ? Regime::Theorem3SelfSimilar : Regime::NoGuarantee;
    return rep;
  }

  if (delta) {
    if (!w.window.contains(*delta)) {
      throw PreconditionError("Delta = " + fmt17(*delta) + " outside the window (" + fmt17(w.window.lo) +
                              ", " + fmt17(w.window.hi) + ")");
    }
    rep.delta = *delta;
  } else {
    rep.delta = kh.bounded_window.empty() ? w.window.midpoint() : kh.bounded_window.midpoint();
  }

  rep.norms = derive_norm_exponents(p, rep.delta);
  rep.admissibility = check_admissibility(p, rep.norms.r, rep.norms.s);
  rep.admissible = std::all_of(rep.admissibility.begin(), rep.admissibility.end(),
                               [&](const AdmissibilityCheck& c) { return c.role_i != rep.role_i || c.passed; });
  const Lifted l = lift(p);
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    rep.linf_exponent[i] = l.s[i] - l.b[i] * rep.norms.xi[j] -
                           l.r[i] * l.d * l.b[i] / (l.a[i] * rep.norms.s[j]) + 1;
  }
  rep.regime = kh.bounded_window.contains(rep.delta) ? Regime::GlobalSmallDataBounded : Regime::GlobalSmallData;
  return rep;
}

std::string report_key_values(const ExponentReport& rep) {
  std::ostringstream os;
  const auto& p = rep.params;
  auto pair = [&](const std::string& key, const auto& v) {
    os << key << "1 = " << fmt17(v[0]) << '\n' << key << "2 = " << fmt17(v[1]) << '\n';
  };
  pair("alpha", p.alpha);
  pair("beta", p.beta);
  pair("rho", p.rho);
  pair("sigma", p.sigma);
  os << "dim = " << p.dim << '\n';
  os << "a_index = " << rep.a_index << '\n';
  pair("x_tilde", rep.x_tilde);
  pair("rho_tilde", rep.rho_tilde);
  pair("k_tilde", rep.k_tilde);
  pair("k_hat", rep.k_hat);
  os << "window_lo = " << fmt17(rep.window.lo) << '\n';
  os << "window_hi = " << fmt17(rep.window.hi) << '\n';
  os << "window_empty = " << (rep.window.empty() ? "true" : "false") << '\n';
  os << "bounded_window_lo = " << fmt17(rep.window_bounded.lo) << '\n';
  os << "bounded_window_hi = " << fmt17(rep.window_bounded.hi) << '\n';
  os << "bounded_window_empty = " << (rep.window_bounded.empty() ? "true" : "false") << '\n';
  os << "delta = " << fmt17(rep.delta) << '\n';
  pair("r", rep.norms.r);
  pair("s", rep.norms.s);
  pair("xi", rep.norms.xi);
  pair("delta_small", rep.norms.delta_small);
  pair("linf_exponent", rep.linf_exponent);
  pair("theta3_", rep.theta3);
  os << "theorem3 = " << (rep.theorem3 ? "true" : "false") << '\n';
  os << "role_i = " << rep.role_i << '\n';
  os << "admissible = " << (rep.has_exponents() ? (rep.admissible ? "true" : "false") : "") << '\n';
  for (const auto& c : rep.admissibility) {
    if (c.role_i != rep.role_i || c.passed) continue;
    os << "failed_check = " << c.name << " (margin " << fmt17(c.margin) << ")\n";
  }
  os << "regime = " << to_string(rep.regime) << '\n';
  return os.str();
}

std::string report_csv_header() {
  return "alpha1,alpha2,beta1,beta2,rho1,rho2,sigma1,sigma2,dim,a_index,window_lo,window_hi,"
         "bounded_lo,bounded_hi,delta,r1,r2,s1,s2,xi1,xi2,delta1,delta2,k_tilde1,k_tilde2,"
         "k_hat1,k_hat2,theta3_1,theta3_2,theorem3,regime";
}

std::string report_csv_row(const ExponentReport& rep) {
  std::ostringstream os;
  const auto& p = rep.params;
  auto pair = [&](const auto& v) { os << fmt17(v[0]) << ',' << fmt17(v[1]) << ','; };
  pair(p.alpha);
  pair(p.beta);
  pair(p.rho);
  pair(p.sigma);
  os << p.dim << ',' << rep.a_index << ',';
  os << fmt17(rep.window.lo) << ',' << fmt17(rep.window.hi) << ',';
  os << fmt17(rep.window_bounded.lo) << ',' << fmt17(rep.window_bounded.hi) << ',';
  os << fmt17(rep.delta) << ',';
  pair(rep.norms.r);
  pair(rep.norms.s);
  pair(rep.norms.xi);
  pair(rep.norms.delta_small);
  pair(rep.k_tilde);
  pair(rep.k_hat);
  pair(rep.theta3);
  os << (rep.theorem3 ? 1 : 0) << ',' << to_string(rep.regime);
  return os.str();
}

}  // namespace fracsys
