#include "fracsys/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracsys/errors.hpp"
#include "fracsys/format.hpp"
#include "fracsys/stable_kernel.hpp"

namespace fracsys {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientDataError("loglog_slope needs two or more points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw DomainError("loglog_slope needs positive samples");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
  }
  return fit_line(lx, ly).slope;
}

std::array<DecayReport, 2> decay_report(const NormSeries& series, const DecayExponents& ex, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw PreconditionError("tail_fraction must lie in (0, 1]");
  std::vector<const NormRow*> window;
  for (const auto& r : series.rows) {
    if (r.t >= 1.0) window.push_back(&r);
  }
  if (window.size() < kMinDecayNodes) {
    throw InsufficientDataError("decay window [1, T] holds " + std::to_string(window.size()) +
                                " nodes; at least " + std::to_string(kMinDecayNodes) + " needed");
  }
  const std::size_t tail =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(tail_fraction * window.size())));
  std::array<DecayReport, 2> out;
  for (int i = 0; i < 2; ++i) {
    DecayReport& d = out[i];
    d.component = i + 1;
    d.s_index = ex.s[i];
    d.xi = ex.xi[i];
    d.slope_target = -ex.xi[i];
    d.sup_scaled = 0.0;
    bool finite = true;
    for (const NormRow* r : window) {
      if (!std::isfinite(r->scaled[i])) finite = false;
      d.sup_scaled = std::max(d.sup_scaled, r->scaled[i]);
    }
    d.scaled_at_one = window.front()->scaled[i];
    d.scaled_final = window.back()->scaled[i];
    std::vector<double> ts, ls;
    for (std::size_t k = window.size() - tail; k < window.size(); ++k) {
      ts.push_back(window[k]->t);
      ls.push_back(window[k]->ls[i]);
    }
    d.fitted_slope = loglog_slope(ts, ls);
    d.verdict = finite && std::isfinite(d.sup_scaled) && d.scaled_final <= 1.10 * d.scaled_at_one;
  }
  return out;
}

std::array<DecayReport, 2> decay_report(const NormSeries& series, const ExponentReport& rep, double tail_fraction) {
  const auto ex = decay_exponents(rep);
  if (!ex) throw PreconditionError("decay_report: regime " + to_string(rep.regime) + " carries no decay estimate");
  return decay_report(series, *ex, tail_fraction);
}

std::array<LinfBoundReport, 2> linf_bound_check(const NormSeries& series, const ExponentReport& rep,
                                                double tolerance) {
  if (!rep.has_exponents() || rep.window_bounded.empty()) {
    throw PreconditionError("linf_bound_check needs a nonempty bounded window (regime " + to_string(rep.regime) + ")");
  }
  if (series.rows.size() < 2 || series.rows.front().t != 0.0) {
    throw InsufficientDataError("linf_bound_check needs the t = 0 row and later nodes");
  }
  const double horizon = series.rows.back().t;
  std::array<LinfBoundReport, 2> out;
  for (int i = 0; i < 2; ++i) {
    LinfBoundReport& b = out[i];
    b.component = i + 1;
    b.exponent = static_cast<double>(rep.linf_exponent[i]);
    b.phi_linf = series.rows.front().linf[i];
    auto bound_shape = [&](double t) { return b.phi_linf + std::pow(t, b.exponent); };
    // Calibrate on the early quarter, then test the whole horizon.
    b.c = 0.0;
    for (const auto& r : series.rows) {
      if (r.t > 0.0 && (r.t <= 0.25 * horizon || b.c == 0.0)) b.c = std::max(b.c, r.linf[i] / bound_shape(r.t));
    }
    b.max_exceedance = 0.0;
    for (const auto& r : series.rows) {
      if (r.t <= 0.0) continue;
      const double ex = r.linf[i] / (b.c * bound_shape(r.t)) - 1.0;
      if (ex > b.max_exceedance) {
        b.max_exceedance = ex;
        b.worst_t = r.t;
      }
    }
    b.verdict = std::isfinite(b.c) && b.max_exceedance <= tolerance;
  }
  return out;
}

std::array<EnvelopeReport, 2> selfsimilar_envelope_check(const std::vector<FieldPair>& snapshots,
                                                         const SystemParams& params, double epsilon,
                                                         const SpectralGrid& grid, double tolerance) {
  if (!theorem3_check(params).applicable) {
    throw PreconditionError("selfsimilar_envelope_check: self-similar hypothesis does not hold for these parameters");
  }
  if (!(epsilon > 0.0)) throw PreconditionError("selfsimilar_envelope_check: epsilon must be positive");
  const double alpha = params.alpha[0], rho = params.rho[0];
  const int d = params.dim;
  const KernelSpec spec = KernelSpec::automatic(alpha, d);

  std::array<EnvelopeReport, 2> out;
  for (int i = 0; i < 2; ++i) {
    out[i].component = i + 1;
    out[i].ratio_at_zero = kNaN;
  }
  for (const auto& snap : snapshots) {
    if (snap.u1.size() != grid.size()) throw PreconditionError("snapshot does not match the grid");
    const double tau = 1.0 + std::pow(snap.time, rho);
    const GridDensity env = eval_density_grid(spec, tau, grid);
    const double scale = std::pow(tau, d / alpha);
    const double peak = norm_linf(env.values);
    const double cut = kEnvelopeMask * peak, flat_cut = kFlatnessMask * peak;
    for (int i = 0; i < 2; ++i) {
      double r = 0.0, spread = 0.0;
      for (std::size_t m = 0; m < grid.size(); ++m) {
        if (env.values[m] < cut) continue;
        r = std::max(r, snap[i][m] / (scale * env.values[m]));
        if (env.values[m] >= flat_cut) spread = std::max(spread, std::abs(snap[i][m] / (epsilon * env.values[m]) - 1.0));
      }
      out[i].times.push_back(snap.time);
      out[i].ratios.push_back(r);
      if (snap.time == 0.0) out[i].ratio_at_zero = r;
      out[i].compensated_spread = std::max(out[i].compensated_spread, spread);
    }
  }
  for (auto& e : out) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      if (e.times[k] >= 1.0 && e.ratios[k] > 0.0) {
        lx.push_back(std::log1p(e.times[k]));
        ly.push_back(std::log(e.ratios[k] / epsilon));
      }
    }
    if (lx.size() < 2) throw InsufficientDataError("envelope fit needs two or more snapshots with t >= 1");
    const LineFit f = fit_line(lx, ly);
    e.fitted_k = -f.slope;
    e.fitted_c = std::exp(f.intercept);
    e.max_ratio_violation = 0.0;
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      const double bound = e.fitted_c * epsilon * std::pow(1.0 + e.times[k], -e.fitted_k);
      e.max_ratio_violation = std::max(e.max_ratio_violation, e.ratios[k] / bound - 1.0);
    }
    e.verdict = e.fitted_k > 0.0 && e.max_ratio_violation <= tolerance;
  }
  return out;
}

ComparisonReport comparison_check(const std::vector<FieldPair>& u, const std::vector<FieldPair>& v, double rel_tol) {
  if (u.size() != v.size()) throw PreconditionError("comparison_check: snapshot counts differ");
  ComparisonReport rep;
  rep.worst_relative = std::numeric_limits<double>::infinity();
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < u.size(); ++s) {
    if (u[s].time != v[s].time) throw PreconditionError("comparison_check: snapshot times differ");
    for (int i = 0; i < 2; ++i) {
      const Field& a = u[s][i];
      const Field& b = v[s][i];
      if (a.size() != b.size()) throw PreconditionError("comparison_check: grids differ");
      const double scale = std::max(norm_linf(a), std::numeric_limits<double>::min());
      for (std::size_t m = 0; m < a.size(); ++m) {
        const double margin = a[m] - b[m];
        const double rel = margin / scale;
        if (rel < rep.worst_relative) {
          rep.worst_relative = rel;
          rep.worst_margin = margin;
          rep.worst_t = u[s].time;
          rep.worst_component = i + 1;
          rep.worst_index = m;
        }
      }
    }
  }
  if (u.empty()) rep.worst_relative = rep.worst_margin = 0.0;
  rep.holds = rep.worst_relative >= -rel_tol;
  return rep;
}

bool VerificationSummary::verdict() const {
  bool ok = completed;
  if (decay) ok = ok && (*decay)[0].verdict && (*decay)[1].verdict;
  if (linf) ok = ok && (*linf)[0].verdict && (*linf)[1].verdict;
  if (envelope) ok = ok && (*envelope)[0].verdict && (*envelope)[1].verdict;
  return ok;
}

std::string summary_key_values(const VerificationSummary& s) {
  std::ostringstream os;
  os << "run_id = " << s.run_id << '\n';
  os << "regime = " << to_string(s.regime) << '\n';
  if (s.decay) {
    for (const auto& d : *s.decay) {
      const std::string k = "decay_u" + std::to_string(d.component) + "_";
      os << k << "s = " << fmt17(d.s_index) << '\n';
      os << k << "xi = " << fmt17(d.xi) << '\n';
      os << k << "sup_scaled = " << fmt17(d.sup_scaled) << '\n';
      os << k << "scaled_at_one = " << fmt17(d.scaled_at_one) << '\n';
      os << k << "scaled_final = " << fmt17(d.scaled_final) << '\n';
      os << k << "fitted_slope = " << fmt17(d.fitted_slope) << '\n';
      os << k << "slope_target = " << fmt17(d.slope_target) << '\n';
      os << k << "verdict = " << (d.verdict ? "true" : "false") << '\n';
    }
  }
  if (s.linf) {
    for (const auto& b : *s.linf) {
      const std::string k = "linf_u" + std::to_string(b.component) + "_";
      os << k << "exponent = " << fmt17(b.exponent) << '\n';
      os << k << "c = " << fmt17(b.c) << '\n';
      os << k << "max_exceedance = " << fmt17(b.max_exceedance) << '\n';
      os << k << "verdict = " << (b.verdict ? "true" : "false") << '\n';
    }
  }
  if (s.envelope) {
    for (const auto& e : *s.envelope) {
      const std::string k = "envelope_u" + std::to_string(e.component) + "_";
      os << k << "ratio_at_zero = " << fmt17(e.ratio_at_zero) << '\n';
      os << k << "fitted_c = " << fmt17(e.fitted_c) << '\n';
      os << k << "fitted_k = " << fmt17(e.fitted_k) << '\n';
      os << k << "max_ratio_violation = " << fmt17(e.max_ratio_violation) << '\n';
      os << k << "compensated_spread = " << fmt17(e.compensated_spread) << '\n';
      os << k << "verdict = " << (e.verdict ? "true" : "false") << '\n';
    }
  }
  for (const auto& why : s.skipped) os << "skipped = " << why << '\n';
  os << "verdict = " << (s.verdict() ? "true" : "false") << '\n';
  return os.str();
}

std::string summary_csv_row(const VerificationSummary& s) {
  std::ostringstream os;
  os << s.run_id << ',' << to_string(s.regime) << ',';
  if (s.decay) {
    os << fmt17((*s.decay)[0].sup_scaled) << ',' << fmt17((*s.decay)[1].sup_scaled) << ','
       << fmt17((*s.decay)[0].fitted_slope) << ',' << fmt17((*s.decay)[1].fitted_slope) << ',';
  } else {
    os << ",,,,";
  }
  if (s.envelope) {
    // The weaker component: smallest decay rate, largest constant.
    const auto& e = *s.envelope;
    os << fmt17(std::min(e[0].fitted_k, e[1].fitted_k)) << ',' << fmt17(std::max(e[0].fitted_c, e[1].fitted_c)) << ',';
  } else {
    os << ",,";
  }
  os << (s.verdict() ? "true" : "false");
  return os.str();
}

}  // namespace fracsys
