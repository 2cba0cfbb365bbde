#include "fracsys/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "fracsys/errors.hpp"
#include "fracsys/snapshot_io.hpp"
#include "fracsys/stable_kernel.hpp"

namespace fracsys {

namespace {

bool finite_and_bounded(const Field& f) {
  for (double v : f) {
    if (!std::isfinite(v) || std::abs(v) > kBlowupThreshold) return false;
  }
  return true;
}

/// Clamp negatives to 0; count those below -1e-12 of the sup norm.
std::size_t clamp_negative(Field& f) {
  const double floor = 1e-12 * norm_linf(f);
  std::size_t events = 0;
  for (double& v : f) {
    if (v < 0.0) {
      if (v < -floor) ++events;
      v = 0.0;
    }
  }
  return events;
}

double relative_change(const Field& next, const Field& prev) {
  double diff = 0.0;
  for (std::size_t m = 0; m < next.size(); ++m) diff = std::max(diff, std::abs(next[m] - prev[m]));
  if (diff == 0.0) return 0.0;
  return diff / std::max(norm_linf(next), std::numeric_limits<double>::min());
}

}  // namespace

double TimeMesh::node(int k) const {
  if (k <= 0) return 0.0;
  if (k >= steps) return horizon;
  return at(static_cast<double>(k) / steps);
}

double TimeMesh::at(double tau) const { return horizon * std::pow(tau, grading); }

double TimeMesh::tau(double t) const { return std::pow(t / horizon, 1.0 / grading); }

double TimeMesh::min_grading(const Pair<double>& sigma) {
  return std::max(1.0, 1.0 / (1.0 + std::min(sigma[0], sigma[1])));
}

void TimeMesh::validate(const Pair<double>& sigma) const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw PreconditionError("horizon must be positive");
  if (steps < 1) throw PreconditionError("steps must be >= 1");
  const double g = min_grading(sigma);
  if (!(grading >= g * (1.0 - 1e-12))) {
    throw PreconditionError("grading " + std::to_string(grading) + " below the minimum " + std::to_string(g));
  }
}

void RunConfig::validate() const {
  params.validate();
  if (grid.dim() != params.dim) throw PreconditionError("grid dimension differs from params dim");
  if (params.dim > 3) throw PreconditionError("solver supports dim 1..3");
  if (params.dim == 3 && grid.n() > 128) throw PreconditionError("dim 3 is limited to n <= 128");
  mesh.validate(params.sigma);
  if (!(picard_tol > 0.0)) throw PreconditionError("picard_tol must be positive");
  if (picard_max_iter < 1) throw PreconditionError("picard_max_iter must be >= 1");
  if (snapshot_stride < 1) throw PreconditionError("snapshot_stride must be >= 1");
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw PreconditionError("coupling must be >= 0");
  if (max_bisections < 0) throw PreconditionError("max_bisections must be >= 0");
  if (!(init.epsilon >= 0.0) || !std::isfinite(init.epsilon)) throw PreconditionError("epsilon must be >= 0");
  if (init.kind == InitKind::gaussian && !(init.width > 0.0)) throw PreconditionError("width must be positive");
  if (init.kind == InitKind::from_file && init.path.empty()) throw PreconditionError("init file path missing");
}

double default_half_length(const SystemParams& p, double horizon) {
  double spread = 0.0;
  for (int i = 0; i < 2; ++i) spread = std::max(spread, std::pow(std::pow(horizon, p.rho[i]), 1.0 / p.alpha[i]));
  return 6.0 * spread;
}

MildSolver::MildSolver(const RunConfig& cfg) : cfg_(cfg), fft_(cfg.grid) {
  cfg_.validate();
  for (int i = 0; i < 2; ++i) symbol_[i] = cfg_.grid.symbol_power(cfg_.params.alpha[i]);
  spec_a_.resize(cfg_.grid.spectral_size());
  spec_b_.resize(cfg_.grid.spectral_size());
  work_.resize(cfg_.grid.size());
}

void MildSolver::multiplier(int i, double s, double t, std::vector<double>& out) const {
  const double rho = cfg_.params.rho[i];
  const double dt = std::pow(t, rho) - std::pow(s, rho);
  const auto& sym = symbol_[i];
  out.resize(sym.size());
  for (std::size_t k = 0; k < sym.size(); ++k) out[k] = std::exp(-dt * sym[k]);
}

Field MildSolver::propagate_linear(const Field& f, int i, double s, double t) {
  if (!(s <= t)) throw PreconditionError("propagate_linear needs s <= t");
  if (f.size() != cfg_.grid.size()) throw PreconditionError("field size differs from grid");
  if (s == t) return f;
  std::vector<double> g;
  multiplier(i, s, t, g);
  fft_.forward(f, spec_a_);
  for (std::size_t k = 0; k < g.size(); ++k) spec_a_[k] *= g[k];
  Field out;
  fft_.inverse(spec_a_, out);
  return out;
}

void MildSolver::reaction_spectrum(int i, const Field& uj, double s, SpectralField& out) {
  const double weight = cfg_.coupling * std::pow(s, cfg_.params.sigma[i]);
  const double beta = cfg_.params.beta[i];
  for (std::size_t m = 0; m < uj.size(); ++m) work_[m] = weight * std::pow(std::max(uj[m], 0.0), beta);
  fft_.forward(work_, out);
  if (cfg_.dealias == Dealias::two_thirds) dealias_two_thirds(cfg_.grid, out);
}

std::array<Field, 2> MildSolver::nonlinear_term(const FieldPair& pair, double s) {
  std::array<Field, 2> out;
  for (int i = 0; i < 2; ++i) {
    const Field& uj = pair[1 - i];
    const double floor = 1e-6 * norm_linf(uj);
    for (double v : uj) {
      if (v < -floor) throw std::logic_error("nonlinear_term: negative input below the clamp floor");
    }
    if (cfg_.params.sigma[i] < 0.0 && !(s > 0.0)) {
      throw PreconditionError("nonlinear_term: s must be positive when sigma < 0");
    }
    if (cfg_.dealias == Dealias::none) {
      const double weight = cfg_.coupling * std::pow(s, cfg_.params.sigma[i]);
      out[i].resize(uj.size());
      for (std::size_t m = 0; m < uj.size(); ++m) {
        out[i][m] = weight * std::pow(std::max(uj[m], 0.0), cfg_.params.beta[i]);
      }
      continue;
    }
    reaction_spectrum(i, uj, s, spec_b_);
    fft_.inverse(spec_b_, out[i]);
    for (double& v : out[i]) v = std::max(v, 0.0);
  }
  return out;
}

StepResult MildSolver::step(const FieldPair& pair, double b) {
  const double a = pair.time;
  if (!(b > a)) throw PreconditionError("step target must exceed the current time");
  const auto& mesh = cfg_.mesh;
  const auto& prm = cfg_.params;
  const std::size_t ns = cfg_.grid.spectral_size();

  // Two Gauss points in the graded variable keep s = 0 out of the samples.
  const double ta = mesh.tau(a), tb = mesh.tau(b);
  const double half = 0.5 * (tb - ta), mid = 0.5 * (ta + tb);
  const double off = half / std::sqrt(3.0);
  const std::array<double, 2> tq{mid - off, mid + off};
  std::array<double, 2> sq{}, wq{};
  for (int q = 0; q < 2; ++q) {
    sq[q] = mesh.at(tq[q]);
    wq[q] = half * mesh.grading * mesh.horizon * std::pow(tq[q], mesh.grading - 1.0);
  }

  std::array<Field, 2> lin_b;
  std::array<std::array<Field, 2>, 2> lin_q;
  std::array<std::array<double, 2>, 2> theta{};
  std::array<std::array<std::vector<double>, 2>, 2> g_bs;
  std::vector<double> g;
  for (int c = 0; c < 2; ++c) {
    fft_.forward(pair[c], spec_a_);
    multiplier(c, a, b, g);
    for (std::size_t k = 0; k < ns; ++k) spec_b_[k] = spec_a_[k] * g[k];
    fft_.inverse(spec_b_, lin_b[c]);
    const double e = prm.sigma[c] + 1.0;
    const double span = std::pow(b, e) - std::pow(a, e);
    for (int q = 0; q < 2; ++q) {
      multiplier(c, a, sq[q], g);
      for (std::size_t k = 0; k < ns; ++k) spec_b_[k] = spec_a_[k] * g[k];
      fft_.inverse(spec_b_, lin_q[c][q]);
      // Fraction of the step's Duhamel increment accrued by s_q under a frozen reaction.
      theta[c][q] = (std::pow(sq[q], e) - std::pow(a, e)) / span;
      multiplier(c, sq[q], b, g_bs[c][q]);
    }
  }

  StepResult res;
  res.state.time = b;
  std::array<Field, 2> ub = lin_b;
  std::array<Field, 2> next;
  SpectralField acc(ns), r(ns);
  Field node(cfg_.grid.size()), duhamel;
  const bool linear = cfg_.coupling == 0.0;

  for (int it = 1; it <= cfg_.picard_max_iter; ++it) {
    res.iterations = it;
    double dist = 0.0;
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      if (linear) {
        next[i] = lin_b[i];
        continue;
      }
      std::fill(acc.begin(), acc.end(), std::complex<double>{});
      for (int q = 0; q < 2; ++q) {
        for (std::size_t m = 0; m < node.size(); ++m) {
          node[m] = lin_q[j][q][m] + theta[j][q] * (ub[j][m] - lin_b[j][m]);
        }
        reaction_spectrum(i, node, sq[q], r);
        const auto& gb = g_bs[i][q];
        for (std::size_t k = 0; k < ns; ++k) acc[k] += wq[q] * gb[k] * r[k];
      }
      fft_.inverse(acc, duhamel);
      next[i].resize(duhamel.size());
      for (std::size_t m = 0; m < duhamel.size(); ++m) next[i][m] = lin_b[i][m] + duhamel[m];
    }
    for (int i = 0; i < 2; ++i) {
      if (!finite_and_bounded(next[i])) {
        res.diverged = true;
        return res;
      }
      dist = std::max(dist, relative_change(next[i], ub[i]));
    }
    ub.swap(next);
    res.distances.push_back(dist);
    if (dist < cfg_.picard_tol) {
      res.converged = true;
      break;
    }
  }
  res.state.u1 = std::move(ub[0]);
  res.state.u2 = std::move(ub[1]);
  res.clamped = clamp_negative(res.state.u1) + clamp_negative(res.state.u2);
  return res;
}

FieldPair MildSolver::initial_data() {
  const auto& grid = cfg_.grid;
  const auto& init = cfg_.init;
  FieldPair pair;
  if (init.kind == InitKind::from_file) {
    pair = read_snapshot(std::filesystem::path(init.path), grid);
    pair.time = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (double v : pair[i]) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw FormatError("initial data must be finite and nonnegative");
      }
    }
    return pair;
  }
  for (int i = 0; i < 2; ++i) {
    Field& f = pair[i];
    if (init.kind == InitKind::stable_kernel) {
      f = eval_density_grid(KernelSpec::automatic(cfg_.params.alpha[i], grid.dim()), 1.0, grid).values;
      for (double& v : f) v *= init.epsilon;
    } else {
      const double w2 = init.width * init.width;
      const double norm = init.epsilon * std::pow(2.0 * M_PI * w2, -0.5 * grid.dim());
      f.resize(grid.size());
      for (std::size_t m = 0; m < f.size(); ++m) f[m] = norm * std::exp(-grid.radius2(m) / (2.0 * w2));
    }
  }
  return pair;
}

std::optional<DecayExponents> decay_exponents(const ExponentReport& rep) {
  if (!rep.has_exponents()) return std::nullopt;
  DecayExponents ex;
  for (int i = 0; i < 2; ++i) {
    ex.s[i] = static_cast<double>(rep.norms.s[i]);
    ex.xi[i] = static_cast<double>(rep.norms.xi[i]);
  }
  return ex;
}

NormRow measure(const FieldPair& pair, const SpectralGrid& grid, const std::optional<DecayExponents>& ex) {
  NormRow row;
  row.t = pair.time;
  const double hd = grid.cell_volume();
  for (int i = 0; i < 2; ++i) {
    row.linf[i] = norm_linf(pair[i]);
    row.mass[i] = mass(pair[i], hd);
    if (ex) {
      row.ls[i] = norm_lp(pair[i], ex->s[i], hd);
      row.scaled[i] = std::pow(pair.time, ex->xi[i]) * row.ls[i];
    } else {
      row.ls[i] = row.scaled[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return row;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Completed:
      return "Completed";
    case SolveStatus::Diverged:
      return "Diverged";
    case SolveStatus::StepRejected:
      return "StepRejected";
  }
  return "?";
}

SolveResult solve(const RunConfig& cfg, const std::optional<DecayExponents>& ex) {
  MildSolver solver(cfg);
  const auto& mesh = solver.config().mesh;
  SolveResult out;
  if (ex) {
    out.series.s = ex->s;
    out.series.xi = ex->xi;
  }

  FieldPair state = solver.initial_data();
  if (!finite_and_bounded(state.u1) || !finite_and_bounded(state.u2)) {
    throw PreconditionError("initial data is not finite");
  }
  out.series.rows.push_back(measure(state, cfg.grid, ex));
  out.snapshots.push_back(state);

  int iters = 0;
  // Halve a failing step in the graded variable until it converges or the
  // depth budget runs out.
  std::function<SolveStatus(double, int)> advance = [&](double b, int depth) -> SolveStatus {
    StepResult r = solver.step(state, b);
    if (r.converged) {
      iters += r.iterations;
      out.clamped += r.clamped;
      out.picard_history.push_back(std::move(r.distances));
      state = std::move(r.state);
      return SolveStatus::Completed;
    }
    if (depth >= cfg.max_bisections) return r.diverged ? SolveStatus::Diverged : SolveStatus::StepRejected;
    ++out.bisections;
    const double m = mesh.at(0.5 * (mesh.tau(state.time) + mesh.tau(b)));
    if (!(m > state.time && m < b)) return SolveStatus::StepRejected;
    const SolveStatus first = advance(m, depth + 1);
    if (first != SolveStatus::Completed) return first;
    return advance(b, depth + 1);
  };

  for (int k = 1; k <= mesh.steps; ++k) {
    iters = 0;
    const SolveStatus st = advance(mesh.node(k), 0);
    if (st != SolveStatus::Completed) {
      out.status = st;
      break;
    }
    NormRow row = measure(state, cfg.grid, ex);
    row.picard_iters = iters;
    out.series.rows.push_back(row);
    if (k % cfg.snapshot_stride == 0 || k == mesh.steps) out.snapshots.push_back(state);
  }
  out.last_time = state.time;
  return out;
}

}  // namespace fracsys
