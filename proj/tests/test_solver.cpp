#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fracsys/errors.hpp"
#include "fracsys/snapshot_io.hpp"
#include "fracsys/solver.hpp"
#include "reference_runs.hpp"

using namespace fracsys;

namespace {

RunConfig base(int dim, int n, double half_length, double alpha, double rho, double beta) {
  RunConfig c;
  c.params.alpha = {alpha, alpha};
  c.params.rho = {rho, rho};
  c.params.beta = {beta, beta};
  c.params.dim = dim;
  c.grid = SpectralGrid(dim, n, half_length);
  c.mesh = TimeMesh{1.0, 10, 1.0};
  return c;
}

Field gaussian(const SpectralGrid& g, double variance, double scale = 1.0) {
  Field f(g.size());
  for (std::size_t m = 0; m < f.size(); ++m) {
    f[m] = scale * std::pow(2.0 * M_PI * variance, -0.5 * g.dim()) * std::exp(-g.radius2(m) / (2.0 * variance));
  }
  return f;
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double l2_diff(const Field& a, const Field& b, double cell) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s * cell);
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fracsys_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(TimeMesh, NodesAndGrading) {
  const TimeMesh m{50.0, 20, 2.0};
  EXPECT_EQ(m.node(0), 0.0);
  EXPECT_EQ(m.node(20), 50.0);
  for (int k = 0; k < 20; ++k) EXPECT_LT(m.node(k), m.node(k + 1));
  EXPECT_NEAR(m.tau(m.at(0.3)), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(TimeMesh::min_grading({0.0, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(TimeMesh::min_grading({-0.5, 0.0}), 2.0);
  EXPECT_THROW((TimeMesh{1.0, 10, 1.5}.validate({-0.5, 0.0})), PreconditionError);
  EXPECT_NO_THROW((TimeMesh{1.0, 10, 2.0}.validate({-0.5, 0.0})));
}

TEST(RunConfig, Validation) {
  RunConfig c = base(1, 64, 10.0, 2.0, 1.0, 2.0);
  EXPECT_NO_THROW(c.validate());
  c.picard_tol = 0.0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = base(3, 256, 10.0, 2.0, 1.0, 2.0);
  EXPECT_THROW(c.validate(), PreconditionError);
  c = base(2, 64, 10.0, 2.0, 1.0, 2.0);
  c.params.dim = 1;
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(PropagateLinear, IdentityAndOrdering) {
  MildSolver s(base(1, 128, 10.0, 1.5, 0.5, 2.0));
  const Field f = gaussian(s.config().grid, 1.0);
  EXPECT_EQ(s.propagate_linear(f, 0, 0.7, 0.7), f);
  EXPECT_THROW(s.propagate_linear(f, 0, 1.0, 0.5), PreconditionError);
}

TEST(PropagateLinear, PreservesMass) {
  MildSolver s(base(2, 64, 10.0, 1.5, 0.5, 2.0));
  const auto& g = s.config().grid;
  const Field f = gaussian(g, 0.5);
  const Field out = s.propagate_linear(f, 1, 0.0, 3.0);
  EXPECT_NEAR(mass(out, g.cell_volume()), mass(f, g.cell_volume()), 1e-13);
}

TEST(PropagateLinear, GaussianSemigroup) {
  for (int d = 1; d <= 3; ++d) {
    MildSolver s(base(d, d == 3 ? 64 : 256, 16.0, 2.0, 1.0, 2.0));
    const auto& g = s.config().grid;
    const double t0 = 0.5, t = 1.5;
    const Field out = s.propagate_linear(gaussian(g, 2.0 * t0), 0, 0.0, t);
    EXPECT_LE(max_abs_diff(out, gaussian(g, 2.0 * (t0 + t))), 1e-10) << d;
  }
}

TEST(PropagateLinear, SingleModeMultiplier) {
  for (auto [alpha, rho] : {std::pair{1.5, 0.5}, std::pair{1.0, 2.0}, std::pair{0.7, 1.0}}) {
    MildSolver s(base(1, 64, M_PI, alpha, rho, 2.0));  // wavenumbers are integers
    const auto& g = s.config().grid;
    Field f(g.size());
    for (std::size_t m = 0; m < f.size(); ++m) f[m] = std::cos(5.0 * g.coordinate(static_cast<int>(m)));
    const double s0 = 0.3, t = 1.1;
    const Field out = s.propagate_linear(f, 0, s0, t);
    const double factor = std::exp(-(std::pow(t, rho) - std::pow(s0, rho)) * std::pow(5.0, alpha));
    for (std::size_t m = 0; m < f.size(); ++m) EXPECT_NEAR(out[m], factor * f[m], 1e-14);
  }
}

TEST(PropagateLinear, TimeChangeConsistency) {
  for (auto [alpha, rho] : {std::pair{1.5, 0.5}, std::pair{2.0, 1.0}, std::pair{1.0, 1.7}}) {
    MildSolver s(base(1, 256, 20.0, alpha, rho, 2.0));
    const Field f = gaussian(s.config().grid, 1.0);
    const Field direct = s.propagate_linear(f, 0, 0.0, 2.0);
    const Field split = s.propagate_linear(s.propagate_linear(f, 0, 0.0, 0.6), 0, 0.6, 2.0);
    EXPECT_LE(max_abs_diff(direct, split), 1e-13);
  }
}

TEST(NonlinearTerm, ZerosAndConstants) {
  RunConfig c = base(1, 64, 10.0, 2.0, 1.0, 2.0);
  c.params.beta = {3.0, 2.0};
  MildSolver s(c);
  FieldPair p{Field(64, 0.7), Field(64, 0.0), 1.0};
  const auto out = s.nonlinear_term(p, 1.0);
  for (double v : out[0]) EXPECT_EQ(v, 0.0);
  for (double v : out[1]) EXPECT_NEAR(v, 0.49, 1e-15);
  p.u2.assign(64, 0.5);
  const auto cubed = s.nonlinear_term(p, 1.0);
  for (double v : cubed[0]) EXPECT_NEAR(v, 0.125, 1e-15);
}

TEST(NonlinearTerm, TimeWeight) {
  RunConfig c = base(1, 64, 10.0, 2.0, 1.0, 2.0);
  c.params.sigma = {-0.5, 0.5};
  c.mesh.grading = 2.0;
  MildSolver s(c);
  const FieldPair p{Field(64, 1.0), Field(64, 1.0), 1.0};
  const auto out = s.nonlinear_term(p, 4.0);
  EXPECT_NEAR(out[0][0], 0.5, 1e-15);
  EXPECT_NEAR(out[1][0], 2.0, 1e-15);
  EXPECT_THROW(s.nonlinear_term(p, 0.0), PreconditionError);
}

TEST(NonlinearTerm, FractionalPowerMatchesFineGrid) {
  for (Dealias mode : {Dealias::two_thirds, Dealias::none}) {
    RunConfig c = base(1, 256, 20.0, 2.0, 1.0, 2.5);
    c.dealias = mode;
    MildSolver s(c);
    const auto& g = c.grid;
    const FieldPair p{gaussian(g, 1.0), gaussian(g, 1.0), 1.0};
    const auto out = s.nonlinear_term(p, 1.0);
    // Oracle: the power on a 4x finer grid, sampled at the coarse points.
    const SpectralGrid fine(1, 1024, 20.0);
    const Field ufine = gaussian(fine, 1.0);
    double err = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) err = std::max(err, std::abs(out[0][m] - std::pow(ufine[4 * m], 2.5)));
    EXPECT_LE(err, 1e-8);
  }
}

TEST(NonlinearTerm, RejectsNegativeInput) {
  MildSolver s(base(1, 64, 10.0, 2.0, 1.0, 2.0));
  FieldPair p{Field(64, 1.0), Field(64, 1.0), 1.0};
  p.u2[5] = -0.5;
  EXPECT_THROW(s.nonlinear_term(p, 1.0), std::logic_error);
}

TEST(NonlinearTerm, PreservesNonnegativity) {
  MildSolver s(base(1, 128, 10.0, 2.0, 1.0, 4.0));
  const auto& g = s.config().grid;
  Field rough(g.size(), 0.0);
  for (std::size_t m = 40; m < 60; ++m) rough[m] = 1.0;  // a box has large aliasing
  const auto out = s.nonlinear_term(FieldPair{rough, rough, 1.0}, 1.0);
  for (double v : out[0]) EXPECT_GE(v, 0.0);
}

TEST(InitialData, Kinds) {
  RunConfig c = base(1, 512, 20.0, 2.0, 1.0, 2.0);
  c.init = InitSpec{InitKind::stable_kernel, 1.0, 1.0, ""};
  {
    MildSolver s(c);
    const FieldPair p = s.initial_data();
    EXPECT_EQ(p.time, 0.0);
    EXPECT_NEAR(p.u1[256], 1.0 / std::sqrt(4.0 * M_PI), 1e-12);
    EXPECT_EQ(p.u1, p.u2);
  }
  c.init = InitSpec{InitKind::gaussian, 0.25, 1.5, ""};
  {
    MildSolver s(c);
    const FieldPair p = s.initial_data();
    EXPECT_NEAR(mass(p.u1, c.grid.cell_volume()), 0.25, 1e-12);
    for (double v : p.u2) EXPECT_GE(v, 0.0);
  }
}

TEST(InitialData, FromFileRoundTrip) {
  const auto dir = scratch_dir("init");
  RunConfig c = base(2, 32, 8.0, 1.5, 1.0, 2.0);
  c.init = InitSpec{InitKind::gaussian, 0.3, 1.0, ""};
  MildSolver s(c);
  FieldPair p = s.initial_data();
  p.u2[17] = 0.123456789012345678;
  p.time = 2.5;
  write_snapshot(dir / "init.bin", c.grid, c.params, p);
  c.init = InitSpec{InitKind::from_file, 1.0, 1.0, (dir / "init.bin").string()};
  const FieldPair back = MildSolver(c).initial_data();
  EXPECT_EQ(back.u1, p.u1);
  EXPECT_EQ(back.u2, p.u2);
  EXPECT_EQ(back.time, 0.0);
  RunConfig other = base(2, 64, 8.0, 1.5, 1.0, 2.0);
  other.init = c.init;
  EXPECT_THROW(MildSolver(other).initial_data(), FormatError);
}

TEST(Snapshot, StreamRoundTripAndHeader) {
  const SpectralGrid g(1, 16, 3.0);
  SystemParams par;
  par.beta = {2.5, 3.0};
  FieldPair p{Field(16), Field(16), 1.25};
  for (int m = 0; m < 16; ++m) {
    p.u1[m] = std::sqrt(m + 0.1);
    p.u2[m] = 1.0 / (m + 1.0);
  }
  std::stringstream ss;
  write_snapshot(ss, g, par, p);
  EXPECT_EQ(ss.str().substr(0, 4), "FWCS");
  EXPECT_EQ(ss.str().size(), 4u + 4 * 3 + 8 * 2 + 8 * 8 + 2 * 16 * 8);
  SnapshotHeader h;
  const FieldPair back = read_snapshot(ss, g, &h);
  EXPECT_EQ(back.u1, p.u1);
  EXPECT_EQ(back.u2, p.u2);
  EXPECT_EQ(back.time, 1.25);
  EXPECT_EQ(h.params, (std::array<double, 8>{2.0, 2.0, 2.5, 3.0, 1.0, 1.0, 0.0, 0.0}));
  EXPECT_EQ(h.n, 16u);
  EXPECT_EQ(h.half_length, 3.0);

  std::stringstream bad(ss.str());
  EXPECT_THROW(read_snapshot(bad, SpectralGrid(1, 16, 4.0)), FormatError);
  std::stringstream truncated(ss.str().substr(0, 100));
  EXPECT_THROW(read_snapshot(truncated, g), FormatError);
  std::string wrong = ss.str();
  wrong[0] = 'X';
  std::stringstream magic(wrong);
  EXPECT_THROW(read_snapshot(magic, g), FormatError);
}

TEST(NormSeriesIo, RoundTrip) {
  NormSeries s;
  s.s = Pair<double>{5.0, 5.0};
  s.xi = Pair<double>{0.7 / 3.0, 0.7 / 3.0};
  s.rows.push_back({0.0, {1.0, 2.0}, {0.5, 0.25}, {0.0, 0.0}, {1.0, 1.0}, 0});
  s.rows.push_back({0.1 + 0.2, {1e-300, 3.14159}, {2.0 / 3.0, 1e-17}, {0.1, 0.2}, {0.9, 0.8}, 4});
  std::stringstream ss;
  write_norm_series(ss, s);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kNormSeriesHeader);
  const NormSeries back = read_norm_series(ss);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].t, s.rows[1].t);
  EXPECT_EQ(back.rows[1].linf, s.rows[1].linf);
  EXPECT_EQ(back.rows[1].ls, s.rows[1].ls);
  EXPECT_EQ(back.rows[1].picard_iters, 4);

  NormSeries blank = s;
  blank.s.reset();
  blank.xi.reset();
  std::stringstream bs;
  write_norm_series(bs, blank);
  EXPECT_FALSE(read_norm_series(bs).s.has_value());
}

TEST(Step, DecoupledEqualsPropagation) {
  RunConfig c = base(1, 256, 20.0, 1.5, 0.5, 3.0);
  c.init = InitSpec{InitKind::gaussian, 1.0, 1.0, ""};
  c.coupling = 0.0;
  MildSolver s(c);
  const FieldPair p = s.initial_data();
  const StepResult r = s.step(p, 0.4);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.state.time, 0.4);
  for (int i = 0; i < 2; ++i) EXPECT_LE(max_abs_diff(r.state[i], s.propagate_linear(p[i], i, 0.0, 0.4)), 1e-15);
}

TEST(Step, EmptySecondComponentFeedsBackAtHighOrder) {
  // u2 starts at 0 but is sourced by u1^beta inside the step, so u1 deviates
  // from its free evolution by O(eps^{beta^2}).
  RunConfig c = base(1, 256, 20.0, 1.5, 0.5, 3.0);
  c.picard_tol = 1e-14;
  for (double eps : {1e-1, 1e-2}) {
    c.init = InitSpec{InitKind::gaussian, eps, 1.0, ""};
    MildSolver se(c);
    FieldPair p = se.initial_data();
    p.u2.assign(p.u2.size(), 0.0);
    const StepResult r = se.step(p, 0.4);
    ASSERT_TRUE(r.converged);
    const double dev = max_abs_diff(r.state.u1, se.propagate_linear(p.u1, 0, 0.0, 0.4)) / norm_linf(p.u1);
    EXPECT_LE(dev, std::pow(eps, 8.0));
    EXPECT_GT(norm_linf(r.state.u2), 0.0);
  }
}

TEST(Step, TinyDataConvergesImmediately) {
  RunConfig c = base(1, 256, 20.0, 2.0, 1.0, 2.0);
  c.init = InitSpec{InitKind::stable_kernel, 1e-8, 1.0, ""};
  MildSolver s(c);
  const StepResult r = s.step(s.initial_data(), 0.1);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.iterations, 1);
  EXPECT_LE(r.iterations, 2);
}

TEST(Step, PicardDistancesDecrease) {
  RunConfig c = base(1, 256, 20.0, 2.0, 1.0, 2.0);
  c.init = InitSpec{InitKind::gaussian, 1.0, 1.0, ""};
  c.picard_tol = 1e-13;
  MildSolver s(c);
  const StepResult r = s.step(s.initial_data(), 0.1);
  ASSERT_TRUE(r.converged);
  ASSERT_GE(r.distances.size(), 3u);
  for (std::size_t k = 1; k < r.distances.size(); ++k) EXPECT_LT(r.distances[k], r.distances[k - 1]);
}

TEST(Solve, LinearExactness) {
  for (auto [alpha, rho] : {std::pair{2.0, 1.0}, std::pair{1.0, 1.0}, std::pair{1.5, 0.5}}) {
    RunConfig c = base(1, 1024, 40.0, alpha, rho, 2.0);
    c.params.alpha = {alpha, 2.0};
    c.coupling = 0.0;
    c.mesh = TimeMesh{5.0, 12, 1.0};
    c.init = InitSpec{InitKind::gaussian, 1.0, 1.0, ""};
    const SolveResult r = solve(c);
    ASSERT_EQ(r.status, SolveStatus::Completed);
    ASSERT_EQ(r.snapshots.size(), 13u);
    MildSolver s(c);
    const FieldPair phi = s.initial_data();
    for (const FieldPair& snap : r.snapshots) {
      for (int i = 0; i < 2; ++i) {
        const Field exact = s.propagate_linear(phi[i], i, 0.0, snap.time);
        const double scale = norm_lp(exact, 2.0, c.grid.cell_volume());
        EXPECT_LE(l2_diff(snap[i], exact, c.grid.cell_volume()), 1e-10 * scale) << alpha << " t=" << snap.time;
      }
    }
  }
}

TEST(Solve, SeriesColumns) {
  RunConfig c = base(1, 256, 30.0, 2.0, 1.0, 4.0);
  c.mesh = TimeMesh{4.0, 8, 1.0};
  const auto rep = classify(c.params, 0.3);
  const auto ex = decay_exponents(rep);
  ASSERT_TRUE(ex.has_value());
  EXPECT_NEAR(ex->s[0], 5.0, 1e-14);
  const SolveResult r = solve(c, ex);
  ASSERT_EQ(r.series.rows.size(), 9u);
  const NormRow& last = r.series.rows.back();
  EXPECT_EQ(last.t, 4.0);
  EXPECT_NEAR(last.scaled[0], std::pow(4.0, ex->xi[0]) * last.ls[0], 1e-15 * last.scaled[0]);
  EXPECT_NEAR(last.linf[0], norm_linf(r.snapshots.back().u1), 0.0);
  EXPECT_FALSE(decay_exponents(classify(base(1, 64, 1.0, 2.0, 1.0, 2.0).params)).has_value());
}

TEST(Solve, SnapshotStride) {
  RunConfig c = base(1, 64, 10.0, 2.0, 1.0, 2.0);
  c.mesh = TimeMesh{1.0, 10, 1.0};
  c.snapshot_stride = 4;
  const SolveResult r = solve(c);
  std::vector<double> times;
  for (const auto& s : r.snapshots) times.push_back(s.time);
  EXPECT_EQ(times, (std::vector<double>{0.0, c.mesh.node(4), c.mesh.node(8), 1.0}));
}

TEST(Solve, PositivityPreserved) {
  RunConfig c = base(1, 512, 30.0, 1.5, 1.0, 3.0);
  c.params.sigma = {-0.3, 0.2};
  c.mesh = TimeMesh{5.0, 30, 1.5};
  c.init = InitSpec{InitKind::gaussian, 0.5, 0.3, ""};
  const SolveResult r = solve(c);
  ASSERT_EQ(r.status, SolveStatus::Completed);
  for (const auto& s : r.snapshots)
    for (int i = 0; i < 2; ++i)
      for (double v : s[i]) EXPECT_GE(v, 0.0);
}

TEST(Solve, MonotoneInData) {
  RunConfig hi = base(1, 512, 30.0, 2.0, 1.0, 2.0);
  hi.mesh = TimeMesh{3.0, 24, 1.0};
  hi.init = InitSpec{InitKind::stable_kernel, 0.5, 1.0, ""};
  RunConfig lo = hi;
  lo.init.epsilon = 0.25;
  const SolveResult a = solve(hi), b = solve(lo);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    for (int i = 0; i < 2; ++i) {
      const double tol = 1e-9 * norm_linf(a.snapshots[k][i]);
      for (std::size_t m = 0; m < a.snapshots[k][i].size(); ++m) {
        EXPECT_GE(a.snapshots[k][i][m], b.snapshots[k][i][m] - tol);
      }
    }
  }
}

TEST(Solve, MeshRefinementConvergesSmoothWeight) {
  const auto d = fracsys::testing::refinement_differences(0.0, 1.0, {8, 16, 32, 64});
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_GE(d[k - 1] / d[k], 2.0);
}

TEST(Solve, MeshRefinementConvergesSingularWeight) {
  const auto d = fracsys::testing::refinement_differences(-0.5, 2.0, {8, 16, 32, 64});
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_GE(d[k - 1] / d[k], 2.0);
}

TEST(Solve, LargeDataFlagsDivergence) {
  RunConfig c = base(1, 512, 30.0, 2.0, 1.0, 2.0);
  c.mesh = TimeMesh{5.0, 100, 1.0};
  c.init = InitSpec{InitKind::stable_kernel, 10.0, 1.0, ""};
  c.snapshot_stride = 1000;
  const SolveResult r = solve(c);
  EXPECT_EQ(r.status, SolveStatus::Diverged);
  EXPECT_GT(r.last_time, 0.1);
  EXPECT_LT(r.last_time, 1.0);
  EXPECT_GT(r.bisections, 0);
  for (const auto& s : r.snapshots) EXPECT_TRUE(std::isfinite(norm_linf(s.u1)));
}
