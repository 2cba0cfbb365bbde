// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "fracsys/config.hpp"
#include "fracsys/experiment.hpp"
#include "fracsys/verify.hpp"
#include "reference_runs.hpp"

using namespace fracsys;
using namespace fracsys::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& ex) {
    out = {false, std::string("exception: ") + ex.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    out.pass = false;
    out.detail += " over budget " + num(budget_s) + " s";
  }
  if (!out.pass) ++failures;
  std::printf("%s %2d %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

double l2_rel(const Field& a, const Field& b) {
  double num2 = 0.0, den2 = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    num2 += (a[m] - b[m]) * (a[m] - b[m]);
    den2 += b[m] * b[m];
  }
  return std::sqrt(num2 / den2);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> file_checksums(const fs::path& manifest) {
  std::vector<std::string> out;
  std::istringstream is(slurp(manifest));
  for (std::string line; std::getline(is, line);)
    if (line.rfind("# file ", 0) == 0) out.push_back(line);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path configs = argc > 1 ? fs::path(argv[1]) : fs::path("configs");

  criterion(1, "kernel property suite", 30.0, [] {
    std::ostringstream log;
    const int rc = cmd_verify_kernel(KernelSuiteOptions{}, log);
    const std::string text = log.str();
    std::size_t pass = 0, fail = 0;
    for (std::size_t at = 0; (at = text.find("PASS ", at)) != std::string::npos; ++at) ++pass;
    for (std::size_t at = 0; (at = text.find("FAIL ", at)) != std::string::npos; ++at) ++fail;
    std::size_t slopes = 0;
    for (std::size_t at = 0; (at = text.find("PASS lp_slope", at)) != std::string::npos; ++at) ++slopes;
    return Outcome{rc == 0 && fail == 0 && slopes == 18,
                   std::to_string(pass) + " checks passed, " + std::to_string(fail) + " failed, " +
                       std::to_string(slopes) + " L^mu slope checks"};
  });

  criterion(2, "exponent identities", 5.0, [] {
    double worst = 0.0, uda = 0.0;
    for (const auto& [p, delta] : admissible_draws(1000, 2024)) {
      const auto e = derive_norm_exponents(p, delta);
      for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const Real bb = Real(p.beta[i]) * p.beta[j] - 1;
        const Real eta = e.xi[i] + p.sigma[i] - p.beta[i] * e.xi[j] - e.delta_small[i] * p.rho[i] + 1;
        const Real theta = p.sigma[i] +
                           (p.sigma[j] - p.beta[j] * e.xi[i] - e.delta_small[j] * p.rho[j] + 1) * p.beta[i] -
                           e.delta_small[i] * p.rho[i] + e.xi[i] + 1;
        for (Real r : {e.xi[i] - (1 - delta) * (1 + p.beta[i]) / bb, p.rho[i] * e.delta_small[i] - p.sigma[i] - delta,
                       eta, theta})
          worst = std::max(worst, static_cast<double>(std::abs(r)));
      }
    }
    // r_i does not move with Delta when alpha_j rho_i = alpha_i rho_j.
    int uda_cases = 0;
    for (const auto& [p0, delta] : admissible_draws(2000, 77)) {
      SystemParams p = p0;
      p.alpha[1] = p.alpha[0] * p.rho[1] / p.rho[0];
      if (p.alpha[1] > 2.0) continue;
      const auto w = compute_window(p).window;
      if (w.empty()) continue;
      try {
        const auto a = derive_norm_exponents(p, w.lo + (w.hi - w.lo) / 4);
        const auto b = derive_norm_exponents(p, w.lo + 3 * (w.hi - w.lo) / 4);
        for (int i = 0; i < 2; ++i) uda = std::max(uda, static_cast<double>(std::abs(a.r[i] / b.r[i] - 1)));
        ++uda_cases;
      } catch (const PreconditionError&) {
      }
    }
    int khat_violations = 0, khat_cases = 0;
    for (const auto& [p, delta] : admissible_draws(1000, 5)) {
      const auto kt = compute_window(p).k_tilde;
      const auto kh = compute_k_hat(p).k_hat;
      for (int i = 0; i < 2; ++i) {
        if (p.alpha[i] >= p.dim) {
          ++khat_cases;
          if (!(kt[i] <= kh[i])) ++khat_violations;
        }
      }
    }
    return Outcome{worst <= 1e-12 && uda <= 1e-14 && uda_cases > 0 && khat_cases > 0 && khat_violations == 0,
                   "max identity residual " + num(worst) + " over 1000 draws; r_i Delta drift " + num(uda) + " on " +
                       std::to_string(uda_cases) + " cases; k~ <= k^ violations " + std::to_string(khat_violations) +
                       "/" + std::to_string(khat_cases)};
  });

  criterion(3, "regime table", 1.0, [] {
    int mismatches = 0, cells = 0;
    std::string flips;
    for (int d = 1; d <= 6; ++d) {
      for (double beta : {1.5, 2.0, 3.0, 4.0, 5.0}) {
        SystemParams p;
        p.beta = {beta, beta};
        p.dim = d;
        const ExponentReport rep = classify(p);
        const bool expected = beta > 1.0 + 2.0 / d;
        const bool global = rep.regime == Regime::GlobalSmallData || rep.regime == Regime::GlobalSmallDataBounded;
        ++cells;
        if (global != expected || rep.window.empty() == expected) ++mismatches;
      }
    }
    return Outcome{mismatches == 0,
                   std::to_string(cells - mismatches) + "/" + std::to_string(cells) +
                       " cells match 'global iff beta > 1 + 2/d'"};
  });

  criterion(4, "linear exactness", 20.0, [] {
    double worst = 0.0;
    int nodes = 0;
    for (auto [alpha, rho] : {std::pair{2.0, 1.0}, std::pair{1.0, 1.0}, std::pair{1.5, 0.5}}) {
      RunConfig c;
      c.params.alpha = {alpha, alpha};
      c.params.rho = {rho, rho};
      c.grid = SpectralGrid(1, 1024, 40.0);
      c.mesh = TimeMesh{5.0, 50, 1.0};
      c.coupling = 0.0;
      c.init = InitSpec{InitKind::stable_kernel, 1e-2, 1.0, ""};
      const SolveResult r = solve(c);
      if (r.status != SolveStatus::Completed) return Outcome{false, "linear run did not complete"};
      MildSolver s(c);
      const FieldPair phi = s.initial_data();
      for (const auto& snap : r.snapshots) {
        for (int i = 0; i < 2; ++i) worst = std::max(worst, l2_rel(snap[i], s.propagate_linear(phi[i], i, 0.0, snap.time)));
        ++nodes;
      }
    }
    return Outcome{worst <= 1e-10, "max relative L2 error " + num(worst) + " over " + std::to_string(nodes) + " nodes"};
  });

  const RunConfig ref_cfg = reference_config();
  const ExponentReport ref_rep = classify(ref_cfg.params, 0.3);
  SolveResult ref_run;

  criterion(5, "decay law, reference run", 300.0, [&] {
    ref_run = solve(ref_cfg, decay_exponents(ref_rep));
    if (ref_run.status != SolveStatus::Completed) return Outcome{false, "reference run " + to_string(ref_run.status)};
    const auto dec = decay_report(ref_run.series, ref_rep);
    const RunConfig lin = linear_kernel_config(2.0);
    const DecayExponents lex = linear_exponents(lin, 5.0);
    const auto base = decay_report(solve(lin, lex).series, lex);
    const double slope_err = std::abs(base[0].fitted_slope / base[0].slope_target - 1.0);
    bool pass = slope_err <= 0.05;
    std::string detail;
    for (const auto& d : dec) {
      pass = pass && d.verdict;
      detail += "u" + std::to_string(d.component) + " t^xi||u||_5 at 1 " + num(d.scaled_at_one) + ", at T " +
                num(d.scaled_final) + ", sup " + num(d.sup_scaled) + "; ";
    }
    return Outcome{pass, detail + "linear slope " + num(base[0].fitted_slope) + " vs " + num(base[0].slope_target)};
  });

  criterion(6, "L-infinity bound", 0.0, [&] {
    if (ref_run.series.rows.empty()) return Outcome{false, "reference run unavailable"};
    bool pass = true;
    std::string detail;
    for (const auto& b : linf_bound_check(ref_run.series, ref_rep)) {
      pass = pass && b.verdict && std::abs(b.exponent + 1.0 / 3.0) < 1e-12;
      detail += "u" + std::to_string(b.component) + " exponent " + num(b.exponent) + " c " + num(b.c) +
                " exceedance " + num(b.max_exceedance) + "; ";
    }
    return Outcome{pass, detail};
  });

  criterion(7, "self-similar envelope", 0.0, [&] {
    if (ref_run.snapshots.empty()) return Outcome{false, "reference run unavailable"};
    bool pass = theorem3_check(ref_cfg.params).applicable;
    std::string detail;
    for (const auto& e : selfsimilar_envelope_check(ref_run.snapshots, ref_cfg.params, 1e-2, ref_cfg.grid)) {
      pass = pass && e.verdict && std::abs(e.ratio_at_zero - 1e-2) <= 1e-10 && e.fitted_k > 0.0;
      detail += "u" + std::to_string(e.component) + " R(0)-eps " + num(e.ratio_at_zero - 1e-2) + " k " +
                num(e.fitted_k) + " c " + num(e.fitted_c) + " violation " + num(e.max_ratio_violation) + "; ";
    }
    return Outcome{pass, detail};
  });

  criterion(8, "comparison principle", 300.0, [] {
    std::vector<std::vector<FieldPair>> runs;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) runs.push_back(solve(reference_config(eps)).snapshots);
    double worst = 0.0;
    bool pass = true;
    for (auto [a, b] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
      const auto c = comparison_check(runs[a], runs[b], 1e-9);
      pass = pass && c.holds;
      worst = std::min(worst, c.worst_relative);
    }
    return Outcome{pass, "worst relative margin " + num(worst) + " over 3 ordered pairs"};
  });

  criterion(9, "mesh refinement order", 180.0, [] {
    const std::vector<int> steps{16, 32, 64, 128};
    double min_ratio = 1e300;
    std::string detail;
    for (auto [sigma, grading] : {std::pair{0.0, 1.0}, std::pair{-0.5, 2.0}}) {
      const auto d = refinement_differences(sigma, grading, steps);
      detail += "sigma " + num(sigma) + " ratios";
      for (std::size_t k = 1; k < d.size(); ++k) {
        min_ratio = std::min(min_ratio, d[k - 1] / d[k]);
        detail += " " + num(d[k - 1] / d[k]);
      }
      detail += "; ";
    }
    return Outcome{min_ratio >= 2.0, detail};
  });

  criterion(10, "determinism", 0.0, [&] {
    const fs::path root = fs::temp_directory_path() / "fracsys_acceptance";
    fs::remove_all(root);
    ExperimentConfig c = load_config(configs / "reference.conf");
    std::ostringstream log;
    std::vector<std::vector<std::string>> sums;
    std::vector<fs::path> dirs;
    for (const char* tag : {"a", "b"}) {
      c.output_dir = root / tag;
      const SolveArtifacts art = cmd_solve(c, log);
      if (art.exit_code != kExitOk) return Outcome{false, "solve exit code " + std::to_string(art.exit_code)};
      sums.push_back(file_checksums(art.dir / "manifest.txt"));
      dirs.push_back(art.dir);
    }
    const bool same = sums[0] == sums[1] && !sums[0].empty() &&
                      slurp(dirs[0] / "norms.csv") == slurp(dirs[1] / "norms.csv");
    fs::remove_all(root);
    return Outcome{same, std::to_string(sums[0].size()) + " files, checksums " + (same ? "identical" : "differ")};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
