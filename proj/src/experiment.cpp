#include "fracsys/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "fracsys/errors.hpp"
#include "fracsys/format.hpp"
#include "fracsys/snapshot_io.hpp"
#include "fracsys/stable_kernel.hpp"

namespace fs = std::filesystem;

namespace fracsys {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  // Write then rename so a crashed run never leaves a half-written file behind.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::size_t csv_columns(const std::string& header) { return std::count(header.begin(), header.end(), ',') + 1; }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

unsigned worker_count() {
  if (const char* env = std::getenv("FRACSYS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_regime(const ExperimentConfig& cfg, std::ostream& out) {
  const ExponentReport rep = classify(cfg.run.params, cfg.delta);
  out << report_key_values(rep);
  out << report_csv_header() << '\n' << report_csv_row(rep) << '\n';
  return kExitOk;
}

SolveArtifacts cmd_solve(const ExperimentConfig& cfg, std::ostream& log) {
  SolveArtifacts art;
  art.dir = cfg.output_dir / cfg.run_id;
  fs::create_directories(art.dir);

  const ExponentReport rep = classify(cfg.run.params, cfg.delta);
  const auto ex = decay_exponents(rep);
  const SolveResult res = solve(cfg.run, ex);
  art.status = res.status;
  art.last_time = res.last_time;

  std::vector<fs::path> files;
  {
    std::ostringstream csv;
    write_norm_series(csv, res.series);
    write_text(art.dir / "norms.csv", csv.str());
    files.push_back("norms.csv");
  }
  const fs::path snap_dir = art.dir / "snapshots";
  fs::remove_all(snap_dir);
  if (cfg.write_snapshots) {
    fs::create_directories(snap_dir);
    for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%05zu.bin", k);
      write_snapshot(snap_dir / name, cfg.run.grid, cfg.run.params, res.snapshots[k]);
      files.push_back(fs::path("snapshots") / name);
    }
  }

  VerificationSummary& sum = art.summary;
  sum.run_id = cfg.run_id;
  sum.regime = rep.regime;
  if (res.status != SolveStatus::Completed) {
    sum.completed = false;
    sum.skipped.push_back("all checks: run did not complete");
  } else {
    if (!ex) {
      sum.skipped.push_back("decay: no decay estimate in this regime");
    } else {
      try {
        sum.decay = decay_report(res.series, *ex, cfg.tail_fraction);
      } catch (const InsufficientDataError& e) {
        sum.skipped.push_back(std::string("decay: ") + e.what());
      }
    }
    if (rep.has_exponents() && !rep.window_bounded.empty()) {
      sum.linf = linf_bound_check(res.series, rep);
    } else {
      sum.skipped.push_back("linf bound: bounded window empty");
    }
    if (!rep.theorem3) {
      sum.skipped.push_back("envelope: self-similar hypothesis does not hold");
    } else if (cfg.run.init.kind != InitKind::stable_kernel || !(cfg.run.init.epsilon > 0.0)) {
      sum.skipped.push_back("envelope: needs stable_kernel initial data with epsilon > 0");
    } else {
      try {
        sum.envelope = selfsimilar_envelope_check(res.snapshots, cfg.run.params, cfg.run.init.epsilon, cfg.run.grid);
      } catch (const InsufficientDataError& e) {
        sum.skipped.push_back(std::string("envelope: ") + e.what());
      }
    }
  }

  std::ostringstream report;
  report << report_key_values(rep);
  report << "status = " << to_string(res.status) << '\n';
  report << "last_time = " << fmt17(res.last_time) << '\n';
  report << "clamped_events = " << res.clamped << '\n';
  report << "bisections = " << res.bisections << '\n';
  report << "kernel_tail_mass_bound = "
         << fmt17(tail_mass_bound(KernelSpec::automatic(std::min(cfg.run.params.alpha[0], cfg.run.params.alpha[1]),
                                                       cfg.run.params.dim),
                                  1.0 + std::pow(cfg.run.mesh.horizon, std::max(cfg.run.params.rho[0], cfg.run.params.rho[1])),
                                  cfg.run.grid.half_length()))
         << '\n';
  report << summary_key_values(sum);
  write_text(art.dir / "report.txt", report.str());
  files.push_back("report.txt");
  write_text(art.dir / "verification.csv", std::string(kSweepSummaryHeader) + "\n" + summary_csv_row(sum) + "\n");
  files.push_back("verification.csv");

  const std::string resolved = render_config(cfg);
  std::ostringstream manifest;
  manifest << resolved;
  manifest << "# config_sha256 = " << sha256_hex(resolved) << '\n';
  std::sort(files.begin(), files.end());
  for (const auto& f : files) manifest << "# file " << f.generic_string() << " sha256 " << sha256_file(art.dir / f) << '\n';
  write_text(art.dir / "manifest.txt", manifest.str());

  log << "run " << cfg.run_id << ": " << to_string(res.status) << " at t = " << fmt17(res.last_time) << '\n';
  log << "regime " << to_string(rep.regime) << ", verdict " << (sum.verdict() ? "true" : "false") << '\n';
  log << "outputs in " << art.dir.string() << '\n';
  switch (res.status) {
    case SolveStatus::Completed:
      art.exit_code = kExitOk;
      break;
    case SolveStatus::Diverged:
      log << "Diverged(t = " << fmt17(res.last_time) << "): sup norm left the finite range\n";
      art.exit_code = kExitDiverged;
      break;
    case SolveStatus::StepRejected:
      log << "StepRejected(t = " << fmt17(res.last_time) << "): Picard iteration did not converge\n";
      art.exit_code = kExitStepRejected;
      break;
  }
  return art;
}

int cmd_verify_kernel(const KernelSuiteOptions& opt, std::ostream& out) {
  int failures = 0, checks = 0;
  auto report = [&](bool ok, const std::string& name, double alpha, int dim, double value, double limit) {
    ++checks;
    if (!ok) ++failures;
    out << (ok ? "PASS " : "FAIL ") << name << " alpha=" << fmt17(alpha) << " dim=" << dim
        << " value=" << fmt17(value) << " limit=" << fmt17(limit) << '\n';
  };
  auto guarded = [&](const std::string& name, double alpha, int dim, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      ++checks;
      ++failures;
      out << "FAIL " << name << " alpha=" << fmt17(alpha) << " dim=" << dim << " error=" << e.what() << '\n';
    }
  };
  const std::vector<double> radii{0.0, 0.3, 1.0, 2.5, 5.0};

  for (double alpha : opt.alphas) {
    for (int d : opt.dims) {
      const KernelSpec spec = KernelSpec::automatic(alpha, d);
      const bool closed = spec.method != KernelMethod::fourier_quadrature;
      const double tol = closed ? 1e-12 : 1e-6;

      guarded("scaling", alpha, d, [&] {
        double worst = 0.0;
        for (auto [t, s] : {std::pair{4.0, 1.0}, {3.0, 0.5}, {2.0, 1.0}}) worst = std::max(worst, check_scaling(spec, t, s, radii));
        report(worst <= tol, "scaling", alpha, d, worst, tol);
      });
      guarded("monotone_domination", alpha, d, [&] {
        double worst = std::numeric_limits<double>::infinity();
        for (auto [t, s] : {std::pair{2.0, 1.0}, {5.0, 0.5}, {1.0, 1.0}}) {
          worst = std::min(worst, check_monotone_domination(spec, t, s, radii).min_margin);
        }
        report(worst >= -1e-12, "monotone_domination", alpha, d, worst, -1e-12);
      });
      guarded("lp_slope", alpha, d, [&] {
        const std::vector<double> times{1.0, 2.0, 4.0, 8.0};
        const std::vector<double> mus{1.5, 2.0, 3.0};
        std::vector<std::vector<double>> norms;
        for (double t : times) norms.push_back(lp_norms(spec, t, mus));
        for (std::size_t k = 0; k < mus.size(); ++k) {
          std::vector<double> y;
          for (const auto& n : norms) y.push_back(n[k]);
          const double target = -(d / alpha) * (1.0 - 1.0 / mus[k]);
          const double rel = std::abs(loglog_slope(times, y) / target - 1.0);
          report(rel <= 5e-3, "lp_slope_mu=" + fmt17(mus[k]), alpha, d, rel, 5e-3);
        }
        // Past 50 scale lengths only the leading tail term is integrated.
        const double one = lp_norm(spec, 1.0, 1.0);
        report(std::abs(one - 1.0) <= 5e-5, "lp_mass", alpha, d, std::abs(one - 1.0), 5e-5);
      });
      if (d <= 3) {
        const SpectralGrid grid = d == 1 ? SpectralGrid(1, 512, 30.0) : d == 2 ? SpectralGrid(2, 128, 20.0) : SpectralGrid(3, 32, 10.0);
        guarded("semigroup", alpha, d, [&] {
          double worst = 0.0;
          for (auto [t, s] : {std::pair{0.5, 0.5}, {1.0, 2.0}}) worst = std::max(worst, semigroup_residual(spec, t, s, grid));
          report(worst <= 1e-6, "semigroup", alpha, d, worst, 1e-6);
        });
        guarded("grid_mass", alpha, d, [&] {
          const GridDensity g = eval_density_grid(spec, 1.0, grid);
          const double err = std::abs(g.mass - 1.0);
          const double limit = g.tail_mass_bound + 1e-10;
          report(err <= limit, "grid_mass", alpha, d, err, limit);
          bool sym = true;
          double peak = g.values[0];
          std::size_t origin = 0;
          for (std::size_t m = 0; m < grid.size(); ++m) {
            for (int ax = 0; ax < d; ++ax) sym = sym && g.values[grid.reflect(m, ax)] == g.values[m];
            if (grid.radius2(m) == 0.0) origin = m;
            peak = std::max(peak, g.values[m]);
          }
          report(sym, "symmetry", alpha, d, sym ? 0.0 : 1.0, 0.0);
          report(g.values[origin] == peak, "unimodal_peak", alpha, d, peak - g.values[origin], 0.0);
        });
      }
      for (double alpha_a : opt.alphas) {
        if (alpha_a > alpha) continue;
        const std::string name = "cross_domination_vs_alpha=" + fmt17(alpha_a);
        guarded(name, alpha, d, [&] {
          const auto sweep = cross_domination_sweep(alpha, alpha_a, d, 0.1, 10.0, 20.0, 8, 41);
          const double c = sweep.refined.c;
          const bool ok = std::isfinite(c) && c >= 1.0 - 1e-12 && sweep.stable &&
                          (alpha_a != alpha || std::abs(c - 1.0) <= 1e-12);
          report(ok, name, alpha, d, c, sweep.relative_change);
        });
      }
    }
  }
  out << (failures ? "FAIL" : "PASS") << " kernel suite: " << checks - failures << "/" << checks << " checks passed\n";
  return failures ? kExitFailure : kExitOk;
}

std::string sweep_csv_header() { return "sweep_param,sweep_value," + report_csv_header() + ",solve_status,error"; }

int cmd_sweep(const ExperimentConfig& cfg, bool with_dynamics, unsigned threads, std::ostream& log) {
  const fs::path points_dir = cfg.output_dir / "points";
  fs::create_directories(points_dir);
  std::vector<std::string> values;
  if (cfg.sweep_param.empty()) {
    values.emplace_back();
  } else {
    for (double v : cfg.sweep_values) values.push_back(fmt17(v));
  }
  const std::size_t report_cols = csv_columns(report_csv_header());
  const std::size_t summary_cols = csv_columns(kSweepSummaryHeader);
  std::mutex log_mu;

  auto run_point = [&](std::size_t k) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_p%03zu", k);
    const std::string run_id = cfg.run_id + suffix;
    const fs::path point_file = points_dir / (run_id + ".csv");
    std::string row_prefix = cfg.sweep_param + "," + values[k] + ",";
    std::string key, regime_cells, status, error, summary;
    try {
      auto entries = cfg.sweep_param.empty() ? cfg.entries : with_override(cfg.entries, cfg.sweep_param, values[k]);
      ExperimentConfig pcfg = resolve_config(entries, "sweep point " + std::to_string(k));
      pcfg.run_id = run_id;
      pcfg.output_dir = points_dir;
      pcfg.delta = cfg.delta;
      key = sha256_hex(render_config(pcfg) + (with_dynamics ? "dynamics" : "regime"));
      if (fs::exists(point_file)) {
        const std::string prev = read_text(point_file);
        if (prev.rfind("# " + key + "\n", 0) == 0) {
          std::lock_guard lk(log_mu);
          log << "point " << k << ": reused\n";
          return;
        }
      }
      const ExponentReport rep = classify(pcfg.run.params, pcfg.delta);
      regime_cells = report_csv_row(rep);
      if (with_dynamics) {
        std::ostringstream sink;
        const SolveArtifacts art = cmd_solve(pcfg, sink);
        status = to_string(art.status);
        summary = summary_csv_row(art.summary);
      }
    } catch (const std::exception& e) {
      error = csv_safe(e.what());
    }
    if (regime_cells.empty()) regime_cells = std::string(report_cols - 1, ',');
    if (with_dynamics && summary.empty()) summary = run_id + std::string(summary_cols - 1, ',');
    if (key.empty()) key = "unresolved";
    std::string text = "# " + key + "\n" + row_prefix + regime_cells + "," + status + "," + error + "\n";
    if (with_dynamics) text += summary + "\n";
    write_text(point_file, text);
    std::lock_guard lk(log_mu);
    log << "point " << k << (error.empty() ? ": done\n" : ": error: " + error + "\n");
  };

  std::atomic<std::size_t> next{0};
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(values.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < values.size(); k = next++) run_point(k);
    });
  }
  for (auto& t : pool) t.join();

  std::string merged = sweep_csv_header() + "\n";
  std::string merged_summary = std::string(kSweepSummaryHeader) + "\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_p%03zu", k);
    std::istringstream is(read_text(points_dir / (cfg.run_id + suffix + ".csv")));
    std::string line;
    std::getline(is, line);  // key
    std::getline(is, line);
    merged += line + "\n";
    if (with_dynamics && std::getline(is, line)) merged_summary += line + "\n";
  }
  write_text(cfg.output_dir / "sweep.csv", merged);
  if (with_dynamics) write_text(cfg.output_dir / "sweep_summary.csv", merged_summary);
  log << "wrote " << (cfg.output_dir / "sweep.csv").string() << " (" << values.size() << " rows)\n";
  return kExitOk;
}

}  // namespace fracsys
