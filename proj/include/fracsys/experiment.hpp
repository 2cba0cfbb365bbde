#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracsys/config.hpp"
#include "fracsys/verify.hpp"

namespace fracsys {

/// Process exit codes of the front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitDiverged = 2, kExitStepRejected = 3 };

/// Hex SHA-256 of a byte string / a file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Full exponent report then the CSV header and row.  Always succeeds for
/// valid parameters (NoGuarantee is an answer).
int cmd_regime(const ExperimentConfig& cfg, std::ostream& out);

struct SolveArtifacts {
  int exit_code = kExitOk;
  SolveStatus status = SolveStatus::Completed;
  double last_time = 0.0;
  VerificationSummary summary;
  std::filesystem::path dir;
};

/// Solve and verify, writing into cfg.output_dir / cfg.run_id:
/// norms.csv, snapshots/snap_NNNNN.bin, report.txt, verification.csv and
/// manifest.txt (a loadable config carrying checksums as comments).
SolveArtifacts cmd_solve(const ExperimentConfig& cfg, std::ostream& log);

struct KernelSuiteOptions {
  std::vector<double> alphas{1.0, 1.5, 2.0};
  std::vector<int> dims{1, 2};
};

/// Runs every kernel property check; prints one line per check.  Returns
/// nonzero when any check fails.
int cmd_verify_kernel(const KernelSuiteOptions& opt, std::ostream& out);

/// Header of the merged boundary-map CSV.
std::string sweep_csv_header();

/// One row per sweep value, written per point under output_dir/points and
/// merged into output_dir/sweep.csv.  Finished points are reused on rerun.
/// with_dynamics also solves each point (sweep_summary.csv).
int cmd_sweep(const ExperimentConfig& cfg, bool with_dynamics, unsigned threads, std::ostream& log);

/// FRACSYS_THREADS if set and positive, otherwise hardware concurrency.
unsigned worker_count();

}  // namespace fracsys
