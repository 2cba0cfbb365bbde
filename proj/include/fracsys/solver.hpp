#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fracsys/exponents.hpp"
#include "fracsys/grid.hpp"

namespace fracsys {

/// The two solution components at one time.  Components are addressed
/// 0-based throughout the solver (0 is u_1, 1 is u_2).
struct FieldPair {
  Field u1;
  Field u2;
  double time = 0.0;

  Field& operator[](int i) { return i == 0 ? u1 : u2; }
  const Field& operator[](int i) const { return i == 0 ? u1 : u2; }
};

/// Graded nodes t_k = T (k/K)^gamma.
struct TimeMesh {
  double horizon = 1.0;
  int steps = 100;
  double grading = 1.0;

  double node(int k) const;
  /// Physical time of graded coordinate tau in [0, 1].
  double at(double tau) const;
  /// Inverse of at().
  double tau(double t) const;
  /// Smallest grading that resolves s^sigma near 0: max(1, 1/(1 + min sigma)).
  static double min_grading(const Pair<double>& sigma);
  void validate(const Pair<double>& sigma) const;
};

enum class InitKind { stable_kernel, gaussian, from_file };

struct InitSpec {
  InitKind kind = InitKind::stable_kernel;
  double epsilon = 1e-2;
  /// Standard deviation of the gaussian kind.
  double width = 1.0;
  std::string path;
};

enum class Dealias { two_thirds, none };

struct RunConfig {
  SystemParams params;
  SpectralGrid grid{1, 1024, 20.0};
  TimeMesh mesh;
  InitSpec init;
  double picard_tol = 1e-10;
  int picard_max_iter = 25;
  Dealias dealias = Dealias::two_thirds;
  int snapshot_stride = 1;
  /// Multiplies both reaction terms; 0 gives the pure linear evolution.
  double coupling = 1.0;
  /// Maximum number of times a failing step is halved.
  int max_bisections = 48;

  void validate() const;
};

/// Default half-length 6 max_i (T^{rho_i})^{1/alpha_i}.
double default_half_length(const SystemParams& p, double horizon);

/// Divergence threshold on the sup norm.
inline constexpr double kBlowupThreshold = 1e12;

struct StepResult {
  FieldPair state;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  /// Relative L-infinity change after each Picard sweep.
  std::vector<double> distances;
  std::size_t clamped = 0;
};

/// Pseudospectral propagator and Duhamel stepper for one configuration.
/// Owns FFT plans, so one instance per thread.
class MildSolver {
 public:
  explicit MildSolver(const RunConfig& cfg);

  const RunConfig& config() const noexcept { return cfg_; }

  /// Multiply each mode by exp(-(t^rho_i - s^rho_i) |xi|^alpha_i).
  Field propagate_linear(const Field& f, int i, double s, double t);

  /// (s^sigma_1 u_2^beta_1, s^sigma_2 u_1^beta_2), dealiased when configured.
  std::array<Field, 2> nonlinear_term(const FieldPair& pair, double s);

  /// One Picard-converged step from pair.time to b.  Does not bisect.
  StepResult step(const FieldPair& pair, double b);

  FieldPair initial_data();

 private:
  void multiplier(int i, double s, double t, std::vector<double>& out) const;
  /// Power s^sigma_i u_j^beta_i, transformed and (optionally) dealiased.
  void reaction_spectrum(int i, const Field& uj, double s, SpectralField& out);

  RunConfig cfg_;
  Fft fft_;
  std::array<std::vector<double>, 2> symbol_;
  SpectralField spec_a_, spec_b_;
  Field work_;
};

struct NormRow {
  double t = 0.0;
  Pair<double> linf{};
  Pair<double> ls{};
  Pair<double> scaled{};
  Pair<double> mass{};
  int picard_iters = 0;
};

struct NormSeries {
  /// s_i and xi_i; absent when no decay estimate applies (columns blank).
  std::optional<Pair<double>> s;
  std::optional<Pair<double>> xi;
  std::vector<NormRow> rows;
};

/// s_i, xi_i for the norm columns, or nothing when the regime has none.
struct DecayExponents {
  Pair<double> s{};
  Pair<double> xi{};
};

std::optional<DecayExponents> decay_exponents(const ExponentReport& rep);

NormRow measure(const FieldPair& pair, const SpectralGrid& grid, const std::optional<DecayExponents>& ex);

enum class SolveStatus { Completed, Diverged, StepRejected };

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Completed;
  /// Last time reached with a finite, accepted state.
  double last_time = 0.0;
  NormSeries series;
  std::vector<FieldPair> snapshots;
  std::size_t clamped = 0;
  int bisections = 0;
  /// Every Picard distance sequence of accepted steps, for contraction diagnostics.
  std::vector<std::vector<double>> picard_history;
};

/// March the mesh.  Snapshots every snapshot_stride nodes plus the last node.
SolveResult solve(const RunConfig& cfg, const std::optional<DecayExponents>& ex = std::nullopt);

}  // namespace fracsys
