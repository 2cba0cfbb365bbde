#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracsys/solver.hpp"

namespace fracsys {

/// Raw `key = value` entries in file order, with their source line.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ExperimentConfig {
  RunConfig run;
  std::optional<double> delta;
  std::filesystem::path output_dir = "out";
  std::string run_id = "run";
  std::string sweep_param;
  std::vector<double> sweep_values;
  /// Fraction of the [1, T] nodes used by the decay slope fit.
  double tail_fraction = 0.5;
  bool write_snapshots = true;
  /// The entries this config was resolved from; sweeps re-resolve them.
  std::vector<ConfigEntry> entries;
};

/// Parse `key = value` lines (`#` starts a comment).  Unknown keys, duplicate
/// keys and malformed values raise ConfigError naming the line and key.
std::vector<ConfigEntry> parse_entries(std::istream& is, const std::string& source = "<config>");

/// Apply defaults and validate.  Shorthand keys alpha/beta/rho/sigma set both
/// components; alpha1 etc. override them.
ExperimentConfig resolve_config(const std::vector<ConfigEntry>& entries, const std::string& source = "<config>");

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Copy of the entries with `key` set to `value`; shorthand keys drop their
/// per-component overrides.
std::vector<ConfigEntry> with_override(std::vector<ConfigEntry> entries, const std::string& key,
                                       const std::string& value);

/// Every resolved field as `key = value`, 17 significant digits.  Parsing the
/// result gives back the same configuration.
std::string render_config(const ExperimentConfig& cfg);

std::string to_string(InitKind k);
std::string to_string(Dealias d);

}  // namespace fracsys
