#include "fracsys/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fracsys/errors.hpp"
#include "fracsys/format.hpp"

namespace fracsys {

namespace {

const std::set<std::string> kShorthand = {"alpha", "beta", "rho", "sigma"};

const std::set<std::string> kKnownKeys = {
    "alpha",  "alpha1",      "alpha2",    "beta",         "beta1",         "beta2",         "rho",
    "rho1",   "rho2",        "sigma",     "sigma1",       "sigma2",        "dim",           "n",
    "half_length", "horizon", "steps",    "grading",      "init",          "epsilon",       "width",
    "init_file", "picard_tol", "picard_max_iter", "dealias", "snapshot_stride", "coupling", "max_bisections",
    "delta",  "output_dir",  "run_id",    "sweep_param",  "sweep_values",  "tail_fraction", "write_snapshots"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, const ConfigEntry& e, const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(e.line) + ": key '" + e.key + "': " + what);
}

double to_double(const std::string& source, const ConfigEntry& e, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) fail(source, e, "expected a number, got '" + text + "'");
  if (!std::isfinite(v)) fail(source, e, "value must be finite");
  return v;
}

int to_int(const std::string& source, const ConfigEntry& e) {
  const double v = to_double(source, e, e.value);
  if (v != std::floor(v) || std::abs(v) > 1e9) fail(source, e, "expected an integer, got '" + e.value + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& source, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(source, e, "expected true or false, got '" + e.value + "'");
}

bool filesystem_safe(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::stable_kernel:
      return "stable_kernel";
    case InitKind::gaussian:
      return "gaussian";
    case InitKind::from_file:
      return "file";
  }
  return "?";
}

std::string to_string(Dealias d) { return d == Dealias::two_thirds ? "two_thirds" : "none"; }

std::vector<ConfigEntry> parse_entries(std::istream& is, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::set<std::string> seen;
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    if (e.key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kKnownKeys.count(e.key)) fail(source, e, "unknown key");
    if (!seen.insert(e.key).second) fail(source, e, "duplicate key");
    out.push_back(std::move(e));
  }
  return out;
}

ExperimentConfig resolve_config(const std::vector<ConfigEntry>& entries, const std::string& source) {
  ExperimentConfig cfg;
  cfg.entries = entries;
  SystemParams& p = cfg.run.params;
  int n = 1024;
  std::optional<double> half_length, grading;

  std::map<std::string, std::function<void(const ConfigEntry&)>> setters;
  auto pair_setter = [&](const std::string& name, Pair<double>* target) {
    setters[name] = [&source, target](const ConfigEntry& e) { (*target)[0] = (*target)[1] = to_double(source, e, e.value); };
    setters[name + "1"] = [&source, target](const ConfigEntry& e) { (*target)[0] = to_double(source, e, e.value); };
    setters[name + "2"] = [&source, target](const ConfigEntry& e) { (*target)[1] = to_double(source, e, e.value); };
  };
  pair_setter("alpha", &p.alpha);
  pair_setter("beta", &p.beta);
  pair_setter("rho", &p.rho);
  pair_setter("sigma", &p.sigma);
  setters["dim"] = [&](const ConfigEntry& e) { p.dim = to_int(source, e); };
  setters["n"] = [&](const ConfigEntry& e) { n = to_int(source, e); };
  setters["half_length"] = [&](const ConfigEntry& e) { half_length = to_double(source, e, e.value); };
  setters["horizon"] = [&](const ConfigEntry& e) { cfg.run.mesh.horizon = to_double(source, e, e.value); };
  setters["steps"] = [&](const ConfigEntry& e) { cfg.run.mesh.steps = to_int(source, e); };
  setters["grading"] = [&](const ConfigEntry& e) { grading = to_double(source, e, e.value); };
  setters["init"] = [&](const ConfigEntry& e) {
    if (e.value == "stable_kernel") cfg.run.init.kind = InitKind::stable_kernel;
    else if (e.value == "gaussian") cfg.run.init.kind = InitKind::gaussian;
    else if (e.value == "file") cfg.run.init.kind = InitKind::from_file;
    else fail(source, e, "expected stable_kernel, gaussian or file");
  };
  setters["epsilon"] = [&](const ConfigEntry& e) { cfg.run.init.epsilon = to_double(source, e, e.value); };
  setters["width"] = [&](const ConfigEntry& e) { cfg.run.init.width = to_double(source, e, e.value); };
  setters["init_file"] = [&](const ConfigEntry& e) { cfg.run.init.path = e.value; };
  setters["picard_tol"] = [&](const ConfigEntry& e) { cfg.run.picard_tol = to_double(source, e, e.value); };
  setters["picard_max_iter"] = [&](const ConfigEntry& e) { cfg.run.picard_max_iter = to_int(source, e); };
  setters["dealias"] = [&](const ConfigEntry& e) {
    if (e.value == "two_thirds") cfg.run.dealias = Dealias::two_thirds;
    else if (e.value == "none") cfg.run.dealias = Dealias::none;
    else fail(source, e, "expected two_thirds or none");
  };
  setters["snapshot_stride"] = [&](const ConfigEntry& e) { cfg.run.snapshot_stride = to_int(source, e); };
  setters["coupling"] = [&](const ConfigEntry& e) { cfg.run.coupling = to_double(source, e, e.value); };
  setters["max_bisections"] = [&](const ConfigEntry& e) { cfg.run.max_bisections = to_int(source, e); };
  setters["delta"] = [&](const ConfigEntry& e) { cfg.delta = to_double(source, e, e.value); };
  setters["output_dir"] = [&](const ConfigEntry& e) { cfg.output_dir = e.value; };
  setters["run_id"] = [&](const ConfigEntry& e) {
    if (!filesystem_safe(e.value)) fail(source, e, "run_id must be nonempty and use only [A-Za-z0-9._-]");
    cfg.run_id = e.value;
  };
  setters["sweep_param"] = [&](const ConfigEntry& e) {
    if (!kKnownKeys.count(e.value) || e.value.rfind("sweep_", 0) == 0) fail(source, e, "cannot sweep '" + e.value + "'");
    cfg.sweep_param = e.value;
  };
  setters["sweep_values"] = [&](const ConfigEntry& e) {
    std::stringstream ss(e.value);
    std::string item;
    cfg.sweep_values.clear();
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.sweep_values.push_back(to_double(source, e, item));
    }
  };
  setters["tail_fraction"] = [&](const ConfigEntry& e) { cfg.tail_fraction = to_double(source, e, e.value); };
  setters["write_snapshots"] = [&](const ConfigEntry& e) { cfg.write_snapshots = to_bool(source, e); };

  // Shorthand first so the per-component keys win regardless of file order.
  for (const auto& e : entries) {
    if (kShorthand.count(e.key)) setters.at(e.key)(e);
  }
  for (const auto& e : entries) {
    if (!kShorthand.count(e.key)) setters.at(e.key)(e);
  }

  auto where = [&](const std::string& key) {
    for (const auto& e : entries) {
      if (e.key == key) return source + ":" + std::to_string(e.line) + ": key '" + key + "': ";
    }
    return source + ": ";
  };
  try {
    p.validate();
  } catch (const PreconditionError& ex) {
    throw ConfigError(source + ": " + ex.what());
  }
  if (!(cfg.run.mesh.horizon > 0.0)) throw ConfigError(where("horizon") + "must be positive");
  // Grids exist for dim <= 3 only; higher dimensions stay usable for regime
  // questions and are rejected when a run starts.
  if (p.dim <= 3) {
    try {
      cfg.run.grid = SpectralGrid(p.dim, n, half_length.value_or(default_half_length(p, cfg.run.mesh.horizon)));
    } catch (const std::exception& ex) {
      throw ConfigError(where("n") + ex.what());
    }
  }
  cfg.run.mesh.grading = grading.value_or(TimeMesh::min_grading(p.sigma));
  if (cfg.run.mesh.steps < 1) throw ConfigError(where("steps") + "must be >= 1");
  try {
    cfg.run.mesh.validate(p.sigma);
  } catch (const PreconditionError& ex) {
    throw ConfigError(where("grading") + ex.what());
  }
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0)) throw ConfigError(where("tail_fraction") + "must lie in (0, 1]");
  if (!cfg.sweep_param.empty() && cfg.sweep_values.empty()) throw ConfigError(where("sweep_param") + "sweep_values is empty");
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  return resolve_config(parse_entries(is, source), source);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  const std::string source = path.string();
  return resolve_config(parse_entries(is, source), source);
}

std::vector<ConfigEntry> with_override(std::vector<ConfigEntry> entries, const std::string& key,
                                       const std::string& value) {
  if (kShorthand.count(key)) {
    std::erase_if(entries, [&](const ConfigEntry& e) { return e.key == key + "1" || e.key == key + "2"; });
  }
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = value;
      return entries;
    }
  }
  entries.push_back({key, value, 0});
  return entries;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  const auto& r = cfg.run;
  const auto& p = r.params;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("alpha1", fmt17(p.alpha[0]));
  kv("alpha2", fmt17(p.alpha[1]));
  kv("beta1", fmt17(p.beta[0]));
  kv("beta2", fmt17(p.beta[1]));
  kv("rho1", fmt17(p.rho[0]));
  kv("rho2", fmt17(p.rho[1]));
  kv("sigma1", fmt17(p.sigma[0]));
  kv("sigma2", fmt17(p.sigma[1]));
  kv("dim", std::to_string(p.dim));
  kv("n", std::to_string(r.grid.n()));
  kv("half_length", fmt17(r.grid.half_length()));
  kv("horizon", fmt17(r.mesh.horizon));
  kv("steps", std::to_string(r.mesh.steps));
  kv("grading", fmt17(r.mesh.grading));
  kv("init", to_string(r.init.kind));
  kv("epsilon", fmt17(r.init.epsilon));
  kv("width", fmt17(r.init.width));
  if (!r.init.path.empty()) kv("init_file", r.init.path);
  kv("picard_tol", fmt17(r.picard_tol));
  kv("picard_max_iter", std::to_string(r.picard_max_iter));
  kv("dealias", to_string(r.dealias));
  kv("snapshot_stride", std::to_string(r.snapshot_stride));
  kv("coupling", fmt17(r.coupling));
  kv("max_bisections", std::to_string(r.max_bisections));
  if (cfg.delta) kv("delta", fmt17(*cfg.delta));
  kv("output_dir", cfg.output_dir.string());
  kv("run_id", cfg.run_id);
  if (!cfg.sweep_param.empty()) {
    kv("sweep_param", cfg.sweep_param);
    std::string vals;
    for (std::size_t k = 0; k < cfg.sweep_values.size(); ++k) vals += (k ? ", " : "") + fmt17(cfg.sweep_values[k]);
    kv("sweep_values", vals);
  }
  kv("tail_fraction", fmt17(cfg.tail_fraction));
  kv("write_snapshots", cfg.write_snapshots ? "true" : "false");
  return os.str();
}

}  // namespace fracsys
