// Command-line front end: regime, solve, verify-kernel, sweep.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "fracsys/errors.hpp"
#include "fracsys/experiment.hpp"

namespace {

template <class T>
std::vector<T> split_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw fracsys::ConfigError(std::string("bad ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fracsys;
  CLI::App app{"Numerical laboratory for weakly coupled fractional reaction-diffusion systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_id;
  std::optional<double> delta;
  bool with_dynamics = false;
  std::string alphas = "1,1.5,2", dims = "1,2";

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "key = value configuration file");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--delta", delta, "Delta inside the existence window (overrides delta)");
    sub->add_option("--seed-id", seed_id, "run identifier (overrides run_id)");
  };
  auto* regime = app.add_subcommand("regime", "print the exponent report and regime");
  add_common(regime, true);
  auto* solve = app.add_subcommand("solve", "solve the mild system and verify the bounds");
  add_common(solve, true);
  auto* sweep = app.add_subcommand("sweep", "regime map over one parameter");
  add_common(sweep, true);
  sweep->add_flag("--with-dynamics", with_dynamics, "also solve every sweep point");
  auto* kernel = app.add_subcommand("verify-kernel", "run the stable-kernel property suite");
  kernel->add_option("--alphas", alphas, "comma-separated alpha list (empty for none)");
  kernel->add_option("--dims", dims, "comma-separated dimension list (empty for none)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (kernel->parsed()) {
      KernelSuiteOptions opt;
      opt.alphas = split_list<double>(alphas, "alpha");
      opt.dims = split_list<int>(dims, "dim");
      return cmd_verify_kernel(opt, std::cout);
    }
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (delta) cfg.delta = delta;
    if (!seed_id.empty()) {
      cfg.entries = with_override(cfg.entries, "run_id", seed_id);
      cfg = resolve_config(cfg.entries, config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (delta) cfg.delta = delta;
    }
    if (regime->parsed()) return cmd_regime(cfg, std::cout);
    if (solve->parsed()) return cmd_solve(cfg, std::cout).exit_code;
    return cmd_sweep(cfg, with_dynamics, worker_count(), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
