// mfg_lab check|solve|analyze|pipeline --config <path> [--out <dir>] [--seed <n>] [--plots]

#include <cstdlib>
#include <iostream>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "mfg_lab/pipeline.hpp"

namespace {

// MFG_LAB_THREADS caps the threads Eigen may use; unset or invalid means 1.
void apply_thread_cap() {
  int n = 1;
  if (const char* env = std::getenv("MFG_LAB_THREADS")) {
    try {
      n = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      std::cerr << "ignoring invalid MFG_LAB_THREADS=" << env << '\n';
    }
  }
  Eigen::setNbThreads(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularity laboratory for stationary mean field games"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string pair;
  std::uint64_t seed = 0;
  bool plots = false;
  bool resume = false;

  for (const char* name : {"check", "solve", "analyze", "pipeline"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON config")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "seed for sampled test functions");
    sub->add_flag("--plots", plots, "emit SVG plots");
    if (std::string(name) == "analyze") sub->add_option("--pair", pair, "directory holding u.csv and m.csv");
    if (std::string(name) == "pipeline") sub->add_flag("--resume", resume, "reuse a matching solve output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mfg::kExitOk : mfg::kExitConfig;
  }

  apply_thread_cap();

  mfg::RunOptions opts;
  if (!out.empty()) opts.out = out;
  if (!pair.empty()) opts.pair = pair;
  for (CLI::App* sub : app.get_subcommands())
    if (sub->count("--seed")) opts.seed = seed;
  opts.plots = plots;
  opts.resume = resume;
  return mfg::run_command(app.get_subcommands().front()->get_name(), config, opts);
}
