#pragma once

// Configuration-driven runner: check -> solve -> analyze, with CSV/JSON
// artifacts and a manifest of content digests. The config schema is
// documented in README.md.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfg_lab/analyzer.hpp"
#include "mfg_lab/assumptions.hpp"
#include "mfg_lab/solver.hpp"

namespace mfg {

/// Exit codes of every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct ModelSpec {
  /// "standard", "separable_gamma" or "problem" (derived from the solve block).
  std::string kind = "problem";
  double alpha = 0.0, tau = 0.0, beta = 0.0, epsilon = 0.0;
  double gamma = 0.0;
  std::optional<double> gamma_epsilon;
};

struct GridSpec {
  int dim = 2;
  std::array<Index, 2> shape{0, 1};
  /// "node_aligned": lo/hi are the first and last cell centres;
  /// "cells": the cells tile [lo, hi].
  std::string layout = "node_aligned";
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};

  GridGeometry geometry() const;
};

struct BoundarySpec {
  /// "affine": offset + coeffs . x; "radial_power": scale |x - center|^exponent
  /// + offset; "file": a field CSV on the same grid.
  std::string kind = "affine";
  std::vector<double> coeffs;
  double offset = 0.0;
  double scale = 1.0;
  double exponent = 1.0;
  std::vector<double> center;
  std::filesystem::path file;
};

struct SolveSpec {
  bool present = false;
  double gamma = 4.0;
  double s = 2.0;
  double h0_coeff = 1.0;
  BoundarySpec boundary;
  MinimizeOptions opts;
};

struct BallSpec {
  Point center;
  double R = 0.0;
};

struct ChainSpec {
  std::string name;
  BallChain chain;
  int drop_first = 0;
  std::optional<std::pair<double, double>> mu_range;
};

struct AnalyzeSpec {
  std::optional<std::filesystem::path> pair_dir;
  double hjb_tol = 1e-10;
  int transport_count = 10;
  std::vector<double> transport_scales{0.1, 0.2};
  double transport_tol = 1e-3;
  double c_cap = kDefaultCCap;
  std::vector<BallSpec> balls;
  std::vector<double> caccioppoli_q{1.0};
  double caccioppoli_M = 1e6;
  std::vector<double> reverse_holder_theta{4.0};
  double reverse_holder_k = 1.0;
  std::vector<double> moser_lambda;
  bool harnack = true;
  std::vector<double> jn_epsilons;
  std::vector<ChainSpec> chains;
  int lattice_per_decade = 8;
  int lattice_directions = 8;
  AssumptionTolerances tolerances;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool plots = false;
};

struct PipelineConfig {
  ModelSpec model;
  GridSpec grid;
  bool has_grid = false;
  SolveSpec solve;
  AnalyzeSpec analyze;
  OutputSpec output;
  std::uint64_t seed = 0;
  /// FNV-1a of the canonical config with the output directory removed and
  /// command-line overrides applied.
  std::string hash;
  /// FNV-1a of the grid and solve blocks.
  std::string problem_digest;
};

/// Command-line overrides.
struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool plots = false;
  bool resume = false;
  std::optional<std::filesystem::path> pair;
};

/// Parses and validates; throws ConfigError. Relative paths inside the
/// config resolve against the config file's directory.
PipelineConfig load_config(const std::filesystem::path& path, const RunOptions& opts = {});
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                            const RunOptions& opts = {});

VariationalProblem build_problem(const PipelineConfig& cfg);
HamiltonianModel build_model(const PipelineConfig& cfg);

/// Writes u.csv, m.csv and solution.json to `dir`.
void save_pair(const std::filesystem::path& dir, const SolutionPair& pair, const PipelineConfig& cfg);
/// Reads u.csv and m.csv (and solution.json if present).
SolutionPair load_pair(const std::filesystem::path& dir, double default_gamma);

int cmd_check(const PipelineConfig& cfg, const RunOptions& opts = {});
int cmd_solve(const PipelineConfig& cfg, const RunOptions& opts = {});
int cmd_analyze(const PipelineConfig& cfg, const RunOptions& opts = {});
int cmd_pipeline(const PipelineConfig& cfg, const RunOptions& opts = {});

/// Loads the config and dispatches; maps every error onto the exit codes.
int run_command(const std::string& command, const std::filesystem::path& config, const RunOptions& opts = {});

}  // namespace mfg
