#include "mfg_lab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mfg_lab/field_io.hpp"
#include "mfg_lab/report.hpp"

#ifndef MFG_LAB_VERSION
#define MFG_LAB_VERSION "0.0.0"
#endif

namespace mfg {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  if (!j.at(key).is_number()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

double positive(const json& j, const char* key, double fallback, const std::string& where) {
  const double v = number_or(j, key, fallback, where);
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be positive");
  return v;
}

int integer_or(const json& j, const char* key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be an integer");
  return j.at(key).get<int>();
}

bool boolean_or(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a boolean");
  return j.at(key).get<bool>();
}

std::string string_or(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a string");
  return j.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, std::vector<double> fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be an array");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigError("'" + std::string(key) + "' in " + where + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Point point_of(const std::vector<double>& v, int dim, const std::string& where) {
  if (static_cast<int>(v.size()) != dim) throw ConfigError(where + " must have " + std::to_string(dim) + " entries");
  Point p(dim);
  for (int a = 0; a < dim; ++a) p[a] = v[a];
  return p;
}

ModelSpec parse_model(const json& j) {
  const std::string w = "model";
  ModelSpec m;
  if (!j.is_object()) throw ConfigError("model must be an object");
  m.kind = string_or(j, "kind", "", w);
  if (m.kind == "standard") {
    check_keys(j, {"kind", "alpha", "tau", "beta", "epsilon"}, w);
    m.alpha = number(j, "alpha", w);
    m.tau = number(j, "tau", w);
    m.beta = number(j, "beta", w);
    m.epsilon = number(j, "epsilon", w);
  } else if (m.kind == "separable_gamma") {
    check_keys(j, {"kind", "gamma", "epsilon"}, w);
    m.gamma = number(j, "gamma", w);
    if (j.contains("epsilon")) m.gamma_epsilon = number(j, "epsilon", w);
  } else if (m.kind == "problem") {
    check_keys(j, {"kind"}, w);
  } else {
    throw ConfigError("model.kind must be standard, separable_gamma or problem");
  }
  return m;
}

GridSpec parse_grid(const json& j) {
  const std::string w = "grid";
  check_keys(j, {"dim", "shape", "layout", "lo", "hi"}, w);
  GridSpec g;
  g.dim = integer_or(j, "dim", 0, w);
  if (g.dim != 1 && g.dim != 2) throw ConfigError("grid.dim must be 1 or 2");
  const auto shape = numbers(j, "shape", {}, w);
  if (static_cast<int>(shape.size()) != g.dim) throw ConfigError("grid.shape must have dim entries");
  for (int a = 0; a < g.dim; ++a) {
    if (shape[a] != std::floor(shape[a]) || shape[a] < 3) throw ConfigError("grid.shape entries must be integers >= 3");
    g.shape[a] = static_cast<Index>(shape[a]);
  }
  g.layout = string_or(j, "layout", "node_aligned", w);
  if (g.layout != "node_aligned" && g.layout != "cells") throw ConfigError("grid.layout must be node_aligned or cells");
  const auto lo = numbers(j, "lo", std::vector<double>(g.dim, 0.0), w);
  const auto hi = numbers(j, "hi", std::vector<double>(g.dim, 1.0), w);
  if (static_cast<int>(lo.size()) != g.dim || static_cast<int>(hi.size()) != g.dim)
    throw ConfigError("grid.lo and grid.hi must have dim entries");
  for (int a = 0; a < g.dim; ++a) {
    if (!(hi[a] > lo[a])) throw ConfigError("grid.hi must exceed grid.lo");
    g.lo[a] = lo[a];
    g.hi[a] = hi[a];
  }
  return g;
}

SolveSpec parse_solve(const json& j, const fs::path& base, int dim) {
  const std::string w = "solve";
  check_keys(j, {"gamma", "s", "h0_coeff", "boundary", "max_iters", "grad_tol", "armijo", "max_backtracks",
                 "precond_refresh"},
             w);
  SolveSpec s;
  s.present = true;
  s.gamma = number(j, "gamma", w);
  if (!(s.gamma > 1.0)) throw ConfigError("solve.gamma must exceed 1");
  s.s = number_or(j, "s", 2.0, w);
  if (!(s.s > 1.0)) throw ConfigError("solve.s must exceed 1");
  s.h0_coeff = positive(j, "h0_coeff", 1.0, w);
  s.opts.max_iters = integer_or(j, "max_iters", s.opts.max_iters, w);
  if (s.opts.max_iters < 0) throw ConfigError("solve.max_iters must be non-negative");
  s.opts.grad_tol = positive(j, "grad_tol", s.opts.grad_tol, w);
  s.opts.armijo = positive(j, "armijo", s.opts.armijo, w);
  s.opts.max_backtracks = integer_or(j, "max_backtracks", s.opts.max_backtracks, w);
  s.opts.precond_refresh = integer_or(j, "precond_refresh", s.opts.precond_refresh, w);
  if (s.opts.max_backtracks < 1 || s.opts.precond_refresh < 1)
    throw ConfigError("solve.max_backtracks and solve.precond_refresh must be positive");

  if (!j.contains("boundary")) throw ConfigError("missing 'boundary' in solve");
  const json& b = j.at("boundary");
  const std::string wb = "solve.boundary";
  BoundarySpec& bs = s.boundary;
  bs.kind = string_or(b, "kind", "", wb);
  if (bs.kind == "affine") {
    check_keys(b, {"kind", "coeffs", "offset"}, wb);
    bs.coeffs = numbers(b, "coeffs", std::vector<double>(dim, 0.0), wb);
    if (static_cast<int>(bs.coeffs.size()) != dim) throw ConfigError("solve.boundary.coeffs must have dim entries");
    bs.offset = number_or(b, "offset", 0.0, wb);
  } else if (bs.kind == "radial_power") {
    check_keys(b, {"kind", "exponent", "scale", "offset", "center"}, wb);
    bs.exponent = number(b, "exponent", wb);
    bs.scale = number_or(b, "scale", 1.0, wb);
    bs.offset = number_or(b, "offset", 0.0, wb);
    bs.center = numbers(b, "center", std::vector<double>(dim, 0.0), wb);
    if (static_cast<int>(bs.center.size()) != dim) throw ConfigError("solve.boundary.center must have dim entries");
  } else if (bs.kind == "file") {
    check_keys(b, {"kind", "path"}, wb);
    bs.file = string_or(b, "path", "", wb);
    if (bs.file.empty()) throw ConfigError("solve.boundary.path is required");
    if (bs.file.is_relative()) bs.file = base / bs.file;
    if (!fs::exists(bs.file)) throw ConfigError("boundary file does not exist: " + bs.file.string());
  } else {
    throw ConfigError("solve.boundary.kind must be affine, radial_power or file");
  }
  return s;
}

AnalyzeSpec parse_analyze(const json& j, const fs::path& base, int dim) {
  const std::string w = "analyze";
  check_keys(j,
             {"pair", "hjb_tol", "transport", "c_cap", "balls", "caccioppoli", "reverse_holder", "moser", "harnack",
              "john_nirenberg", "chains", "lattice", "tolerances"},
             w);
  AnalyzeSpec a;
  if (j.contains("pair")) {
    fs::path p = string_or(j, "pair", "", w);
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) throw ConfigError("analyze.pair does not exist: " + p.string());
    a.pair_dir = p;
  }
  a.hjb_tol = positive(j, "hjb_tol", a.hjb_tol, w);
  a.c_cap = positive(j, "c_cap", a.c_cap, w);
  a.harnack = boolean_or(j, "harnack", a.harnack, w);
  if (j.contains("transport")) {
    const json& t = j.at("transport");
    check_keys(t, {"count", "scales", "tol"}, "analyze.transport");
    a.transport_count = integer_or(t, "count", a.transport_count, "analyze.transport");
    if (a.transport_count < 0) throw ConfigError("analyze.transport.count must be non-negative");
    a.transport_scales = numbers(t, "scales", a.transport_scales, "analyze.transport");
    for (double s : a.transport_scales)
      if (!(s > 0.0)) throw ConfigError("analyze.transport.scales must be positive");
    a.transport_tol = positive(t, "tol", a.transport_tol, "analyze.transport");
  }
  if (j.contains("balls")) {
    if (!j.at("balls").is_array()) throw ConfigError("analyze.balls must be an array");
    for (const auto& b : j.at("balls")) {
      check_keys(b, {"center", "R"}, "analyze.balls[]");
      BallSpec bs;
      bs.center = point_of(numbers(b, "center", {}, "analyze.balls[]"), dim, "analyze.balls[].center");
      bs.R = positive(b, "R", 0.0, "analyze.balls[]");
      a.balls.push_back(bs);
    }
  }
  if (j.contains("caccioppoli")) {
    const json& c = j.at("caccioppoli");
    check_keys(c, {"q", "M"}, "analyze.caccioppoli");
    a.caccioppoli_q = numbers(c, "q", a.caccioppoli_q, "analyze.caccioppoli");
    a.caccioppoli_M = positive(c, "M", a.caccioppoli_M, "analyze.caccioppoli");
  }
  if (j.contains("reverse_holder")) {
    const json& r = j.at("reverse_holder");
    check_keys(r, {"theta", "k"}, "analyze.reverse_holder");
    a.reverse_holder_theta = numbers(r, "theta", a.reverse_holder_theta, "analyze.reverse_holder");
    a.reverse_holder_k = positive(r, "k", a.reverse_holder_k, "analyze.reverse_holder");
  }
  if (j.contains("moser")) {
    const json& m = j.at("moser");
    check_keys(m, {"lambda"}, "analyze.moser");
    a.moser_lambda = numbers(m, "lambda", {}, "analyze.moser");
  }
  if (j.contains("john_nirenberg")) {
    const json& m = j.at("john_nirenberg");
    check_keys(m, {"epsilons"}, "analyze.john_nirenberg");
    a.jn_epsilons = numbers(m, "epsilons", {}, "analyze.john_nirenberg");
    for (double e : a.jn_epsilons)
      if (!(e > 0.0)) throw ConfigError("analyze.john_nirenberg.epsilons must be positive");
  }
  if (j.contains("chains")) {
    if (!j.at("chains").is_array()) throw ConfigError("analyze.chains must be an array");
    for (const auto& c : j.at("chains")) {
      const std::string wc = "analyze.chains[]";
      check_keys(c, {"name", "center", "R0", "max_levels", "min_cells", "clip", "drop_first", "mu_range"}, wc);
      ChainSpec cs;
      cs.name = string_or(c, "name", "chain" + std::to_string(a.chains.size()), wc);
      cs.chain.center = point_of(numbers(c, "center", {}, wc), dim, wc + ".center");
      cs.chain.R0 = positive(c, "R0", 0.0, wc);
      cs.chain.max_levels = integer_or(c, "max_levels", cs.chain.max_levels, wc);
      cs.chain.min_cells = integer_or(c, "min_cells", cs.chain.min_cells, wc);
      cs.chain.clip = boolean_or(c, "clip", false, wc);
      cs.drop_first = integer_or(c, "drop_first", 0, wc);
      if (c.contains("mu_range")) {
        const auto r = numbers(c, "mu_range", {}, wc);
        if (r.size() != 2 || !(r[0] <= r[1])) throw ConfigError("mu_range must be [lo, hi] with lo <= hi");
        cs.mu_range = std::make_pair(r[0], r[1]);
      }
      a.chains.push_back(cs);
    }
  }
  if (j.contains("lattice")) {
    const json& l = j.at("lattice");
    check_keys(l, {"per_decade", "directions"}, "analyze.lattice");
    a.lattice_per_decade = integer_or(l, "per_decade", a.lattice_per_decade, "analyze.lattice");
    a.lattice_directions = integer_or(l, "directions", a.lattice_directions, "analyze.lattice");
    if (a.lattice_per_decade < 1 || a.lattice_directions < 1) throw ConfigError("analyze.lattice entries must be positive");
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    const std::string wt = "analyze.tolerances";
    check_keys(t, {"slope_tol", "finite_slope_tol", "fit_decades"}, wt);
    a.tolerances.slope_tol = positive(t, "slope_tol", a.tolerances.slope_tol, wt);
    a.tolerances.finite_slope_tol = positive(t, "finite_slope_tol", a.tolerances.finite_slope_tol, wt);
    a.tolerances.fit_decades = positive(t, "fit_decades", a.tolerances.fit_decades, wt);
  }
  return a;
}

// -------------------------------------------------------------- manifest

struct StageEntry {
  std::string name;
  std::string status;  // pass, fail, error, skipped, reused
  std::string detail;
  std::vector<std::string> flags;
};

class Run {
 public:
  Run(const PipelineConfig& cfg, std::string command, bool merge) : cfg_(cfg), command_(std::move(command)) {
    fs::create_directories(cfg.output.dir);
    previous_ = read_previous();
    if (merge && previous_.is_object() && previous_.value("config_hash", "") == cfg.hash) {
      for (const auto& s : previous_.at("stages")) {
        StageEntry e{s.at("name"), s.at("status"), s.value("detail", ""), s.value("flags", std::vector<std::string>{})};
        stages_.push_back(e);
      }
      for (const auto& [k, v] : previous_.at("files").items()) files_[k] = v.get<std::string>();
    }
  }

  const json& previous() const { return previous_; }
  const fs::path& dir() const { return cfg_.output.dir; }

  void write_file(const std::string& rel, const std::string& text) {
    write_text_file(dir() / rel, text);
    files_[rel] = fnv1a64_hex(text);
  }
  void record_file(const std::string& rel) { files_[rel] = file_digest(dir() / rel); }
  void keep_file(const std::string& rel, const std::string& digest) { files_[rel] = digest; }

  void stage(StageEntry e, double seconds) {
    timing_[e.name] = seconds;
    for (auto& s : stages_)
      if (s.name == e.name) {
        s = std::move(e);
        return;
      }
    stages_.push_back(std::move(e));
  }

  void finish() {
    json m;
    m["tool"] = "mfg_lab";
    m["version"] = MFG_LAB_VERSION;
    m["command"] = command_;
    m["config_hash"] = cfg_.hash;
    m["problem_digest"] = cfg_.problem_digest;
    m["seed"] = cfg_.seed;
    m["stages"] = json::array();
    for (const auto& s : stages_) {
      json e;
      e["name"] = s.name;
      e["status"] = s.status;
      e["detail"] = s.detail;
      e["flags"] = s.flags;
      m["stages"].push_back(e);
    }
    m["files"] = json::object();
    for (const auto& [k, v] : files_) m["files"][k] = v;
    write_text_file(dir() / "manifest.json", m.dump(2) + "\n");
    json t;
    t["wall_seconds"] = timing_;
    write_text_file(dir() / "timing.json", t.dump(2) + "\n");
  }

 private:
  json read_previous() const {
    const fs::path p = cfg_.output.dir / "manifest.json";
    if (!fs::exists(p)) return json();
    try {
      return json::parse(read_text_file(p));
    } catch (const std::exception&) {
      return json();
    }
  }

  const PipelineConfig& cfg_;
  std::string command_;
  json previous_;
  std::vector<StageEntry> stages_;
  std::map<std::string, std::string> files_;
  std::map<std::string, double> timing_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- stages

StageEntry stage_check(const PipelineConfig& cfg, Run& run) {
  AssumptionReport report;
  try {
    const HamiltonianModel model = build_model(cfg);
    const int dim = cfg.has_grid ? cfg.grid.dim : 2;
    const SampleLattice lattice = default_lattice(dim, cfg.analyze.lattice_per_decade, cfg.analyze.lattice_directions);
    report = run_assumption_suite(model, lattice, cfg.analyze.tolerances);
  } catch (const ParamConstraintViolation& e) {
    CheckRecord r;
    r.check_id = "params";
    r.estimated_C = HUGE_VAL;
    r.raw_C = HUGE_VAL;
    r.pass = false;
    r.note = e.what();
    report.records.push_back(r);
  }
  run.write_file("assumptions.csv", assumptions_csv(report));
  StageEntry e{"check", "pass", "", {}};
  for (const auto& r : report.records)
    if (!r.pass) {
      e.status = "fail";
      e.detail += (e.detail.empty() ? "" : "; ") + r.check_id + (r.note.empty() ? "" : ": " + r.note);
      std::cerr << "check failed: " << r.check_id << (r.note.empty() ? "" : " (" + r.note + ")") << '\n';
    }
  if (!report.lions) e.flags.push_back("LionsConditionFails");
  return e;
}

bool solve_reusable(const PipelineConfig& cfg, const Run& run) {
  const json& prev = run.previous();
  if (!prev.is_object() || prev.value("config_hash", "") != cfg.hash) return false;
  bool solved = false;
  for (const auto& s : prev.at("stages"))
    if (s.at("name") == "solve") solved = s.at("status") == "pass" || s.at("status") == "reused";
  if (!solved) return false;
  for (const char* f : {"u.csv", "m.csv", "solution.json"}) {
    if (!prev.at("files").contains(f) || !fs::exists(run.dir() / f)) return false;
    if (file_digest(run.dir() / f) != prev.at("files").at(f).get<std::string>()) return false;
  }
  return true;
}

StageEntry stage_solve(const PipelineConfig& cfg, const RunOptions& opts, Run& run) {
  if (!cfg.solve.present) throw ConfigError("solve block is required");
  if (opts.resume && solve_reusable(cfg, run)) {
    for (const char* f : {"u.csv", "m.csv", "solution.json", "energy.csv"})
      if (run.previous().at("files").contains(f)) run.keep_file(f, run.previous().at("files").at(f));
    return {"solve", "reused", "pair digests match the previous run", {}};
  }
  const VariationalProblem problem = build_problem(cfg);
  const SolutionPair pair = minimize(problem, harmonic_extension(problem), cfg.solve.opts);
  save_pair(run.dir(), pair, cfg);
  for (const char* f : {"u.csv", "m.csv", "solution.json"}) run.record_file(f);
  std::ostringstream energy;
  energy << "iteration,energy\n";
  const auto& hist = pair.diagnostics.energy_history;
  for (std::size_t i = 0; i < hist.size(); ++i) energy << i << ',' << format_double(hist[i]) << '\n';
  run.write_file("energy.csv", energy.str());

  StageEntry e{"solve", "pass", pair.diagnostics.message, {}};
  if (!pair.diagnostics.converged) {
    e.status = "fail";
    e.flags.push_back("NonConvergence");
    std::cerr << "solve failed: " << pair.diagnostics.message << '\n';
  }
  if (!pair.diagnostics.energy_monotone) e.flags.push_back("EnergyNotMonotone");
  return e;
}

StageEntry stage_analyze(const PipelineConfig& cfg, const RunOptions& opts, Run& run) {
  const AnalyzeSpec& A = cfg.analyze;
  const fs::path pair_dir = opts.pair ? *opts.pair : A.pair_dir ? *A.pair_dir : run.dir();
  const SolutionPair pair = load_pair(pair_dir, cfg.solve.present ? cfg.solve.gamma : 0.0);
  const HamiltonianModel model = build_model(cfg);
  const GridGeometry& g = pair.u.geometry();

  std::vector<AnalysisRow> rows;
  auto ratio_row = [&](const std::string& name, const Point& c, double R, double lhs, double rhs, bool pass) {
    AnalysisRow r;
    r.name = name;
    r.center = c;
    r.R = R;
    r.lhs = lhs;
    r.rhs = rhs;
    r.C = lhs / rhs;
    r.pass = pass;
    rows.push_back(r);
  };

  const HjbSummary hjb = hjb_residual(pair, model, A.hjb_tol);
  ratio_row("hjb", Point::Zero(g.dim), 0.0, std::max(hjb.max_abs_on_support, hjb.zero_cells ? hjb.max_on_zero_set : 0.0),
            A.hjb_tol, hjb.pass);

  if (A.transport_count > 0 && !A.transport_scales.empty()) {
    const auto family = bump_test_family(g, A.transport_count, A.transport_scales, cfg.seed);
    const auto tr = transport_residual(pair, model, family);
    for (const auto& t : tr) ratio_row("transport", t.center, t.scale, t.normalized, A.transport_tol, t.normalized <= A.transport_tol);
    run.write_file("transport.csv", transport_csv(tr));
  }

  {
    const PointwiseBounds pb = pointwise_bound_constant(pair, model.params(), A.c_cap);
    for (const auto& [name, C] : {std::pair{"pointwise.upper", pb.C_upper}, std::pair{"pointwise.lower", pb.C_lower}}) {
      AnalysisRow r;
      r.name = name;
      r.center = Point::Zero(g.dim);
      r.C = C;
      r.pass = std::isfinite(C) && C <= A.c_cap;
      r.note = "delta=" + format_double(model.params().delta);
      rows.push_back(r);
    }
  }

  std::vector<MoserRow> moser_rows;
  std::vector<JohnNirenbergRow> jn_rows;
  for (const BallSpec& b : A.balls) {
    for (double q : A.caccioppoli_q) {
      CaccioppoliSpec f;
      f.q = q;
      f.R = b.R;
      f.M = A.caccioppoli_M;
      rows.push_back(to_row(caccioppoli_check(pair, Ball{b.center, b.R}, Ball{b.center, 2.0 * b.R}, f)));
    }
    for (double theta : A.reverse_holder_theta) {
      // Exponents below the unsigned range use the branch for nonnegative u.
      const SignMode mode = theta >= pair.gamma - 1.0 + A.reverse_holder_k ? SignMode::Unsigned : SignMode::Signed;
      rows.push_back(to_row(reverse_holder_step(pair, b.center, b.R, A.reverse_holder_k, theta, mode)));
    }
    for (double lambda : A.moser_lambda) {
      MoserResult mr = moser_sup_bound(pair, b.center, b.R, lambda);
      rows.push_back(to_row(mr.record));
      moser_rows.push_back({b.center, b.R, lambda, std::move(mr)});
    }
    if (A.harnack) {
      InequalityRecord h = harnack_ratio(pair, b.center, b.R);
      h.note = "mu=" + format_double(harnack_mu(h.estimated_C));
      rows.push_back(to_row(h));
    }
    if (!A.jn_epsilons.empty()) jn_rows.push_back({b.center, b.R, log_jn_diagnostic(pair, b.center, b.R, A.jn_epsilons)});
  }

  std::vector<HolderRow> holder_rows;
  std::vector<std::pair<std::string, OscDecay>> osc_rows;
  for (const ChainSpec& c : A.chains) {
    osc_rows.emplace_back(c.name, osc_decay(pair, c.chain));
    const HolderFit fit = holder_fit(pair, c.chain, c.drop_first);
    holder_rows.push_back({c.name, fit});
    if (c.mu_range) {
      AnalysisRow r;
      r.name = "holder." + c.name;
      r.center = c.chain.center;
      r.R = c.chain.R0;
      r.lhs = fit.mu_hat;
      r.C = fit.mu_hat;
      r.pass = fit.mu_hat >= c.mu_range->first && fit.mu_hat <= c.mu_range->second;
      r.note = "mu_range=[" + format_double(c.mu_range->first) + " " + format_double(c.mu_range->second) + "]";
      rows.push_back(r);
    }
  }

  run.write_file("analysis.csv", analysis_csv(rows));
  if (!moser_rows.empty()) run.write_file("moser.csv", moser_csv(moser_rows));
  if (!jn_rows.empty()) run.write_file("jn.csv", jn_csv(jn_rows));
  if (!holder_rows.empty()) {
    run.write_file("holder.csv", holder_csv(holder_rows));
    run.write_file("osc.csv", osc_csv(osc_rows));
  }

  if (cfg.output.plots || opts.plots) {
    if (!holder_rows.empty()) {
      std::vector<Series> s;
      for (const auto& h : holder_rows) s.push_back({h.chain, h.fit.radii, h.fit.osc});
      run.write_file("osc.svg", loglog_svg("Oscillation decay", "R", "osc", s));
    }
    if (!moser_rows.empty()) {
      std::vector<Series> s;
      for (const auto& m : moser_rows) {
        Series ser{"R=" + format_double(m.R) + " lambda=" + format_double(m.lambda), {}, {}};
        for (std::size_t j = 0; j < m.result.thetas.size(); ++j)
          if (std::isfinite(m.result.thetas[j])) {
            ser.x.push_back(m.result.thetas[j]);
            ser.y.push_back(m.result.trace[j]);
          }
        s.push_back(std::move(ser));
      }
      run.write_file("moser.svg", loglog_svg("Moser iteration", "theta", "a(theta)", s));
    }
    if (!pair.diagnostics.energy_history.empty()) {
      const auto& hist = pair.diagnostics.energy_history;
      const double floor = hist.back();
      Series ser{"E - E_final", {}, {}};
      for (std::size_t i = 0; i + 1 < hist.size(); ++i) {
        ser.x.push_back(static_cast<double>(i + 1));
        ser.y.push_back(hist[i] - floor);
      }
      run.write_file("energy.svg", loglog_svg("Energy decrease", "iteration", "E - E_final", {ser}));
    }
  }

  StageEntry e{"analyze", "pass", "", {}};
  std::map<std::string, int> failed;
  for (const auto& r : rows)
    if (r.asserted && !r.pass) ++failed[r.name];
  for (const auto& [name, n] : failed) {
    e.status = "fail";
    e.detail += (e.detail.empty() ? "failed: " : ", ") + name + (n > 1 ? " x" + std::to_string(n) : "");
    std::cerr << "analysis failed: " << name << " (" << n << " record" << (n > 1 ? "s" : "") << ")\n";
  }
  return e;
}

// Runs one stage, turning library errors into a failed stage. Config errors
// propagate.
template <typename Fn>
StageEntry guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << name << " error: " << e.what() << '\n';
    return {name, "error", e.what(), {}};
  }
}

int exit_of(const StageEntry& e) { return e.status == "pass" || e.status == "reused" ? kExitOk : kExitFailure; }

}  // namespace

// ------------------------------------------------------------ public API

GridGeometry GridSpec::geometry() const {
  return layout == "cells" ? GridGeometry::from_extent(dim, shape, lo, hi) : GridGeometry::node_aligned(dim, shape, lo, hi);
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir, const RunOptions& opts) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    check_keys(j, {"model", "grid", "solve", "analyze", "output", "seed"}, "config");
    PipelineConfig cfg;
    if (!j.contains("model")) throw ConfigError("missing 'model' block");
    cfg.model = parse_model(j.at("model"));
    if (j.contains("grid")) {
      cfg.grid = parse_grid(j.at("grid"));
      cfg.has_grid = true;
    }
    const int dim = cfg.has_grid ? cfg.grid.dim : 2;
    if (j.contains("solve")) {
      if (!cfg.has_grid) throw ConfigError("solve block requires a grid block");
      cfg.solve = parse_solve(j.at("solve"), base_dir, dim);
    }
    if (cfg.model.kind == "problem" && !cfg.solve.present)
      throw ConfigError("model.kind 'problem' requires a solve block");
    cfg.analyze = parse_analyze(j.value("analyze", json::object()), base_dir, dim);
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, {"dir", "plots"}, "output");
      fs::path d = string_or(o, "dir", "out", "output");
      cfg.output.dir = d.is_relative() ? base_dir / d : d;
      cfg.output.plots = boolean_or(o, "plots", false, "output");
    } else {
      cfg.output.dir = base_dir / "out";
    }
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      cfg.seed = j.at("seed").get<std::uint64_t>();
    }

    if (opts.out) cfg.output.dir = *opts.out;
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.plots) cfg.output.plots = true;

    json canon = j;
    if (canon.contains("output")) canon["output"].erase("dir");
    canon["seed"] = cfg.seed;
    canon["output"]["plots"] = cfg.output.plots;
    cfg.hash = fnv1a64_hex(canon.dump());
    json prob;
    prob["grid"] = j.value("grid", json());
    prob["solve"] = j.value("solve", json());
    if (cfg.solve.present && cfg.solve.boundary.kind == "file")
      prob["boundary_digest"] = file_digest(cfg.solve.boundary.file);
    cfg.problem_digest = fnv1a64_hex(prob.dump());
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig load_config(const fs::path& path, const RunOptions& opts) {
  if (!fs::exists(path)) throw ConfigError("config file does not exist: " + path.string());
  return parse_config(read_text_file(path), path.parent_path(), opts);
}

VariationalProblem build_problem(const PipelineConfig& cfg) {
  if (!cfg.solve.present) throw ConfigError("solve block is required");
  const GridGeometry g = cfg.grid.geometry();
  const SolveSpec& s = cfg.solve;
  const Coupling G = s.s == 2.0 ? Coupling::quadratic() : Coupling::power(s.s);
  const BoundarySpec& b = s.boundary;
  if (b.kind == "file") {
    ScalarField f = read_field_csv(b.file);
    if (!(f.geometry() == g)) throw ConfigError("boundary file grid does not match the grid block");
    VariationalProblem p{g, s.gamma, s.h0_coeff, G, std::move(f)};
    p.validate();
    return p;
  }
  if (b.kind == "affine") {
    return make_problem(
        g, s.gamma,
        [&](const Point& x) {
          double v = b.offset;
          for (int a = 0; a < g.dim; ++a) v += b.coeffs[a] * x[a];
          return v;
        },
        G, s.h0_coeff);
  }
  return make_problem(
      g, s.gamma,
      [&](const Point& x) {
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) r2 += (x[a] - b.center[a]) * (x[a] - b.center[a]);
        return b.scale * std::pow(std::sqrt(r2), b.exponent) + b.offset;
      },
      G, s.h0_coeff);
}

HamiltonianModel build_model(const PipelineConfig& cfg) {
  const ModelSpec& m = cfg.model;
  if (m.kind == "standard") return HamiltonianModel::standard(derive_params(m.alpha, m.tau, m.beta, m.epsilon));
  if (m.kind == "separable_gamma") return HamiltonianModel::separable_gamma(m.gamma, m.gamma_epsilon);
  return hamiltonian_of_problem(build_problem(cfg));
}

void save_pair(const fs::path& dir, const SolutionPair& pair, const PipelineConfig& cfg) {
  fs::create_directories(dir);
  write_field_csv(dir / "u.csv", pair.u, "u");
  write_field_csv(dir / "m.csv", pair.m, "m");
  json s;
  s["provenance"] = to_string(pair.provenance);
  s["gamma"] = pair.gamma;
  s["coupling_s"] = cfg.solve.s;
  s["h0_coeff"] = cfg.solve.h0_coeff;
  s["problem_digest"] = cfg.problem_digest;
  const SolverDiagnostics& d = pair.diagnostics;
  s["diagnostics"] = {{"iterations", d.iterations},
                      {"final_grad_norm", d.final_grad_norm},
                      {"energy", d.energy},
                      {"converged", d.converged},
                      {"energy_monotone", d.energy_monotone},
                      {"message", d.message}};
  write_text_file(dir / "solution.json", s.dump(2) + "\n");
}

SolutionPair load_pair(const fs::path& dir, double default_gamma) {
  if (!fs::exists(dir / "u.csv") || !fs::exists(dir / "m.csv"))
    throw ConfigError("pair directory lacks u.csv or m.csv: " + dir.string());
  SolutionPair pair;
  pair.u = read_field_csv(dir / "u.csv");
  pair.m = read_field_csv(dir / "m.csv");
  pair.provenance = Provenance::Loaded;
  pair.gamma = default_gamma;
  if (fs::exists(dir / "solution.json")) {
    try {
      const json s = json::parse(read_text_file(dir / "solution.json"));
      pair.gamma = s.value("gamma", default_gamma);
      if (s.contains("diagnostics")) {
        const json& d = s.at("diagnostics");
        pair.diagnostics.iterations = d.value("iterations", 0);
        pair.diagnostics.final_grad_norm = d.value("final_grad_norm", 0.0);
        pair.diagnostics.energy = d.value("energy", 0.0);
        pair.diagnostics.converged = d.value("converged", false);
        pair.diagnostics.energy_monotone = d.value("energy_monotone", true);
        pair.diagnostics.message = d.value("message", "");
      }
    } catch (const json::exception& e) {
      throw DomainError(std::string("malformed solution.json: ") + e.what());
    }
  }
  if (fs::exists(dir / "energy.csv")) {
    std::istringstream is(read_text_file(dir / "energy.csv"));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      const auto comma = line.find(',');
      if (comma != std::string::npos) pair.diagnostics.energy_history.push_back(std::stod(line.substr(comma + 1)));
    }
  }
  return pair;
}

int cmd_check(const PipelineConfig& cfg, const RunOptions&) {
  Run run(cfg, "check", true);
  const auto t0 = std::chrono::steady_clock::now();
  StageEntry e = guarded("check", [&] { return stage_check(cfg, run); });
  run.stage(e, seconds_since(t0));
  run.finish();
  return exit_of(e);
}

int cmd_solve(const PipelineConfig& cfg, const RunOptions& opts) {
  Run run(cfg, "solve", true);
  const auto t0 = std::chrono::steady_clock::now();
  StageEntry e = guarded("solve", [&] { return stage_solve(cfg, opts, run); });
  run.stage(e, seconds_since(t0));
  run.finish();
  return exit_of(e);
}

int cmd_analyze(const PipelineConfig& cfg, const RunOptions& opts) {
  Run run(cfg, "analyze", true);
  const auto t0 = std::chrono::steady_clock::now();
  StageEntry e = guarded("analyze", [&] { return stage_analyze(cfg, opts, run); });
  run.stage(e, seconds_since(t0));
  run.finish();
  return exit_of(e);
}

int cmd_pipeline(const PipelineConfig& cfg, const RunOptions& opts) {
  Run run(cfg, "pipeline", false);
  int code = kExitOk;
  auto step = [&](const std::string& name, auto&& fn) {
    if (code != kExitOk) {
      run.stage({name, "skipped", "", {}}, 0.0);
      return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    StageEntry e = guarded(name, fn);
    code = exit_of(e);
    run.stage(e, seconds_since(t0));
  };
  step("check", [&] { return stage_check(cfg, run); });
  step("solve", [&] { return stage_solve(cfg, opts, run); });
  RunOptions analyze_opts = opts;
  analyze_opts.pair.reset();
  step("analyze", [&] { return stage_analyze(cfg, analyze_opts, run); });
  run.finish();
  return code;
}

int run_command(const std::string& command, const fs::path& config, const RunOptions& opts) {
  try {
    const PipelineConfig cfg = load_config(config, opts);
    if (command == "check") return cmd_check(cfg, opts);
    if (command == "solve") return cmd_solve(cfg, opts);
    if (command == "analyze") return cmd_analyze(cfg, opts);
    if (command == "pipeline") return cmd_pipeline(cfg, opts);
    std::cerr << "unknown command: " << command << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace mfg
