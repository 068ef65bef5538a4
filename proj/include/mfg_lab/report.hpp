#pragma once

// Text emitters for assumption and analysis results: CSV tables and small
// self-contained SVG log-log plots. All numbers go through format_double so
// the output is byte-stable.

#include <string>
#include <vector>

#include "mfg_lab/analyzer.hpp"
#include "mfg_lab/assumptions.hpp"

namespace mfg {

/// check_id, estimated_C, raw_C, pass, fitted (k=v;...), witness, note.
std::string assumptions_csv(const AssumptionReport& report);

/// One row of analysis.csv.
struct AnalysisRow {
  std::string name;
  Point center;
  double R = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double C = 0.0;
  bool pass = false;
  bool asserted = true;
  std::string note;
};

AnalysisRow to_row(const InequalityRecord& r);

/// name, center, R, lhs, rhs, C, pass, asserted, note.
std::string analysis_csv(const std::vector<AnalysisRow>& rows);

struct HolderRow {
  std::string chain;
  HolderFit fit;
};

/// chain, mu_hat, intercept, r2, scales.
std::string holder_csv(const std::vector<HolderRow>& rows);

/// chain, j, R, osc, osc_parent, ratio, mu, degenerate.
std::string osc_csv(const std::vector<std::pair<std::string, OscDecay>>& chains);

/// center, R, lambda, j, theta, a.
struct MoserRow {
  Point center;
  double R = 0.0;
  double lambda = 0.0;
  MoserResult result;
};
std::string moser_csv(const std::vector<MoserRow>& rows);

/// center, scale, raw, normalized, degenerate.
std::string transport_csv(const std::vector<TransportResidual>& rows);

struct JohnNirenbergRow {
  Point center;
  double R = 0.0;
  JohnNirenbergResult result;
};

/// center, R, hypothesis_bound, eps, ratio, chosen.
std::string jn_csv(const std::vector<JohnNirenbergRow>& rows);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Log-log plot of one or more series; points with non-positive or
/// non-finite coordinates are skipped.
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series);

/// Quotes a CSV cell when it contains a comma, quote or newline.
std::string csv_cell(const std::string& s);

}  // namespace mfg
