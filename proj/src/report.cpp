#include "mfg_lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfg_lab/field_io.hpp"

namespace mfg {

namespace {

std::string point_text(const Point& p) {
  std::string s;
  for (Index i = 0; i < p.size(); ++i) {
    if (i) s += ' ';
    s += format_double(p[i]);
  }
  return s;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

// Short fixed-precision numbers for SVG coordinates.
std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string assumptions_csv(const AssumptionReport& report) {
  std::ostringstream os;
  os << "check_id,estimated_C,raw_C,pass,fitted,witness,note\n";
  for (const auto& r : report.records) {
    std::string fitted;
    for (const auto& [k, v] : r.fitted) {
      if (!fitted.empty()) fitted += ';';
      fitted += k + '=' + format_double(v);
    }
    std::string witness;
    if (r.witness.present)
      witness = "x=" + point_text(r.witness.x) + ";p=" + point_text(r.witness.p) + ";m=" + format_double(r.witness.m);
    os << csv_cell(r.check_id) << ',' << format_double(r.estimated_C) << ',' << format_double(r.raw_C) << ','
       << bool_text(r.pass) << ',' << csv_cell(fitted) << ',' << csv_cell(witness) << ',' << csv_cell(r.note) << '\n';
  }
  os << "lions," << ",," << bool_text(report.lions) << ",,,informational\n";
  return os.str();
}

AnalysisRow to_row(const InequalityRecord& r) {
  AnalysisRow row;
  row.name = r.name;
  row.center = r.center;
  row.R = r.R;
  row.lhs = r.lhs;
  row.rhs = r.rhs;
  row.C = r.estimated_C;
  row.pass = r.pass;
  row.asserted = r.asserted;
  row.note = r.note;
  return row;
}

std::string analysis_csv(const std::vector<AnalysisRow>& rows) {
  std::ostringstream os;
  os << "name,center,R,lhs,rhs,C,pass,asserted,note\n";
  for (const auto& r : rows)
    os << csv_cell(r.name) << ',' << point_text(r.center) << ',' << format_double(r.R) << ','
       << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << format_double(r.C) << ','
       << bool_text(r.pass) << ',' << bool_text(r.asserted) << ',' << csv_cell(r.note) << '\n';
  return os.str();
}

std::string holder_csv(const std::vector<HolderRow>& rows) {
  std::ostringstream os;
  os << "chain,mu_hat,intercept,r2,scales\n";
  for (const auto& r : rows)
    os << csv_cell(r.chain) << ',' << format_double(r.fit.mu_hat) << ',' << format_double(r.fit.intercept) << ','
       << format_double(r.fit.r2) << ',' << r.fit.radii.size() << '\n';
  return os.str();
}

std::string osc_csv(const std::vector<std::pair<std::string, OscDecay>>& chains) {
  std::ostringstream os;
  os << "chain,j,R,osc,osc_parent,ratio,mu,degenerate\n";
  for (const auto& [name, od] : chains) {
    for (std::size_t j = 0; j < od.radii.size(); ++j) {
      os << csv_cell(name) << ',' << j << ',' << format_double(od.radii[j]) << ',' << format_double(od.osc[j]);
      if (j == 0) {
        os << ",,,,\n";
        continue;
      }
      const auto& s = od.steps[j - 1];
      os << ',' << format_double(s.osc_parent) << ',' << format_double(s.ratio) << ',' << format_double(s.mu) << ','
         << bool_text(s.degenerate) << '\n';
    }
  }
  return os.str();
}

std::string moser_csv(const std::vector<MoserRow>& rows) {
  std::ostringstream os;
  os << "center,R,lambda,j,theta,a\n";
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.result.thetas.size(); ++j)
      os << point_text(r.center) << ',' << format_double(r.R) << ',' << format_double(r.lambda) << ',' << j << ','
         << format_double(r.result.thetas[j]) << ',' << format_double(r.result.trace[j]) << '\n';
  return os.str();
}

std::string transport_csv(const std::vector<TransportResidual>& rows) {
  std::ostringstream os;
  os << "center,scale,raw,normalized,degenerate\n";
  for (const auto& r : rows)
    os << point_text(r.center) << ',' << format_double(r.scale) << ',' << format_double(r.raw) << ','
       << format_double(r.normalized) << ',' << bool_text(r.degenerate) << '\n';
  return os.str();
}

std::string jn_csv(const std::vector<JohnNirenbergRow>& rows) {
  std::ostringstream os;
  os << "center,R,hypothesis_bound,eps,ratio,chosen\n";
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.result.epsilons.size(); ++i) {
      const double e = r.result.epsilons[i];
      const bool chosen = r.result.epsilon && *r.result.epsilon == e;
      os << point_text(r.center) << ',' << format_double(r.R) << ',' << format_double(r.result.hypothesis_bound) << ','
         << format_double(e) << ',' << format_double(r.result.ratios[i]) << ',' << bool_text(chosen) << '\n';
    }
  return os.str();
}

std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
  constexpr double W = 480, H = 360, L = 60, Rm = 20, T = 40, B = 50;
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  auto usable = [](double x, double y) { return x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y); };
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, std::log10(s.x[i]));
        x1 = std::max(x1, std::log10(s.x[i]));
        y0 = std::min(y0, std::log10(s.y[i]));
        y1 = std::max(y1, std::log10(s.y[i]));
      }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - Rm); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - Rm << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xml_escape(xlabel) << " (log10 " << fixed(x0) << " .. " << fixed(x1) << ")</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(ylabel) << " (log10 " << fixed(y0) << " .. "
     << fixed(y1) << ")</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = colours[k % 5];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(s.x[i])) + ',' + fixed(py(s.y[i]));
      os << "<circle cx=\"" << fixed(px(s.x[i])) << "\" cy=\"" << fixed(py(s.y[i])) << "\" r=\"3\" fill=\"" << colour
         << "\"/>\n";
    }
    os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << colour << "\"/>\n";
    os << "<text x=\"" << L + 8 << "\" y=\"" << T + 16 + 14 * k << "\" font-size=\"11\" fill=\"" << colour << "\">"
       << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mfg
