#pragma once

// Output files: trace CSVs, JSON documents and SVG regret charts. Every file
// carries the tool version and the config hash.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "waa/error.hpp"
#include "waa/harness.hpp"
#include "waa/numeric.hpp"
#include "waa/spaces.hpp"
#include "waa/version.hpp"

namespace waa {

struct Provenance {
  std::string config_hash;
  std::string config_name;
};

inline std::string provenance_line(const Provenance& p) {
  return std::string("# waa ") + tool_version + " config=" + p.config_hash + " name=" + p.config_name;
}

inline nlohmann::json provenance_json(const Provenance& p) {
  return {{"tool", "waa"}, {"version", tool_version}, {"config_hash", p.config_hash}, {"config_name", p.config_name}};
}

// Signal as a CSV-safe field: coordinates joined by ';', or the label.
inline std::string signal_field(const SignalSpace& space, const Signal& x) {
  if (space.kind() == SpaceKind::finite_set) return space.labels().at(static_cast<std::size_t>(x[0]));
  std::string out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += ';';
    out += format_double(x[i]);
  }
  return out;
}

inline void write_trace_csv(std::ostream& out, const RegretTrace& trace, const SignalSpace& space,
                            const Provenance& p) {
  out << provenance_line(p) << " scenario=" << trace.scenario << " rule=" << trace.rule << '\n';
  out << "n,x,y,gamma_repr,learner_loss,rule_loss,best_expert_loss,lemma5_bound,lemma9_gap\n";
  for (const auto& r : trace.rows) {
    out << r.n << ',' << signal_field(space, r.x) << ',' << format_double(r.y) << ',' << r.gamma_repr << ','
        << format_double(r.learner_loss) << ',' << format_double(r.rule_loss) << ','
        << format_double(r.best_expert_loss) << ',' << format_double(r.lemma5_bound) << ','
        << format_double(r.lemma9_gap) << '\n';
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw error("write failed for '" + path.string() + "'");
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Cumulative regret against the best expert next to the bound curve, and
// cumulative regret against the rule.
inline std::string regret_svg(const RegretTrace& trace, const Provenance& p) {
  constexpr double width = 720, height = 420, left = 70, right = 20, top = 40, bottom = 50;
  const std::size_t n = trace.rows.size();
  std::vector<double> vs_best, vs_rule, bound;
  double learner = 0, best = 0, rule = 0;
  for (const auto& r : trace.rows) {
    learner += r.learner_loss;
    best += r.best_expert_loss;
    rule += r.rule_loss;
    vs_best.push_back(learner - best);
    vs_rule.push_back(learner - rule);
    bound.push_back(r.lemma5_bound);
  }
  double lo = 0, hi = 1e-12;
  for (const auto* s : {&vs_best, &vs_rule, &bound})
    for (double v : *s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  auto px = [&](std::size_t i) { return left + (width - left - right) * (n <= 1 ? 0.0 : double(i) / double(n - 1)); };
  auto py = [&](double v) { return top + (height - top - bottom) * (hi - v) / (hi - lo); };
  const std::size_t stride = std::max<std::size_t>(1, n / 1000);
  auto polyline = [&](const std::vector<double>& s, const char* colour, const char* dash) {
    std::ostringstream o;
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"" << dash << " points=\"";
    for (std::size_t i = 0; i < n; i += stride) o << format_double(std::round(px(i) * 10) / 10) << ',' << format_double(std::round(py(s[i]) * 10) / 10) << ' ';
    if (n && (n - 1) % stride) o << format_double(std::round(px(n - 1) * 10) / 10) << ',' << format_double(std::round(py(s[n - 1]) * 10) / 10);
    o << "\"/>\n";
    return o.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<!-- waa " << tool_version << " config=" << p.config_hash << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << trace.scenario << " / "
      << trace.rule << " (m=" << trace.level << ")</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << width - right << "\" y2=\"" << py(0)
      << "\" stroke=\"#999\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"#999\"/>\n";
  svg << "<text x=\"4\" y=\"" << top + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(std::round(hi * 100) / 100) << "</text>\n";
  svg << "<text x=\"4\" y=\"" << height - bottom << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(std::round(lo * 100) / 100) << "</text>\n";
  svg << "<text x=\"" << width - right - 60 << "\" y=\"" << height - 20 << "\" font-family=\"sans-serif\" font-size=\"11\">N = " << n << "</text>\n";
  svg << polyline(bound, "#c0392b", " stroke-dasharray=\"6 4\"");
  svg << polyline(vs_best, "#2c3e50", "");
  svg << polyline(vs_rule, "#27ae60", "");
  svg << "<text x=\"" << left + 10 << "\" y=\"" << height - 20 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << "<tspan fill=\"#c0392b\">bound for K*</tspan>  <tspan fill=\"#2c3e50\">regret vs K*</tspan>  "
      << "<tspan fill=\"#27ae60\">regret vs rule</tspan></text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace waa
