#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "vbm/bifurcation.hpp"
#include "vbm/certificate.hpp"
#include "vbm/equilibria.hpp"
#include "vbm/error.hpp"
#include "vbm/params.hpp"
#include "vbm/sensitivity.hpp"
#include "vbm/simulate.hpp"
#include "vbm/stability.hpp"

namespace vbm {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// ---- parameters -----------------------------------------------------------

inline std::string_view canonical_field(std::string_view key) {
  if (key == "b") return "bednet";
  if (key == "pi") return "pi_bias";
  return key;
}

inline double ParamValues::*find_field(std::string_view key) {
  const auto name = canonical_field(key);
  for (const auto& [field, member] : kParamFields) {
    if (field == name) return member;
  }
  throw ValidationError("unknown parameter '" + std::string(key) + "'");
}

inline double parse_number(std::string_view text, std::string_view what) {
  double x = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, x);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("malformed number '" + std::string(text) + "' for " + std::string(what));
  }
  return x;
}

/// Applies "key=value"; keys are field names or the aliases b, pi.
inline void apply_override(ParamValues& v, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const auto key = assignment.substr(0, eq);
  v.*find_field(key) = parse_number(assignment.substr(eq + 1), canonical_field(key));
}

inline Json to_json(const ParamValues& v) {
  Json j = Json::object();
  for (const auto& [name, member] : kParamFields) j[std::string(name)] = v.*member;
  return j;
}

/// Parameter record from a JSON object carrying all thirteen fields. Unknown
/// keys are rejected.
inline ParamValues params_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("parameter file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : kParamFields) known = known || f.first == key;
    if (!known) throw ValidationError("unknown parameter '" + key + "' in parameter file");
  }
  ParamValues v;
  for (const auto& [name, member] : kParamFields) {
    const auto it = j.find(std::string(name));
    if (it == j.end()) throw ValidationError("parameter file is missing '" + std::string(name) + "'");
    if (!it->is_number()) throw ValidationError("parameter '" + std::string(name) + "' must be a number");
    v.*member = it->get<double>();
  }
  return v;
}

/// "table1" names the built-in baseline (b = 0.4, pi = 2); anything else is a
/// path to a JSON parameter file.
inline ParamValues load_param_values(const std::string& source) {
  if (source == "table1") return ModelParams::table1().values();
  std::ifstream in(source);
  if (!in) throw ValidationError("cannot open parameter file '" + source + "'");
  try {
    return params_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ValidationError("malformed parameter file '" + source + "': " + e.what());
  }
}

inline ModelParams load_params(const std::string& source, const std::vector<std::string>& overrides) {
  ParamValues v = load_param_values(source);
  for (const auto& o : overrides) apply_override(v, o);
  return ModelParams(v);
}

// ---- reports ---------------------------------------------------------------

inline Json to_json(const StateFull& x) { return {{"s_h", x.s_h}, {"i_h", x.i_h}, {"s_v", x.s_v}, {"i_v", x.i_v}}; }

inline Json to_json(const StateReduced& x) {
  return {{"s_h", x.s_h}, {"i_h", x.i_h}, {"i_v", x.i_v}, {"v_total", x.v_total}};
}

inline Json to_json(const StabilityVerdict& v) {
  return {{"classification", to_string(v.classification)},
          {"margin", v.margin},
          {"eigen_real_parts", v.eigen_real_parts},
          {"eigen_imag_parts", v.eigen_imag_parts}};
}

inline Json to_json(const EquilibriumSet& s) {
  Json endemic = Json::array();
  for (const auto& e : s.endemic) {
    endemic.push_back({{"lambda_h_star", e.lambda_h_star},
                       {"lambda_v_star", e.lambda_v_star},
                       {"state", to_json(e.state)},
                       {"residual", e.residual},
                       {"stability", to_json(e.verdict)}});
  }
  const auto& q = s.coefficients;
  return {{"r0", s.r0},
          {"case", to_string(s.case_label)},
          {"coefficients", {{"a0", q.a0}, {"b0", q.b0}, {"c0", q.c0}, {"r_a", q.r_a}, {"disc", q.disc}}},
          {"c0_zero", s.c0_zero},
          {"disc_zero", s.disc_zero},
          {"dfe", {{"state", to_json(s.dfe)}, {"stability", to_json(s.dfe_verdict)}}},
          {"endemic", endemic}};
}

inline Json to_json(const BifurcationReport& r, const std::optional<R0Interval>& window) {
  auto vec = [](const Vector4& x) { return std::vector<double>{x[0], x[1], x[2], x[3]}; };
  Json j{{"p2_crit", r.p2_crit},
         {"theta", r.theta},
         {"coeff_a", r.coeff_a},
         {"coeff_b", r.coeff_b_cm},
         {"direction", to_string(r.direction)},
         {"left_eigenvector", vec(r.eigenvectors.left)},
         {"right_eigenvector", vec(r.eigenvectors.right)}};
  if (window) {
    j["backward_window"] = {{"r0_lower", window->lower},
                            {"r0_upper", window->upper},
                            {"p2_lower", window->p2_lower},
                            {"p2_upper", window->p2_upper}};
  } else {
    j["backward_window"] = nullptr;
  }
  return j;
}

inline Json to_json(const LozinskiiCertificate& c) {
  Json trajs = Json::array();
  for (const auto& t : c.trajectories) {
    trajs.push_back({{"initial", to_json(t.initial)},
                     {"final", to_json(t.final_state)},
                     {"q_bar2", t.q_bar2},
                     {"max_sigma_violation", t.max_sigma_violation}});
  }
  return {{"passed", c.passed},
          {"q_bar2_estimate", c.q_bar2_estimate},
          {"pointwise_max_sigma_violation", c.pointwise_max_sigma_violation},
          {"horizon", c.horizon},
          {"samples", c.samples},
          {"trajectories", trajs}};
}

inline Json to_json(const SensitivityReport& s) {
  auto opt = [](const std::optional<double>& x) -> Json {
    if (x) return *x;
    return "unattainable";
  };
  return {{"s_pi", s.s_pi},         {"s_b", s.s_b},         {"dr0_db", s.dr0_db},
          {"dr0_dpi", s.dr0_dpi},   {"dtheta_dpi", s.dtheta_dpi}, {"dtheta_db", s.dtheta_db},
          {"b_crit", opt(s.b_crit)}, {"b_1", opt(s.b_1)},  {"phi_tilde", s.phi_tilde}};
}

// ---- CSV -------------------------------------------------------------------

inline void write_branch_csv(std::ostream& os, const std::vector<BranchPoint>& points, std::string_view parameter) {
  os << parameter << ",r0,i_v_low,i_v_low_stable,i_v_high,i_v_high_stable\n";
  for (const auto& bp : points) {
    os << format_double(bp.parameter) << ',' << format_double(bp.r0);
    // A single root is reported in the upper slot.
    const BranchRoot* low = bp.roots.size() == 2 ? &bp.roots[0] : nullptr;
    const BranchRoot* high = bp.roots.empty() ? nullptr : &bp.roots.back();
    for (const BranchRoot* r : {low, high}) {
      if (r) {
        os << ',' << format_double(r->i_v) << ',' << (r->stable ? 1 : 0);
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory<StateFull>& t) {
  os << "t,s_h,i_h,s_v,i_v\n";
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const auto& x = t.states[k];
    os << format_double(t.times[k]) << ',' << format_double(x.s_h) << ',' << format_double(x.i_h) << ','
       << format_double(x.s_v) << ',' << format_double(x.i_v) << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory<StateReduced>& t) {
  os << "t,s_h,i_h,s_v,i_v\n";
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const auto& x = t.states[k];
    os << format_double(t.times[k]) << ',' << format_double(x.s_h) << ',' << format_double(x.i_h) << ",,"
       << format_double(x.i_v) << '\n';
  }
}

/// First row: b grid (after a corner label); first column: pi grid.
inline void write_surface_csv(std::ostream& os, const Surface& s) {
  os << "pi\\b";
  for (double b : s.b_grid) os << ',' << format_double(b);
  os << '\n';
  for (std::size_t i = 0; i < s.pi_grid.size(); ++i) {
    os << format_double(s.pi_grid[i]);
    for (double x : s.values[i]) os << ',' << format_double(x);
    os << '\n';
  }
}

inline void write_g_series_csv(std::ostream& os, const std::vector<GSample>& series) {
  os << "t,g1,g2,ih_growth\n";
  for (const auto& g : series) {
    os << format_double(g.t) << ',' << format_double(g.g1) << ',' << format_double(g.g2) << ','
       << format_double(g.ih_growth) << '\n';
  }
}

}  // namespace vbm
