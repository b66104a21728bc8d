#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vbm/bifurcation.hpp"
#include "vbm/certificate.hpp"
#include "vbm/equilibria.hpp"
#include "vbm/io.hpp"
#include "vbm/sensitivity.hpp"
#include "vbm/simulate.hpp"

namespace vbm::cli {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

struct Common {
  std::string params = "table1";
  std::vector<std::string> overrides;
  std::string out;
  std::string format;  // empty: the subcommand's default
  std::uint64_t seed = 1;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  return out;
}


inline void write_kv_csv(std::ostream& os, const Json& flat) {
  os << "key,value\n";
  for (const auto& [k, v] : flat.items()) {
    os << k << ',';
    if (v.is_number()) {
      os << format_double(v.get<double>());
    } else if (v.is_string()) {
      os << v.get<std::string>();
    } else {
      os << v.dump();
    }
    os << '\n';
  }
}

inline void write_equilibria_csv(std::ostream& os, const EquilibriumSet& s) {
  os << "kind,s_h,i_h,s_v,i_v,lambda_h_star,classification\n";
  auto row = [&os](const char* kind, const StateFull& x, double lh, const StabilityVerdict& v) {
    os << kind << ',' << format_double(x.s_h) << ',' << format_double(x.i_h) << ',' << format_double(x.s_v) << ','
       << format_double(x.i_v) << ',' << format_double(lh) << ',' << to_string(v.classification) << '\n';
  };
  row("dfe", s.dfe, 0.0, s.dfe_verdict);
  for (const auto& e : s.endemic) row("endemic", e.state, e.lambda_h_star, e.verdict);
}

}  // namespace detail

/// Parses argv, runs one subcommand and writes its artifact to `out` (or the
/// --out file). Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vector-bias malaria model with bed-net control"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--params", common.params, "Parameter source: 'table1' or a JSON file")
        ->capture_default_str();
    sub->add_option("--set", common.overrides, "Override a parameter, key=value (aliases: b, pi)");
    sub->add_option("--out", common.out, "Output file (default: standard output)");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", common.seed, "Seed for randomized initial conditions")->capture_default_str();
  };

  std::function<void(std::ostream&)> action;
  auto params = [&common] { return load_params(common.params, common.overrides); };
  auto fmt = [&common](const char* fallback) { return common.format.empty() ? std::string(fallback) : common.format; };

  // r0
  auto* r0_cmd = app.add_subcommand("r0", "Basic reproduction number");
  add_common(r0_cmd);
  r0_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const double r0 = basic_reproduction_number(params());
      if (common.format == "json") {
        os << Json{{"r0", r0}}.dump(2) << '\n';
      } else if (common.format == "csv") {
        os << "r0\n" << format_double(r0) << '\n';
      } else {
        os << format_double(r0) << '\n';
      }
    };
  });

  // equilibria
  auto* eq_cmd = app.add_subcommand("equilibria", "Disease-free and endemic equilibria with stability");
  add_common(eq_cmd);
  eq_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto set = endemic_equilibria(params());
      if (fmt("json") == "json") {
        os << to_json(set).dump(2) << '\n';
      } else {
        detail::write_equilibria_csv(os, set);
      }
    };
  });

  // stability
  std::string state_text;
  std::string system_text = "full";
  auto* st_cmd = app.add_subcommand("stability", "Local stability of an equilibrium");
  add_common(st_cmd);
  st_cmd->add_option("--state", state_text, "Equilibrium s_h,i_h,s_v,i_v (default: every equilibrium)");
  st_cmd->add_option("--system", system_text, "full or reduced")
      ->check(CLI::IsMember({"full", "reduced"}))
      ->capture_default_str();
  st_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      const SystemKind kind = system_text == "full" ? SystemKind::full : SystemKind::reduced;
      Json rows = Json::array();
      auto add = [&](const char* name, const StateFull& x) {
        rows.push_back({{"equilibrium", name}, {"state", to_json(x)}, {"stability", to_json(classify(p, x, kind))}});
      };
      if (!state_text.empty()) {
        const auto v = detail::parse_list(state_text, "--state");
        if (v.size() != 4) throw ValidationError("--state needs four comma-separated values");
        add("given", {v[0], v[1], v[2], v[3]});
      } else {
        const auto set = endemic_equilibria(p);
        add("dfe", set.dfe);
        for (const auto& e : set.endemic) add("endemic", e.state);
      }
      if (fmt("json") == "json") {
        os << rows.dump(2) << '\n';
        return;
      }
      os << "equilibrium,classification,margin\n";
      for (const auto& r : rows) {
        os << r["equilibrium"].get<std::string>() << ',' << r["stability"]["classification"].get<std::string>()
           << ',' << format_double(r["stability"]["margin"].get<double>()) << '\n';
      }
    };
  });

  // bifurcate
  auto* bf_cmd = app.add_subcommand("bifurcate", "Centre-manifold analysis at R0 = 1");
  add_common(bf_cmd);
  bf_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      const Json j = to_json(bifurcation_report(p), backward_window(p));
      if (fmt("json") == "json") {
        os << j.dump(2) << '\n';
        return;
      }
      Json flat = Json::object();
      for (const char* k : {"p2_crit", "theta", "coeff_a", "coeff_b", "direction"}) flat[k] = j[k];
      if (!j["backward_window"].is_null()) {
        flat["r0_lower"] = j["backward_window"]["r0_lower"];
        flat["p2_lower"] = j["backward_window"]["p2_lower"];
      }
      detail::write_kv_csv(os, flat);
    };
  });

  // sweep
  std::string over = "p2";
  double from = 0.01, to = 1.0;
  std::size_t points = 100;
  auto* sw_cmd = app.add_subcommand("sweep", "Endemic branch over p2 or bed-net usage");
  add_common(sw_cmd);
  sw_cmd->add_option("--over", over, "Swept parameter: p2 or b")
      ->check(CLI::IsMember({"p2", "b"}))
      ->capture_default_str();
  sw_cmd->add_option("--from", from, "First grid value")->capture_default_str();
  sw_cmd->add_option("--to", to, "Last grid value")->capture_default_str();
  sw_cmd->add_option("--points", points, "Number of grid points")->check(CLI::Range(2, 1000000))->capture_default_str();
  sw_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      const auto grid = linspace(from, to, points);
      std::vector<BranchPoint> pts;
      std::optional<SaddleNode> saddle;
      if (over == "p2") {
        auto sweep = sweep_branch(p, grid);
        pts = std::move(sweep.points);
        saddle = sweep.saddle_node;
      } else {
        pts = sweep_bednet(p, grid);
      }
      if (fmt("csv") == "csv") {
        write_branch_csv(os, pts, over);
        return;
      }
      Json arr = Json::array();
      for (const auto& bp : pts) {
        Json roots = Json::array();
        for (const auto& r : bp.roots) roots.push_back({{"i_v", r.i_v}, {"stable", r.stable}});
        arr.push_back({{over, bp.parameter}, {"r0", bp.r0}, {"roots", roots}});
      }
      Json j{{"points", arr}};
      j["saddle_node"] = saddle ? Json{{"p2", saddle->p2}, {"r0", saddle->r0}} : Json(nullptr);
      os << j.dump(2) << '\n';
    };
  });

  // simulate
  std::string ic_text;
  double t_end = 2000.0, sample_step = 1.0, rtol = 1e-10, atol = 1e-10;
  std::string sim_system = "full";
  auto* sim_cmd = app.add_subcommand("simulate", "Integrate the full or reduced system");
  add_common(sim_cmd);
  sim_cmd->add_option("--system", sim_system, "full or reduced")
      ->check(CLI::IsMember({"full", "reduced"}))
      ->capture_default_str();
  sim_cmd->add_option("--ic", ic_text,
                      "Initial state: s_h,i_h,s_v,i_v (full) or s_h,i_h,i_v (reduced); "
                      "default one infected human and mosquito");
  sim_cmd->add_option("--t-end", t_end, "Horizon in days")->capture_default_str();
  sim_cmd->add_option("--sample-step", sample_step, "Output spacing in days; 0 records every step")
      ->capture_default_str();
  sim_cmd->add_option("--rtol", rtol, "Relative tolerance")->capture_default_str();
  sim_cmd->add_option("--atol", atol, "Absolute tolerance")->capture_default_str();
  std::size_t max_steps = IntegratorOptions{}.max_steps;
  sim_cmd->add_option("--max-steps", max_steps, "Give up after this many integrator steps")->capture_default_str();
  sim_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      SimulationOptions opt;
      opt.integrator.rel_tol = rtol;
      opt.integrator.abs_tol = atol;
      opt.integrator.max_steps = max_steps;
      opt.sample_step = sample_step;
      const auto set = endemic_equilibria(p);
      const auto e0 = set.dfe;
      const auto ic = ic_text.empty() ? std::vector<double>{} : detail::parse_list(ic_text, "--ic");
      auto emit = [&](const auto& traj, const auto& candidates) {
        auto t = traj;
        t.converged_to = detect_convergence(t, std::span(candidates), 1e-6);
        if (fmt("csv") == "csv") {
          write_trajectory_csv(os, t);
          return;
        }
        Json j{{"t_end", t.times.back()},
               {"final", to_json(t.final_state())},
               {"steps_accepted", t.steps_accepted},
               {"steps_rejected", t.steps_rejected}};
        if (t.converged_to) {
          j["converged_to"] = {{"index", t.converged_to->index},
                               {"equilibrium", t.converged_to->index == 0 ? "dfe" : "endemic"},
                               {"distance", t.converged_to->distance}};
        } else {
          j["converged_to"] = nullptr;
        }
        os << j.dump(2) << '\n';
      };
      if (sim_system == "full") {
        StateFull x{e0.s_h - 1.0, 1.0, e0.s_v - 1.0, 1.0};
        if (!ic.empty()) {
          if (ic.size() != 4) throw ValidationError("--ic needs four values for the full system");
          x = {ic[0], ic[1], ic[2], ic[3]};
        }
        std::vector<StateFull> cands{e0};
        for (const auto& e : set.endemic) cands.push_back(e.state);
        emit(integrate(p, x, t_end, opt), cands);
      } else {
        StateReduced x = make_reduced(p, e0.s_h - 1.0, 1.0, 1.0);
        if (!ic.empty()) {
          if (ic.size() != 3) throw ValidationError("--ic needs three values for the reduced system");
          x = make_reduced(p, ic[0], ic[1], ic[2]);
        }
        std::vector<StateReduced> cands{project(p, e0)};
        for (const auto& e : set.endemic) cands.push_back(project(p, e.state));
        emit(integrate(p, x, t_end, opt), cands);
      }
    };
  });

  // certify
  std::size_t count = 100;
  double horizon = 40000.0, cert_step = 10.0;
  std::string series_path;
  auto* ce_cmd = app.add_subcommand("certify", "Lozinskii global-stability certificate (R0 > 1)");
  add_common(ce_cmd);
  ce_cmd->add_option("--count", count, "Number of random interior initial conditions")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  ce_cmd->add_option("--horizon", horizon, "Horizon in days")->capture_default_str();
  ce_cmd->add_option("--sample-step", cert_step, "Sampling step for the time average")->capture_default_str();
  ce_cmd->add_option("--series", series_path, "Write g1, g2 along the first trajectory to this CSV");
  ce_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      const auto ics = random_interior_states(p, count, common.seed);
      CertifyOptions opt;
      opt.keep_series = !series_path.empty();
      const auto cert = certify_global_stability(p, ics, horizon, cert_step, opt);
      if (opt.keep_series) {
        std::ofstream f(series_path);
        if (!f) throw ValidationError("cannot open '" + series_path + "' for writing");
        write_g_series_csv(f, cert.trajectories.front().series);
      }
      if (fmt("json") == "json") {
        os << to_json(cert).dump(2) << '\n';
        return;
      }
      os << "index,s_h0,i_h0,i_v0,q_bar2,max_sigma_violation\n";
      for (std::size_t k = 0; k < cert.trajectories.size(); ++k) {
        const auto& t = cert.trajectories[k];
        os << k << ',' << format_double(t.initial.s_h) << ',' << format_double(t.initial.i_h) << ','
           << format_double(t.initial.i_v) << ',' << format_double(t.q_bar2) << ','
           << format_double(t.max_sigma_violation) << '\n';
      }
    };
  });

  // sensitivity
  auto* se_cmd = app.add_subcommand("sensitivity", "Sensitivity indices and bed-net thresholds");
  add_common(se_cmd);
  se_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const Json j = to_json(sensitivity_indices(params()));
      if (fmt("json") == "json") {
        os << j.dump(2) << '\n';
      } else {
        detail::write_kv_csv(os, j);
      }
    };
  });

  // surface
  std::string quantity = "r0";
  std::vector<double> pi_range{1.0, 5.0}, b_range{0.0, 1.0};
  std::size_t pi_points = 101, b_points = 101;
  auto* su_cmd = app.add_subcommand("surface", "R0 or theta on a (pi, b) grid");
  add_common(su_cmd);
  su_cmd->add_option("--quantity", quantity, "r0 or theta")
      ->check(CLI::IsMember({"r0", "theta"}))
      ->capture_default_str();
  su_cmd->add_option("--pi-range", pi_range, "Lowest and highest pi")->expected(2)->delimiter(',');
  su_cmd->add_option("--b-range", b_range, "Lowest and highest b")->expected(2)->delimiter(',');
  su_cmd->add_option("--pi-points", pi_points, "Grid points along pi")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  su_cmd->add_option("--b-points", b_points, "Grid points along b")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  su_cmd->callback([&] {
    action = [&](std::ostream& os) {
      const auto p = params();
      const auto pis = linspace(pi_range[0], pi_range[1], pi_points);
      const auto bs = linspace(b_range[0], b_range[1], b_points);
      const auto s = grid_surface(p, pis, bs, quantity == "r0" ? SurfaceQuantity::r0 : SurfaceQuantity::theta);
      if (fmt("csv") == "csv") {
        write_surface_csv(os, s);
        return;
      }
      // NaN cells (theta without transmission) become null.
      Json j{{"quantity", quantity}, {"pi", s.pi_grid}, {"b", s.b_grid}, {"values", s.values}};
      os << j.dump(2) << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (common.out.empty()) {
      action(out);
    } else {
      // Render fully before touching the file so failures leave no partial output.
      std::ostringstream buf;
      action(buf);
      std::ofstream f(common.out);
      if (!f) throw ValidationError("cannot open '" + common.out + "' for writing");
      f << buf.str();
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

}  // namespace vbm::cli
