// Acceptance checks. `vbm_acceptance N` runs criterion N; without arguments
// every criterion runs. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "vbm/bifurcation.hpp"
#include "vbm/certificate.hpp"
#include "vbm/equilibria.hpp"
#include "vbm/sensitivity.hpp"
#include "vbm/simulate.hpp"

using namespace vbm;
namespace t = vbm::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

StateFull random_interior(std::mt19937_64& rng, const ModelParams& p) {
  const double nh = p.lambda_h() / p.mu(), nv = vector_population(p);
  const double h = t::uniform(rng, 0.01, 0.99) * nh, f = t::uniform(rng, 0.01, 0.99);
  const double v = t::uniform(rng, 0.01, 0.99) * nv, g = t::uniform(rng, 0.01, 0.99);
  return {h * (1 - f), h * f, v * (1 - g), v * g};
}

StateFull random_in_region(std::mt19937_64& rng, const ModelParams& p) {
  const double nh = p.lambda_h() / p.mu(), nv = vector_population(p);
  const double h = t::uniform(rng, 0.0, 1.0) * nh, f = t::uniform(rng, 0.0, 1.0);
  const double v = t::uniform(rng, 0.0, 1.0) * nv, g = t::uniform(rng, 0.0, 1.0);
  return {h * (1 - f), h * f, v * (1 - g), v * g};
}

// 1. R0(p2_crit) = 1 over random parameter sets.
void criterion1(Outcome& o) {
  std::mt19937_64 rng(1001);
  std::vector<ModelParams> sets;
  for (int k = 0; k < 1000; ++k) sets.push_back(t::random_params(rng));
  Stopwatch sw;
  double worst = 0.0;
  for (const auto& p : sets) {
    ParamValues v = p.values();
    v.p2 = critical_p2(p);
    worst = std::max(worst, std::abs(detail::r0_raw(v) - 1.0));
  }
  const double secs = sw.seconds();
  o.require(worst <= 1e-12, "max |R0 - 1| <= 1e-12");
  o.require(secs < 1.0, "runtime < 1 s");
  o.detail << "1000 sets, max |R0(p2_crit) - 1| = " << num(worst) << ", " << num(secs) << " s";
}

// 2. Baseline numbers against 50-digit re-evaluations.
void criterion2(Outcome& o) {
  const auto p = ModelParams::table1(0.4, 2.0);
  const auto mp = t::mp_table1(0.4, 2.0);
  const double r0 = basic_reproduction_number(p), r0_o = t::mp_r0(mp).convert_to<double>();
  const double th = theta(p), th_o = t::mp_theta(mp).convert_to<double>();
  const double p2c = critical_p2(p), p2c_o = t::mp_p2_crit(mp).convert_to<double>();
  const auto bc = critical_bednet_coverage(p).b_crit;
  const double bc_o = t::mp_b_crit(mp).convert_to<double>();
  o.require(std::abs(r0 - 3.0729) <= 1e-3 && std::abs(r0 - r0_o) <= 1e-3, "R0 = 3.0729 +- 1e-3");
  o.require(std::abs(th - 0.02196) <= 1e-4 && std::abs(th - th_o) <= 1e-4, "theta = 0.02196 +- 1e-4");
  o.require(std::abs(p2c - 0.32543) <= 1e-4 && std::abs(p2c - p2c_o) <= 1e-4, "p2_crit = 0.32543 +- 1e-4");
  o.require(bc.has_value(), "b_crit attainable");
  double r0_at_bc = 0.0;
  if (bc) {
    r0_at_bc = basic_reproduction_number(p.with_bednet(*bc));
    o.require(std::abs(*bc - 0.6071) <= 1e-3 && std::abs(*bc - bc_o) <= 1e-3, "b_crit = 0.6071 +- 1e-3");
    o.require(std::abs(r0_at_bc - 1.0) <= 1e-8, "R0(b_crit) = 1 +- 1e-8");
  }
  o.detail << "R0 " << num(r0) << " (oracle " << num(r0_o) << "), theta " << num(th) << " (oracle " << num(th_o)
           << "), p2_crit " << num(p2c) << " (oracle " << num(p2c_o) << "), b_crit " << num(bc.value_or(-1))
           << " (oracle " << num(bc_o) << "), R0(b_crit) - 1 = " << num(r0_at_bc - 1.0);
}

// 3. Sensitivity anchors.
void criterion3(Outcome& o) {
  std::mt19937_64 rng(1003);
  int exact = 0;
  for (int k = 0; k < 100; ++k) {
    ParamValues v = t::random_values(rng);
    v.bednet = std::min(v.bednet, 0.95);
    exact += sensitivity_indices(ModelParams(v)).s_pi == 1.0 ? 1 : 0;
  }
  const double sb = sensitivity_indices(ModelParams::table1(0.24, 2.0)).s_b;
  o.require(exact == 100, "S_pi == 1 exactly for all 100 sets");
  o.require(std::abs(sb + 1.0) <= 0.05, "S_b(0.24) = -1 +- 0.05");
  o.detail << "S_pi == 1 in " << exact << "/100 sets, S_b(b=0.24) = " << num(sb);
}

// 4. Sign-pattern case labels against direct root counting.
void criterion4(Outcome& o) {
  std::mt19937_64 rng(1004);
  std::vector<ModelParams> sets;
  for (int k = 0; k < 1000; ++k) {
    ParamValues v = t::random_values(rng);
    if (k % 2 == 0) v.p2 *= t::uniform(rng, 0.02, 0.5);
    sets.emplace_back(v);
  }
  Stopwatch sw;
  int mismatches = 0, equilibria = 0;
  int cases[4] = {0, 0, 0, 0};
  double worst_residual = 0.0;
  for (const auto& p : sets) {
    const auto set = endemic_equilibria(p);
    const auto& q = set.coefficients;
    if (static_cast<int>(set.endemic.size()) != t::count_positive_roots(q.a0, q.b0, q.c0)) ++mismatches;
    ++cases[static_cast<int>(set.case_label)];
    for (const auto& e : set.endemic) {
      worst_residual = std::max(worst_residual, relative_residual(p, e.state));
      ++equilibria;
    }
  }
  const double secs = sw.seconds();
  o.require(mismatches == 0, "case labels match root counts");
  o.require(worst_residual < 1e-10, "residual < 1e-10");
  o.require(secs < 10.0, "runtime < 10 s");
  o.detail << "1000 sets (cases i/ii/iii/iv: " << cases[0] << '/' << cases[1] << '/' << cases[2] << '/' << cases[3]
           << "), " << mismatches << " mismatches, " << equilibria << " equilibria, max residual "
           << num(worst_residual) << ", " << num(secs) << " s";
}

// 5. DFE threshold behaviour and the infected-block determinant identity.
void criterion5(Outcome& o) {
  const auto base = ModelParams::table1();
  const auto e0 = disease_free_equilibrium(base);
  const auto low = base.with_p2(0.5 * critical_p2(base));
  const auto v_low = classify(low, e0, SystemKind::full);
  const auto v_base = classify(base, e0, SystemKind::full);
  o.require(std::abs(basic_reproduction_number(low) - 0.5) < 1e-12 && v_low.stable(), "stable at R0 = 0.5");
  o.require(v_base.classification == Classification::unstable, "unstable at baseline");
  std::mt19937_64 rng(1005);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto p = t::random_params(rng);
    const auto j = jacobian_full(p, disease_free_equilibrium(p));
    const double det = j(1, 1) * j(3, 3) - j(1, 3) * j(3, 1);
    const double scale = p.alpha0() * mosquito_death_rate(p);
    const double expect = scale * (1.0 - basic_reproduction_number(p));
    worst = std::max(worst, std::abs(det - expect) / std::max(std::abs(expect), scale));
  }
  o.require(worst <= 1e-12, "det identity to 1e-12");
  o.detail << "R0 = 0.5 margin " << num(v_low.margin) << ", baseline margin " << num(v_base.margin)
           << ", max relative det error " << num(worst);
}

// 6. Centre-manifold coefficient a and bifurcation direction.
void criterion6(Outcome& o) {
  std::mt19937_64 rng(1006);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto c = centre_manifold_coefficients(t::random_critical_params(rng));
    worst = std::max(worst, std::abs(c.coeff_a - c.coeff_a_closed) / std::abs(c.coeff_a_closed));
  }
  int forward = 0, checked = 0;
  while (checked < 100) {
    ParamValues v = t::random_values(rng);
    v.alpha = 0;
    const ModelParams p(v);
    if (critical_p2(p) > 1) continue;
    forward += bifurcation_report(p).direction == BifurcationDirection::forward ? 1 : 0;
    ++checked;
  }
  const auto base = bifurcation_report(ModelParams::table1());
  o.require(worst <= 1e-10, "coeff_a agreement to 1e-10");
  o.require(forward == checked, "alpha = 0 always forward");
  o.require(base.direction == BifurcationDirection::backward, "baseline backward");
  o.detail << "max relative |a_sum - a_closed| " << num(worst) << ", alpha = 0 forward in " << forward << '/'
           << checked << ", baseline " << to_string(base.direction);
}

// 7. Bistability at R0 = 0.99.
void criterion7(Outcome& o) {
  Stopwatch sw;
  const auto base = ModelParams::table1();
  const auto p = base.with_p2(0.99 * critical_p2(base));
  const auto set = endemic_equilibria(p);
  o.require(set.endemic.size() == 2, "two endemic equilibria");
  if (set.endemic.size() != 2) return;
  std::vector<StateReduced> cands{project(p, set.dfe)};
  for (const auto& e : set.endemic) cands.push_back(project(p, e.state));
  const auto upper = cands[2];
  const auto from_dfe = make_reduced(p, set.dfe.s_h - 1, 1, 1);
  const auto near_upper = make_reduced(p, upper.s_h * 1.01, upper.i_h * 1.01, upper.i_v * 1.01);

  auto distance_at = [&](const StateReduced& ic, double horizon, const StateReduced& target) {
    return relative_distance(integrate(p, ic, horizon).final_state(), target);
  };
  const double d_dfe = distance_at(from_dfe, 2000.0, cands[0]);
  const double d_upper = distance_at(near_upper, 2000.0, upper);
  const double secs = sw.seconds();
  o.require(d_dfe <= 1e-6, "(S_h0 - 1, 1, 1) within 1e-6 of the DFE at 2000 days");
  o.require(d_upper <= 1e-6, "1% perturbation within 1e-6 of the upper branch at 2000 days");
  o.require(secs < 30.0, "runtime < 30 s");
  o.detail << "R0 " << num(set.r0) << ", 2 endemic equilibria; at 2000 days: distance to DFE " << num(d_dfe)
           << ", to upper branch " << num(d_upper) << ", " << num(secs) << " s";
  // Where each run does settle, for the record.
  o.notes.push_back("extended horizons: DFE distance " + num(distance_at(from_dfe, 400000.0, cands[0])) +
                    " at 400000 days, upper-branch distance " + num(distance_at(near_upper, 30000.0, upper)) +
                    " at 30000 days");
}

// 8. Global-stability certificate at baseline.
void criterion8(Outcome& o) {
  constexpr double kHorizon = 40000.0, kSampling = 5.0;
  Stopwatch sw;
  const auto p = ModelParams::table1();
  const auto set = endemic_equilibria(p);
  o.require(set.endemic.size() == 1, "unique endemic equilibrium");
  const auto e = project(p, set.endemic.front().state);
  const auto ics = random_interior_states(p, 100, 8);
  const auto cert = certify_global_stability(p, ics, kHorizon, kSampling);
  double worst_distance = 0.0, worst_q = -1e300;
  for (const auto& tr : cert.trajectories) {
    worst_distance = std::max(worst_distance, relative_distance(tr.final_state, e));
    worst_q = std::max(worst_q, tr.q_bar2);
  }
  const double secs = sw.seconds();
  o.require(worst_distance <= 1e-6, "all endpoints within 1e-6 of the endemic equilibrium");
  o.require(worst_q < 0, "q_bar2 < 0 for every trajectory");
  o.require(cert.q_bar2_estimate < -p.mu() / 2, "q_bar2 estimate < -mu/2");
  o.require(cert.pointwise_max_sigma_violation <= kSigmaBoundTolerance, "pointwise bound within 1e-9");
  o.require(cert.passed, "certificate passed");
  o.require(secs < 120.0, "runtime < 2 min");
  o.detail << "100 trajectories, horizon " << num(kHorizon) << " days: max endpoint distance " << num(worst_distance)
           << ", q_bar2 estimate " << num(cert.q_bar2_estimate) << " (-mu/2 = " << num(-p.mu() / 2)
           << "), max scaled bound slack " << num(cert.pointwise_max_sigma_violation) << ", " << num(secs) << " s";
}

// 9. Qualitative shape of the threshold, branch and surfaces.
void criterion9(Outcome& o) {
  const auto base = ModelParams::table1();
  std::vector<double> by_pi;
  for (double pi : {1.0, 2.0, 5.0}) {
    const auto w = backward_window(base.with_pi(pi));
    by_pi.push_back(w ? w->lower : 1.0);
  }
  o.require(by_pi[0] > by_pi[1] && by_pi[1] > by_pi[2], "saddle-node threshold strictly decreasing in pi");

  std::vector<double> by_b;
  for (double b : {0.2, 0.4, 0.6}) {
    const auto w = backward_window(base.with_bednet(b));
    by_b.push_back(w ? w->lower : 1.0);
  }
  const auto [lo, hi] = std::minmax_element(by_b.begin(), by_b.end());
  const double variation = (*hi - *lo) / *lo;
  o.require(variation < 0.05, "threshold variation across b < 5%");

  const auto bs = linspace(0.0, 0.6, 61);
  const auto branch = sweep_bednet(base.with_p2(0.6), bs);
  bool decreasing = true;
  for (std::size_t k = 0; k < branch.size(); ++k) {
    if (branch[k].roots.empty() || !branch[k].roots.back().stable) {
      decreasing = false;
      continue;
    }
    if (k > 0 && !branch[k - 1].roots.empty() && !(branch[k].roots.back().i_v < branch[k - 1].roots.back().i_v)) {
      decreasing = false;
    }
  }
  o.require(decreasing, "stable I_v* strictly decreasing in b at p2 = 0.6");

  const auto pis = linspace(1.0, 5.0, 101);
  const auto grid_b = linspace(0.0, 1.0, 101);
  const auto r0s = grid_surface(base, pis, grid_b, SurfaceQuantity::r0);
  const auto ths = grid_surface(base, pis, grid_b, SurfaceQuantity::theta);
  const double slope = -2 * base.mu() / base.lambda_h();
  int r0_bad = 0, th_bad = 0, undefined = 0;
  for (std::size_t i = 0; i < pis.size(); ++i) {
    double prev_drop = 0.0;
    for (std::size_t j = 0; j < grid_b.size(); ++j) {
      const bool transmits = detail::contact_rate(base.with_bednet(grid_b[j]).values()) > 0;
      if (j > 0 && !(r0s.values[i][j] < r0s.values[i][j - 1])) ++r0_bad;
      if (i > 0 && transmits && !(r0s.values[i][j] > r0s.values[i - 1][j])) ++r0_bad;
      if (!transmits) {
        undefined += std::isnan(ths.values[i][j]) ? 1 : 0;
        continue;
      }
      if (i > 0) {
        const double step = ths.values[i][j] - ths.values[i - 1][j];
        if (!(std::abs(step - slope * (pis[i] - pis[i - 1])) <= 1e-12)) ++th_bad;
      }
      if (j > 0) {
        const double drop = ths.values[i][j] - ths.values[i][j - 1];
        if (!(drop < 0 && drop < prev_drop)) ++th_bad;
        prev_drop = drop;
      }
    }
  }
  o.require(r0_bad == 0, "R0 surface monotone in pi and b");
  o.require(th_bad == 0, "theta surface affine decreasing in pi, accelerating decrease in b");
  o.detail << "thresholds pi=1,2,5: " << num(by_pi[0]) << ", " << num(by_pi[1]) << ", " << num(by_pi[2])
           << "; b=0.2,0.4,0.6: " << num(by_b[0]) << ", " << num(by_b[1]) << ", " << num(by_b[2]) << " (variation "
           << num(100 * variation) << "%); stable I_v* at b=0, 0.6: " << num(branch.front().roots.back().i_v) << ", "
           << num(branch.back().roots.back().i_v) << "; surface violations R0 " << r0_bad << ", theta " << th_bad
           << " (" << undefined << " theta cells without transmission)";
}

// 10. Jacobians, forward invariance, self-convergence.
void criterion10(Outcome& o) {
  std::mt19937_64 rng(1010);
  double worst_jac = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto p = t::random_params(rng);
    const auto x = random_interior(rng, p);
    const auto fd4 = t::fd_jacobian<4>([&](const Vec4& y) { return rhs_full(p, StateFull::from_array(y)); },
                                       x.to_array());
    const auto y = project(p, x);
    const auto fd3 = t::fd_jacobian<3>(
        [&](const Vec3& z) { return rhs_reduced(p, StateReduced::from_array(z, y.v_total)); }, y.to_array());
    const Matrix4 j4 = jacobian_full(p, x);
    const Matrix3 j3 = jacobian_reduced(p, y);
    auto err = [](const auto& j, const auto& fd, std::size_t n) {
      double scale = 0.0, e = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) scale = std::max(scale, std::abs(fd[r][c]));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          e = std::max(e, std::abs(j(r, c) - fd[r][c]) / std::max(std::abs(fd[r][c]), 1e-6 * scale));
      return e;
    };
    worst_jac = std::max({worst_jac, err(j4, fd4, 4), err(j3, fd3, 3)});
  }
  o.require(worst_jac <= 1e-5, "Jacobians match finite differences to 1e-5");

  int exits = 0;
  for (int k = 0; k < 500; ++k) {
    const auto p = t::random_params(rng);
    const auto x = random_in_region(rng, p);
    SimulationOptions opt;
    opt.integrator.rel_tol = opt.integrator.abs_tol = 1e-8;
    try {
      if (k % 2 == 0) {
        for (const auto& s : integrate(p, x, 1000.0, opt).states) exits += in_region(p, s) ? 0 : 1;
      } else {
        for (const auto& s : integrate(p, project(p, x), 1000.0, opt).states) exits += in_region(p, s) ? 0 : 1;
      }
    } catch (const Error&) {
      ++exits;
    }
  }
  o.require(exits == 0, "no region exits over 500 trajectories");

  double worst_ratio = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto p = t::random_params(rng);
    const auto x = random_interior(rng, p);
    for (double tol : {1e-6, 1e-8}) {
      SimulationOptions coarse, fine;
      coarse.integrator.rel_tol = coarse.integrator.abs_tol = tol;
      fine.integrator.rel_tol = fine.integrator.abs_tol = tol / 2;
      const double d = relative_distance(integrate(p, x, 500.0, coarse).final_state(),
                                         integrate(p, x, 500.0, fine).final_state());
      worst_ratio = std::max(worst_ratio, d / tol);
    }
  }
  o.require(worst_ratio < 1.0, "tolerance halving moves endpoints by less than the coarse tolerance");
  o.detail << "max Jacobian error " << num(worst_jac) << ", region exits " << exits
           << "/500, max endpoint change / coarse tolerance " << num(worst_ratio);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<void(Outcome&)>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8,
                                                            criterion9, criterion10};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= 10; ++i) which.push_back(i);
  }
  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > 10) {
      std::printf("criterion %d: unknown\n", n);
      ++failures;
      continue;
    }
    Outcome o;
    try {
      criteria[n - 1](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    std::printf("criterion %d: %s: %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    for (const auto& note : o.notes) std::printf("  %s\n", note.c_str());
    failures += o.pass ? 0 : 1;
  }
  return failures;
}
