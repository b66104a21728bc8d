#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbm/dopri5.hpp"
#include "vbm/error.hpp"
#include "vbm/model.hpp"
#include "vbm/params.hpp"

namespace vbm {

struct SimulationOptions {
  IntegratorOptions integrator;
  double sample_step = 0.0;  // 0: record every accepted step
};

struct ConvergenceMatch {
  std::size_t index = 0;  // into the candidate list
  double distance = 0.0;
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::optional<ConvergenceMatch> converged_to;

  const State& final_state() const { return states.back(); }
};

namespace detail {

template <std::size_t N>
bool clamp_roundoff(std::array<double, N>& y, double abs_tol) {
  bool changed = false;
  for (auto& c : y) {
    if (c < 0) {
      if (c < -abs_tol) throw NumericalError("negative component " + std::to_string(c) + " beyond roundoff");
      c = 0.0;
      changed = true;
    }
  }
  return changed;
}

inline void check_options(double t_end, const SimulationOptions& opt) {
  const auto& io = opt.integrator;
  if (!(t_end > 0)) throw ValidationError("t_end must be positive");
  if (!(io.rel_tol > 0 && io.rel_tol <= 1e-2)) throw ValidationError("rel_tol must lie in (0, 1e-2]");
  if (!(io.abs_tol > 0 && io.abs_tol <= 1e-2)) throw ValidationError("abs_tol must lie in (0, 1e-2]");
  if (opt.sample_step < 0) throw ValidationError("sample_step must be non-negative");
}

inline std::vector<double> sample_grid(double t_end, double step) {
  std::vector<double> grid;
  if (step <= 0) return grid;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * step;
    if (t >= t_end * (1.0 - 1e-12)) break;
    grid.push_back(t);
  }
  grid.push_back(t_end);
  return grid;
}

template <class State, std::size_t N, class Rhs, class FromArray>
Trajectory<State> run(const ModelParams& p, const State& ic, double t_end, const SimulationOptions& opt, Rhs&& rhs,
                      FromArray&& from_array) {
  check_options(t_end, opt);
  if (!in_region(p, ic)) throw ValidationError("initial condition lies outside the invariant region");

  Trajectory<State> traj;
  traj.times.push_back(0.0);
  traj.states.push_back(ic);

  const double abs_tol = opt.integrator.abs_tol;
  auto admit = [&](std::array<double, N>& y) {
    const bool changed = clamp_roundoff(y, abs_tol);
    if (!in_region(p, from_array(y))) throw NumericalError("trajectory left the invariant region");
    return changed;
  };

  IntegratorOptions io = opt.integrator;
  io.nonnegative = true;
  const auto grid = sample_grid(t_end, opt.sample_step);
  const bool every_step = grid.empty();
  const auto stats = dopri5<N>(
      [&](const std::array<double, N>& y) { return rhs(from_array(y)); }, ic.to_array(), 0.0, t_end, io,
      std::span<const double>(grid),
      [&](double t, std::array<double, N> y) {
        admit(y);
        traj.times.push_back(t);
        traj.states.push_back(from_array(y));
      },
      [&](double t, std::array<double, N>& y) {
        const bool changed = admit(y);
        if (every_step) {
          traj.times.push_back(t);
          traj.states.push_back(from_array(y));
        }
        return changed;
      });
  traj.steps_accepted = stats.steps_accepted;
  traj.steps_rejected = stats.steps_rejected;
  return traj;
}

}  // namespace detail

/// Integrates the four-compartment system from `ic` over [0, t_end].
inline Trajectory<StateFull> integrate(const ModelParams& p, const StateFull& ic, double t_end,
                                       const SimulationOptions& opt = {}) {
  return detail::run<StateFull, 4>(
      p, ic, t_end, opt, [&p](const StateFull& x) { return rhs_full(p, x); },
      [](const Vec4& y) { return StateFull::from_array(y); });
}

/// Integrates the reduced system (mosquito population frozen at ic.v_total).
inline Trajectory<StateReduced> integrate(const ModelParams& p, const StateReduced& ic, double t_end,
                                          const SimulationOptions& opt = {}) {
  const double v = ic.v_total;
  return detail::run<StateReduced, 3>(
      p, ic, t_end, opt, [&p](const StateReduced& x) { return rhs_reduced(p, x); },
      [v](const Vec3& y) { return StateReduced::from_array(y, v); });
}

/// Relative distance max_k |x_k - c_k| / max(|c_k|, 1): relative per
/// component, absolute below one individual.
template <class State>
double relative_distance(const State& x, const State& c) {
  const auto a = x.to_array();
  const auto b = c.to_array();
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]) / std::max(std::abs(b[k]), 1.0));
  }
  return d;
}

/// Nearest candidate to the final state, if it is within `tol`.
template <class State>
std::optional<ConvergenceMatch> detect_convergence(const Trajectory<State>& traj, std::span<const State> candidates,
                                                   double tol) {
  if (traj.states.empty()) throw ValidationError("detect_convergence: empty trajectory");
  std::optional<ConvergenceMatch> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double d = relative_distance(traj.final_state(), candidates[i]);
    if (d <= tol && (!best || d < best->distance)) best = ConvergenceMatch{i, d};
  }
  return best;
}

}  // namespace vbm
