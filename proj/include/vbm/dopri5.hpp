#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>

#include "vbm/error.hpp"

namespace vbm {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double initial_step = 1e-3;
  double max_step = 0.0;  // 0: t_end / 10
  double min_step = 1e-12;
  std::size_t max_steps = 50'000'000;
  // Reject steps that push a component below -abs_tol.
  bool nonnegative = false;
};

struct IntegrationStats {
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Dormand-Prince 5(4) embedded pair with PI step-size control and the
/// fourth-order continuous extension for dense output.
///
/// `rhs(y) -> dy/dt` for an autonomous system. `sample_times` must be sorted
/// and lie in (t0, t_end]; `observe(t, y)` is called for each of them with the
/// interpolated state. `after_step(t, y)` runs on every accepted step; it may
/// correct the state in place (return true when it did) or throw to abort.
template <std::size_t N, class Rhs, class Observe, class AfterStep>
IntegrationStats dopri5(Rhs&& rhs, std::array<double, N> y, double t0, double t_end, const IntegratorOptions& opt,
                        std::span<const double> sample_times, Observe&& observe, AfterStep&& after_step) {
  using State = std::array<double, N>;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
  // PI controller constants.
  static constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0, beta_pi = 0.04;
  static constexpr double expo = 0.2 - beta_pi * 0.75;

  IntegrationStats stats;
  const double h_max = opt.max_step > 0 ? opt.max_step : (t_end - t0) / 10.0;
  double h = std::min(opt.initial_step, h_max);
  double t = t0;
  double fac_old = 1e-4;
  std::size_t next_sample = 0;

  auto axpy = [](const State& base, double h_, std::initializer_list<std::pair<double, const State*>> terms) {
    State out = base;
    for (const auto& [c, k] : terms) {
      for (std::size_t i = 0; i < N; ++i) out[i] += h_ * c * (*k)[i];
    }
    return out;
  };

  State k1 = rhs(y), k2, k3, k4, k5, k6, k7;
  ++stats.rhs_evaluations;

  while (t < t_end) {
    if (stats.steps_accepted + stats.steps_rejected >= opt.max_steps) {
      throw NumericalError("integrator exceeded the maximum number of steps");
    }
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h < opt.min_step && !last) throw NumericalError("step-size underflow");

    k2 = rhs(axpy(y, h, {{a21, &k1}}));
    k3 = rhs(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    k4 = rhs(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    k5 = rhs(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    k6 = rhs(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y1 = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    k7 = rhs(y1);
    stats.rhs_evaluations += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err = std::max(err, std::abs(e) / sc);  // componentwise, not RMS
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::max();
    bool negative = false;
    if (opt.nonnegative) {
      for (double c : y1) negative = negative || c < -opt.abs_tol;
    }

    const double fac11 = std::pow(err, expo);
    if (err <= 1.0 && !negative) {
      ++stats.steps_accepted;
      // Dense output coefficients over [t, t + h].
      State r2, r3, r4, r5;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = y1[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        r2[i] = ydiff;
        r3[i] = bspl;
        r4[i] = ydiff - h * k7[i] - bspl;
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      const double t_new = last ? t_end : t + h;
      while (next_sample < sample_times.size() && sample_times[next_sample] <= t_new) {
        const double ts = sample_times[next_sample];
        const double th = (ts - t) / h;
        const double th1 = 1.0 - th;
        State ys;
        for (std::size_t i = 0; i < N; ++i) {
          ys[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
        if (ts == t_new) ys = y1;
        observe(ts, ys);
        ++next_sample;
      }
      y = y1;
      t = t_new;
      if (after_step(t, y)) {
        k1 = rhs(y);
        ++stats.rhs_evaluations;
      } else {
        k1 = k7;
      }

      double fac = fac11 / std::pow(fac_old, beta_pi);
      fac = std::clamp(fac / safety, 1.0 / fac_max, 1.0 / fac_min);
      fac_old = std::max(err, 1e-4);
      h = std::min(h / fac, h_max);
    } else {
      ++stats.steps_rejected;
      h = negative && err <= 1.0 ? h / 2 : h / std::min(1.0 / fac_min, fac11 / safety);
      if (h < opt.min_step) throw NumericalError("step-size underflow");
    }
  }
  return stats;
}

}  // namespace vbm
