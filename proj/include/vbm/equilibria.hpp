#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vbm/error.hpp"
#include "vbm/model.hpp"
#include "vbm/params.hpp"
#include "vbm/stability.hpp"

namespace vbm {

/// Coefficients of A0 x^2 + B0 x + C0 = 0 in the equilibrium human force of
/// infection x, plus the B0 sign threshold r_a and the discriminant.
struct QuadraticCoefficients {
  double a0 = 0.0;
  double b0 = 0.0;
  double c0 = 0.0;
  double r_a = 0.0;
  double disc = 0.0;
};

enum class EquilibriumCase { i, ii, iii, iv };

inline const char* to_string(EquilibriumCase c) noexcept {
  switch (c) {
    case EquilibriumCase::i: return "(i)";
    case EquilibriumCase::ii: return "(ii)";
    case EquilibriumCase::iii: return "(iii)";
    case EquilibriumCase::iv: return "(iv)";
  }
  return "?";
}

struct EndemicEquilibrium {
  double lambda_h_star = 0.0;
  double lambda_v_star = 0.0;
  StateFull state;
  double residual = 0.0;
  StabilityVerdict verdict;

  bool locally_stable() const noexcept { return verdict.stable(); }
};

struct EquilibriumSet {
  StateFull dfe;
  StabilityVerdict dfe_verdict;
  double r0 = 0.0;
  QuadraticCoefficients coefficients;
  EquilibriumCase case_label = EquilibriumCase::iv;
  bool c0_zero = false;    // R0 == 1 within tolerance
  bool disc_zero = false;  // double root within tolerance
  std::vector<EndemicEquilibrium> endemic;  // ordered by increasing lambda_h_star
};

/// Residual above which a back-substituted endemic equilibrium is rejected.
inline constexpr double kEndemicResidualTolerance = 1e-10;

namespace detail {

inline double r0_raw(const ParamValues& v) {
  const double beta = contact_rate(v);
  const double eta = mosquito_death_rate(v);
  return v.pi_bias * v.p1 * v.p2 * v.mu * v.lambda_v * beta * beta /
         (v.lambda_h * eta * eta * (v.alpha + v.mu + v.delta));
}

inline QuadraticCoefficients quadratic_raw(const ParamValues& v) {
  const double beta = contact_rate(v);
  const double eta = mosquito_death_rate(v);
  const double a0 = v.alpha + v.mu + v.delta;
  const double pi = v.pi_bias;
  QuadraticCoefficients q;
  q.a0 = eta * v.lambda_h * pi * pi * (eta + v.p2 * beta);
  q.b0 = pi * (eta * a0 * v.lambda_h * (2.0 * eta + v.p2 * beta) -
               v.p1 * v.p2 * beta * beta * v.lambda_v * (v.alpha + v.mu));
  q.c0 = eta * eta * a0 * a0 * v.lambda_h * (1.0 - r0_raw(v));
  q.r_a = pi * v.mu * (2.0 * eta + v.p2 * beta) / (eta * (v.alpha + v.mu));
  q.disc = q.b0 * q.b0 - 4.0 * q.a0 * q.c0;
  return q;
}

inline bool has_two_positive_roots(const ParamValues& v) {
  const auto q = quadratic_raw(v);
  return q.c0 > 0 && q.b0 < 0 && q.disc > 0;
}

inline bool has_positive_root(const ParamValues& v) {
  const auto q = quadratic_raw(v);
  if (q.c0 < 0) return true;
  return q.b0 < 0 && q.disc >= 0;
}

}  // namespace detail

/// E0 = (Lambda_h/mu, 0, Lambda_v/eta(b), 0).
inline StateFull disease_free_equilibrium(const ModelParams& p) {
  return {p.lambda_h() / p.mu(), 0.0, vector_population(p), 0.0};
}

inline double basic_reproduction_number(const ModelParams& p) { return detail::r0_raw(p.values()); }

inline QuadraticCoefficients quadratic_coefficients(const ModelParams& p) {
  return detail::quadratic_raw(p.values());
}

/// Maps a positive root x = lambda_h* of the quadratic to the equilibrium
/// state by back-substitution through the equilibrium relations.
inline EndemicEquilibrium endemic_from_root(const ModelParams& p, double lh) {
  const double a0 = p.alpha0();
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  const double pi = p.pi_bias();
  EndemicEquilibrium e;
  e.lambda_h_star = lh;
  e.lambda_v_star = pi * p.p2() * beta * lh / (pi * lh + a0);
  const double s_h = a0 * p.lambda_h() / (a0 * (lh + p.mu()) - p.delta() * lh);
  const double lv = e.lambda_v_star;
  e.state = {s_h, lh * s_h / a0, p.lambda_v() / (eta + lv), lv * p.lambda_v() / (eta * (eta + lv))};
  return e;
}

/// Disease-free equilibrium, R0 and every endemic equilibrium, classified by
/// the sign pattern of the quadratic's coefficients.
inline EquilibriumSet endemic_equilibria(const ModelParams& p) {
  EquilibriumSet set;
  set.dfe = disease_free_equilibrium(p);
  set.r0 = basic_reproduction_number(p);
  set.coefficients = quadratic_coefficients(p);
  set.dfe_verdict = classify(p, set.dfe, SystemKind::full);
  const auto& q = set.coefficients;

  set.c0_zero = std::abs(1.0 - set.r0) <= 1e-12;
  const double disc_scale = q.b0 * q.b0 + std::abs(4.0 * q.a0 * q.c0);
  set.disc_zero = disc_scale > 0 && std::abs(q.disc) <= 1e-12 * disc_scale;

  std::vector<double> roots;
  if (!set.c0_zero && q.c0 < 0) {
    set.case_label = EquilibriumCase::i;
    // Stable form of the positive root: with C0 < 0 the roots have opposite signs.
    const double s = std::sqrt(q.disc);
    roots.push_back(q.b0 <= 0 ? (-q.b0 + s) / (2.0 * q.a0) : (-2.0 * q.c0) / (q.b0 + s));
  } else if (q.b0 < 0 && (set.c0_zero || set.disc_zero)) {
    set.case_label = EquilibriumCase::ii;
    roots.push_back(set.c0_zero ? -q.b0 / q.a0 : -q.b0 / (2.0 * q.a0));
  } else if (q.c0 > 0 && q.b0 < 0 && q.disc > 0) {
    set.case_label = EquilibriumCase::iii;
    const double big = (-q.b0 + std::sqrt(q.disc)) / 2.0;
    roots.push_back(q.c0 / big);
    roots.push_back(big / q.a0);
  } else {
    set.case_label = EquilibriumCase::iv;
  }

  for (double lh : roots) {
    auto e = endemic_from_root(p, lh);
    e.residual = relative_residual(p, e.state);
    const auto& s = e.state;
    if (!(s.s_h > 0 && s.i_h > 0 && s.s_v > 0 && s.i_v > 0) || e.residual > kEndemicResidualTolerance) {
      throw NumericalError("endemic equilibrium failed verification (relative residual " +
                           std::to_string(e.residual) + ")");
    }
    e.verdict = classify(p, s, SystemKind::full);
    set.endemic.push_back(std::move(e));
  }
  return set;
}

/// Interval of R0 values, reached by varying p2 alone, on which two endemic
/// equilibria coexist below R0 = 1.
struct R0Interval {
  double lower = 0.0;
  double upper = 1.0;
  double p2_lower = 0.0;  // p2 at the lower endpoint (saddle-node)
  double p2_upper = 0.0;  // p2 at criticality
};

/// Bisection on p2 for the edge of the two-root region. The p2 sweep is
/// mathematical: values above 1 are allowed when criticality requires them.
/// Empty when the bifurcation at R0 = 1 is forward or beta(b) = 0.
inline std::optional<R0Interval> backward_window(const ModelParams& p) {
  ParamValues v = p.values();
  v.p2 = 1.0;
  const double r0_per_p2 = detail::r0_raw(v);
  if (!(r0_per_p2 > 0)) return std::nullopt;
  const double p2_crit = 1.0 / r0_per_p2;

  v.p2 = p2_crit * (1.0 - 1e-9);
  if (!detail::has_two_positive_roots(v)) return std::nullopt;

  double lo = 0.0, hi = v.p2;
  while ((hi - lo) > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    v.p2 = mid;
    (detail::has_two_positive_roots(v) ? hi : lo) = mid;
  }
  R0Interval w;
  w.p2_lower = hi;
  w.p2_upper = p2_crit;
  w.lower = hi * r0_per_p2;
  w.upper = 1.0;
  return w;
}

}  // namespace vbm
