#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "vbm/error.hpp"
#include "vbm/params.hpp"

namespace vbm {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;

/// Full system state (S_h, I_h, S_v, I_v), individuals.
struct StateFull {
  double s_h = 0.0;
  double i_h = 0.0;
  double s_v = 0.0;
  double i_v = 0.0;

  double n_h() const noexcept { return s_h + i_h; }
  double n_v() const noexcept { return s_v + i_v; }
  Vec4 to_array() const noexcept { return {s_h, i_h, s_v, i_v}; }
  static StateFull from_array(const Vec4& x) noexcept { return {x[0], x[1], x[2], x[3]}; }
};

/// Reduced state (S_h, I_h, I_v) with the mosquito population frozen at V.
struct StateReduced {
  double s_h = 0.0;
  double i_h = 0.0;
  double i_v = 0.0;
  double v_total = 0.0;

  double n_h() const noexcept { return s_h + i_h; }
  double s_v() const noexcept { return v_total - i_v; }
  Vec3 to_array() const noexcept { return {s_h, i_h, i_v}; }
  static StateReduced from_array(const Vec3& x, double v_total) noexcept {
    return {x[0], x[1], x[2], v_total};
  }
};

struct ForceOfInfection {
  double lambda_h = 0.0;
  double lambda_v = 0.0;
};

enum class SystemKind { full, reduced };

namespace detail {

inline double contact_rate(const ParamValues& v) noexcept {
  return v.beta_max - v.bednet * (v.beta_max - v.beta_min);
}

inline double mosquito_death_rate(const ParamValues& v) noexcept {
  return v.eta_nat + v.eta_bn * v.bednet;
}

}  // namespace detail

/// beta(b): contact rate reduced linearly by bed-net usage.
inline double contact_rate(const ModelParams& p) noexcept { return detail::contact_rate(p.values()); }

/// eta(b): mosquito mortality raised linearly by bed-net usage.
inline double mosquito_death_rate(const ModelParams& p) noexcept {
  return detail::mosquito_death_rate(p.values());
}

/// Equilibrium mosquito population Lambda_v / eta(b); the constant V of the
/// reduced system.
inline double vector_population(const ModelParams& p) noexcept {
  return p.lambda_v() / mosquito_death_rate(p);
}

inline StateReduced make_reduced(const ModelParams& p, double s_h, double i_h, double i_v) noexcept {
  return {s_h, i_h, i_v, vector_population(p)};
}

inline StateReduced project(const ModelParams& p, const StateFull& x) noexcept {
  return make_reduced(p, x.s_h, x.i_h, x.i_v);
}

/// Forces of infection. The origin corner s_h = i_h = i_v = 0 is assigned
/// zero forces (continuous extension); any other zero denominator throws.
inline ForceOfInfection forces_of_infection(const ModelParams& p, double s_h, double i_h, double i_v) {
  const double pi = p.pi_bias();
  const double denom = pi * i_h + s_h;
  if (denom == 0.0) {
    if (i_h == 0.0 && i_v == 0.0) return {};
    throw ValidationError("degenerate force-of-infection denominator: pi*i_h + s_h = 0");
  }
  const double beta = contact_rate(p);
  return {p.p1() * beta * i_v / denom, pi * p.p2() * beta * i_h / denom};
}

inline ForceOfInfection forces_of_infection(const ModelParams& p, const StateFull& x) {
  return forces_of_infection(p, x.s_h, x.i_h, x.i_v);
}

inline ForceOfInfection forces_of_infection(const ModelParams& p, const StateReduced& x) {
  return forces_of_infection(p, x.s_h, x.i_h, x.i_v);
}

/// Right-hand side of the four-compartment system.
inline Vec4 rhs_full(const ModelParams& p, const StateFull& x) {
  const auto f = forces_of_infection(p, x);
  const double eta = mosquito_death_rate(p);
  return {
      p.lambda_h() - f.lambda_h * x.s_h - p.mu() * x.s_h + p.delta() * x.i_h,
      f.lambda_h * x.s_h - p.alpha0() * x.i_h,
      p.lambda_v() - f.lambda_v * x.s_v - eta * x.s_v,
      f.lambda_v * x.s_v - eta * x.i_v,
  };
}

/// Right-hand side of the reduced system, where S_v = V - I_v.
inline Vec3 rhs_reduced(const ModelParams& p, const StateReduced& x) {
  const auto f = forces_of_infection(p, x);
  const double eta = mosquito_death_rate(p);
  return {
      p.lambda_h() - f.lambda_h * x.s_h - p.mu() * x.s_h + p.delta() * x.i_h,
      f.lambda_h * x.s_h - p.alpha0() * x.i_h,
      f.lambda_v * (x.v_total - x.i_v) - eta * x.i_v,
  };
}

/// Largest component residual |f_k| divided by the sum of magnitudes of the
/// terms making up f_k. Zero at an exact equilibrium, O(eps) for a good one.
inline double relative_residual(const ModelParams& p, const StateFull& x) {
  const auto f = forces_of_infection(p, x);
  const double eta = mosquito_death_rate(p);
  const auto r = rhs_full(p, x);
  const Vec4 scale{
      p.lambda_h() + std::abs(f.lambda_h * x.s_h) + std::abs(p.mu() * x.s_h) + std::abs(p.delta() * x.i_h),
      std::abs(f.lambda_h * x.s_h) + std::abs(p.alpha0() * x.i_h),
      p.lambda_v() + std::abs(f.lambda_v * x.s_v) + std::abs(eta * x.s_v),
      std::abs(f.lambda_v * x.s_v) + std::abs(eta * x.i_v),
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (scale[k] > 0) worst = std::max(worst, std::abs(r[k]) / scale[k]);
  }
  return worst;
}

inline double relative_residual(const ModelParams& p, const StateReduced& x) {
  const auto f = forces_of_infection(p, x);
  const double eta = mosquito_death_rate(p);
  const auto r = rhs_reduced(p, x);
  const Vec3 scale{
      p.lambda_h() + std::abs(f.lambda_h * x.s_h) + std::abs(p.mu() * x.s_h) + std::abs(p.delta() * x.i_h),
      std::abs(f.lambda_h * x.s_h) + std::abs(p.alpha0() * x.i_h),
      std::abs(f.lambda_v * (x.v_total - x.i_v)) + std::abs(eta * x.i_v),
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (scale[k] > 0) worst = std::max(worst, std::abs(r[k]) / scale[k]);
  }
  return worst;
}

inline constexpr double kRegionTolerance = 1e-9;

/// Membership in the positively invariant region
/// {x >= 0, N_h <= Lambda_h/mu, N_v <= Lambda_v/eta(b)}, relative tolerance `rel_tol`.
inline bool in_region(const ModelParams& p, const StateFull& x, double rel_tol = kRegionTolerance) {
  const double nh_max = p.lambda_h() / p.mu();
  const double nv_max = vector_population(p);
  const double tol_h = rel_tol * nh_max;
  const double tol_v = rel_tol * nv_max;
  return x.s_h >= -tol_h && x.i_h >= -tol_h && x.s_v >= -tol_v && x.i_v >= -tol_v &&
         x.n_h() <= nh_max + tol_h && x.n_v() <= nv_max + tol_v;
}

/// Membership in the reduced region {x >= 0, N_h <= Lambda_h/mu, I_v <= V}.
inline bool in_region(const ModelParams& p, const StateReduced& x, double rel_tol = kRegionTolerance) {
  const double nh_max = p.lambda_h() / p.mu();
  const double tol_h = rel_tol * nh_max;
  const double tol_v = rel_tol * x.v_total;
  return x.s_h >= -tol_h && x.i_h >= -tol_h && x.i_v >= -tol_v && x.n_h() <= nh_max + tol_h &&
         x.i_v <= x.v_total + tol_v;
}

}  // namespace vbm
