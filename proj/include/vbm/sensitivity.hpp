#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbm/bifurcation.hpp"
#include "vbm/equilibria.hpp"
#include "vbm/error.hpp"
#include "vbm/model.hpp"
#include "vbm/params.hpp"

namespace vbm {

struct SensitivityReport {
  double s_pi = 0.0;
  double s_b = 0.0;
  double dr0_db = 0.0;
  double dr0_dpi = 0.0;
  double dtheta_dpi = 0.0;
  double dtheta_db = 0.0;
  std::optional<double> b_crit;  // empty: R0 > 1 even at full coverage
  std::optional<double> b_1;     // b_crit with pi = 1
  double phi_tilde = 0.0;
};

/// Central-difference step and the relative agreement required of every
/// closed-form derivative.
inline constexpr double kFiniteDifferenceStep = 1e-6;
inline constexpr double kFiniteDifferenceTolerance = 1e-5;

namespace detail {

inline double theta_raw(const ParamValues& v) {
  const double beta = contact_rate(v);
  const double eta = mosquito_death_rate(v);
  const double a0 = v.alpha + v.mu + v.delta;
  return (v.alpha + v.mu) / v.lambda_h - 2.0 * v.pi_bias * v.mu / v.lambda_h - a0 * eta / (beta * v.p1 * v.lambda_v);
}

// Central difference of f over the field `member`, evaluated on raw values
// so the stencil may step outside the validated box.
template <class F>
double central_difference(const ParamValues& v, double ParamValues::*member, F&& f) {
  const double h = kFiniteDifferenceStep * std::max(std::abs(v.*member), 1.0);
  ParamValues lo = v, hi = v;
  lo.*member -= h;
  hi.*member += h;
  return (f(hi) - f(lo)) / (2.0 * h);
}

inline void cross_check(const char* name, double closed, double fd) {
  if (!(std::abs(closed - fd) <= kFiniteDifferenceTolerance * std::abs(closed))) {
    throw NumericalError(std::string(name) + ": closed form " + std::to_string(closed) +
                         " disagrees with finite difference " + std::to_string(fd));
  }
}

inline double phi_tilde_raw(const ParamValues& v) {
  return (v.alpha + v.mu + v.delta) * v.lambda_h / (v.p1 * v.p2 * v.mu * v.lambda_v);
}

// Root of R0(b) = 1, i.e. sqrt(pi) beta(b) = sqrt(phi) eta(b), clamped to 0
// when R0(0) <= 1 and empty when R0(1) > 1.
inline std::optional<double> bednet_threshold(const ParamValues& v) {
  const double phi = phi_tilde_raw(v);
  const double sp = std::sqrt(v.pi_bias), sf = std::sqrt(phi);
  ParamValues at = v;
  at.bednet = 1.0;
  if (r0_raw(at) > 1.0) return std::nullopt;
  at.bednet = 0.0;
  if (r0_raw(at) <= 1.0) return 0.0;
  const double b = (sp * v.beta_max - sf * v.eta_nat) / (sp * (v.beta_max - v.beta_min) + sf * v.eta_bn);
  at.bednet = b;
  if (const double r0 = r0_raw(at); !(std::abs(r0 - 1.0) <= 1e-8)) {
    throw NumericalError("critical bed-net coverage round trip failed: R0 = " + std::to_string(r0));
  }
  return b;
}

}  // namespace detail

inline double dr0_db(const ModelParams& p) {
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  return -2.0 * basic_reproduction_number(p) * ((p.beta_max() - p.beta_min()) / beta + p.eta_bn() / eta);
}

inline double dr0_dpi(const ModelParams& p) { return basic_reproduction_number(p) / p.pi_bias(); }

/// Minimal bed-net usage with R0 <= 1 for the given pi, and for pi = 1.
struct BednetThresholds {
  std::optional<double> b_crit;
  std::optional<double> b_1;
};

inline BednetThresholds critical_bednet_coverage(const ModelParams& p) {
  if (!(p.p1() * p.p2() > 0)) throw ValidationError("critical bed-net coverage requires p1 p2 > 0");
  ParamValues one = p.values();
  one.pi_bias = 1.0;
  return {detail::bednet_threshold(p.values()), detail::bednet_threshold(one)};
}

/// Derivatives and normalised sensitivity indices of R0 with respect to b
/// and pi, derivatives of theta, and the bed-net thresholds. Every closed-form
/// derivative is checked against a central difference.
inline SensitivityReport sensitivity_indices(const ModelParams& p) {
  if (!(contact_rate(p) > 0)) throw ValidationError("sensitivity requires beta(b) > 0");
  const double r0 = basic_reproduction_number(p);
  if (!(r0 > 0)) throw ValidationError("sensitivity requires R0 > 0 (p1 p2 > 0)");
  const ParamValues& v = p.values();

  SensitivityReport s;
  s.dr0_db = dr0_db(p);
  s.dr0_dpi = dr0_dpi(p);
  s.dtheta_dpi = dtheta_dpi(p);
  s.dtheta_db = dtheta_db(p);
  s.s_pi = 1.0;  // R0 is linear in pi
  s.s_b = -2.0 * p.bednet() * ((p.beta_max() - p.beta_min()) / contact_rate(p) + p.eta_bn() / mosquito_death_rate(p));
  s.phi_tilde = detail::phi_tilde_raw(v);

  detail::cross_check("dR0/db", s.dr0_db, detail::central_difference(v, &ParamValues::bednet, detail::r0_raw));
  detail::cross_check("dR0/dpi", s.dr0_dpi, detail::central_difference(v, &ParamValues::pi_bias, detail::r0_raw));
  detail::cross_check("dTheta/db", s.dtheta_db,
                      detail::central_difference(v, &ParamValues::bednet, detail::theta_raw));
  detail::cross_check("dTheta/dpi", s.dtheta_dpi,
                      detail::central_difference(v, &ParamValues::pi_bias, detail::theta_raw));

  const auto t = critical_bednet_coverage(p);
  s.b_crit = t.b_crit;
  s.b_1 = t.b_1;
  return s;
}

enum class SurfaceQuantity { r0, theta };

inline const char* to_string(SurfaceQuantity q) noexcept { return q == SurfaceQuantity::r0 ? "r0" : "theta"; }

struct Surface {
  SurfaceQuantity quantity = SurfaceQuantity::r0;
  std::vector<double> pi_grid;
  std::vector<double> b_grid;
  std::vector<std::vector<double>> values;  // values[i][j] at (pi_grid[i], b_grid[j])
};

/// n evenly spaced points on [lo, hi], endpoints exact.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

/// Evaluates R0 or theta on a (pi, b) grid. Theta is undefined where
/// beta(b) = 0 and is reported as NaN there.
inline Surface grid_surface(const ModelParams& p, std::span<const double> pi_grid, std::span<const double> b_grid,
                            SurfaceQuantity q) {
  for (double pi : pi_grid) {
    if (!(pi >= 1)) throw ValidationError("surface pi grid values must satisfy pi >= 1");
  }
  for (double b : b_grid) {
    if (!(b >= 0 && b <= 1)) throw ValidationError("surface b grid values must lie in [0, 1]");
  }
  Surface s;
  s.quantity = q;
  s.pi_grid.assign(pi_grid.begin(), pi_grid.end());
  s.b_grid.assign(b_grid.begin(), b_grid.end());
  for (double pi : pi_grid) {
    auto& row = s.values.emplace_back();
    for (double b : b_grid) {
      ParamValues v = p.values();
      v.pi_bias = pi;
      v.bednet = b;
      if (q == SurfaceQuantity::r0) {
        row.push_back(detail::r0_raw(v));
      } else {
        row.push_back(detail::contact_rate(v) > 0 && v.p1 > 0 ? detail::theta_raw(v)
                                                       : std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  return s;
}

}  // namespace vbm
