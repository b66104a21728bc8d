#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "vbm/equilibria.hpp"
#include "vbm/error.hpp"
#include "vbm/model.hpp"
#include "vbm/params.hpp"
#include "vbm/stability.hpp"

namespace vbm {

using Vector4 = Eigen::Vector4d;

enum class BifurcationDirection { backward, forward, degenerate };

inline const char* to_string(BifurcationDirection d) noexcept {
  switch (d) {
    case BifurcationDirection::backward: return "backward";
    case BifurcationDirection::forward: return "forward";
    case BifurcationDirection::degenerate: return "degenerate";
  }
  return "unknown";
}

struct CriticalEigenvectors {
  Vector4 left;   // v, with v . w = 1
  Vector4 right;  // w
};

struct CentreManifoldCoefficients {
  double coeff_a = 0.0;     // from the explicit second-derivative sum
  double coeff_a_closed = 0.0;  // 2 p1 beta eta / (eta + alpha0) * theta
  double coeff_b_cm = 0.0;
};

struct BifurcationReport {
  double p2_crit = 0.0;
  double theta = 0.0;
  double coeff_a = 0.0;
  double coeff_b_cm = 0.0;
  BifurcationDirection direction = BifurcationDirection::degenerate;
  CriticalEigenvectors eigenvectors;
};

namespace detail {

inline void require_transmission(const ModelParams& p) {
  if (!(contact_rate(p) > 0)) throw ValidationError("beta(b) = 0: no transmission, criticality does not exist");
  if (!(p.p1() > 0)) throw ValidationError("p1 = 0: no transmission, criticality does not exist");
}

inline void require_critical(const ModelParams& p, double tol = 1e-9) {
  const double r0 = basic_reproduction_number(p);
  if (!(std::abs(r0 - 1.0) <= tol)) {
    throw ValidationError("parameters are not at criticality (R0 = " + std::to_string(r0) + ")");
  }
}

// The three terms of theta; their magnitudes set the scale for sign decisions.
struct ThetaTerms {
  double mortality, bias, vector;
};

inline ThetaTerms theta_terms(const ModelParams& p) {
  return {(p.alpha() + p.mu()) / p.lambda_h(), -2.0 * p.pi_bias() * p.mu() / p.lambda_h(),
          -p.alpha0() * mosquito_death_rate(p) / (contact_rate(p) * p.p1() * p.lambda_v())};
}

}  // namespace detail

/// The p2 at which R0 = 1, all else fixed. May exceed 1.
inline double critical_p2(const ModelParams& p) {
  detail::require_transmission(p);
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  const double p2c =
      p.lambda_h() * eta * eta * p.alpha0() / (p.pi_bias() * p.p1() * p.mu() * p.lambda_v() * beta * beta);
  ParamValues v = p.values();
  v.p2 = p2c;
  if (const double r0 = detail::r0_raw(v); !(std::abs(r0 - 1.0) <= 1e-12)) {
    throw NumericalError("critical p2 round trip failed: R0 = " + std::to_string(r0));
  }
  return p2c;
}

/// Sign surrogate for the centre-manifold coefficient a; positive means a
/// backward bifurcation at R0 = 1.
inline double theta(const ModelParams& p) {
  detail::require_transmission(p);
  const auto t = detail::theta_terms(p);
  return t.mortality + t.bias + t.vector;
}

inline double dtheta_dpi(const ModelParams& p) { return -2.0 * p.mu() / p.lambda_h(); }

inline double dtheta_db(const ModelParams& p) {
  detail::require_transmission(p);
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  return -p.alpha0() / (p.p1() * p.lambda_v()) *
         (p.eta_bn() / beta + eta * (p.beta_max() - p.beta_min()) / (beta * beta));
}

/// Left and right null vectors of J(E0) at criticality, normalised so that
/// v . w = 1.
inline CriticalEigenvectors eigenvectors_at_criticality(const ModelParams& p) {
  detail::require_transmission(p);
  detail::require_critical(p);
  const double a0 = p.alpha0();
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  CriticalEigenvectors e;
  e.left << 0.0, eta * a0 / (p.p1() * beta * (eta + a0)), 0.0, a0 / (eta + a0);
  e.right << -p.p1() * beta * (p.alpha() + p.mu()) / (p.mu() * a0), p.p1() * beta / a0, -1.0, 1.0;
  e.right /= e.left.dot(e.right);
  return e;
}

/// Coefficients a and b of the centre-manifold normal form at (E0, p2_crit)
/// with p2 as the bifurcation parameter. `a` is evaluated twice, from the
/// second-derivative sum and from theta; disagreement throws.
inline CentreManifoldCoefficients centre_manifold_coefficients(const ModelParams& p) {
  const auto [v, w] = eigenvectors_at_criticality(p);
  const double pi = p.pi_bias();
  const double beta = contact_rate(p);
  const double eta = mosquito_death_rate(p);
  const StateFull e0 = disease_free_equilibrium(p);
  const double sh0 = e0.s_h, sv0 = e0.s_v;
  const double p2 = p.p2();

  // Nonzero second derivatives of f2 and f4 at (E0, p2_crit).
  const double f2_ih_iv = -pi * p.p1() * beta / sh0;
  const double f4_sh_ih = -pi * p2 * beta * sv0 / (sh0 * sh0);
  const double f4_ih_sv = pi * p2 * beta / sh0;
  const double f4_ih_ih = -2.0 * pi * pi * p2 * beta * sv0 / (sh0 * sh0);

  const std::array<double, 4> terms{
      2.0 * v[1] * w[1] * w[3] * f2_ih_iv,
      2.0 * v[3] * w[0] * w[1] * f4_sh_ih,
      2.0 * v[3] * w[1] * w[2] * f4_ih_sv,
      v[3] * w[1] * w[1] * f4_ih_ih,
  };
  CentreManifoldCoefficients c;
  double scale = 0.0;
  for (double t : terms) {
    c.coeff_a += t;
    scale += std::abs(t);
  }
  c.coeff_a_closed = 2.0 * p.p1() * beta * eta / (eta + p.alpha0()) * theta(p);
  if (std::abs(c.coeff_a - c.coeff_a_closed) > 1e-10 * scale) {
    throw NumericalError("centre-manifold coefficient a: derivative sum and closed form disagree");
  }

  // d^2 f_k / dx_i dp2 at E0: only the I_h column of the vector equations.
  Eigen::Matrix4d mixed = Eigen::Matrix4d::Zero();
  mixed(2, 1) = -pi * beta * sv0 / sh0;
  mixed(3, 1) = pi * beta * sv0 / sh0;
  c.coeff_b_cm = v.dot(mixed * w);
  if (!(c.coeff_b_cm > 0)) throw NumericalError("centre-manifold coefficient b is not positive");
  return c;
}

/// Full centre-manifold analysis. Throws ValidationError when R0 = 1 cannot
/// be reached with p2 <= 1.
inline BifurcationReport bifurcation_report(const ModelParams& p) {
  BifurcationReport r;
  r.p2_crit = critical_p2(p);
  if (r.p2_crit > 1.0) {
    throw ValidationError("critical p2 = " + std::to_string(r.p2_crit) + " exceeds 1; R0 = 1 is unreachable");
  }
  const ModelParams crit = p.with_p2(r.p2_crit);
  r.theta = theta(p);
  const auto c = centre_manifold_coefficients(crit);
  r.coeff_a = c.coeff_a;
  r.coeff_b_cm = c.coeff_b_cm;
  r.eigenvectors = eigenvectors_at_criticality(crit);

  const auto t = detail::theta_terms(p);
  const double scale = std::abs(t.mortality) + std::abs(t.bias) + std::abs(t.vector);
  if (std::abs(r.theta) <= 1e-12 * scale) {
    r.direction = BifurcationDirection::degenerate;
  } else if (r.coeff_a > 0 && r.coeff_b_cm > 0) {
    r.direction = BifurcationDirection::backward;
  } else {
    r.direction = BifurcationDirection::forward;
  }
  return r;
}

struct BranchRoot {
  double i_v = 0.0;
  bool stable = false;
};

struct BranchPoint {
  double parameter = 0.0;  // the swept value (p2 or bed-net usage)
  double r0 = 0.0;
  std::vector<BranchRoot> roots;  // ordered by increasing i_v
};

struct SaddleNode {
  double p2 = 0.0;
  double r0 = 0.0;
};

struct BranchSweep {
  std::vector<BranchPoint> points;
  std::optional<SaddleNode> saddle_node;
};

namespace detail {

inline BranchPoint branch_point(const ModelParams& p, double parameter) {
  const auto set = endemic_equilibria(p);
  BranchPoint bp;
  bp.parameter = parameter;
  bp.r0 = set.r0;
  for (const auto& e : set.endemic) bp.roots.push_back({e.state.i_v, e.locally_stable()});
  return bp;
}

}  // namespace detail

/// Endemic branch data over a grid of p2 values. The saddle-node (smallest R0
/// carrying an endemic equilibrium) is refined by bisection when it lies
/// strictly below R0 = 1 inside the grid.
inline BranchSweep sweep_branch(const ModelParams& p, std::span<const double> p2_grid) {
  BranchSweep out;
  std::vector<double> grid(p2_grid.begin(), p2_grid.end());
  std::sort(grid.begin(), grid.end());
  for (double p2 : grid) {
    if (!(p2 > 0)) throw ValidationError("sweep grid values must be positive");
    out.points.push_back(detail::branch_point(p.with_p2(p2), p2));
  }

  ParamValues v = p.values();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    v.p2 = grid[k - 1];
    const bool before = detail::has_positive_root(v);
    v.p2 = grid[k];
    const bool after = detail::has_positive_root(v);
    if (before || !after) continue;
    double lo = grid[k - 1], hi = grid[k];
    while (hi - lo > 1e-14 * hi) {
      const double mid = 0.5 * (lo + hi);
      v.p2 = mid;
      (detail::has_positive_root(v) ? hi : lo) = mid;
    }
    v.p2 = hi;
    const double r0 = detail::r0_raw(v);
    if (r0 < 1.0 - 1e-9) out.saddle_node = SaddleNode{hi, r0};
    break;
  }
  return out;
}

/// Endemic branch data over a grid of bed-net usage values.
inline std::vector<BranchPoint> sweep_bednet(const ModelParams& p, std::span<const double> b_grid) {
  std::vector<BranchPoint> out;
  for (double b : b_grid) out.push_back(detail::branch_point(p.with_bednet(b), b));
  return out;
}

}  // namespace vbm
