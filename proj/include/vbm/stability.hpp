#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vbm/error.hpp"
#include "vbm/model.hpp"

namespace vbm {

using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;

enum class Classification { asymptotically_stable, unstable, nonhyperbolic };

inline const char* to_string(Classification c) noexcept {
  switch (c) {
    case Classification::asymptotically_stable: return "asymptotically_stable";
    case Classification::unstable: return "unstable";
    case Classification::nonhyperbolic: return "nonhyperbolic";
  }
  return "unknown";
}

/// Max real part below this magnitude is reported as nonhyperbolic.
inline constexpr double kHyperbolicityTolerance = 1e-9;

/// Residual above which classify() rejects its input as a non-equilibrium.
inline constexpr double kEquilibriumResidualTolerance = 1e-8;

struct StabilityVerdict {
  std::vector<double> eigen_real_parts;
  std::vector<double> eigen_imag_parts;
  Classification classification = Classification::nonhyperbolic;
  double margin = 0.0;  // max real part

  bool stable() const noexcept { return classification == Classification::asymptotically_stable; }
};

namespace detail {

// Partial derivatives of the forces of infection with respect to the
// compartments they depend on.
struct ForceDerivatives {
  ForceOfInfection force;
  double dlh_dsh, dlh_dih, dlh_div;
  double dlv_dsh, dlv_dih;
};

inline ForceDerivatives force_derivatives(const ModelParams& p, double s_h, double i_h, double i_v) {
  const double pi = p.pi_bias();
  const double d = pi * i_h + s_h;
  if (d == 0.0) throw ValidationError("Jacobian undefined: pi*i_h + s_h = 0");
  const double beta = contact_rate(p);
  const double d2 = d * d;
  ForceDerivatives out{};
  out.force = {p.p1() * beta * i_v / d, pi * p.p2() * beta * i_h / d};
  out.dlh_dsh = -p.p1() * beta * i_v / d2;
  out.dlh_dih = -p.p1() * pi * beta * i_v / d2;
  out.dlh_div = p.p1() * beta / d;
  out.dlv_dsh = -pi * p.p2() * beta * i_h / d2;
  out.dlv_dih = pi * p.p2() * beta * s_h / d2;
  return out;
}

}  // namespace detail

/// Jacobian of the four-compartment system, ordered (S_h, I_h, S_v, I_v).
inline Matrix4 jacobian_full(const ModelParams& p, const StateFull& x) {
  const auto d = detail::force_derivatives(p, x.s_h, x.i_h, x.i_v);
  const double eta = mosquito_death_rate(p);
  const double lh = d.force.lambda_h, lv = d.force.lambda_v;
  Matrix4 j;
  j << -d.dlh_dsh * x.s_h - lh - p.mu(), -d.dlh_dih * x.s_h + p.delta(), 0.0, -d.dlh_div * x.s_h,
      d.dlh_dsh * x.s_h + lh, d.dlh_dih * x.s_h - p.alpha0(), 0.0, d.dlh_div * x.s_h,
      -d.dlv_dsh * x.s_v, -d.dlv_dih * x.s_v, -lv - eta, 0.0,
      d.dlv_dsh * x.s_v, d.dlv_dih * x.s_v, lv, -eta;
  return j;
}

/// Jacobian of the reduced system, ordered (S_h, I_h, I_v).
inline Matrix3 jacobian_reduced(const ModelParams& p, const StateReduced& x) {
  const auto d = detail::force_derivatives(p, x.s_h, x.i_h, x.i_v);
  const double eta = mosquito_death_rate(p);
  const double lh = d.force.lambda_h, lv = d.force.lambda_v;
  const double sv = x.v_total - x.i_v;
  Matrix3 j;
  j << -d.dlh_dsh * x.s_h - lh - p.mu(), -d.dlh_dih * x.s_h + p.delta(), -d.dlh_div * x.s_h,
      d.dlh_dsh * x.s_h + lh, d.dlh_dih * x.s_h - p.alpha0(), d.dlh_div * x.s_h,
      d.dlv_dsh * sv, d.dlv_dih * sv, -lv - eta;
  return j;
}

template <class Derived>
StabilityVerdict verdict_from_matrix(const Eigen::MatrixBase<Derived>& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m.derived().template cast<double>().eval(), false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  StabilityVerdict v;
  const auto& ev = solver.eigenvalues();
  v.margin = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    v.eigen_real_parts.push_back(ev[i].real());
    v.eigen_imag_parts.push_back(ev[i].imag());
    v.margin = std::max(v.margin, ev[i].real());
  }
  if (std::abs(v.margin) < kHyperbolicityTolerance) {
    v.classification = Classification::nonhyperbolic;
  } else {
    v.classification = v.margin < 0 ? Classification::asymptotically_stable : Classification::unstable;
  }
  return v;
}

/// Local stability of an equilibrium of the full or the reduced system.
/// Throws ValidationError when `x` is not an equilibrium.
inline StabilityVerdict classify(const ModelParams& p, const StateFull& x, SystemKind which) {
  if (which == SystemKind::full) {
    if (const double r = relative_residual(p, x); r > kEquilibriumResidualTolerance) {
      throw ValidationError("classify: state is not an equilibrium (relative residual " + std::to_string(r) + ")");
    }
    return verdict_from_matrix(jacobian_full(p, x));
  }
  const StateReduced y = project(p, x);
  if (const double r = relative_residual(p, y); r > kEquilibriumResidualTolerance) {
    throw ValidationError("classify: state is not an equilibrium of the reduced system (relative residual " +
                          std::to_string(r) + ")");
  }
  return verdict_from_matrix(jacobian_reduced(p, y));
}

/// Second additive compound of a 3x3 matrix.
inline Matrix3 second_additive_compound(const Matrix3& m) {
  Matrix3 c;
  c << m(0, 0) + m(1, 1), m(1, 2), -m(0, 2),
      m(2, 1), m(0, 0) + m(2, 2), m(0, 1),
      -m(2, 0), m(1, 0), m(1, 1) + m(2, 2);
  return c;
}

/// Operator norm induced by the L1 vector norm: max column absolute sum.
inline double l1_norm(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

/// Lozinskii measure induced by the L1 vector norm:
/// max over columns k of a_kk + sum_{j != k} |a_jk|.
inline double l1_measure(const Eigen::MatrixXd& a) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    double s = a(k, k);
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
      if (j != k) s += std::abs(a(j, k));
    }
    best = std::max(best, s);
  }
  return best;
}

struct LozinskiiTerms {
  double g1 = 0.0;
  double g2 = 0.0;
  double ih_growth = 0.0;  // dI_h/dt / I_h

  double bound() const noexcept { return std::max(g1, g2); }
};

namespace detail {

inline void require_interior(const StateReduced& x) {
  if (!(x.s_h > 0 && x.i_h > 0 && x.i_v > 0 && x.i_v < x.v_total)) {
    throw ValidationError("Lozinskii terms require an interior state (all components positive, i_v < V)");
  }
}

}  // namespace detail

/// Closed forms of the two bounds whose maximum dominates the Lozinskii
/// measure of B = P_f P^-1 + P J^[2] P^-1, P = diag(1, I_h/I_v, I_h/I_v),
/// under the norm |(x, y, z)| = max(|x|, |y| + |z|).
inline LozinskiiTerms lozinskii_terms(const ModelParams& p, const StateReduced& x) {
  detail::require_interior(x);
  const double pi = p.pi_bias();
  const double beta = contact_rate(p);
  const double d = pi * x.i_h + x.s_h;
  const auto f = forces_of_infection(p, x);
  const double growth = rhs_reduced(p, x)[1] / x.i_h;
  LozinskiiTerms t;
  t.ih_growth = growth;
  t.g1 = growth - p.mu() - pi * p.p1() * beta * x.i_v * (x.s_h + x.i_h) / (d * d);
  t.g2 = growth - p.mu() - f.lambda_v -
         pi * (pi - 1.0) * p.p2() * beta * x.i_h * x.i_h * (x.v_total - x.i_v) / (x.i_v * d * d);
  return t;
}

/// The matrix B assembled literally from the reduced Jacobian.
inline Matrix3 lozinskii_block_matrix(const ModelParams& p, const StateReduced& x) {
  detail::require_interior(x);
  const Matrix3 j2 = second_additive_compound(jacobian_reduced(p, x));
  const auto r = rhs_reduced(p, x);
  const double ratio_rate = r[1] / x.i_h - r[2] / x.i_v;
  const double w = x.i_h / x.i_v;
  const Eigen::Vector3d pd(1.0, w, w);
  Matrix3 b = pd.asDiagonal() * j2 * pd.cwiseInverse().asDiagonal();
  b(1, 1) += ratio_rate;
  b(2, 2) += ratio_rate;
  return b;
}

/// g1 = sigma_1(B11) + |B12|, g2 = sigma_1(B22) + |B21| evaluated directly
/// from the blocks of B with the L1 norm and measure.
inline LozinskiiTerms block_bounds(const Matrix3& b) {
  LozinskiiTerms t;
  t.g1 = b(0, 0) + l1_norm(b.block<1, 2>(0, 1));
  t.g2 = l1_measure(b.block<2, 2>(1, 1)) + l1_norm(b.block<2, 1>(1, 0));
  t.ih_growth = std::numeric_limits<double>::quiet_NaN();
  return t;
}

}  // namespace vbm
