#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vbm/equilibria.hpp"
#include "vbm/error.hpp"
#include "vbm/model.hpp"
#include "vbm/simulate.hpp"
#include "vbm/stability.hpp"

namespace vbm {

struct GSample {
  double t = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double ih_growth = 0.0;
};

struct TrajectoryCertificate {
  StateReduced initial;
  StateReduced final_state;
  double q_bar2 = 0.0;  // (1/T) * integral of max(g1, g2) over [0, T]
  double max_sigma_violation = 0.0;
  std::vector<GSample> series;  // filled only when requested
};

struct LozinskiiCertificate {
  double q_bar2_estimate = 0.0;  // supremum over initial conditions
  double pointwise_max_sigma_violation = 0.0;
  double horizon = 0.0;
  std::size_t samples = 0;  // per trajectory, including t = 0
  bool passed = false;
  std::vector<TrajectoryCertificate> trajectories;  // in input order
};

/// Scaled tolerance on max(g1, g2) - (I_h'/I_h - mu).
inline constexpr double kSigmaBoundTolerance = 1e-9;

struct CertifyOptions {
  IntegratorOptions integrator;
  bool keep_series = false;
};

/// Time-averaged Lozinskii bound along trajectories of the reduced system.
/// Requires R0 > 1 and strictly interior initial conditions.
inline LozinskiiCertificate certify_global_stability(const ModelParams& p, std::span<const StateReduced> ics,
                                                     double horizon, double sampling,
                                                     const CertifyOptions& opt = {}) {
  if (!(basic_reproduction_number(p) > 1.0)) throw ValidationError("certification requires R0 > 1");
  if (ics.empty()) throw ValidationError("certification requires at least one initial condition");
  if (!(sampling > 0 && sampling <= horizon)) throw ValidationError("sampling step must lie in (0, horizon]");
  const double nh_max = p.lambda_h() / p.mu();
  for (const auto& x : ics) {
    if (!(x.s_h > 0 && x.i_h > 0 && x.i_v > 0 && x.n_h() < nh_max && x.i_v < x.v_total)) {
      throw ValidationError("initial conditions must lie strictly inside the reduced region");
    }
  }

  LozinskiiCertificate cert;
  cert.horizon = horizon;
  cert.q_bar2_estimate = -std::numeric_limits<double>::infinity();
  SimulationOptions sim;
  sim.integrator = opt.integrator;
  sim.sample_step = sampling;

  for (const auto& ic : ics) {
    const auto traj = integrate(p, ic, horizon, sim);
    TrajectoryCertificate tc;
    tc.initial = ic;
    tc.final_state = traj.final_state();
    double integral = 0.0;
    double prev_t = 0.0, prev_bound = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const auto terms = lozinskii_terms(p, traj.states[k]);
      const double bound = terms.bound();
      const double rhs = terms.ih_growth - p.mu();
      const double violation = (bound - rhs) / (std::abs(terms.ih_growth) + p.mu());
      tc.max_sigma_violation = k == 0 ? violation : std::max(tc.max_sigma_violation, violation);
      if (k > 0) integral += 0.5 * (traj.times[k] - prev_t) * (bound + prev_bound);
      prev_t = traj.times[k];
      prev_bound = bound;
      if (opt.keep_series) tc.series.push_back({traj.times[k], terms.g1, terms.g2, terms.ih_growth});
    }
    tc.q_bar2 = integral / horizon;
    cert.samples = traj.states.size();
    cert.q_bar2_estimate = std::max(cert.q_bar2_estimate, tc.q_bar2);
    cert.pointwise_max_sigma_violation =
        cert.trajectories.empty() ? tc.max_sigma_violation
                                  : std::max(cert.pointwise_max_sigma_violation, tc.max_sigma_violation);
    cert.trajectories.push_back(std::move(tc));
  }
  cert.passed = cert.q_bar2_estimate < 0 && cert.pointwise_max_sigma_violation <= kSigmaBoundTolerance;
  return cert;
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine; the
/// same seed yields the same stream on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Random initial conditions strictly inside the reduced region: N_h and I_v
/// uniform on (1%, 99%) of their bounds, infected fraction uniform on (1%, 99%).
inline std::vector<StateReduced> random_interior_states(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double nh_max = p.lambda_h() / p.mu();
  const double v = vector_population(p);
  auto inner = [&rng] { return 0.01 + 0.98 * unit_uniform(rng); };
  std::vector<StateReduced> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double nh = inner() * nh_max;
    const double frac = inner();
    const double iv = inner() * v;
    out.push_back({nh * (1.0 - frac), nh * frac, iv, v});
  }
  return out;
}

}  // namespace vbm
