#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "vbm/error.hpp"

namespace vbm {

/// Raw parameter record. Units are days throughout.
struct ParamValues {
  double lambda_h = 0.0;  // human immigration rate (individuals/day)
  double lambda_v = 0.0;  // mosquito immigration rate (individuals/day)
  double mu = 0.0;        // human natural mortality (1/day)
  double eta_nat = 0.0;   // mosquito natural mortality (1/day)
  double eta_bn = 0.0;    // maximum bed-net induced mosquito mortality (1/day)
  double alpha = 0.0;     // disease-induced human mortality (1/day)
  double p1 = 0.0;        // mosquito -> human transmission probability
  double p2 = 0.0;        // human -> mosquito transmission probability
  double beta_max = 0.0;  // maximum contact rate (1/day)
  double beta_min = 0.0;  // minimum contact rate (1/day)
  double delta = 0.0;     // human recovery rate (1/day)
  double pi_bias = 1.0;   // vector-bias ratio p/q
  double bednet = 0.0;    // bed-net usage proportion b
};

using ParamField = std::pair<std::string_view, double ParamValues::*>;

/// Field names as they appear in configuration files and `--set` overrides.
inline constexpr std::array<ParamField, 13> kParamFields{{
    {"lambda_h", &ParamValues::lambda_h},
    {"lambda_v", &ParamValues::lambda_v},
    {"mu", &ParamValues::mu},
    {"eta_nat", &ParamValues::eta_nat},
    {"eta_bn", &ParamValues::eta_bn},
    {"alpha", &ParamValues::alpha},
    {"p1", &ParamValues::p1},
    {"p2", &ParamValues::p2},
    {"beta_max", &ParamValues::beta_max},
    {"beta_min", &ParamValues::beta_min},
    {"delta", &ParamValues::delta},
    {"pi_bias", &ParamValues::pi_bias},
    {"bednet", &ParamValues::bednet},
}};

namespace detail {

inline void require(bool ok, std::string_view field, std::string_view constraint, double got) {
  if (!ok) {
    std::ostringstream os;
    os << "invalid parameter " << field << ": must satisfy " << constraint << " (got " << got << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace detail

/// Validated, immutable parameter set. Every operation in the library takes
/// a ModelParams and may assume its invariants hold.
class ModelParams {
 public:
  explicit ModelParams(const ParamValues& v) : v_(v) { validate(v_); }

  /// Baseline values of the reference parameter table. Bed-net usage and the
  /// vector-bias ratio vary by experiment and are supplied separately.
  static ModelParams table1(double bednet = 0.4, double pi_bias = 2.0) {
    ParamValues v;
    v.lambda_h = 1e3 / (70.0 * 365.0);
    v.lambda_v = 1e4 / 21.0;
    v.mu = 1.0 / (70.0 * 365.0);
    v.eta_nat = 1.0 / 21.0;
    v.eta_bn = 1.0 / 21.0;
    v.alpha = 1e-3;
    v.p1 = 1.0;
    v.p2 = 1.0;
    v.beta_max = 0.1;
    v.beta_min = 0.0;
    v.delta = 0.25;
    v.pi_bias = pi_bias;
    v.bednet = bednet;
    return ModelParams(v);
  }

  static void validate(const ParamValues& v) {
    using detail::require;
    for (const auto& [name, member] : kParamFields) {
      require(std::isfinite(v.*member), name, "finite value", v.*member);
    }
    require(v.lambda_h > 0, "lambda_h", "lambda_h > 0", v.lambda_h);
    require(v.lambda_v > 0, "lambda_v", "lambda_v > 0", v.lambda_v);
    require(v.mu > 0, "mu", "mu > 0", v.mu);
    require(v.eta_nat > 0, "eta_nat", "eta_nat > 0", v.eta_nat);
    require(v.eta_bn >= 0, "eta_bn", "eta_bn >= 0", v.eta_bn);
    require(v.alpha >= 0, "alpha", "alpha >= 0", v.alpha);
    require(v.p1 >= 0 && v.p1 <= 1, "p1", "0 <= p1 <= 1", v.p1);
    require(v.p2 >= 0 && v.p2 <= 1, "p2", "0 <= p2 <= 1", v.p2);
    require(v.beta_max > 0, "beta_max", "beta_max > 0", v.beta_max);
    require(v.beta_min >= 0, "beta_min", "beta_min >= 0", v.beta_min);
    require(v.beta_min <= v.beta_max, "beta_min", "beta_min <= beta_max", v.beta_min);
    require(v.delta > 0, "delta", "delta > 0", v.delta);
    require(v.pi_bias >= 1, "pi_bias", "pi >= 1", v.pi_bias);
    require(v.bednet >= 0 && v.bednet <= 1, "bednet", "0 <= b <= 1", v.bednet);
  }

  const ParamValues& values() const noexcept { return v_; }

  /// Returns a validated copy after applying `edit` to the raw values.
  template <class Edit>
  ModelParams modified(Edit&& edit) const {
    ParamValues copy = v_;
    std::forward<Edit>(edit)(copy);
    return ModelParams(copy);
  }

  ModelParams with_p2(double p2) const {
    return modified([p2](ParamValues& v) { v.p2 = p2; });
  }
  ModelParams with_bednet(double b) const {
    return modified([b](ParamValues& v) { v.bednet = b; });
  }
  ModelParams with_pi(double pi) const {
    return modified([pi](ParamValues& v) { v.pi_bias = pi; });
  }

  double lambda_h() const noexcept { return v_.lambda_h; }
  double lambda_v() const noexcept { return v_.lambda_v; }
  double mu() const noexcept { return v_.mu; }
  double eta_nat() const noexcept { return v_.eta_nat; }
  double eta_bn() const noexcept { return v_.eta_bn; }
  double alpha() const noexcept { return v_.alpha; }
  double p1() const noexcept { return v_.p1; }
  double p2() const noexcept { return v_.p2; }
  double beta_max() const noexcept { return v_.beta_max; }
  double beta_min() const noexcept { return v_.beta_min; }
  double delta() const noexcept { return v_.delta; }
  double pi_bias() const noexcept { return v_.pi_bias; }
  double bednet() const noexcept { return v_.bednet; }

  /// alpha + mu + delta: total exit rate from the infectious human class.
  double alpha0() const noexcept { return v_.alpha + v_.mu + v_.delta; }

 private:
  ParamValues v_;
};

}  // namespace vbm
