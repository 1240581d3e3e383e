#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace screenequil {

enum class Firm { A, B };

inline constexpr Firm rival(Firm f) { return f == Firm::A ? Firm::B : Firm::A; }
inline const char* to_string(Firm f) { return f == Firm::A ? "A" : "B"; }

// Market primitives. The type law seen by solvers is G scaled by sigma.
class Environment {
 public:
  Environment(double v0, Density type_dist, Density shock_dist, double sigma = 1.0, QuadratureOptions quad = {})
      : v0_(v0),
        type_dist_(std::move(type_dist)),
        shock_dist_(std::move(shock_dist)),
        sigma_(sigma),
        quad_(quad),
        type_law_(type_dist_) {
    if (!std::isfinite(v0_)) throw InvalidArgument("v0 must be finite");
    if (!std::isfinite(sigma_) || !(sigma_ > 0)) throw InvalidArgument("sigma must be positive");
    const Interval s = type_dist_.support();
    if (!s.bounded() || !(s.lo < s.hi)) throw InvalidArgument("type distribution needs bounded support with lo < hi");
    if (std::abs(shock_dist_.mean()) > 1e-6) throw InvalidArgument("shock distribution must have mean zero");
    type_law_ = type_dist_.affine(sigma_, 0.0);
    for (double x : linspace(type_law_.support().lo, type_law_.support().hi, 1001)) {
      const double p = type_law_.pdf(x);
      max_inv_g_ = std::max(max_inv_g_, p > 0 ? 1.0 / p : kInf);
    }
  }

  double v0() const { return v0_; }
  double sigma() const { return sigma_; }
  const Density& type_dist() const { return type_dist_; }
  const Density& shock_dist() const { return shock_dist_; }
  const QuadratureOptions& quadrature() const { return quad_; }
  // G_sigma, the law of sigma * gamma.
  const Density& type_law() const { return type_law_; }
  double gamma_lo() const { return type_law_.support().lo; }
  double gamma_hi() const { return type_law_.support().hi; }
  // max over the scaled support of 1/g_sigma.
  double max_inverse_type_density() const { return max_inv_g_; }

  Environment with_v0(double v0) const { return Environment(v0, type_dist_, shock_dist_, sigma_, quad_); }

 private:
  double v0_;
  Density type_dist_, shock_dist_;
  double sigma_;
  QuadratureOptions quad_;
  Density type_law_;
  double max_inv_g_ = 0.0;
};

// Environment with the timing scale multiplied by sigma.
inline Environment scale(const Environment& env, double sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0)) throw InvalidArgument("scale needs sigma > 0");
  return Environment(env.v0(), env.type_dist(), env.shock_dist(), env.sigma() * sigma, env.quadrature());
}

inline double valuation(const Environment& env, Firm firm, double theta) {
  return firm == Firm::A ? env.v0() - theta : env.v0() + theta;
}

// P(v_firm(theta) >= p | gamma).
inline double monopoly_demand(const Environment& env, Firm firm, double p, double gamma) {
  if (p == kInf) return 0.0;
  const Density& f = env.shock_dist();
  return firm == Firm::B ? f.ccdf(p - env.v0() - gamma) : f.cdf(env.v0() - p - gamma);
}

// Interim demand for firm's option when the rival option has strike p_other (+inf for none).
inline double duopoly_demand(const Environment& env, Firm firm, double p_own, double p_other, double gamma) {
  if (p_own == kInf) return 0.0;
  if (p_other == kInf) return monopoly_demand(env, firm, p_own, gamma);
  const Density& f = env.shock_dist();
  if (firm == Firm::B) return f.ccdf(std::max(0.5 * (p_own - p_other), p_own - env.v0()) - gamma);
  return f.cdf(std::min(0.5 * (p_other - p_own), env.v0() - p_own) - gamma);
}

// Second-period choice given strikes; ties go to B. Empty for no purchase.
inline std::optional<Firm> consumer_choice(const Environment& env, double theta, double p_a, double p_b) {
  const double na = p_a == kInf ? -kInf : env.v0() - theta - p_a;
  const double nb = p_b == kInf ? -kInf : env.v0() + theta - p_b;
  if (nb >= na && nb >= 0) return Firm::B;
  if (na > nb && na >= 0) return Firm::A;
  return std::nullopt;
}

namespace detail {

// Integral over theta of fn(theta) f(theta - gamma), with the given kinks as forced knots.
template <class Fn>
double integrate_theta(const Environment& env, double gamma, Fn&& fn, std::initializer_list<double> kinks) {
  const Density& f = env.shock_dist();
  const Interval r = f.integration_range();
  std::vector<double> knots{gamma + r.lo, gamma + r.hi};
  for (double k : kinks)
    if (std::isfinite(k) && k > gamma + r.lo && k < gamma + r.hi) knots.push_back(k);
  return integrate([&](double t) { return fn(t) * f.pdf(t - gamma); }, knots, env.quadrature());
}

inline double price_kink(double p_a, double p_b) {
  return (p_a == kInf || p_b == kInf) ? kInf : 0.5 * (p_b - p_a);
}

}  // namespace detail

// E[max{0, v_A - p_A, v_B - p_B} | gamma].
inline double expected_net_max(const Environment& env, double gamma, double p_a, double p_b) {
  if (std::isnan(p_a) || std::isnan(p_b)) throw InvalidArgument("expected_net_max needs non-NaN prices");
  const double v0 = env.v0();
  const bool has_a = p_a != kInf, has_b = p_b != kInf;
  if (!has_a && !has_b) return 0.0;
  auto net = [&](double t) {
    double m = 0.0;
    if (has_a) m = std::max(m, v0 - t - p_a);
    if (has_b) m = std::max(m, v0 + t - p_b);
    return m;
  };
  return detail::integrate_theta(env, gamma, net, {p_b - v0, v0 - p_a, detail::price_kink(p_a, p_b)});
}

// E[value of the product consumed | gamma] under the consumer's choice rule.
inline double expected_allocation_surplus(const Environment& env, double gamma, double p_a, double p_b) {
  const double v0 = env.v0();
  auto value = [&](double t) {
    auto c = consumer_choice(env, t, p_a, p_b);
    if (!c) return 0.0;
    return valuation(env, *c, t);
  };
  return detail::integrate_theta(env, gamma, value, {p_b - v0, v0 - p_a, detail::price_kink(p_a, p_b)});
}

}  // namespace screenequil
