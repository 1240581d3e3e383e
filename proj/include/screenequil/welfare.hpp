#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "density.hpp"
#include "equilibria.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace screenequil {

struct SurplusReport {
  Setting setting;
  double consumer_surplus = 0, producer_surplus_a = 0, producer_surplus_b = 0, total_surplus = 0;
  double fee_revenue_a = 0, fee_revenue_b = 0;  // subscription part of producer surplus
  double total_surplus_direct = 0;              // E[value of the product consumed]
};

struct UtilityCurve {
  Setting setting;
  std::vector<double> gamma_grid, values;
};

namespace detail {

inline void check_type(const Environment& env, double gamma) {
  const double lo = env.gamma_lo(), hi = env.gamma_hi(), slack = 1e-12 * (hi - lo);
  if (!(gamma >= lo - slack && gamma <= hi + slack)) throw InvalidArgument("type outside the scaled support");
}

// E[(v_firm - p)+ | gamma].
inline double option_payoff(const Environment& env, Firm firm, double p, double gamma) {
  if (p == kInf) return 0.0;
  if (firm == Firm::B) return option_value(env.shock_dist(), p - env.v0() - gamma, env.quadrature());
  return option_value_lower(env.shock_dist(), env.v0() - gamma - p, env.quadrature());
}

}  // namespace detail

inline double interim_utility(const Environment& env, const SettingSolution& sol, double gamma) {
  detail::check_type(env, gamma);
  const Contract a = sol.contract(Firm::A, gamma), b = sol.contract(Firm::B, gamma);
  switch (sol.setting) {
    case Setting::duopoly:
    case Setting::spot:
    case Setting::multiproduct:
      return expected_net_max(env, gamma, a.strike, b.strike) - a.fee - b.fee;
    case Setting::monopoly_a:
    case Setting::monopoly_b:
    case Setting::exclusive: {
      const Firm f = a.is_null() ? Firm::B : Firm::A;
      const Contract& c = f == Firm::A ? a : b;
      return detail::option_payoff(env, f, c.strike, gamma) - c.fee;
    }
  }
  return 0.0;
}

// Probability that type gamma buys firm's product in period two.
inline double interim_demand(const Environment& env, const SettingSolution& sol, Firm firm, double gamma) {
  const double own = sol.strike(firm, gamma), other = sol.strike(rival(firm), gamma);
  switch (sol.setting) {
    case Setting::duopoly:
    case Setting::spot:
    case Setting::multiproduct: return duopoly_demand(env, firm, own, other, gamma);
    default: return monopoly_demand(env, firm, own, gamma);
  }
}

inline UtilityCurve utility_curve(const Environment& env, const SettingSolution& sol, const std::vector<double>& grid) {
  UtilityCurve u{sol.setting, grid, {}};
  u.values = parallel_map<double>(grid.size(), [&](size_t i) { return interim_utility(env, sol, grid[i]); });
  return u;
}

inline SurplusReport surplus(const Environment& env, const SettingSolution& sol) {
  std::vector<double> knots = sol.gamma_grid;
  if (sol.gamma_dagger) knots.push_back(*sol.gamma_dagger);
  const Density& g = env.type_law();
  QuadratureOptions q = env.quadrature();
  q.rel_tol = std::max(q.rel_tol, 1e-10);
  auto expect = [&](auto&& fn) { return integrate([&](double t) { return fn(t) * g.pdf(t); }, knots, q); };
  SurplusReport r{sol.setting};
  r.consumer_surplus = expect([&](double t) { return interim_utility(env, sol, t); });
  double* ps[2] = {&r.producer_surplus_a, &r.producer_surplus_b};
  double* fees[2] = {&r.fee_revenue_a, &r.fee_revenue_b};
  for (Firm f : {Firm::A, Firm::B}) {
    const int i = f == Firm::A ? 0 : 1;
    *fees[i] = expect([&](double t) { return sol.contract(f, t).fee; });
    const double strikes = expect([&](double t) {
      const double p = sol.strike(f, t);
      return (p == kInf || p == 0.0) ? 0.0 : p * interim_demand(env, sol, f, t);
    });
    *ps[i] = *fees[i] + strikes;
  }
  r.total_surplus = r.consumer_surplus + r.producer_surplus_a + r.producer_surplus_b;
  r.total_surplus_direct = expect(
      [&](double t) { return expected_allocation_surplus(env, t, sol.strike(Firm::A, t), sol.strike(Firm::B, t)); });
  return r;
}

// Early-contracting limits (sigma -> 0), computed under theta ~ F.
struct LimitQuantities {
  double fee_a = 0, fee_b = 0;
  double cs_ne = 0, cs_sp = 0, cs_e = 0;
  double inverse_shock_density = 0;  // 1/f(0)
  bool hypothesis_holds = false;     // v0 > 1/f(0)
};

inline LimitQuantities limit_quantities(const Environment& env) {
  const double v0 = env.v0();
  auto pos = [](double x) { return std::max(x, 0.0); };
  auto va = [&](double t) { return v0 - t; };
  auto vb = [&](double t) { return v0 + t; };
  auto under_f = [&](auto&& fn) { return detail::integrate_theta(env, 0.0, fn, {-v0, 0.0, v0}); };
  LimitQuantities l;
  l.inverse_shock_density = 1.0 / env.shock_dist().pdf(0.0);
  l.hypothesis_holds = v0 > l.inverse_shock_density;
  l.fee_a = under_f([&](double t) { return pos(va(t) - pos(vb(t))); });
  l.fee_b = under_f([&](double t) { return pos(vb(t) - pos(va(t))); });
  l.cs_ne = under_f([&](double t) { return std::min(pos(va(t)), pos(vb(t))); });
  l.cs_sp = under_f([&](double t) { return std::max(pos(va(t)), pos(vb(t))); }) - l.inverse_shock_density;
  l.cs_e = under_f([&](double t) { return pos(vb(t)); });
  return l;
}

struct CurveShape {
  double min_second_difference = 0;  // convexity: >= 0 up to tolerance
  double max_asymmetry = 0;          // max |U(gamma_i) - U(gamma_{n-1-i})|, grid symmetric about its midpoint
};

inline CurveShape curve_shape(const UtilityCurve& u) {
  CurveShape s;
  const auto& v = u.values;
  const size_t n = v.size();
  s.min_second_difference = kInf;
  for (size_t i = 1; i + 1 < n; ++i) s.min_second_difference = std::min(s.min_second_difference, v[i + 1] - 2 * v[i] + v[i - 1]);
  if (n < 3) s.min_second_difference = 0;
  for (size_t i = 0; i < n; ++i) s.max_asymmetry = std::max(s.max_asymmetry, std::abs(v[i] - v[n - 1 - i]));
  return s;
}

enum class DispersionVerdict { strictly_more, weakly_more, incomparable };

inline const char* to_string(DispersionVerdict v) {
  switch (v) {
    case DispersionVerdict::strictly_more: return "strictly_more";
    case DispersionVerdict::weakly_more: return "weakly_more";
    case DispersionVerdict::incomparable: return "incomparable";
  }
  return "?";
}

struct DispersionResult {
  DispersionVerdict verdict = DispersionVerdict::incomparable;
  double max_excess = 0;    // largest consecutive |dU| - |dV|
  double worst_deficit = 0; // smallest consecutive |dU| - |dV|
  bool ordinal = true;
};

// Is u more dispersed than v? Pairwise differences reduce to consecutive increments in the common order.
inline DispersionResult dispersion_compare(const UtilityCurve& u, const UtilityCurve& v) {
  constexpr double tol = 1e-9;
  const size_t n = u.gamma_grid.size();
  if (n != v.gamma_grid.size() || u.values.size() != n || v.values.size() != n)
    throw InvalidArgument("dispersion_compare needs curves on the same grid");
  for (size_t i = 0; i < n; ++i)
    if (std::abs(u.gamma_grid[i] - v.gamma_grid[i]) > 1e-12) throw InvalidArgument("dispersion_compare needs curves on the same grid");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return v.values[a] != v.values[b] ? v.values[a] < v.values[b] : u.values[a] < u.values[b];
  });
  DispersionResult r;
  r.max_excess = -kInf;
  r.worst_deficit = kInf;
  for (size_t k = 0; k + 1 < n; ++k) {
    const double du = u.values[order[k + 1]] - u.values[order[k]];
    const double dv = v.values[order[k + 1]] - v.values[order[k]];
    if (du < -tol) r.ordinal = false;
    r.max_excess = std::max(r.max_excess, du - dv);
    r.worst_deficit = std::min(r.worst_deficit, du - dv);
  }
  if (n < 2) r.max_excess = r.worst_deficit = 0;
  if (!r.ordinal || r.worst_deficit < -tol)
    r.verdict = DispersionVerdict::incomparable;
  else
    r.verdict = r.max_excess > tol ? DispersionVerdict::strictly_more : DispersionVerdict::weakly_more;
  return r;
}

}  // namespace screenequil
