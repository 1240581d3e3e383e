#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "density.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "quadrature.hpp"
#include "schedule.hpp"

namespace screenequil {

enum class Setting { monopoly_a, monopoly_b, duopoly, spot, exclusive, multiproduct };

inline const char* to_string(Setting s) {
  switch (s) {
    case Setting::monopoly_a: return "monopoly_a";
    case Setting::monopoly_b: return "monopoly_b";
    case Setting::duopoly: return "duopoly";
    case Setting::spot: return "spot";
    case Setting::exclusive: return "exclusive";
    case Setting::multiproduct: return "multiproduct";
  }
  return "?";
}

inline std::optional<Setting> parse_setting(std::string_view name) {
  for (Setting s : {Setting::monopoly_a, Setting::monopoly_b, Setting::duopoly, Setting::spot, Setting::exclusive,
                    Setting::multiproduct})
    if (name == to_string(s)) return s;
  return std::nullopt;
}

// Which v0 thresholds hold, plus the constants they were checked against.
struct CoverageFlags {
  double max_inverse_density = 0.0;
  bool existence = false;   // v0 >= max 1/g
  bool uniqueness = false;  // v0 >= 3.5 max 1/g and the log-concavity/symmetry diagnostics pass
  bool regular = false;
  std::optional<double> spot_threshold;       // 1/h(theta*)
  std::optional<double> exclusive_threshold;  // 1/g(gamma_dagger)
  std::optional<double> vbar;
  std::optional<bool> vbar_holds;
  bool corner = false;  // exclusive split at a support endpoint
};

// G_sigma / g_sigma.
inline double hazard_low(const Environment& env, double gamma) {
  const Density& g = env.type_law();
  return g.cdf(gamma) / g.pdf(gamma);
}

// (1 - G_sigma) / g_sigma.
inline double hazard_high(const Environment& env, double gamma) {
  const Density& g = env.type_law();
  return g.ccdf(gamma) / g.pdf(gamma);
}

// Single-firm strike selected by type gamma.
inline double monopoly_strike(const Environment& env, Firm firm, double gamma) {
  return firm == Firm::A ? hazard_low(env, gamma) : hazard_high(env, gamma);
}

struct SettingSolution {
  SettingSolution(Setting s, Environment e) : setting(s), env(std::move(e)) {}

  Setting setting;
  Environment env;
  std::vector<double> gamma_grid;
  std::optional<TabulatedSchedule> schedule_a, schedule_b;
  std::optional<std::pair<double, double>> spot_prices;
  std::optional<Density> position_law;  // H, spot only
  std::optional<double> theta_star, gamma_dagger, mm_fee;
  std::optional<double> split_residual;  // exclusive: |Delta(gamma_dagger)|
  CoverageFlags coverage;

  const std::optional<TabulatedSchedule>& schedule(Firm f) const { return f == Firm::A ? schedule_a : schedule_b; }

  // Strike selected by type gamma; +inf when the type holds no option from firm.
  double strike(Firm firm, double gamma) const {
    switch (setting) {
      case Setting::monopoly_a:
        return firm == Firm::A ? monopoly_strike(env, Firm::A, gamma) : kInf;
      case Setting::monopoly_b:
        return firm == Firm::B ? monopoly_strike(env, Firm::B, gamma) : kInf;
      case Setting::duopoly: return 2.0 * monopoly_strike(env, firm, gamma);
      case Setting::spot: return firm == Firm::A ? spot_prices->first : spot_prices->second;
      case Setting::exclusive: {
        const bool with_b = gamma >= *gamma_dagger;
        if (firm == Firm::B) return with_b ? monopoly_strike(env, Firm::B, gamma) : kInf;
        return with_b ? kInf : monopoly_strike(env, Firm::A, gamma);
      }
      case Setting::multiproduct: return 0.0;
    }
    return kInf;
  }

  // Contract selected by type gamma. The multi-product fee is booked on firm A.
  Contract contract(Firm firm, double gamma) const {
    const double p = strike(firm, gamma);
    if (setting == Setting::multiproduct) return {0.0, firm == Firm::A ? *mm_fee : 0.0};
    if (p == kInf) return {};
    const auto& s = schedule(firm);
    return {p, s ? s->fee(p) : 0.0};
  }
};

namespace detail {

inline std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline void fill_coverage(SettingSolution& sol) {
  const Environment& env = sol.env;
  auto& c = sol.coverage;
  c.max_inverse_density = env.max_inverse_type_density();
  c.existence = env.v0() >= c.max_inverse_density;
  const auto reg = assert_regularity(env.type_law(), env.shock_dist());
  c.regular = reg.passes("type_log_concave") && reg.passes("shock_log_concave") && reg.passes("shock_symmetric");
  c.uniqueness = c.regular && env.v0() >= 3.5 * c.max_inverse_density;
}

inline void require_hazard(const Environment& env, Firm firm) {
  const auto reg = assert_regularity(env.type_law(), env.shock_dist());
  const char* name = firm == Firm::A ? "type_hazard_low_nondecreasing" : "type_hazard_high_nonincreasing";
  for (const auto& c : reg.checks)
    if (c.name == name && !c.pass)
      throw RegularityError(std::string(firm == Firm::A ? "G/g is not nondecreasing" : "(1-G)/g is not nonincreasing") +
                            " near gamma = " + fmt_num(c.first_violation.value_or(0.0)));
}

inline std::vector<double> type_grid(const Environment& env, int n) {
  if (n < 101) throw InvalidArgument("gamma grid needs at least 101 points");
  return linspace(env.gamma_lo(), env.gamma_hi(), n);
}

}  // namespace detail

inline SettingSolution solve_monopoly(const Environment& env, Firm firm, int gamma_points = 201) {
  detail::require_hazard(env, firm);
  SettingSolution sol(firm == Firm::A ? Setting::monopoly_a : Setting::monopoly_b, env);
  sol.gamma_grid = detail::type_grid(env, gamma_points);
  const Density& g = env.type_law();
  const Density& f = env.shock_dist();
  const double v0 = env.v0(), lo = env.gamma_lo(), hi = env.gamma_hi();
  auto strike = [&](double t) { return monopoly_strike(env, firm, t); };
  auto demand = [&](double t) { return monopoly_demand(env, firm, strike(t), t); };
  const std::vector<double>& grid = sol.gamma_grid;
  std::vector<double> p(grid.size()), q(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    p[i] = strike(grid[i]);
    q[i] = demand(grid[i]);
  }
  if (firm == Firm::B) {
    const double pbar = 1.0 / g.pdf(lo);
    const double bf = option_value(f, pbar - v0 - lo, env.quadrature());
    auto fees = tabulate_fees(grid, strike, demand, bf, true);
    sol.schedule_b.emplace(Firm::B, grid, p, fees, q, bf, pbar);
  } else {
    const double pbar = 1.0 / g.pdf(hi);
    const double bf = option_value_lower(f, v0 - hi - pbar, env.quadrature());
    auto fees = tabulate_fees(grid, strike, demand, bf, false);
    sol.schedule_a.emplace(Firm::A, grid, p, fees, q, bf, pbar);
  }
  detail::fill_coverage(sol);
  return sol;
}

inline SettingSolution solve_duopoly(const Environment& env, int gamma_points = 201) {
  const double v0 = env.v0(), bound = env.max_inverse_type_density();
  if (!(v0 >= bound))
    throw CoverageError("coverage precondition violated: v0 >= max 1/g = " + detail::fmt_num(bound) +
                        " (v0 = " + detail::fmt_num(v0) + ")");
  detail::require_hazard(env, Firm::A);
  detail::require_hazard(env, Firm::B);
  SettingSolution sol(Setting::duopoly, env);
  sol.gamma_grid = detail::type_grid(env, gamma_points);
  const Density& g = env.type_law();
  const double lo = env.gamma_lo(), hi = env.gamma_hi();
  const double pbar_a = 2.0 / g.pdf(hi), pbar_b = 2.0 / g.pdf(lo);

  // E[(v_B - pbar_B - v_A+)+ | gamma_l] and its mirror at the top type.
  const double bf_b = detail::integrate_theta(
      env, lo, [&](double t) { return std::max(0.0, v0 + t - pbar_b - std::max(0.0, v0 - t)); },
      {v0, 0.5 * pbar_b, pbar_b - v0});
  const double bf_a = detail::integrate_theta(
      env, hi, [&](double t) { return std::max(0.0, v0 - t - pbar_a - std::max(0.0, v0 + t)); },
      {-v0, -0.5 * pbar_a, v0 - pbar_a});

  const std::vector<double>& grid = sol.gamma_grid;
  for (Firm firm : {Firm::A, Firm::B}) {
    auto strike = [&](double t) { return 2.0 * monopoly_strike(env, firm, t); };
    auto demand = [&](double t) {
      return duopoly_demand(env, firm, strike(t), 2.0 * monopoly_strike(env, rival(firm), t), t);
    };
    std::vector<double> p(grid.size()), q(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      p[i] = strike(grid[i]);
      q[i] = demand(grid[i]);
    }
    if (firm == Firm::B) {
      auto fees = tabulate_fees(grid, strike, demand, bf_b, true);
      sol.schedule_b.emplace(Firm::B, grid, p, fees, q, bf_b, pbar_b);
    } else {
      auto fees = tabulate_fees(grid, strike, demand, bf_a, false);
      sol.schedule_a.emplace(Firm::A, grid, p, fees, q, bf_a, pbar_a);
    }
  }
  detail::fill_coverage(sol);
  return sol;
}

// Firm purchased by (gamma, theta) in the non-exclusive equilibrium; ties go to B.
inline Firm duopoly_allocation(const SettingSolution& sol, double gamma, double theta) {
  if (sol.setting != Setting::duopoly) throw InvalidArgument("duopoly_allocation needs a duopoly solution");
  return theta >= 0.5 * (sol.strike(Firm::B, gamma) - sol.strike(Firm::A, gamma)) ? Firm::B : Firm::A;
}

inline SettingSolution solve_spot(const Environment& env, int gamma_points = 201) {
  SettingSolution sol(Setting::spot, env);
  sol.gamma_grid = detail::type_grid(env, gamma_points);
  const Density& f = env.shock_dist();
  Density h = convolve(env.type_law(), f, 4096, env.quadrature());
  auto delta = [&](double t) {
    const double d = h.pdf(t);
    return d > 0 ? t - (1.0 - 2.0 * h.cdf(t)) / d : (h.cdf(t) < 0.5 ? -kInf : kInf);
  };
  const double m = h.quantile(0.5);
  const double pad = 1e-6 * std::max(1.0, f.scale());
  double lo = std::min(0.0, m) - pad, hi = std::max(0.0, m) + pad;
  const double reach = 20.0 * f.scale() + std::max(std::abs(env.gamma_lo()), std::abs(env.gamma_hi()));
  while (delta(lo) > 0 && lo > -reach) lo -= 2.0 * (hi - lo);
  while (delta(hi) < 0 && hi < reach) hi += 2.0 * (hi - lo);
  if (!(delta(lo) <= 0 && delta(hi) >= 0)) throw NumericError("spot threshold not bracketed within 20 shock scales");
  const double theta = bisect(delta, lo, hi, 1e-12);
  const double H = h.cdf(theta), dens = h.pdf(theta);
  sol.theta_star = theta;
  sol.spot_prices = std::pair{2.0 * H / dens, 2.0 * (1.0 - H) / dens};
  sol.coverage.spot_threshold = 1.0 / dens;
  sol.position_law = std::move(h);
  detail::fill_coverage(sol);
  if (!(env.v0() >= 1.0 / dens))
    throw CoverageError("coverage precondition violated: v0 >= 1/h(theta*) = " + detail::fmt_num(1.0 / dens) +
                        " (v0 = " + detail::fmt_num(env.v0()) + ")");
  return sol;
}

// Delta_B - Delta_A at gamma: B-side gain over the A-side gain of the two monopoly options.
inline double exclusive_split_gap(const Environment& env, double gamma) {
  const Density& f = env.shock_dist();
  const double v0 = env.v0();
  const double pa = monopoly_strike(env, Firm::A, gamma), pb = monopoly_strike(env, Firm::B, gamma);
  const double side_b = option_value(f, pb - v0 - gamma, env.quadrature()) - pb * monopoly_demand(env, Firm::A, pa, gamma);
  const double side_a =
      option_value_lower(f, v0 - gamma - pa, env.quadrature()) - pa * monopoly_demand(env, Firm::B, pb, gamma);
  return side_b - side_a;
}

inline SettingSolution solve_exclusive(const Environment& env, int gamma_points = 201) {
  detail::require_hazard(env, Firm::A);
  detail::require_hazard(env, Firm::B);
  SettingSolution sol(Setting::exclusive, env);
  sol.gamma_grid = detail::type_grid(env, gamma_points);
  const double lo = env.gamma_lo(), hi = env.gamma_hi();
  auto gap = [&](double t) { return exclusive_split_gap(env, t); };
  double dagger;
  if (gap(lo) >= 0) {
    dagger = lo;
    sol.coverage.corner = true;
  } else if (gap(hi) <= 0) {
    dagger = hi;
    sol.coverage.corner = true;
  } else {
    dagger = bisect(gap, lo, hi, 1e-12);
  }
  sol.gamma_dagger = dagger;
  sol.split_residual = std::abs(gap(dagger));

  const double pa_d = monopoly_strike(env, Firm::A, dagger), pb_d = monopoly_strike(env, Firm::B, dagger);
  for (Firm firm : {Firm::A, Firm::B}) {
    const double seg_lo = firm == Firm::B ? dagger : lo, seg_hi = firm == Firm::B ? hi : dagger;
    if (!(seg_hi > seg_lo)) continue;
    auto grid = linspace(seg_lo, seg_hi, gamma_points);
    auto strike = [&](double t) { return monopoly_strike(env, firm, t); };
    auto demand = [&](double t) { return monopoly_demand(env, firm, strike(t), t); };
    std::vector<double> p(grid.size()), q(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      p[i] = strike(grid[i]);
      q[i] = demand(grid[i]);
    }
    const double own = firm == Firm::B ? pb_d : pa_d, other = firm == Firm::B ? pa_d : pb_d;
    const double bf = own * monopoly_demand(env, rival(firm), other, dagger);
    auto fees = tabulate_fees(grid, strike, demand, bf, firm == Firm::B);
    auto& slot = firm == Firm::A ? sol.schedule_a : sol.schedule_b;
    slot.emplace(firm, grid, p, fees, q, bf, own);
  }
  detail::fill_coverage(sol);
  const double threshold = 1.0 / env.type_law().pdf(dagger);
  sol.coverage.exclusive_threshold = threshold;
  if (!(env.v0() >= threshold))
    throw CoverageError("coverage precondition violated: v0 >= 1/g(gamma_dagger) = " + detail::fmt_num(threshold) +
                        " (v0 = " + detail::fmt_num(env.v0()) + ")");
  return sol;
}

// Threshold on v0 above which the joint contract is optimal for the multi-product monopolist.
inline double compute_vbar(const Environment& env) {
  const Density& f = env.shock_dist();
  const double kmax = f.cdf(2.0 * env.gamma_lo());
  if (!(kmax > 0)) throw InvalidArgument("compute_vbar needs F(2 gamma_l) > 0");
  const double f0 = f.pdf(0.0), upper_tail = f.ccdf(2.0 * env.gamma_hi());
  auto constant = [&](double u) {
    const double kappa = kmax * u;
    const double tail_hi = upper_tail - kappa;
    if (!(tail_hi > 0)) return kInf;
    const double a = f.quantile(kmax * (1.0 - u)), b = f.upper_quantile(tail_hi);
    double sup = std::max(std::abs(f.score(a)), std::abs(f.score(b)));
    if (f.kind() == DensityKind::tabulated)
      for (double x : linspace(a, b, 257)) sup = std::max(sup, std::abs(f.score(x)));
    return std::max(2.0 * f0 / kappa, sup);
  };
  const auto [u, c] = golden_section(constant, 0.0, 1.0, 1e-6);
  (void)u;
  const double m = env.max_inverse_type_density();
  return c * m * m;
}

inline SettingSolution solve_multiproduct(const Environment& env, int gamma_points = 201) {
  if (!is_symmetric(env.type_law()))
    throw UnsupportedAssumption("multi-product monopoly needs a type distribution symmetric about 0");
  SettingSolution sol(Setting::multiproduct, env);
  sol.gamma_grid = detail::type_grid(env, gamma_points);
  sol.mm_fee = env.v0() + abs_moment(env.shock_dist(), env.quadrature());
  detail::fill_coverage(sol);
  const double vbar = compute_vbar(env);
  sol.coverage.vbar = vbar;
  sol.coverage.vbar_holds = env.v0() >= vbar;
  return sol;
}

inline SettingSolution solve(const Environment& env, Setting s, int gamma_points = 201) {
  switch (s) {
    case Setting::monopoly_a: return solve_monopoly(env, Firm::A, gamma_points);
    case Setting::monopoly_b: return solve_monopoly(env, Firm::B, gamma_points);
    case Setting::duopoly: return solve_duopoly(env, gamma_points);
    case Setting::spot: return solve_spot(env, gamma_points);
    case Setting::exclusive: return solve_exclusive(env, gamma_points);
    case Setting::multiproduct: return solve_multiproduct(env, gamma_points);
  }
  throw InvalidArgument("unknown setting");
}

}  // namespace screenequil
