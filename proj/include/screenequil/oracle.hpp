#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "density.hpp"
#include "equilibria.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "welfare.hpp"

namespace screenequil {

enum class CheckStatus { pass, fail, skipped, info };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
    case CheckStatus::info: return "info";
  }
  return "?";
}

struct Witness {
  double gamma = 0;
  std::optional<double> theta;
  double p_a = kInf, p_b = kInf;
};

struct OracleReport {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  double worst_residual = 0, tolerance = 0;
  std::optional<Witness> witness;
  std::string detail;

  bool passed() const { return status == CheckStatus::pass; }
};

inline OracleReport make_report(std::string name, double worst, double tol, std::optional<Witness> w,
                                std::string detail = {}) {
  OracleReport r{std::move(name), worst <= tol ? CheckStatus::pass : CheckStatus::fail, worst, tol, w,
                 std::move(detail)};
  return r;
}

inline OracleReport skipped_report(std::string name, std::string reason) {
  OracleReport r;
  r.name = std::move(name);
  r.status = CheckStatus::skipped;
  r.detail = std::move(reason);
  return r;
}

namespace detail {

inline std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline bool covered_market(const Environment& env) { return env.v0() >= env.max_inverse_type_density(); }

}  // namespace detail

struct ConsumerBrResult {
  double gamma = 0;
  double best_a = kInf, best_b = kInf;  // canonical member of the grid argmax set
  double grid_max = 0, analytic_value = 0;
  OracleReport position, value;
};

// Exhaustive search of the consumer's contract choice over strike grids on [0, pbar_i] plus the null option.
inline ConsumerBrResult consumer_br_oracle(const Environment& env, const SettingSolution& sol, double gamma,
                                           int grid_n = 200) {
  if (sol.setting != Setting::duopoly) throw InvalidArgument("consumer_br_oracle needs a duopoly solution");
  if (grid_n < 100) throw InvalidArgument("consumer_br_oracle needs grid_n >= 100");
  const TabulatedSchedule& sa = *sol.schedule_a;
  const TabulatedSchedule& sb = *sol.schedule_b;
  const int n = grid_n + 2;  // grid points plus null
  const double da = sa.max_strike() / grid_n, db = sb.max_strike() / grid_n;
  auto price = [&](int k, double step) { return k > grid_n ? kInf : (k == grid_n ? step * grid_n : step * k); };
  std::vector<double> pa(n), pb(n), fa(n), fb(n);
  for (int k = 0; k < n; ++k) {
    pa[k] = k == grid_n ? sa.max_strike() : price(k, da);
    pb[k] = k == grid_n ? sb.max_strike() : price(k, db);
    fa[k] = sa.fee(pa[k]);
    fb[k] = sb.fee(pb[k]);
  }
  auto rows = parallel_map<std::vector<double>>(n, [&](size_t i) {
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = expected_net_max(env, gamma, pa[i], pb[j]) - fa[i] - fb[j];
    return row;
  });
  double best = -kInf;
  for (const auto& r : rows)
    for (double u : r) best = std::max(best, u);

  const double star_a = sol.strike(Firm::A, gamma), star_b = sol.strike(Firm::B, gamma);
  auto cell_pos = [&](double p, double step) { return p == kInf ? kInf : p / step; };
  const double ia = cell_pos(star_a, da), ib = cell_pos(star_b, db);
  ConsumerBrResult res;
  res.gamma = gamma;
  res.grid_max = best;
  double closest = kInf;
  bool chosen = false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (rows[i][j] < best - 1e-9) continue;
      const double ea = i > grid_n ? (ia == kInf ? 0.0 : kInf) : std::abs(i - ia);
      const double eb = j > grid_n ? (ib == kInf ? 0.0 : kInf) : std::abs(j - ib);
      closest = std::min(closest, std::max(ea, eb));
      // Canonical selection: lowest A strike, then highest B strike (null counts as +inf).
      if (!chosen || pa[i] < res.best_a || (pa[i] == res.best_a && pb[j] > res.best_b)) {
        res.best_a = pa[i];
        res.best_b = pb[j];
        chosen = true;
      }
    }
  }
  res.analytic_value = expected_net_max(env, gamma, star_a, star_b) - sa.fee(star_a) - sb.fee(star_b);
  Witness w{gamma, std::nullopt, res.best_a, res.best_b};
  res.position = make_report("consumer_br.position", closest, 1.0 + 1e-9, w,
                             "grid argmax distance from the analytic pair in cells");
  res.value = make_report("consumer_br.value", std::max(0.0, best - res.analytic_value), 1e-6,
                          Witness{gamma, std::nullopt, star_a, star_b}, "grid max minus analytic utility");
  return res;
}

struct ConsumerBrSweep {
  std::vector<ConsumerBrResult> types;
  OracleReport position, value, monotone;
};

inline ConsumerBrSweep consumer_br_sweep(const Environment& env, const SettingSolution& sol,
                                         const std::vector<double>& gammas, int grid_n = 200) {
  ConsumerBrSweep s;
  for (double g : gammas) s.types.push_back(consumer_br_oracle(env, sol, g, grid_n));
  auto worst = [&](auto member, const char* name, double tol, const char* what) {
    double w = 0;
    std::optional<Witness> wit;
    for (const auto& t : s.types) {
      const OracleReport& r = t.*member;
      if (!wit || r.worst_residual > w) {
        w = r.worst_residual;
        wit = r.witness;
      }
    }
    return make_report(name, w, tol, wit, what);
  };
  s.position = worst(&ConsumerBrResult::position, "consumer_br.position", 1.0 + 1e-9,
                     "grid argmax distance from the analytic pair in cells");
  s.value = worst(&ConsumerBrResult::value, "consumer_br.value", 1e-6, "grid max minus analytic utility");
  double viol = 0;
  std::optional<Witness> wit;
  for (size_t k = 1; k < s.types.size(); ++k) {
    const auto& a = s.types[k - 1];
    const auto& b = s.types[k];
    auto drop = [](double lo, double hi) {
      if (lo == hi) return 0.0;
      if (hi == kInf) return 0.0;
      if (lo == kInf) return kInf;
      return std::max(0.0, lo - hi);
    };
    const double v = std::max(drop(a.best_a, b.best_a), drop(b.best_b, a.best_b));
    if (v > viol) {
      viol = v;
      wit = Witness{b.gamma, std::nullopt, b.best_a, b.best_b};
    }
  }
  s.monotone = make_report("consumer_br.monotone", viol, 0.0, wit,
                           "selected A strikes nondecreasing and B strikes nonincreasing in type");
  return s;
}

namespace detail {

// Conditional law of theta given gamma on cells: two exact tails plus m interior cells.
struct ThetaCells {
  std::vector<double> bounds;  // interior boundaries, size m + 1
  std::vector<double> mass, moment;  // per cell, size m + 2 (tail, interior..., tail)
};

inline ThetaCells theta_cells(const Environment& env, double gamma, int m) {
  const Density& f = env.shock_dist();
  const double lo = gamma + f.quantile(1e-6), hi = gamma + f.upper_quantile(1e-6);
  ThetaCells c;
  c.bounds = linspace(lo, hi, m + 1);
  const Interval r = f.integration_range();
  const QuadratureOptions q{1e-11, 1e-15, 400};
  auto first = [&](double a, double b) {
    return integrate([&](double t) { return t * f.pdf(t - gamma); }, a, b, q);
  };
  c.mass.push_back(f.cdf(lo - gamma));
  c.moment.push_back(first(std::min(gamma + r.lo, lo), lo));
  for (int j = 0; j < m; ++j) {
    c.mass.push_back(f.cdf(c.bounds[j + 1] - gamma) - f.cdf(c.bounds[j] - gamma));
    c.moment.push_back(first(c.bounds[j], c.bounds[j + 1]));
  }
  c.mass.push_back(f.ccdf(hi - gamma));
  c.moment.push_back(first(hi, std::max(gamma + r.hi, hi)));
  return c;
}

}  // namespace detail

// Pointwise objective of `firm` at type gamma: it recommends the rival's strike p from the rival's
// schedule and a threshold allocation in theta. Checks that the equilibrium choice attains the grid
// maximum and that the maximizer covers the market.
inline std::vector<OracleReport> firm_pointwise_check(const Environment& env, const SettingSolution& sol, Firm firm,
                                                      double gamma, int grid_n = 200) {
  if (sol.setting != Setting::duopoly) throw InvalidArgument("firm_pointwise_check needs a duopoly solution");
  const std::string base = std::string("firm_pointwise.") + to_string(firm);
  if (!detail::covered_market(env))
    return {skipped_report(base, "v0 >= max 1/g does not hold")};
  const Firm other = rival(firm);
  const TabulatedSchedule& s_other = *sol.schedule(other);
  const double v0 = env.v0();
  // Information-rent hazard of the deviating firm.
  const double r = firm == Firm::B ? hazard_high(env, gamma) : hazard_low(env, gamma);
  const int m = std::max(2000, 10 * grid_n);
  const auto cells = detail::theta_cells(env, gamma, m);
  const size_t nc = cells.mass.size();
  // Per-cell value of allocating the cell to A (low side) or to B (high side).
  auto coef = [&](Firm who, double p, size_t j) {
    if (p == kInf) return -kInf;
    const double shift = who == firm ? -r : r - p;
    const double sign = who == Firm::A ? -1.0 : 1.0;
    return (v0 + shift) * cells.mass[j] + sign * cells.moment[j];
  };

  const double pbar = s_other.max_strike();
  double best = -kInf, best_cov = -kInf, best_p = kInf, best_t = 0;
  std::vector<double> low(nc), suffix(nc + 1);
  for (int k = 0; k <= grid_n + 1; ++k) {
    const double p = k > grid_n ? kInf : (k == grid_n ? pbar : pbar * k / grid_n);
    const double fee = s_other.fee(p);
    const double p_a = other == Firm::A ? p : 0.0, p_b = other == Firm::B ? p : 0.0;
    for (size_t j = 0; j < nc; ++j) low[j] = coef(Firm::A, p_a, j);
    suffix[nc] = 0.0;
    for (size_t j = nc; j-- > 0;) suffix[j] = suffix[j + 1] + coef(Firm::B, p_b, j);
    // A takes cells below k1, B cells from k2 on, k1 <= k2; k1 == k2 covers the market.
    double prefix = 0.0, best_prefix = 0.0;
    for (size_t k2 = 0; k2 <= nc; ++k2) {
      if (k2 > 0) {
        prefix += low[k2 - 1];
        best_prefix = std::max(best_prefix, prefix);
      }
      const double any = best_prefix + suffix[k2] - fee;
      if (any > best) {
        best = any;
        best_p = p;
        best_t = k2 == 0 ? -kInf : (k2 == nc ? kInf : cells.bounds[k2 - 1]);
      }
      best_cov = std::max(best_cov, prefix + suffix[k2] - fee);
    }
  }

  // Equilibrium choice evaluated exactly: rival strike p*, split at (p_B* - p_A*)/2.
  const double p_star = sol.strike(other, gamma);
  const double t_star = 0.5 * (sol.strike(Firm::B, gamma) - sol.strike(Firm::A, gamma));
  auto integrand = [&](double t) {
    const bool to_b = t >= t_star;
    const Firm who = to_b ? Firm::B : Firm::A;
    const double val = valuation(env, who, t);
    return who == firm ? val - r : val - p_star + r;
  };
  const double eq_value = detail::integrate_theta(env, gamma, integrand, {t_star}) - s_other.fee(p_star);

  Witness w{gamma, best_t, firm == Firm::B ? best_p : sol.strike(Firm::A, gamma),
            firm == Firm::B ? sol.strike(Firm::B, gamma) : best_p};
  std::vector<OracleReport> out;
  out.push_back(make_report(base + ".value", std::max(0.0, best - eq_value), 1e-6, w,
                            "grid max " + detail::num(best) + " vs equilibrium " + detail::num(eq_value)));
  out.push_back(make_report(base + ".coverage", std::max(0.0, best - best_cov), 1e-9, w,
                            "best value minus best fully covered value"));
  return out;
}

// Max over the grid of |U(gamma) - U(gamma_l) - integral of E[q_B - q_A]|.
inline OracleReport envelope_residual(const Environment& env, const SettingSolution& sol, int grid_n = 201) {
  if (sol.setting != Setting::duopoly && sol.setting != Setting::spot && sol.setting != Setting::exclusive)
    throw InvalidArgument("envelope_residual needs a duopoly, spot, or exclusive solution");
  const auto grid = linspace(env.gamma_lo(), env.gamma_hi(), grid_n);
  auto u = utility_curve(env, sol, grid).values;
  auto slope = [&](double t) { return interim_demand(env, sol, Firm::B, t) - interim_demand(env, sol, Firm::A, t); };
  double acc = 0, worst = 0;
  size_t at = 0;
  for (size_t k = 1; k < grid.size(); ++k) {
    std::vector<double> knots{grid[k - 1], grid[k]};
    if (sol.gamma_dagger && *sol.gamma_dagger > grid[k - 1] && *sol.gamma_dagger < grid[k])
      knots.push_back(*sol.gamma_dagger);
    acc += integrate(slope, knots, env.quadrature());
    const double res = std::abs(u[k] - u[0] - acc);
    if (res > worst) {
      worst = res;
      at = k;
    }
  }
  Witness w{grid[at], std::nullopt, sol.strike(Firm::A, grid[at]), sol.strike(Firm::B, grid[at])};
  return make_report(std::string("envelope.") + to_string(sol.setting), worst, 1e-5, w);
}

// Realized surplus of the non-exclusive allocation against the exclusive one on a (gamma, theta) grid.
struct EfficiencyResult {
  OracleReport report;
  double strict_mass = 0, covered_mass = 0;
};

inline EfficiencyResult efficiency_check(const Environment& env, const SettingSolution& ne, const SettingSolution& ex,
                                         int grid_n = 400) {
  EfficiencyResult res;
  if (!is_symmetric(env.type_law())) {
    res.report = skipped_report("efficiency", "type distribution is not symmetric");
    return res;
  }
  if (!(env.v0() >= 3.5 * env.max_inverse_type_density())) {
    res.report = skipped_report("efficiency", "v0 >= 3.5 max 1/g does not hold");
    return res;
  }
  const Density& g = env.type_law();
  const Density& f = env.shock_dist();
  const auto gb = linspace(env.gamma_lo(), env.gamma_hi(), grid_n + 1);
  const double tail = 5e-6;
  struct Row {
    double worst = 0, strict = 0, mass = 0;
    std::optional<Witness> w;
  };
  auto rows = parallel_map<Row>(grid_n, [&](size_t i) {
    Row row;
    const double gamma = 0.5 * (gb[i] + gb[i + 1]);
    const double wg = g.cdf(gb[i + 1]) - g.cdf(gb[i]);
    const auto tb = linspace(gamma + f.quantile(tail), gamma + f.upper_quantile(tail), grid_n + 1);
    for (int j = 0; j < grid_n; ++j) {
      const double theta = 0.5 * (tb[j] + tb[j + 1]);
      const double wt = f.cdf(tb[j + 1] - gamma) - f.cdf(tb[j] - gamma);
      const double s_ne = valuation(env, duopoly_allocation(ne, gamma, theta), theta);
      const Firm holder = gamma >= *ex.gamma_dagger ? Firm::B : Firm::A;
      const double v = valuation(env, holder, theta);
      const double s_e = v >= ex.strike(holder, gamma) ? v : 0.0;
      const double diff = s_ne - s_e;
      row.mass += wg * wt;
      if (-diff > row.worst) {
        row.worst = -diff;
        row.w = Witness{gamma, theta, ne.strike(Firm::A, gamma), ne.strike(Firm::B, gamma)};
      }
      if (diff > 1e-6) row.strict += wg * wt;
    }
    return row;
  });
  double worst = 0;
  std::optional<Witness> w;
  for (const auto& r : rows) {
    res.strict_mass += r.strict;
    res.covered_mass += r.mass;
    if (r.worst > worst) {
      worst = r.worst;
      w = r.w;
    }
  }
  if (!(res.strict_mass > 0)) worst = kInf;
  res.report = make_report("efficiency", worst, 1e-9, w,
                           "strict improvement mass " + detail::num(res.strict_mass) + ", grid mass " +
                               detail::num(res.covered_mass));
  return res;
}

// Equilibrium schedules lie strictly below the monopoly schedules on [0, pbar_i^M].
inline OracleReport dominance_check(const Environment& env, int grid_n = 201) {
  if (!(env.v0() >= 3.5 * env.max_inverse_type_density()))
    return skipped_report("dominance", "v0 >= 3.5 max 1/g does not hold");
  const auto ne = solve_duopoly(env);
  double worst = -kInf;
  std::optional<Witness> w;
  for (Firm firm : {Firm::A, Firm::B}) {
    const auto mono = solve_monopoly(env, firm);
    const TabulatedSchedule& sm = *mono.schedule(firm);
    const TabulatedSchedule& se = *ne.schedule(firm);
    for (double p : linspace(0.0, sm.max_strike(), grid_n)) {
      const double d = se.fee(p) - sm.fee(p);
      if (d > worst) {
        worst = d;
        w = Witness{0.0, std::nullopt, firm == Firm::A ? p : kInf, firm == Firm::B ? p : kInf};
      }
    }
  }
  return make_report("dominance", worst, -1e-6, w, "max over p of equilibrium fee minus monopoly fee");
}

struct WelfareRanking {
  OracleReport report;
  double sigma = 1;
  SurplusReport ne{Setting::duopoly}, ex{Setting::exclusive}, sp{Setting::spot};
  LimitQuantities limits;
  double fee_deviation = 0;  // max over firms of |E[NE fee] - limFee| / limFee
  double cs_deviation_e = 0, cs_deviation_ne = 0, cs_deviation_sp = 0;  // relative
};

// Surplus orderings of the three competitive settings on scale(env, sigma). With assert_order false the
// report is informational.
inline WelfareRanking welfare_ranking_check(const Environment& env, double sigma, bool assert_order = true) {
  WelfareRanking w;
  w.sigma = sigma;
  const std::string name = "welfare_ranking.sigma=" + detail::num(sigma);
  const Interval ts = env.type_dist().support();
  if (!(ts.lo < 0 && 0 < ts.hi)) {
    w.report = skipped_report(name, "type support does not straddle 0");
    return w;
  }
  w.limits = limit_quantities(env);
  if (!w.limits.hypothesis_holds) {
    w.report = skipped_report(name, "v0 > 1/f(0) does not hold");
    return w;
  }
  const Environment e = scale(env, sigma);
  w.ne = surplus(e, solve_duopoly(e));
  w.ex = surplus(e, solve_exclusive(e));
  w.sp = surplus(e, solve_spot(e));
  const double ps_ne = w.ne.producer_surplus_a + w.ne.producer_surplus_b;
  const double ps_e = w.ex.producer_surplus_a + w.ex.producer_surplus_b;
  const double ps_sp = w.sp.producer_surplus_a + w.sp.producer_surplus_b;
  const double margin = std::min({w.ex.consumer_surplus - w.ne.consumer_surplus,
                                  w.ne.consumer_surplus - w.sp.consumer_surplus, ps_ne - ps_e, ps_sp - ps_ne});
  w.fee_deviation = std::max(std::abs(w.ne.fee_revenue_a - w.limits.fee_a) / w.limits.fee_a,
                             std::abs(w.ne.fee_revenue_b - w.limits.fee_b) / w.limits.fee_b);
  w.cs_deviation_e = std::abs(w.ex.consumer_surplus - w.limits.cs_e) / w.limits.cs_e;
  w.cs_deviation_ne = std::abs(w.ne.consumer_surplus - w.limits.cs_ne) / w.limits.cs_ne;
  w.cs_deviation_sp = std::abs(w.sp.consumer_surplus - w.limits.cs_sp) / w.limits.cs_sp;
  const std::string detail = "CS E/NE/SP " + detail::num(w.ex.consumer_surplus) + "/" +
                             detail::num(w.ne.consumer_surplus) + "/" + detail::num(w.sp.consumer_surplus) +
                             ", PS E/NE/SP " + detail::num(ps_e) + "/" + detail::num(ps_ne) + "/" +
                             detail::num(ps_sp) + ", NE fee deviation from limit " + detail::num(w.fee_deviation);
  w.report = make_report(name, -margin, -1e-6, std::nullopt, detail);
  if (!assert_order) w.report.status = CheckStatus::info;
  return w;
}

}  // namespace screenequil
