#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "equilibria.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "welfare.hpp"

namespace screenequil {

struct VerifyOptions {
  int gamma_points = 201;
  int grid = 200;   // strike grid per firm
  int types = 21;   // type sample for the consumer and firm oracles
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"all",        "consumer",  "firm",   "envelope",
                                              "efficiency", "dominance", "welfare", "multiproduct"};
  return names;
}

// Worst report per name: fail beats pass, larger residual beats smaller.
inline std::vector<OracleReport> merge_by_name(const std::vector<OracleReport>& reports) {
  std::map<std::string, OracleReport> by;
  for (const auto& r : reports) {
    auto it = by.find(r.name);
    if (it == by.end()) {
      by.emplace(r.name, r);
      continue;
    }
    OracleReport& m = it->second;
    const bool worse = (r.status == CheckStatus::fail && m.status != CheckStatus::fail) ||
                       (r.status == m.status && r.worst_residual > m.worst_residual);
    if (worse) m = r;
  }
  std::vector<OracleReport> out;
  for (auto& [_, r] : by) out.push_back(r);
  return out;
}

namespace detail {

inline OracleReport multiproduct_gate(const Environment& env) {
  const std::string name = "multiproduct.extremal";
  SettingSolution mm = solve_multiproduct(env);
  OracleReport r;
  r.name = name;
  r.status = CheckStatus::info;
  r.worst_residual = *mm.coverage.vbar - env.v0();
  r.detail = "v0 = " + num(env.v0()) + ", vbar = " + num(*mm.coverage.vbar) +
             (*mm.coverage.vbar_holds ? "; v0 >= vbar, extremal welfare comparison in scope"
                                      : "; v0 < vbar, welfare comparison outside the theorem's hypothesis");
  return r;
}

}  // namespace detail

// Oracle battery for one suite, sorted by check name. Jobs run concurrently.
inline std::vector<OracleReport> run_suite(const Environment& env, const std::string& suite, const VerifyOptions& opt = {}) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw InvalidArgument("unknown suite '" + suite + "'");
  auto want = [&](const char* s) { return suite == "all" || suite == s; };
  const bool covered = detail::covered_market(env);
  std::optional<SettingSolution> ne, ex, sp;
  if (covered && (want("consumer") || want("firm") || want("envelope") || want("efficiency"))) {
    ne.emplace(solve_duopoly(env, opt.gamma_points));
    ex.emplace(solve_exclusive(env, opt.gamma_points));
  }
  if (want("envelope")) sp.emplace(solve_spot(env, opt.gamma_points));
  const auto types = linspace(env.gamma_lo(), env.gamma_hi(), opt.types);

  std::vector<std::function<std::vector<OracleReport>()>> jobs;
  auto gated = [&](const std::string& name) { return std::vector{skipped_report(name, "v0 >= max 1/g does not hold")}; };
  if (want("consumer")) {
    jobs.push_back([&] {
      if (!ne) return gated("consumer_br");
      auto s = consumer_br_sweep(env, *ne, types, opt.grid);
      return std::vector{s.position, s.value, s.monotone};
    });
  }
  if (want("firm")) {
    for (Firm f : {Firm::A, Firm::B})
      jobs.push_back([&, f] {
        if (!ne) return gated(std::string("firm_pointwise.") + to_string(f));
        std::vector<OracleReport> all;
        for (double g : types)
          for (auto& r : firm_pointwise_check(env, *ne, f, g, opt.grid)) all.push_back(r);
        return merge_by_name(all);
      });
  }
  if (want("envelope")) {
    jobs.push_back([&] {
      std::vector<OracleReport> out{envelope_residual(env, *sp, opt.gamma_points)};
      if (ne) {
        out.push_back(envelope_residual(env, *ne, opt.gamma_points));
        out.push_back(envelope_residual(env, *ex, opt.gamma_points));
      } else {
        out.push_back(skipped_report("envelope.duopoly", "v0 >= max 1/g does not hold"));
      }
      return out;
    });
  }
  if (want("efficiency"))
    jobs.push_back([&] { return ne ? std::vector{efficiency_check(env, *ne, *ex).report} : gated("efficiency"); });
  if (want("dominance")) jobs.push_back([&] { return std::vector{dominance_check(env, opt.gamma_points)}; });
  if (want("welfare")) {
    jobs.push_back([&] { return std::vector{welfare_ranking_check(env, 0.05).report}; });
    jobs.push_back([&] { return std::vector{welfare_ranking_check(env, 1.0, false).report}; });
  }
  if (want("multiproduct")) jobs.push_back([&] { return std::vector{detail::multiproduct_gate(env)}; });

  auto results = parallel_map<std::vector<OracleReport>>(jobs.size(), [&](size_t i) { return jobs[i](); });
  std::vector<OracleReport> out;
  for (auto& v : results) out.insert(out.end(), v.begin(), v.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

// 0 all pass, 1 any failure, 3 only hypothesis-gated skips.
inline int verify_exit_code(const std::vector<OracleReport>& reports) {
  bool skipped = false;
  for (const auto& r : reports) {
    if (r.status == CheckStatus::fail) return 1;
    if (r.status == CheckStatus::skipped) skipped = true;
  }
  return skipped ? 3 : 0;
}

struct LevelOrdering {
  std::string upper, lower;
  int violations = 0;
  double worst_gap = 0;  // max of lower - upper
  double worst_gamma = 0;
};

struct FigureData {
  UtilityCurve spot, ne, exclusive;
  CurveShape spot_shape, ne_shape, exclusive_shape;
  DispersionResult e_over_ne, ne_over_sp;
  LevelOrdering e_vs_ne, ne_vs_sp;
};

inline LevelOrdering level_ordering(const UtilityCurve& upper, const UtilityCurve& lower, double tol = 1e-9) {
  LevelOrdering o{to_string(upper.setting), to_string(lower.setting)};
  o.worst_gap = -kInf;
  for (size_t i = 0; i < upper.values.size(); ++i) {
    const double gap = lower.values[i] - upper.values[i];
    if (gap > tol) ++o.violations;
    if (gap > o.worst_gap) {
      o.worst_gap = gap;
      o.worst_gamma = upper.gamma_grid[i];
    }
  }
  return o;
}

// Interim utility curves of the three competitive settings with shape, dispersion, and level comparisons.
inline FigureData figure_data(const Environment& env, int gamma_points = 201) {
  const auto grid = linspace(env.gamma_lo(), env.gamma_hi(), gamma_points);
  FigureData d;
  const SettingSolution sp = solve_spot(env, gamma_points);
  const SettingSolution ne = solve_duopoly(env, gamma_points);
  const SettingSolution ex = solve_exclusive(env, gamma_points);
  d.spot = utility_curve(env, sp, grid);
  d.ne = utility_curve(env, ne, grid);
  d.exclusive = utility_curve(env, ex, grid);
  d.spot_shape = curve_shape(d.spot);
  d.ne_shape = curve_shape(d.ne);
  d.exclusive_shape = curve_shape(d.exclusive);
  d.e_over_ne = dispersion_compare(d.exclusive, d.ne);
  d.ne_over_sp = dispersion_compare(d.ne, d.spot);
  d.e_vs_ne = level_ordering(d.exclusive, d.ne);
  d.ne_vs_sp = level_ordering(d.ne, d.spot);
  return d;
}

}  // namespace screenequil
