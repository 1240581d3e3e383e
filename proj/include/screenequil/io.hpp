#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "density.hpp"
#include "equilibria.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "oracle.hpp"
#include "welfare.hpp"

namespace screenequil {

using json = nlohmann::json;

// '.' decimal, 15 significant digits, "inf" for the null strike.
inline std::string csv_number(double x) {
  if (x == kInf) return "inf";
  if (x == -kInf) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required number");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(path, key), "expected a finite number");
  return x;
}

inline std::vector<double> numbers(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.at(key).size(); ++i) {
    const json& v = j.at(key)[i];
    if (!v.is_number()) throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v.get<double>());
  }
  return out;
}

inline json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double from_nullable(const json& j) { return j.is_null() ? kInf : j.get<double>(); }

inline json array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(nullable(x));
  return a;
}

inline std::vector<double> from_array(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(from_nullable(x));
  return v;
}

}  // namespace detail

inline Density density_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected a density record");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(detail::join(path, "kind"), "missing density kind");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "uniform") {
      detail::reject_unknown(j, path, {"kind", "lo", "hi"});
      return Density::uniform(detail::number(j, path, "lo"), detail::number(j, path, "hi"));
    }
    if (kind == "normal") {
      detail::reject_unknown(j, path, {"kind", "mu", "sigma"});
      return Density::normal(detail::number(j, path, "mu"), detail::number(j, path, "sigma"));
    }
    if (kind == "logistic") {
      detail::reject_unknown(j, path, {"kind", "mu", "s"});
      return Density::logistic(detail::number(j, path, "mu"), detail::number(j, path, "s"));
    }
    if (kind == "tabulated") {
      detail::reject_unknown(j, path, {"kind", "x", "pdf", "cdf"});
      auto x = detail::numbers(j, path, "x");
      auto p = detail::numbers(j, path, "pdf");
      if (j.contains("cdf")) return Density::tabulated(std::move(x), p, detail::numbers(j, path, "cdf"));
      return Density::tabulated(std::move(x), p);
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  } catch (const NumericError& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(detail::join(path, "kind"), "unknown density kind '" + kind + "'");
}

inline json density_to_json(const Density& d) {
  switch (d.kind()) {
    case DensityKind::uniform: return {{"kind", "uniform"}, {"lo", d.support().lo}, {"hi", d.support().hi}};
    case DensityKind::normal: return {{"kind", "normal"}, {"mu", d.location()}, {"sigma", d.scale()}};
    case DensityKind::logistic: return {{"kind", "logistic"}, {"mu", d.location()}, {"s", d.scale()}};
    case DensityKind::tabulated: {
      const auto& nodes = *d.nodes();
      std::vector<double> x, p, c;
      for (double y : nodes) x.push_back(d.location() + d.scale() * y);
      if (x.front() > x.back()) std::reverse(x.begin(), x.end());
      for (double t : x) {
        p.push_back(d.pdf(t));
        c.push_back(d.cdf(t));
      }
      return {{"kind", "tabulated"}, {"x", x}, {"pdf", p}, {"cdf", c}};
    }
  }
  return {};
}

inline json environment_to_json(const Environment& env) {
  return {{"v0", env.v0()},
          {"type_dist", density_to_json(env.type_dist())},
          {"shock_dist", density_to_json(env.shock_dist())},
          {"sigma", env.sigma()}};
}

struct RunConfig {
  std::optional<Environment> environment;
  int gamma_points = 201;
  QuadratureOptions quadrature;
  std::string out = ".";
  std::vector<Setting> settings;
  std::vector<double> sigmas;
  int grid = 200;
  int types = 21;
  std::string suite = "all";
};

inline const char* running_example_config() {
  return R"({"v0": 7.0, "type_dist": {"kind": "uniform", "lo": -1, "hi": 1}, )"
         R"("shock_dist": {"kind": "normal", "mu": 0, "sigma": 1}, "sigma": 1.0})";
}

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  detail::reject_unknown(j, "", {"v0", "type_dist", "shock_dist", "sigma", "gamma_points", "quadrature", "out",
                                 "settings", "sigmas", "grid", "types", "suite"});
  RunConfig c;
  auto integer = [&](const char* key, int min) {
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < min)
      throw ConfigError(key, "expected an integer >= " + std::to_string(min));
    return static_cast<int>(v.get<long long>());
  };
  if (j.contains("gamma_points")) c.gamma_points = integer("gamma_points", 101);
  if (j.contains("grid")) c.grid = integer("grid", 100);
  if (j.contains("types")) c.types = integer("types", 2);
  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    if (!q.is_object()) throw ConfigError("quadrature", "expected an object");
    detail::reject_unknown(q, "quadrature", {"rel_tol", "abs_tol", "max_panels"});
    if (q.contains("rel_tol")) c.quadrature.rel_tol = detail::number(q, "quadrature", "rel_tol");
    if (q.contains("abs_tol")) c.quadrature.abs_tol = detail::number(q, "quadrature", "abs_tol");
    if (q.contains("max_panels")) c.quadrature.max_panels = static_cast<int>(detail::number(q, "quadrature", "max_panels"));
    if (!(c.quadrature.rel_tol > 0) || !(c.quadrature.abs_tol > 0) || c.quadrature.max_panels < 1)
      throw ConfigError("quadrature", "tolerances and panel count must be positive");
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ConfigError("out", "expected a path string");
    c.out = j.at("out").get<std::string>();
  }
  if (j.contains("suite")) {
    if (!j.at("suite").is_string()) throw ConfigError("suite", "expected a string");
    c.suite = j.at("suite").get<std::string>();
  }
  if (j.contains("settings")) {
    const json& s = j.at("settings");
    if (!s.is_array()) throw ConfigError("settings", "expected an array of setting names");
    for (size_t i = 0; i < s.size(); ++i) {
      const std::string path = "settings[" + std::to_string(i) + "]";
      if (!s[i].is_string()) throw ConfigError(path, "expected a setting name");
      auto parsed = parse_setting(s[i].get<std::string>());
      if (!parsed) throw ConfigError(path, "unknown setting '" + s[i].get<std::string>() + "'");
      c.settings.push_back(*parsed);
    }
  }
  if (j.contains("sigmas")) {
    c.sigmas = detail::numbers(j, "", "sigmas");
    for (size_t i = 0; i < c.sigmas.size(); ++i)
      if (!(c.sigmas[i] > 0) || !std::isfinite(c.sigmas[i]))
        throw ConfigError("sigmas[" + std::to_string(i) + "]", "expected a positive number");
  }

  const double v0 = detail::number(j, "", "v0");
  if (!j.contains("type_dist")) throw ConfigError("type_dist", "missing density record");
  if (!j.contains("shock_dist")) throw ConfigError("shock_dist", "missing density record");
  Density g = density_from_json(j.at("type_dist"), "type_dist");
  Density f = density_from_json(j.at("shock_dist"), "shock_dist");
  double sigma = 1.0;
  if (j.contains("sigma")) {
    sigma = detail::number(j, "", "sigma");
    if (!(sigma > 0)) throw ConfigError("sigma", "expected a positive number");
  }
  if (!g.support().bounded()) throw ConfigError("type_dist", "type distribution needs bounded support");
  if (std::abs(f.mean()) > 1e-6) throw ConfigError("shock_dist", "shock distribution must have mean zero");
  try {
    c.environment.emplace(v0, g, f, sigma, c.quadrature);
  } catch (const InvalidArgument& e) {
    throw ConfigError("<root>", e.what());
  }
  return c;
}

// 1-based line of a byte offset in text.
inline size_t line_of(const std::string& text, size_t byte) {
  size_t line = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(text, e.byte)), "malformed JSON");
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json schedule_to_json(const TabulatedSchedule& s) {
  return {{"firm", to_string(s.firm())},
          {"gamma_grid", detail::array(s.gamma_grid())},
          {"strike", detail::array(s.strike_at())},
          {"fee", detail::array(s.fee_at())},
          {"demand", detail::array(s.demand_at())},
          {"boundary_fee", s.boundary_fee()},
          {"max_strike", s.max_strike()}};
}

inline TabulatedSchedule schedule_from_json(const json& j) {
  const Firm f = j.at("firm").get<std::string>() == "A" ? Firm::A : Firm::B;
  return TabulatedSchedule(f, detail::from_array(j.at("gamma_grid")), detail::from_array(j.at("strike")),
                           detail::from_array(j.at("fee")), detail::from_array(j.at("demand")),
                           j.at("boundary_fee").get<double>(), j.at("max_strike").get<double>());
}

inline json solution_to_json(const SettingSolution& sol) {
  json j;
  j["setting"] = to_string(sol.setting);
  j["environment"] = environment_to_json(sol.env);
  j["gamma_grid"] = detail::array(sol.gamma_grid);
  for (Firm f : {Firm::A, Firm::B}) {
    std::vector<double> p, s;
    for (double g : sol.gamma_grid) {
      const Contract c = sol.contract(f, g);
      p.push_back(c.strike);
      s.push_back(c.fee);
    }
    j[f == Firm::A ? "strike_a" : "strike_b"] = detail::array(p);
    j[f == Firm::A ? "fee_a" : "fee_b"] = detail::array(s);
  }
  json sched = json::object();
  if (sol.schedule_a) sched["A"] = schedule_to_json(*sol.schedule_a);
  if (sol.schedule_b) sched["B"] = schedule_to_json(*sol.schedule_b);
  j["schedules"] = sched;
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  j["spot_prices"] = sol.spot_prices ? json::array({sol.spot_prices->first, sol.spot_prices->second}) : json(nullptr);
  j["theta_star"] = opt(sol.theta_star);
  j["gamma_dagger"] = opt(sol.gamma_dagger);
  j["split_residual"] = opt(sol.split_residual);
  j["mm_fee"] = opt(sol.mm_fee);
  const CoverageFlags& c = sol.coverage;
  j["coverage"] = {{"max_inverse_density", c.max_inverse_density},
                   {"existence", c.existence},
                   {"uniqueness", c.uniqueness},
                   {"regular", c.regular},
                   {"spot_threshold", opt(c.spot_threshold)},
                   {"exclusive_threshold", opt(c.exclusive_threshold)},
                   {"vbar", opt(c.vbar)},
                   {"vbar_holds", c.vbar_holds ? json(*c.vbar_holds) : json(nullptr)},
                   {"corner", c.corner}};
  return j;
}

inline SettingSolution solution_from_json(const json& j) {
  auto setting = parse_setting(j.at("setting").get<std::string>());
  if (!setting) throw InvalidArgument("unknown setting in solution JSON");
  RunConfig rc = parse_config(j.at("environment"));
  SettingSolution sol(*setting, *rc.environment);
  sol.gamma_grid = detail::from_array(j.at("gamma_grid"));
  const json& s = j.at("schedules");
  if (s.contains("A")) sol.schedule_a.emplace(schedule_from_json(s.at("A")));
  if (s.contains("B")) sol.schedule_b.emplace(schedule_from_json(s.at("B")));
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  if (j.contains("spot_prices") && !j.at("spot_prices").is_null())
    sol.spot_prices = std::pair{j.at("spot_prices")[0].get<double>(), j.at("spot_prices")[1].get<double>()};
  sol.theta_star = opt("theta_star");
  sol.gamma_dagger = opt("gamma_dagger");
  sol.split_residual = opt("split_residual");
  sol.mm_fee = opt("mm_fee");
  const json& c = j.at("coverage");
  sol.coverage.max_inverse_density = c.at("max_inverse_density").get<double>();
  sol.coverage.existence = c.at("existence").get<bool>();
  sol.coverage.uniqueness = c.at("uniqueness").get<bool>();
  sol.coverage.regular = c.at("regular").get<bool>();
  sol.coverage.corner = c.at("corner").get<bool>();
  auto copt = [&](const char* key) -> std::optional<double> {
    return c.at(key).is_null() ? std::nullopt : std::optional<double>(c.at(key).get<double>());
  };
  sol.coverage.spot_threshold = copt("spot_threshold");
  sol.coverage.exclusive_threshold = copt("exclusive_threshold");
  sol.coverage.vbar = copt("vbar");
  if (!c.at("vbar_holds").is_null()) sol.coverage.vbar_holds = c.at("vbar_holds").get<bool>();
  return sol;
}

inline std::string solution_csv(const SettingSolution& sol) {
  std::string out = "gamma,strike_A,fee_A,strike_B,fee_B\n";
  for (double g : sol.gamma_grid) {
    const Contract a = sol.contract(Firm::A, g), b = sol.contract(Firm::B, g);
    out += csv_number(g) + "," + csv_number(a.strike) + "," + csv_number(a.fee) + "," + csv_number(b.strike) + "," +
           csv_number(b.fee) + "\n";
  }
  return out;
}

inline json report_to_json(const OracleReport& r) {
  json j{{"name", r.name},
         {"status", to_string(r.status)},
         {"pass", r.passed()},
         {"worst_residual", detail::nullable(r.worst_residual)},
         {"tolerance", r.tolerance},
         {"detail", r.detail}};
  if (r.witness) {
    j["witness"] = {{"gamma", r.witness->gamma},
                    {"theta", r.witness->theta ? detail::nullable(*r.witness->theta) : json(nullptr)},
                    {"p_a", detail::nullable(r.witness->p_a)},
                    {"p_b", detail::nullable(r.witness->p_b)}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

inline json limits_to_json(const LimitQuantities& l) {
  return {{"lim_fee_a", l.fee_a},   {"lim_fee_b", l.fee_b}, {"lim_cs_ne", l.cs_ne},
          {"lim_cs_sp", l.cs_sp},   {"lim_cs_e", l.cs_e},   {"inverse_shock_density", l.inverse_shock_density},
          {"hypothesis_holds", l.hypothesis_holds}};
}

}  // namespace screenequil
