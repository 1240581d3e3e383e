#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "screenequil/screenequil.hpp"

namespace fs = std::filesystem;
using namespace screenequil;

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> settings;
  std::vector<double> sigmas;
  int gamma_points = 0;
  int grid = 0;
  std::string out;
  std::string suite;
};

RunConfig resolve(const Flags& fl) {
  RunConfig c = fl.config.empty() ? parse_config_text(running_example_config()) : load_config(fl.config);
  if (fl.gamma_points) {
    if (fl.gamma_points < 101) throw ConfigError("gamma-points", "expected an integer >= 101");
    c.gamma_points = fl.gamma_points;
  }
  if (fl.grid) {
    if (fl.grid < 100) throw ConfigError("grid", "expected an integer >= 100");
    c.grid = fl.grid;
  }
  if (!fl.out.empty()) c.out = fl.out;
  if (!fl.suite.empty()) c.suite = fl.suite;
  if (!fl.settings.empty()) {
    c.settings.clear();
    for (const auto& s : fl.settings) {
      auto parsed = parse_setting(s);
      if (!parsed) throw ConfigError("setting", "unknown setting '" + s + "'");
      c.settings.push_back(*parsed);
    }
  }
  for (double s : fl.sigmas)
    if (!(s > 0) || !std::isfinite(s)) throw ConfigError("sigma", "expected a positive number");
  if (!fl.sigmas.empty()) c.sigmas = fl.sigmas;
  return c;
}

// Environment at the single sigma requested for non-sweep commands.
Environment environment_at(const RunConfig& c) {
  const Environment& env = *c.environment;
  if (c.sigmas.empty()) return env;
  if (c.sigmas.size() > 1) throw ConfigError("sigma", "more than one sigma is only valid for sweep");
  return scale(env, c.sigmas.front() / env.sigma());
}

fs::path output_dir(const RunConfig& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

std::vector<Setting> settings_or(const RunConfig& c, std::vector<Setting> fallback) {
  return c.settings.empty() ? fallback : c.settings;
}

std::string surplus_header() {
  return "setting,consumer_surplus,producer_surplus_a,producer_surplus_b,total_surplus,total_surplus_direct,"
         "fee_revenue_a,fee_revenue_b\n";
}

std::string surplus_row(const SurplusReport& r) {
  return std::string(to_string(r.setting)) + "," + csv_number(r.consumer_surplus) + "," +
         csv_number(r.producer_surplus_a) + "," + csv_number(r.producer_surplus_b) + "," +
         csv_number(r.total_surplus) + "," + csv_number(r.total_surplus_direct) + "," + csv_number(r.fee_revenue_a) +
         "," + csv_number(r.fee_revenue_b) + "\n";
}

int cmd_solve(const RunConfig& c) {
  const Environment env = environment_at(c);
  const fs::path dir = output_dir(c);
  for (Setting s : settings_or(c, {Setting::duopoly})) {
    const SettingSolution sol = solve(env, s, c.gamma_points);
    const std::string stem = std::string("solution_") + to_string(s);
    write_file(dir / (stem + ".csv"), solution_csv(sol));
    write_file(dir / (stem + ".json"), solution_to_json(sol).dump(2) + "\n");
  }
  return 0;
}

int cmd_surplus(const RunConfig& c) {
  const Environment env = environment_at(c);
  std::string csv = surplus_header();
  for (Setting s : settings_or(c, {Setting::duopoly, Setting::spot, Setting::exclusive, Setting::multiproduct}))
    csv += surplus_row(surplus(env, solve(env, s, c.gamma_points)));
  write_file(output_dir(c) / "surplus.csv", csv);
  return 0;
}

int cmd_figure(const RunConfig& c) {
  const Environment env = environment_at(c);
  const FigureData d = figure_data(env, c.gamma_points);
  std::string csv = "gamma,U_spot,U_ne,U_exclusive\n";
  for (size_t i = 0; i < d.spot.gamma_grid.size(); ++i)
    csv += csv_number(d.spot.gamma_grid[i]) + "," + csv_number(d.spot.values[i]) + "," + csv_number(d.ne.values[i]) +
           "," + csv_number(d.exclusive.values[i]) + "\n";
  const fs::path dir = output_dir(c);
  write_file(dir / "figure.csv", csv);

  auto shape = [](const CurveShape& s) {
    return json{{"min_second_difference", s.min_second_difference}, {"max_asymmetry", s.max_asymmetry}};
  };
  auto dispersion = [](const DispersionResult& r) {
    return json{{"verdict", to_string(r.verdict)}, {"max_excess", r.max_excess}, {"worst_deficit", r.worst_deficit}};
  };
  auto ordering = [](const LevelOrdering& o) {
    return json{{"claim", "U_" + o.upper + " >= U_" + o.lower + " at every type"},
                {"holds", o.violations == 0},
                {"violations", o.violations},
                {"worst_gap", o.worst_gap},
                {"worst_gamma", o.worst_gamma}};
  };
  json report{{"shape", {{"spot", shape(d.spot_shape)}, {"duopoly", shape(d.ne_shape)}, {"exclusive", shape(d.exclusive_shape)}}},
              {"dispersion", {{"exclusive_over_duopoly", dispersion(d.e_over_ne)}, {"duopoly_over_spot", dispersion(d.ne_over_sp)}}},
              {"level_ordering", json::array({ordering(d.e_vs_ne), ordering(d.ne_vs_sp)})}};
  write_file(dir / "figure_report.json", report.dump(2) + "\n");
  for (const LevelOrdering* o : {&d.e_vs_ne, &d.ne_vs_sp})
    if (o->violations > 0)
      std::cout << "flag: U_" << o->upper << " >= U_" << o->lower << " fails at " << o->violations << " of "
                << d.spot.gamma_grid.size() << " types (worst gap " << csv_number(o->worst_gap) << " at gamma "
                << csv_number(o->worst_gamma) << "); curves emitted as computed\n";
  return 0;
}

int cmd_limits(const RunConfig& c) {
  const LimitQuantities l = limit_quantities(*c.environment);
  write_file(output_dir(c) / "limits.json", limits_to_json(l).dump(2) + "\n");
  if (!l.hypothesis_holds) std::cout << "flag: v0 > 1/f(0) does not hold; limits reported outside the hypothesis\n";
  return 0;
}

int cmd_verify(const RunConfig& c) {
  const Environment env = environment_at(c);
  const auto reports = run_suite(env, c.suite, {c.gamma_points, c.grid, c.types});
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back(report_to_json(r));
    std::printf("%-8s %-34s residual %-14s tol %s\n", to_string(r.status), r.name.c_str(),
                csv_number(r.worst_residual).c_str(), csv_number(r.tolerance).c_str());
  }
  const int code = verify_exit_code(reports);
  write_file(output_dir(c) / "verify.json", json{{"suite", c.suite}, {"exit_code", code}, {"checks", arr}}.dump(2) + "\n");
  return code;
}

int cmd_sweep(const RunConfig& c) {
  const Environment& env = *c.environment;
  const std::vector<double> sigmas = c.sigmas.empty() ? std::vector<double>{1.0, 0.2, 0.1, 0.05, 0.02} : c.sigmas;
  std::string csv = "sigma," + surplus_header();
  for (double s : sigmas) {
    const Environment e = scale(env, s / env.sigma());
    for (Setting st : settings_or(c, {Setting::duopoly, Setting::spot, Setting::exclusive}))
      csv += csv_number(s) + "," + surplus_row(surplus(e, solve(e, st, c.gamma_points)));
  }
  write_file(output_dir(c) / "sweep.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competitive sequential screening: equilibrium solver and verifier"};
  app.require_subcommand(1);
  Flags fl;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", fl.config, "JSON run configuration (default: built-in running example)");
    sub->add_option("--setting", fl.settings, "Setting name; repeatable");
    sub->add_option("--sigma", fl.sigmas, "Signal scale; repeatable for sweep")->allow_extra_args(false);
    sub->add_option("--gamma-points", fl.gamma_points, "Type grid size (>= 101)");
    sub->add_option("--grid", fl.grid, "Oracle strike grid size (>= 100)");
    sub->add_option("--out", fl.out, "Output directory");
    sub->add_option("--suite", fl.suite, "Oracle suite for verify");
  };
  std::vector<std::pair<CLI::App*, int (*)(const RunConfig&)>> commands{
      {app.add_subcommand("solve", "Solve settings and write solution CSV/JSON"), cmd_solve},
      {app.add_subcommand("surplus", "Write the surplus table"), cmd_surplus},
      {app.add_subcommand("figure", "Write interim utility curves and the comparison report"), cmd_figure},
      {app.add_subcommand("limits", "Write early-contracting limit quantities"), cmd_limits},
      {app.add_subcommand("verify", "Run the oracle suite"), cmd_verify},
      {app.add_subcommand("sweep", "Surplus across a sigma list"), cmd_sweep}};
  for (auto& [sub, _] : commands) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    const RunConfig c = resolve(fl);
    for (auto& [sub, fn] : commands)
      if (sub->parsed()) return fn(c);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const RegularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const UnsupportedAssumption& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
