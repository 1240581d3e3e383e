// Acceptance criteria for the running example: one [PASS]/[FAIL] line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "reference.hpp"
#include "screenequil/screenequil.hpp"

using namespace screenequil;
namespace fs = std::filesystem;

namespace {

Environment running() { return Environment(7.0, Density::uniform(-1, 1), Density::normal(0, 1)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double duopoly_fee_b_reference(double gamma) {
  return 2 * reference::normal_option(3.0) +
         2 * reference::simpson([](double t) { return reference::Phi(3 * t); }, -1.0, gamma, 20000);
}

Outcome strike_maps() {
  Outcome o;
  const Environment env = running();
  const auto t0 = std::chrono::steady_clock::now();
  const SettingSolution s = solve_duopoly(env, 201);
  const double elapsed = seconds_since(t0);
  double err = 0, twice = 0;
  for (double g : s.gamma_grid) {
    err = std::max({err, std::abs(s.strike(Firm::A, g) - 2 * (1 + g)), std::abs(s.strike(Firm::B, g) - 2 * (1 - g))});
    for (Firm f : {Firm::A, Firm::B}) twice = std::max(twice, std::abs(s.strike(f, g) - 2 * monopoly_strike(env, f, g)));
  }
  o.require(s.gamma_grid.size() == 201, "201-point grid");
  o.require(err <= 1e-12, "max |p* - 2(1 +- gamma)| = " + fmt(err));
  o.require(twice == 0.0, "max |p* - 2 p^M| = " + fmt(twice));
  o.require(elapsed < 1.0, "solve time " + fmt(elapsed) + " s");
  return o;
}

Outcome spot() {
  Outcome o;
  const SettingSolution s = solve_spot(running());
  const double h0 = (reference::Phi(1) - reference::Phi(-1)) / 2;
  o.require(std::abs(*s.theta_star) <= 1e-10, "theta* = " + fmt(*s.theta_star));
  o.require(std::abs(s.spot_prices->first - 2.929594) <= 1e-5 && std::abs(s.spot_prices->second - 2.929594) <= 1e-5,
            "p_A = " + fmt(s.spot_prices->first) + ", p_B = " + fmt(s.spot_prices->second));
  o.require(std::abs(s.position_law->pdf(0.0) - h0) <= 1e-9, "h(0) = " + fmt(s.position_law->pdf(0.0)));
  const SettingSolution a = solve_spot(Environment(7.0, Density::uniform(-0.5, 1.5), Density::normal(0, 1)));
  const double m = a.position_law->quantile(0.5);
  o.require(*a.theta_star > 0 && *a.theta_star < m,
            "shifted types: 0 < theta* = " + fmt(*a.theta_star) + " < median " + fmt(m));
  o.require(a.spot_prices->first < a.spot_prices->second,
            "shifted types: p_A = " + fmt(a.spot_prices->first) + " < p_B = " + fmt(a.spot_prices->second));
  return o;
}

Outcome exclusive() {
  Outcome o;
  const Environment env = running();
  const SettingSolution s = solve_exclusive(env);
  const double d = *s.gamma_dagger;
  const double pa = monopoly_strike(env, Firm::A, d), pb = monopoly_strike(env, Firm::B, d);
  o.require(std::abs(d) <= 1e-8, "gamma_dagger = " + fmt(d));
  o.require(std::abs(pa - 1) <= 1e-10 && std::abs(pb - 1) <= 1e-10, "p_A = " + fmt(pa) + ", p_B = " + fmt(pb));
  const double fee = s.schedule_b->fee(pb);
  o.require(std::abs(fee - 0.999999) <= 1e-5, "s^E_B(p_dagger) = " + fmt(fee));
  o.require(*s.split_residual <= 1e-10, "split residual " + fmt(*s.split_residual));
  return o;
}

Outcome multiproduct() {
  Outcome o;
  const Environment env = running();
  const SettingSolution s = solve_multiproduct(env);
  o.require(std::abs(*s.mm_fee - 7.797885) <= 1e-6, "fee " + fmt(*s.mm_fee));
  const double kmax = reference::Phi(-2);
  const Density n = Density::normal(0, 1);
  double best = INFINITY;
  for (int i = 1; i < 400000; ++i) {
    const double k = kmax * i / 400000.0;
    best = std::min(best, std::max(2 * reference::phi(0) / k, std::abs(n.quantile(kmax - k))));
  }
  const double vbar = *s.coverage.vbar, indep = 4 * best;
  o.require(std::abs(vbar / indep - 1) <= 1e-3, "vbar " + fmt(vbar) + " vs grid minimization " + fmt(indep));
  o.require(s.coverage.vbar_holds == false && env.v0() < vbar, "v0 = 7 < vbar, comparison gated");
  return o;
}

Outcome schedules() {
  Outcome o;
  const Environment env = running();
  const SettingSolution s = solve_duopoly(env);
  const SettingSolution m = solve_monopoly(env, Firm::B);
  struct Row {
    const char* name;
    double got, expected, indep;
  };
  const std::vector<Row> rows{
      {"s*_B(4)", s.schedule_b->fee(4), 7.642e-4, duopoly_fee_b_reference(-1)},
      {"s*_B(2)", s.schedule_b->fee(2), 0.266468, duopoly_fee_b_reference(0)},
      {"s*_B(0)", s.schedule_b->fee(0), 2.000764, duopoly_fee_b_reference(1)},
      {"s^M_B(2)", m.schedule_b->fee(2), 4.000007, 4 * reference::Phi(4) + reference::phi(4)}};
  for (const Row& r : rows)
    o.require(std::abs(r.got - r.expected) <= 1e-5 && std::abs(r.got - r.indep) <= 1e-7,
              std::string(r.name) + " = " + fmt(r.got) + " (quadrature " + fmt(r.indep) + ")");
  const OracleReport d = dominance_check(env);
  o.require(d.passed() && d.worst_residual < -1e-6, "dominance margin " + fmt(-d.worst_residual));
  return o;
}

Outcome envelope() {
  Outcome o;
  const Environment env = running();
  const SettingSolution ne = solve_duopoly(env);
  for (const SettingSolution& s : {ne, solve_spot(env), solve_exclusive(env)}) {
    const OracleReport r = envelope_residual(env, s, 201);
    o.require(r.worst_residual <= 1e-5, r.name + " residual " + fmt(r.worst_residual));
  }
  double worst = 0;
  for (double g : linspace(-1, 1, 201)) {
    const double gap = interim_demand(env, ne, Firm::B, g) - interim_demand(env, ne, Firm::A, g);
    worst = std::max(worst, std::abs(gap - (2 * interim_demand(env, ne, Firm::B, g) - 1)));
  }
  o.require(worst <= 1e-6, "duopoly integrand vs 2 E[q_B] - 1: " + fmt(worst));
  return o;
}

Outcome best_responses() {
  Outcome o;
  const Environment env = running();
  const auto t0 = std::chrono::steady_clock::now();
  const SettingSolution ne = solve_duopoly(env);
  const auto types = linspace(-1, 1, 21);
  const ConsumerBrSweep c = consumer_br_sweep(env, ne, types, 200);
  o.require(c.position.passed(), "consumer argmax within one cell (worst " + fmt(c.position.worst_residual) + " cells)");
  o.require(c.value.passed(), "consumer value gap " + fmt(c.value.worst_residual));
  o.require(c.monotone.passed(), "monotone selection");
  auto firm = parallel_map<std::vector<OracleReport>>(2 * types.size(), [&](size_t i) {
    return firm_pointwise_check(env, ne, i < types.size() ? Firm::A : Firm::B, types[i % types.size()], 200);
  });
  std::vector<OracleReport> all;
  for (auto& v : firm) all.insert(all.end(), v.begin(), v.end());
  for (const OracleReport& r : merge_by_name(all))
    o.require(r.passed(), r.name + " worst " + fmt(r.worst_residual));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  return o;
}

Outcome efficiency() {
  Outcome o;
  const Environment env = running();
  const EfficiencyResult r = efficiency_check(env, solve_duopoly(env), solve_exclusive(env));
  o.require(r.report.passed(), "q* weakly better at every node (worst " + fmt(r.report.worst_residual) + ")");
  o.require(r.covered_mass >= 0.9999, "grid mass " + fmt(r.covered_mass));
  o.require(r.strict_mass > 0.01, "strict-improvement mass " + fmt(r.strict_mass));
  return o;
}

Outcome early_contracting() {
  Outcome o;
  const Environment env = running();
  const WelfareRanking w = welfare_ranking_check(env, 0.05);
  const double ps_e = w.ex.producer_surplus_a + w.ex.producer_surplus_b;
  const double ps_ne = w.ne.producer_surplus_a + w.ne.producer_surplus_b;
  const double ps_sp = w.sp.producer_surplus_a + w.sp.producer_surplus_b;
  const double margin = std::min({w.ex.consumer_surplus - w.ne.consumer_surplus,
                                  w.ne.consumer_surplus - w.sp.consumer_surplus, ps_ne - ps_e, ps_sp - ps_ne});
  o.require(margin > 1e-4, "sigma = 0.05 orderings, smallest margin " + fmt(margin));
  const WelfareRanking v = welfare_ranking_check(env, 0.01);
  const double lim = 0.797885;
  const double fee_dev = std::max(std::abs(v.ne.fee_revenue_a - lim), std::abs(v.ne.fee_revenue_b - lim)) / lim;
  o.require(fee_dev <= 0.01, "sigma = 0.01 per-firm NE fee " + fmt(v.ne.fee_revenue_b) + ", " +
                                 fmt(100 * fee_dev) + "% from 0.797885");
  const double cs[3] = {v.ex.consumer_surplus, v.ne.consumer_surplus, v.sp.consumer_surplus};
  const double target[3] = {7.0, 6.202115, 5.291257};
  double cs_dev = 0;
  for (int i = 0; i < 3; ++i) cs_dev = std::max(cs_dev, std::abs(cs[i] - target[i]) / target[i]);
  o.require(cs_dev <= 0.02, "sigma = 0.01 CS E/NE/SP " + fmt(cs[0]) + "/" + fmt(cs[1]) + "/" + fmt(cs[2]) +
                                ", worst " + fmt(100 * cs_dev) + "%");
  return o;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

Outcome utility_curves() {
  Outcome o;
  const Environment env = running();
  const FigureData d = figure_data(env, 201);
  for (auto [name, s] : {std::pair{"U^E", d.exclusive_shape}, {"U^NE", d.ne_shape}, {"U^SP", d.spot_shape}}) {
    o.require(s.min_second_difference >= -1e-8, std::string(name) + " min second difference " + fmt(s.min_second_difference));
    o.require(s.max_asymmetry <= 1e-8, std::string(name) + " asymmetry " + fmt(s.max_asymmetry));
  }
  o.require(d.e_over_ne.verdict == DispersionVerdict::strictly_more && d.e_over_ne.max_excess > 1e-6,
            std::string("U^E vs U^NE ") + to_string(d.e_over_ne.verdict));
  o.require(d.ne_over_sp.verdict == DispersionVerdict::strictly_more && d.ne_over_sp.max_excess > 1e-6,
            std::string("U^NE vs U^SP ") + to_string(d.ne_over_sp.verdict));

  const fs::path out = fs::temp_directory_path() / ("screenequil_acceptance_" + std::to_string(::getpid()));
  const std::string cmd = std::string(SCREENEQUIL_BIN) + " figure --out " + out.string() + " > /dev/null";
  o.require(std::system(cmd.c_str()) == 0, "figure subcommand");
  const auto rows = read_csv(out / "figure.csv");
  fs::remove_all(out);
  o.require(rows.size() == 201, "figure rows " + std::to_string(rows.size()));
  if (rows.size() == 201) {
    const auto& mid = rows[100];
    const double e_abs = std::sqrt(2 / M_PI);
    const double sp_ref = 7 + e_abs - 2 / (reference::Phi(1) - reference::Phi(-1));
    const double ne_ref = 5 + e_abs - 2 * duopoly_fee_b_reference(0);
    o.require(std::abs(mid[1] - 4.868291) <= 1e-5 && std::abs(mid[1] - sp_ref) <= 1e-7,
              "U^SP(0) = " + fmt(mid[1]) + " (quadrature " + fmt(sp_ref) + ")");
    o.require(std::abs(mid[2] - 5.264949) <= 1e-4 && std::abs(mid[2] - ne_ref) <= 1e-7,
              "U^NE(0) = " + fmt(mid[2]) + " (quadrature " + fmt(ne_ref) + ")");
  }
  for (const LevelOrdering* l : {&d.e_vs_ne, &d.ne_vs_sp})
    o.note(l->violations ? "flagged: U_" + l->upper + " < U_" + l->lower + " at " + std::to_string(l->violations) +
                               " types, worst gap " + fmt(l->worst_gap) + " at gamma " + fmt(l->worst_gamma)
                         : "U_" + l->upper + " >= U_" + l->lower + " at every type");
  return o;
}

struct Criterion {
  const char* title;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {"duopoly strike maps", strike_maps},
      {"spot equilibrium", spot},
      {"exclusive equilibrium", exclusive},
      {"multi-product fee and vbar gate", multiproduct},
      {"schedule values and dominance", schedules},
      {"envelope residuals", envelope},
      {"consumer and firm best responses", best_responses},
      {"pointwise efficiency", efficiency},
      {"early-contracting welfare ranking", early_contracting},
      {"interim utility curves", utility_curves}};
  return c;
}

bool run_one(int n) {
  const Criterion& c = criteria().at(n - 1);
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  std::printf("[%s] AC%d %s: %s\n", o.pass ? "PASS" : "FAIL", n, c.title, o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const int count = static_cast<int>(criteria().size());
  if (argc == 3 && std::string(argv[1]) == "--criterion") {
    const int n = std::atoi(argv[2]);
    if (n < 1 || n > count) {
      std::fprintf(stderr, "criterion must be in 1..%d\n", count);
      return 2;
    }
    return run_one(n) ? 0 : 1;
  }
  if (argc != 1) {
    std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
    return 2;
  }
  bool all = true;
  for (int n = 1; n <= count; ++n) all = run_one(n) && all;
  return all ? 0 : 1;
}
