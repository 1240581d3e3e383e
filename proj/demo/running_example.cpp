// Running example: uniform types on [-1, 1], standard normal shock, v0 = 7.
#include <cstdio>

#include "screenequil/screenequil.hpp"

using namespace screenequil;

int main() {
  const Environment env(7.0, Density::uniform(-1, 1), Density::normal(0, 1));

  const SettingSolution ne = solve_duopoly(env);
  std::printf("duopoly strikes at gamma = 0.5: p_A = %.6f, p_B = %.6f\n", ne.strike(Firm::A, 0.5), ne.strike(Firm::B, 0.5));
  for (double p : {0.0, 2.0, 4.0}) std::printf("  s_B(%g) = %.6f\n", p, ne.schedule_b->fee(p));

  const SettingSolution sp = solve_spot(env);
  std::printf("spot prices: %.6f, %.6f (theta* = %.2g)\n", sp.spot_prices->first, sp.spot_prices->second, *sp.theta_star);

  const SettingSolution ex = solve_exclusive(env);
  std::printf("exclusive split at gamma = %.6f\n", *ex.gamma_dagger);

  std::printf("%-12s %10s %10s %10s %10s\n", "setting", "CS", "PS_A", "PS_B", "TS");
  for (const SettingSolution* s : {&ne, &sp, &ex}) {
    const SurplusReport r = surplus(env, *s);
    std::printf("%-12s %10.6f %10.6f %10.6f %10.6f\n", to_string(r.setting), r.consumer_surplus, r.producer_surplus_a,
                r.producer_surplus_b, r.total_surplus);
  }
  return 0;
}
