#include <gtest/gtest.h>

#include <cmath>

#include "reference.hpp"
#include "screenequil/equilibria.hpp"
#include "screenequil/errors.hpp"

using namespace screenequil;

namespace {

Environment running() { return Environment(7.0, Density::uniform(-1, 1), Density::normal(0, 1)); }

// Duopoly fee of firm B at strike 2(1 - gamma): boundary term plus 2 * integral of Phi(3 t) from -1 to gamma.
double duopoly_fee_b_reference(double gamma) {
  const double boundary = 2.0 * reference::normal_option(3.0);
  if (gamma <= -1) return boundary;
  return boundary + 2.0 * reference::simpson([](double t) { return reference::Phi(3 * t); }, -1.0, gamma, 20000);
}

}  // namespace

TEST(Monopoly, StrikeMapAndBoundaryFee) {
  const Environment env = running();
  const SettingSolution m = solve_monopoly(env, Firm::B);
  EXPECT_NEAR(m.strike(Firm::B, 0.0), 1.0, 1e-15);
  EXPECT_EQ(m.strike(Firm::B, 1.0), 0.0);
  EXPECT_EQ(m.strike(Firm::A, 0.0), kInf);
  EXPECT_NEAR(m.schedule_b->fee(2.0), 4 * reference::Phi(4) + reference::phi(4), 1e-10);
  EXPECT_NEAR(m.schedule_b->fee(2.0), 4.000007, 1e-6);
}

TEST(Monopoly, FeeIsIntegralOfDemand) {
  // s^M_B(1 - gamma) = E[(4 + Z)+] + integral over t in [-1, gamma] of 1 - Phi(-6 - 2t).
  const SettingSolution m = solve_monopoly(running(), Firm::B);
  for (double g : {-0.5, 0.0, 0.5, 1.0}) {
    const double ref = reference::normal_option(-4.0) +
                       reference::simpson([](double t) { return 1 - reference::Phi(-6 - 2 * t); }, -1.0, g);
    EXPECT_NEAR(m.schedule_b->fee(1.0 - g), ref, 1e-8) << g;
  }
}

TEST(Monopoly, RefusesNonMonotoneHazard) {
  const Density bumpy = Density::from_pdf(
      [](double x) { return 0.5 * (reference::phi((x - 0.6) / 0.15) + reference::phi((x + 0.6) / 0.15)) / 0.15; }, -1,
      1);
  const Environment env(7.0, bumpy, Density::normal(0, 1));
  EXPECT_THROW(solve_monopoly(env, Firm::B), RegularityError);
  EXPECT_THROW(solve_duopoly(env.with_v0(5000.0)), RegularityError);
}

TEST(Duopoly, StrikeMapsExactOnGrid) {
  const Environment env = running();
  const SettingSolution s = solve_duopoly(env);
  ASSERT_EQ(s.gamma_grid.size(), 201u);
  for (double g : s.gamma_grid) {
    EXPECT_NEAR(s.strike(Firm::A, g), 2 * (1 + g), 1e-12);
    EXPECT_NEAR(s.strike(Firm::B, g), 2 * (1 - g), 1e-12);
    EXPECT_EQ(s.strike(Firm::A, g), 2 * monopoly_strike(env, Firm::A, g));
    EXPECT_NEAR(s.strike(Firm::A, g) + s.strike(Firm::B, g), 2 / env.type_law().pdf(g), 1e-12);
  }
  EXPECT_EQ(s.strike(Firm::A, 0.5), 3.0);
  EXPECT_EQ(s.strike(Firm::B, 0.5), 1.0);
}

TEST(Duopoly, ScheduleValuesAgainstSimpson) {
  const SettingSolution s = solve_duopoly(running());
  const TabulatedSchedule& b = *s.schedule_b;
  EXPECT_NEAR(b.fee(4.0), 2 * reference::normal_option(3.0), 1e-12);
  EXPECT_NEAR(b.fee(4.0), 0.000764, 1e-6);
  EXPECT_NEAR(b.fee(2.0), duopoly_fee_b_reference(0.0), 1e-8);
  EXPECT_NEAR(b.fee(0.0), duopoly_fee_b_reference(1.0), 1e-8);
  EXPECT_NEAR(b.fee(2.0), 0.266468, 5e-6);
  EXPECT_NEAR(b.fee(0.0), 2.000764, 1e-6);
  for (double p : {0.37, 1.0, 2.55, 3.9}) EXPECT_NEAR(b.fee(p), duopoly_fee_b_reference(1 - p / 2), 1e-7) << p;
}

TEST(Duopoly, SymmetricSchedulesCoincide) {
  const SettingSolution s = solve_duopoly(running());
  for (double p = 0.0; p <= 4.5; p += 0.05) EXPECT_NEAR(s.schedule_a->fee(p), s.schedule_b->fee(p), 1e-8) << p;
}

TEST(Duopoly, ScheduleShape) {
  const TabulatedSchedule& b = *solve_duopoly(running()).schedule_b;
  EXPECT_EQ(b.max_strike(), 4.0);
  EXPECT_EQ(b.fee(9.0), b.fee(4.0));
  EXPECT_EQ(b.fee(kInf), 0.0);
  EXPECT_THROW(b.fee(-0.1), InvalidArgument);
  EXPECT_GE(b.fee(1.0), b.fee(2.0));
  const double h = 0.01;
  for (double p = h; p < 4.0 - h; p += h) {
    EXPECT_LE(b.fee(p + h), b.fee(p) + 1e-15);
    EXPECT_GE(b.fee(p + h) - 2 * b.fee(p) + b.fee(p - h), -1e-9) << p;
    EXPECT_GT(b.fee(p), 0.0);
  }
}

TEST(Duopoly, CoveragePreconditionNamesThreshold) {
  const Environment poor = running().with_v0(0.5);
  try {
    solve_duopoly(poor);
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_NE(std::string(e.what()).find("v0 >= max 1/g = 2"), std::string::npos) << e.what();
  }
}

TEST(Duopoly, CoverageFlags) {
  const SettingSolution s = solve_duopoly(running());
  EXPECT_TRUE(s.coverage.existence);
  EXPECT_TRUE(s.coverage.uniqueness);
  EXPECT_FALSE(solve_duopoly(running().with_v0(5.0)).coverage.uniqueness);
}

TEST(Duopoly, AllocationThreshold) {
  const SettingSolution s = solve_duopoly(running());
  EXPECT_EQ(duopoly_allocation(s, 0.5, -0.5), Firm::B);
  EXPECT_EQ(duopoly_allocation(s, 0.5, -1.0), Firm::B);
  EXPECT_EQ(duopoly_allocation(s, 0.5, -1.01), Firm::A);
  EXPECT_EQ(duopoly_allocation(s, 0.0, 0.1), Firm::B);
}

TEST(Spot, SymmetricRunningExample) {
  const SettingSolution s = solve_spot(running());
  const double h0 = (reference::Phi(1) - reference::Phi(-1)) / 2;
  EXPECT_NEAR(*s.theta_star, 0.0, 1e-10);
  EXPECT_NEAR(s.spot_prices->first, 1 / h0, 1e-7);
  EXPECT_NEAR(s.spot_prices->second, 1 / h0, 1e-7);
  EXPECT_NEAR(s.spot_prices->first, 2.929594, 1e-5);
  const Density& h = *s.position_law;
  EXPECT_LE(std::abs(*s.theta_star - (1 - 2 * h.cdf(*s.theta_star)) / h.pdf(*s.theta_star)), 1e-10);
}

TEST(Spot, ShiftedTypesFavorLowPriceForA) {
  const Environment env(7.0, Density::uniform(-0.5, 1.5), Density::normal(0, 1));
  const SettingSolution s = solve_spot(env);
  const double m = s.position_law->quantile(0.5);
  EXPECT_GT(*s.theta_star, 0.0);
  EXPECT_LT(*s.theta_star, m);
  EXPECT_LT(s.spot_prices->first, s.spot_prices->second);
}

TEST(Spot, CoverageError) {
  EXPECT_THROW(solve_spot(running().with_v0(2.0)), CoverageError);
}

TEST(Exclusive, SymmetricSplit) {
  const Environment env = running();
  const SettingSolution s = solve_exclusive(env);
  EXPECT_NEAR(*s.gamma_dagger, 0.0, 1e-8);
  EXPECT_LE(*s.split_residual, 1e-10);
  EXPECT_NEAR(monopoly_strike(env, Firm::A, *s.gamma_dagger), 1.0, 1e-10);
  EXPECT_NEAR(monopoly_strike(env, Firm::B, *s.gamma_dagger), 1.0, 1e-10);
  EXPECT_NEAR(s.schedule_b->fee(1.0), reference::Phi(6), 1e-10);
  EXPECT_NEAR(s.schedule_b->fee(1.0), 0.999999, 1e-5);
  EXPECT_FALSE(s.coverage.corner);
}

TEST(Exclusive, StrikesFollowMonopolyMapOnEachSegment) {
  const Environment env = running();
  const SettingSolution s = solve_exclusive(env);
  for (double g = -1.0; g <= 1.0; g += 0.125) {
    if (g >= 0) {
      EXPECT_EQ(s.strike(Firm::B, g), monopoly_strike(env, Firm::B, g));
      EXPECT_EQ(s.strike(Firm::A, g), kInf);
      EXPECT_GT(1 - monopoly_demand(env, Firm::B, s.strike(Firm::B, g), g), 0.0);
    } else {
      EXPECT_EQ(s.strike(Firm::A, g), monopoly_strike(env, Firm::A, g));
      EXPECT_EQ(s.strike(Firm::B, g), kInf);
    }
  }
  EXPECT_TRUE(s.contract(Firm::A, 0.5).is_null());
  EXPECT_EQ(s.contract(Firm::A, 0.5).fee, 0.0);
}

TEST(Exclusive, CornerReportedNotThrown) {
  const Environment env(30.0, Density::uniform(2.0, 3.0), Density::normal(0, 1));
  const SettingSolution s = solve_exclusive(env);
  EXPECT_TRUE(s.coverage.corner);
  EXPECT_EQ(*s.gamma_dagger, env.gamma_lo());
}

TEST(Multiproduct, FeeAndGate) {
  const SettingSolution s = solve_multiproduct(running());
  EXPECT_NEAR(*s.mm_fee, 7 + std::sqrt(2 / M_PI), 1e-9);
  EXPECT_NEAR(*s.mm_fee, 7.797885, 1e-6);
  EXPECT_EQ(s.contract(Firm::A, 0.3).fee, *s.mm_fee);
  EXPECT_EQ(s.contract(Firm::A, 0.3).strike, 0.0);
  ASSERT_TRUE(s.coverage.vbar_holds.has_value());
  EXPECT_FALSE(*s.coverage.vbar_holds);
  EXPECT_NEAR(*s.coverage.vbar, 140.29, 0.05);
}

TEST(Multiproduct, RefusesAsymmetricTypes) {
  const Environment env(7.0, Density::uniform(-0.5, 1.5), Density::normal(0, 1));
  EXPECT_THROW(solve_multiproduct(env), UnsupportedAssumption);
}

TEST(Vbar, IndependentMinimization) {
  // C(kappa) = max{2 phi(0) / kappa, |Phi^-1(Phi(-2) - kappa)|} on a fine kappa grid, times max 1/g^2 = 4.
  const double kmax = reference::Phi(-2);
  double best = INFINITY;
  for (int i = 1; i < 200000; ++i) {
    const double k = kmax * i / 200000.0;
    const double c = std::max(2 * reference::phi(0) / k, std::abs(Density::normal(0, 1).quantile(kmax - k)));
    best = std::min(best, c);
  }
  EXPECT_NEAR(compute_vbar(running()) / (4 * best), 1.0, 1e-3);
}

TEST(Vbar, IncreasesWithTypeScale) {
  const Environment env = running();
  EXPECT_GT(compute_vbar(env), compute_vbar(scale(env, 0.5)));
}

TEST(Solve, DispatchAndGridSize) {
  const Environment env = running();
  EXPECT_EQ(solve(env, Setting::spot, 101).gamma_grid.size(), 101u);
  EXPECT_THROW(solve(env, Setting::duopoly, 100), InvalidArgument);
  EXPECT_EQ(parse_setting("exclusive"), Setting::exclusive);
  EXPECT_FALSE(parse_setting("cartel").has_value());
}

TEST(Sigma, ScaledDuopolyStrike) {
  const SettingSolution s = solve_duopoly(scale(running(), 0.05));
  EXPECT_NEAR(s.strike(Firm::B, 0.0), 0.1, 1e-14);
}
