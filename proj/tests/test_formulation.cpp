#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "evsched/error.hpp"
#include "evsched/formulation.hpp"
#include "support.hpp"

namespace evsched {
namespace {

using testing::make_feeder;

StationConfig tiny_station() {
  StationConfig s;
  s.node = 1;
  s.spots = 20;
  return s;
}

// Substation, station node 1 and a load node 2 behind it.
struct Tiny {
  FeederModel feeder = make_feeder({-1, 0, 1}, {0, 0.001, 0.001}, {0, 0.001, 0.001});
  LdfMatrices ldf = build_ldf_matrices(feeder);
  InjectionProfile profile;
  std::vector<double> prices;
  StationConfig station = tiny_station();

  explicit Tiny(std::vector<double> p) : profile(InjectionProfile::zeros(2, int(p.size()))),
                                         prices(std::move(p)) {}

  P1Model build(const std::vector<Contract>& contracts, int first = 1) const {
    P1Inputs in;
    in.contracts = contracts;
    in.feeder = &feeder;
    in.ldf = &ldf;
    in.profile = &profile;
    in.prices = prices;
    in.station = &station;
    in.first_interval = first;
    return build_p1(in);
  }
};

Contract candidate(int id, double s, int a, PriceTier tier = PriceTier::kC2) {
  return {id, s, a, tier, Admission::kCandidate};
}

Contract prior(int id, double s, int a, PriceTier tier = PriceTier::kC2) {
  return {id, s, a, tier, Admission::kAdmitted};
}

DecodedSchedule solve(const P1Model& m) {
  milp::MilpOptions opt;
  configure_p1_search(m, opt);
  const milp::MilpSolution sol = milp::solve_milp(m.problem, opt);
  EXPECT_EQ(sol.status, milp::MilpStatus::kOptimal);
  return decode_schedule(sol, m);
}

TEST(Requirement, EnergyAndTimeOfReturn) {
  const StationConfig st = tiny_station();
  PevRequest r;
  r.soc_plugin = 0.3;
  r.soc_plugout = 0.9;
  r.battery_kwh = 40.0;
  const double s = compute_energy_requirement(r, st);
  EXPECT_NEAR(s, 0.6 * 40.0 / 0.9, 1e-12);
  EXPECT_EQ(compute_time_of_return(s, PriceTier::kC1, st), 5);
  EXPECT_EQ(compute_time_of_return(s, PriceTier::kC2, st), 9);
  // Exact multiples do not round up.
  EXPECT_EQ(compute_time_of_return(12.0, PriceTier::kC1, st), 2);
  EXPECT_EQ(compute_time_of_return(0.1 * 3 * 6.0 / 0.3, PriceTier::kC1, st), 1);
  EXPECT_EQ(compute_time_of_return(0.0, PriceTier::kC1, st), 0);
}

TEST(Requirement, ScreeningReasons) {
  const StationConfig st = tiny_station();
  EXPECT_FALSE(screen_candidate(candidate(1, 10.0, 2), 24, st));
  EXPECT_TRUE(screen_candidate(candidate(1, 0.0, 2), 24, st));
  EXPECT_TRUE(screen_candidate(candidate(1, 14.0, 2), 24, st));  // 2 * 6.6 < 14
  EXPECT_TRUE(screen_candidate(candidate(1, 10.0, 5), 1, st));   // horizon cuts the deadline
  StationConfig closed = st;
  closed.spots = 0;
  EXPECT_TRUE(screen_candidate(candidate(1, 1.0, 2), 24, closed));
}

TEST(StationConfig, ValidateRejectsBadTiers) {
  StationConfig s = tiny_station();
  EXPECT_NO_THROW(s.validate());
  s.c2_price = s.c1_price;
  EXPECT_THROW(s.validate(), Error);
  s = tiny_station();
  s.p_max_kw = 25.0;
  EXPECT_THROW(s.validate(), Error);
  s = tiny_station();
  s.c2_avg_kw = 7.0;
  EXPECT_THROW(s.validate(), Error);
  s = tiny_station();
  s.node = 9;
  const FeederModel f = make_feeder({-1, 0}, {0, 0.01}, {0, 0.01});
  EXPECT_THROW(s.validate(&f), Error);
}

TEST(P1, ProfitableCandidateChargesInCheapestInterval) {
  const Tiny t({0.10, 0.20, 0.05});
  const P1Model m = t.build({candidate(7, 4.0, 3)});
  const DecodedSchedule d = solve(m);
  ASSERT_EQ(d.admitted, std::vector<int>{7});
  EXPECT_NEAR(d.schedule.p(0, 2), 4.0, 1e-9);
  EXPECT_NEAR(d.schedule.row_sum(0), 4.0, 1e-9);
  EXPECT_NEAR(d.objective, -0.2 * 4.0 + 0.05 * 4.0, 1e-9);
  EXPECT_EQ(d.schedule.d(0, 0), 0);
  EXPECT_EQ(d.schedule.d(0, 2), 1);
}

TEST(P1, UnprofitableCandidateIsRejected) {
  const Tiny t({0.5, 0.5});
  const DecodedSchedule d = solve(t.build({candidate(1, 3.0, 2)}));
  EXPECT_TRUE(d.admitted.empty());
  EXPECT_EQ(d.rejected, std::vector<int>{1});
  EXPECT_NEAR(d.objective, 0.0, 1e-12);
}

TEST(P1, PriorContractAtItsDeadlineIsServedInFull) {
  // Charging is a loss here but the commitment stands.
  const Tiny t({0.9, 0.1});
  const DecodedSchedule d = solve(t.build({prior(3, 4.0, 1)}));
  EXPECT_EQ(d.admitted, std::vector<int>{3});
  EXPECT_NEAR(d.schedule.p(0, 0), 4.0, 1e-9);
  EXPECT_NEAR(d.schedule.p(0, 1), 0.0, 1e-12);
}

TEST(P1, SpotLimitPrefersHigherTier) {
  Tiny t({0.1});
  t.station.spots = 1;
  const DecodedSchedule d =
      solve(t.build({candidate(1, 6.0, 1, PriceTier::kC2), candidate(2, 6.0, 1, PriceTier::kC1)}));
  EXPECT_EQ(d.admitted, std::vector<int>{2});
  EXPECT_LE(d.schedule.spots_used(0), 1);
}

TEST(P1, VoltageLimitCapsStationLoad) {
  // v1 = 1 - 2 r P; with r = 1 pu the band allows 29.55 kW.
  Tiny t({0.05});
  t.feeder = make_feeder({-1, 0, 1}, {0, 1.0, 0.001}, {0, 0.0, 0.001});
  t.ldf = build_ldf_matrices(t.feeder);
  std::vector<Contract> cs;
  for (int i = 1; i <= 8; ++i) cs.push_back(candidate(i, 6.6, 1));
  const DecodedSchedule d = solve(t.build(cs));
  EXPECT_EQ(d.admitted.size(), 4u);
  EXPECT_LE(d.station_kw[0], 0.0591 / 2.0 * 1000.0 + 1e-6);
}

TEST(P1, MinimumPowerWhenCharging) {
  Tiny t({0.1, 0.1});
  t.station.p_min_kw = 2.0;
  const DecodedSchedule d = solve(t.build({prior(1, 3.0, 2)}));
  for (int k = 0; k < 2; ++k) {
    if (d.schedule.d(0, k)) EXPECT_GE(d.schedule.p(0, k), 2.0 - 1e-9);
    else EXPECT_EQ(d.schedule.p(0, k), 0.0);
  }
}

TEST(P1, BaseLoadInfeasibilityNamesNodeAndInterval) {
  Tiny t({0.1, 0.1, 0.1});
  t.feeder = make_feeder({-1, 0, 1}, {0, 1.0, 1.0}, {0, 0.0, 0.0});
  t.ldf = build_ldf_matrices(t.feeder);
  t.profile.p_l(1, 1) = 0.5;
  try {
    t.build({candidate(1, 1.0, 1)}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBaseLoadInfeasible);
    const std::string what = e.what();
    EXPECT_NE(what.find("interval 6"), std::string::npos) << what;
    EXPECT_NE(what.find("node "), std::string::npos) << what;
  }
}

TEST(P1, DimensionMismatchIsReported) {
  Tiny t({0.1, 0.1});
  t.prices.pop_back();
  EXPECT_THROW(t.build({}), Error);
}

TEST(P1, EncodeDecodeRoundTrip) {
  const Tiny t({0.10, 0.25, 0.05, 0.15});
  const std::vector<Contract> cs{prior(1, 5.0, 3), candidate(2, 8.0, 4, PriceTier::kC1),
                                 candidate(3, 3.0, 2)};
  const P1Model m = t.build(cs);
  milp::MilpOptions opt;
  const milp::MilpSolution sol = milp::solve_milp(m.problem, opt);
  const DecodedSchedule d = decode_schedule(sol, m);
  std::vector<bool> admitted;
  for (const Contract& c : cs) {
    admitted.push_back(std::count(d.admitted.begin(), d.admitted.end(), c.pev_id) > 0);
  }
  const std::vector<double> x = encode_point(m.map, d.schedule, admitted);
  EXPECT_TRUE(milp::check_point(m.problem, x).ok(1e-7));
  EXPECT_NEAR(m.problem.lp.objective_value(x), d.objective, 1e-9);
}

TEST(P1, EmptyScheduleIsFeasibleWithoutPriors) {
  const Tiny t({0.1, 0.2});
  const P1Model m = t.build({candidate(1, 3.0, 2), candidate(2, 2.0, 1)});
  const std::vector<double> x =
      encode_point(m.map, empty_schedule(m.map), std::vector<bool>(2, false));
  EXPECT_TRUE(milp::check_point(m.problem, x).ok(1e-9));
  EXPECT_EQ(m.problem.lp.objective_value(x), 0.0);
}

TEST(P1, SearchHooksPreserveTheOptimum) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> price(0.03, 0.35), energy(1.0, 14.0);
  for (int trial = 0; trial < 15; ++trial) {
    Tiny t(std::vector<double>(4));
    for (double& p : t.prices) p = price(rng);
    t.station.spots = 2;
    std::vector<Contract> cs;
    for (int i = 1; i <= 4; ++i) {
      const double s = energy(rng);
      const int a = std::uniform_int_distribution<int>(int(std::ceil(s / 6.6)), 4)(rng);
      cs.push_back(candidate(i, s, a, i % 2 ? PriceTier::kC1 : PriceTier::kC2));
    }
    const P1Model m = t.build(cs);
    const milp::MilpSolution plain = milp::solve_milp(m.problem);
    milp::MilpOptions opt;
    configure_p1_search(m, opt);
    const milp::MilpSolution tuned = milp::solve_milp(m.problem, opt);
    ASSERT_EQ(plain.status, milp::MilpStatus::kOptimal);
    ASSERT_EQ(tuned.status, milp::MilpStatus::kOptimal);
    EXPECT_NEAR(plain.objective, tuned.objective, 1e-6) << "trial " << trial;
  }
}

TEST(P1, RoundingRespectsSpotLimit) {
  Tiny t({0.05, 0.06, 0.07, 0.08});
  t.station.spots = 1;
  const P1Model m = t.build({candidate(1, 5.0, 4), candidate(2, 5.0, 4), candidate(3, 5.0, 4)});
  milp::MilpOptions opt;
  opt.node_limit = 1;
  configure_p1_search(m, opt);
  const milp::MilpSolution root = milp::solve_milp(m.problem, opt);
  ASSERT_TRUE(root.has_incumbent);
  EXPECT_LT(root.objective, 0.0);
  const DecodedSchedule d = decode_schedule(root, m);
  for (int k = 0; k < 4; ++k) EXPECT_LE(d.schedule.spots_used(k), 1);
  EXPECT_NEAR(milp::solve_milp(m.problem).objective, solve(m).objective, 1e-6);
}

}  // namespace
}  // namespace evsched
