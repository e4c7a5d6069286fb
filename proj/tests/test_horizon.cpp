#include <gtest/gtest.h>

#include "evsched/error.hpp"
#include "evsched/horizon.hpp"
#include "evsched/scenario.hpp"

namespace evsched {
namespace {

const ScenarioConfig& default_config() {
  static const ScenarioConfig c = load_scenario_config(EVSCHED_DATA_DIR "/default_scenario.json");
  return c;
}

const Environment& default_env() {
  static const Environment e = build_environment(default_config());
  return e;
}

PevRequest request(int id, int k, double battery, PriceTier tier, double from = 0.3,
                   double to = 0.9) {
  PevRequest r;
  r.id = id;
  r.arrival_interval = k;
  r.battery_kwh = battery;
  r.tier = tier;
  r.soc_plugin = from;
  r.soc_plugout = to;
  return r;
}

TEST(Horizon, EmptyStreamEarnsNothing) {
  const Environment& env = default_env();
  const DayReport day = run_day({}, env);
  ASSERT_EQ(day.intervals.size(), 24u);
  EXPECT_EQ(day.profit(), 0.0);
  for (const IntervalReport& r : day.intervals) {
    EXPECT_EQ(r.station_kw, 0.0);
    EXPECT_EQ(r.status, milp::MilpStatus::kOptimal);
    EXPECT_GE(r.v_min, env.feeder.v_min_sq);
  }
  EXPECT_TRUE(audit_commitments(day).ok());
}

TEST(Horizon, StepAdvancesAndUpdatesContracts) {
  const Environment& env = default_env();
  HorizonState st = HorizonState::start(env.day_length());
  const PevRequest pevs[] = {request(1, 1, 60.0, PriceTier::kC1), request(2, 1, 40.0, PriceTier::kC2)};
  step(st, pevs, env);
  EXPECT_EQ(st.k, 2);
  ASSERT_EQ(st.intervals.size(), 1u);
  for (const ActiveContract& ac : st.active) {
    const PevRecord& rec = st.pevs[ac.pev_index];
    EXPECT_EQ(rec.outcome, PevOutcome::kAdmitted);
    EXPECT_NEAR(ac.contract.s, rec.s - rec.trace[0], 1e-12);
    EXPECT_EQ(ac.contract.a, rec.a - 1);
  }
  ASSERT_TRUE(st.plan.has_value());
  EXPECT_EQ(st.plan->p.rows(), st.active.size());
  EXPECT_EQ(st.plan->p.cols(), 23u);
  EXPECT_NO_THROW(st.check_invariants());
}

TEST(Horizon, EveryIntervalKeepsTheCarriedPlanFeasible) {
  const Environment& env = default_env();
  const std::vector<PevRequest> arrivals = generate_arrivals(default_config(), 3);
  HorizonState st = HorizonState::start(env.day_length());
  std::vector<std::vector<PevRequest>> by(24);
  for (const PevRequest& r : arrivals) by[r.arrival_interval - 1].push_back(r);
  for (int k = 1; k <= 24; ++k) {
    const bool had_contracts = !st.active.empty();
    step(st, by[k - 1], env);
    const IntervalReport& rep = st.intervals.back();
    if (had_contracts) {
      ASSERT_TRUE(rep.hint_feasible) << "interval " << k;
      ASSERT_TRUE(rep.carried_objective.has_value());
      EXPECT_LE(rep.objective, *rep.carried_objective + 1e-6) << "interval " << k;
    }
  }
  EXPECT_TRUE(st.active.empty());
}

TEST(Horizon, WithoutArrivalsThePlanIsKeptOrImproved) {
  const Environment& env = default_env();
  HorizonState st = HorizonState::start(env.day_length());
  const PevRequest pevs[] = {request(1, 1, 75.0, PriceTier::kC2, 0.2, 1.0),
                             request(2, 1, 60.0, PriceTier::kC2, 0.2, 1.0)};
  step(st, pevs, env);
  ASSERT_FALSE(st.active.empty());
  for (int k = 2; k <= 24 && !st.active.empty(); ++k) {
    step(st, {}, env);
    const IntervalReport& rep = st.intervals.back();
    ASSERT_TRUE(rep.hint_feasible);
    EXPECT_LE(rep.objective, *rep.carried_objective + 1e-6);
  }
}

TEST(Horizon, AdmittedVehiclesAreNeverDropped) {
  const Environment& env = default_env();
  const DayReport day = run_day(generate_arrivals(default_config(), 11), env);
  int admitted = 0;
  for (const PevRecord& p : day.pevs) {
    if (p.outcome != PevOutcome::kAdmitted) {
      for (double x : p.trace) EXPECT_EQ(x, 0.0);
      continue;
    }
    ++admitted;
    EXPECT_GT(p.fulfilled_interval, 0) << "PEV " << p.request.id;
    EXPECT_LE(p.fulfilled_interval, p.deadline);
  }
  EXPECT_GT(admitted, 0);
  EXPECT_TRUE(audit_commitments(day).ok());
}

TEST(Horizon, ArrivalStampMustMatchInterval) {
  const Environment& env = default_env();
  HorizonState st = HorizonState::start(env.day_length());
  const PevRequest late[] = {request(1, 2, 40.0, PriceTier::kC1)};
  try {
    step(st, late, env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  const PevRequest dup[] = {request(4, 1, 40.0, PriceTier::kC1), request(4, 1, 24.0, PriceTier::kC2)};
  EXPECT_THROW(step(st, dup, env), Error);
}

TEST(Horizon, RunDayRejectsOutOfRangeArrivals) {
  const PevRequest bad[] = {request(1, 25, 40.0, PriceTier::kC1)};
  EXPECT_THROW(run_day(bad, default_env()), Error);
}

TEST(Horizon, ScreenedArrivalsAreRecorded) {
  const Environment& env = default_env();
  HorizonState st = HorizonState::start(env.day_length());
  for (int k = 1; k < 24; ++k) step(st, {}, env);
  // 75 kWh at the last interval cannot fit.
  const PevRequest big[] = {request(9, 24, 75.0, PriceTier::kC2, 0.2, 1.0)};
  step(st, big, env);
  ASSERT_EQ(st.pevs.size(), 1u);
  EXPECT_EQ(st.pevs[0].outcome, PevOutcome::kScreened);
  EXPECT_FALSE(st.pevs[0].reason.empty());
  EXPECT_EQ(st.intervals.back().screened, 1);
  EXPECT_THROW(step(st, {}, env), Error);
}

TEST(Horizon, CorruptedStateFailsInvariants) {
  const Environment& env = default_env();
  HorizonState st = HorizonState::start(env.day_length());
  const PevRequest pevs[] = {request(1, 1, 60.0, PriceTier::kC2)};
  step(st, pevs, env);
  ASSERT_FALSE(st.active.empty());
  st.active[0].contract.s = -1.0;
  try {
    st.check_invariants();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvariantViolation);
  }
}

TEST(Audit, FlagsEachCorruptedVehicleOnce) {
  DayReport day = run_day(generate_arrivals(default_config(), 5), default_env());
  ASSERT_TRUE(audit_commitments(day).ok());
  PevRecord* admitted = nullptr;
  PevRecord* rejected = nullptr;
  for (PevRecord& p : day.pevs) {
    if (!admitted && p.outcome == PevOutcome::kAdmitted) admitted = &p;
    if (!rejected && p.outcome != PevOutcome::kAdmitted) rejected = &p;
  }
  ASSERT_NE(admitted, nullptr);
  admitted->trace[admitted->deadline - 1] += 0.5;  // over-delivery
  AuditResult a = audit_commitments(day);
  ASSERT_EQ(a.violations.size(), 1u);
  EXPECT_EQ(a.violations[0].pev_id, admitted->request.id);

  if (admitted->deadline < day.day_length) {
    admitted->trace[admitted->deadline - 1] -= 0.5;
    admitted->trace[admitted->deadline] += 0.5;  // late and over
    a = audit_commitments(day);
    ASSERT_EQ(a.violations.size(), 1u);
    admitted->trace[admitted->deadline] -= 0.5;
    admitted->trace[admitted->deadline - 1] += 0.5;
  }

  if (rejected) {
    rejected->trace[rejected->request.arrival_interval - 1] = 1.0;
    a = audit_commitments(day);
    EXPECT_EQ(a.violations.size(), 2u);
  }
}

TEST(Environment, ValidateCatchesPriceMismatch) {
  Environment env = default_env();
  env.prices.pop_back();
  EXPECT_THROW(env.validate(), Error);
}

}  // namespace
}  // namespace evsched
