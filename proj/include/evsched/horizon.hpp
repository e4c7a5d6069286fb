#pragma once

// Moving-horizon controller: each interval admits or rejects the new
// arrivals, solves the charging MILP over the rest of the day, implements its
// first column and carries the remainder forward as a warm start.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsched/feeder.hpp"
#include "evsched/formulation.hpp"
#include "evsched/milp.hpp"

namespace evsched {

struct Environment {
  FeederModel feeder;
  LdfMatrices ldf;
  InjectionProfile profile;   // T columns, per-unit
  std::vector<double> prices;  // $/kWh, T entries
  StationConfig station;
  milp::MilpOptions milp;
  std::shared_ptr<const milp::MilpBackend> backend = milp::default_backend();
  // Called after every solve, e.g. to dump the problem.
  std::function<void(int interval, const P1Model&, const milp::MilpSolution&)> on_solve;

  int day_length() const { return profile.intervals; }
  void validate() const;
};

// Validates inputs and fills in the LDF matrices.
Environment make_environment(FeederModel feeder, InjectionProfile profile,
                             std::vector<double> prices, StationConfig station);

enum class PevOutcome : std::uint8_t { kAdmitted, kRejected, kScreened };
const char* to_string(PevOutcome outcome);

struct PevRecord {
  PevRequest request;
  PevOutcome outcome = PevOutcome::kRejected;
  std::string reason;       // why a vehicle was screened out
  double s = 0.0;           // requirement at arrival, kW-intervals
  int a = 0;                // time of return at arrival, intervals
  int deadline = 0;         // last interval energy may flow, absolute
  int fulfilled_interval = 0;  // 0 while charging is outstanding
  std::vector<double> trace;   // delivered kW per interval, T entries
  double revenue = 0.0;
};

struct IntervalReport {
  int interval = 0;
  int arrivals = 0;
  int screened = 0;
  int admitted = 0;        // new admissions this interval
  int rejected = 0;        // includes screened arrivals
  int active = 0;          // contracts in force after admission
  int charging = 0;        // spots in use
  double station_kw = 0.0;
  double feeder_load_kw = 0.0;  // base load summed over the feeder
  double station_node_load_kw = 0.0;
  double price = 0.0;
  double v_min = 0.0;  // squared, realized with the station load
  double v_max = 0.0;
  int v_min_node = 0;
  double revenue = 0.0;
  double energy_cost = 0.0;
  double objective = 0.0;
  std::optional<double> carried_objective;  // previous plan scored in this problem
  bool hint_feasible = false;
  milp::MilpStatus status = milp::MilpStatus::kOptimal;
  long nodes = 0;
  long lp_iterations = 0;
  int binaries = 0;
  int rows = 0;
  double wall_ms = 0.0;
};

struct ActiveContract {
  Contract contract;  // u is kAdmitted
  int pev_index = 0;  // into HorizonState::pevs
};

struct HorizonState {
  int k = 1;  // next interval to schedule
  int day_length = 0;
  std::vector<ActiveContract> active;
  // Remaining columns of the last plan, one row per active contract.
  std::optional<Schedule> plan;
  std::vector<double> p_ev;  // implemented station kW per interval
  std::vector<PevRecord> pevs;
  std::vector<IntervalReport> intervals;
  double revenue = 0.0;
  double energy_cost = 0.0;

  static HorizonState start(int day_length);
  // Throws Error(kInvariantViolation) when an invariant is broken.
  void check_invariants() const;
};

// Advances one interval. Arrivals must be stamped with interval state.k.
void step(HorizonState& state, std::span<const PevRequest> arrivals, const Environment& env);

struct DayReport {
  int day_length = 0;
  double dt_hours = 1.0;
  int station_node = 0;
  int spots = 0;
  std::vector<IntervalReport> intervals;
  std::vector<PevRecord> pevs;
  double revenue = 0.0;
  double energy_cost = 0.0;
  double profit() const { return revenue - energy_cost; }
};

// Runs intervals 1..T. `arrivals` may be in any order; each is delivered at
// its arrival interval.
DayReport run_day(std::span<const PevRequest> arrivals, const Environment& env);

struct CommitmentViolation {
  int pev_id = 0;
  std::string message;
};

struct AuditResult {
  std::vector<CommitmentViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Every admitted vehicle must receive its requirement within its deadline;
// nothing may flow to a vehicle that was not admitted.
AuditResult audit_commitments(const DayReport& report, double tol = 1e-6);

}  // namespace evsched
