#pragma once

// Builds the per-interval charging MILP: contract binaries u, charging
// indicators D and powers P over the remaining horizon, coupled to the feeder
// through the station node's net injection.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsched/feeder.hpp"
#include "evsched/matrix.hpp"
#include "evsched/milp.hpp"

namespace evsched {

enum class PriceTier : std::uint8_t { kC1, kC2 };
const char* to_string(PriceTier tier);

struct PevRequest {
  int id = 0;
  double soc_plugin = 0.0;
  double soc_plugout = 1.0;
  double battery_kwh = 0.0;
  PriceTier tier = PriceTier::kC2;
  int arrival_interval = 1;  // first interval the vehicle can charge in (1-based)

  void validate() const;
};

enum class Admission : std::uint8_t { kAdmitted, kCandidate };

struct Contract {
  int pev_id = 0;
  double s = 0.0;  // remaining requirement, kW summed over intervals (kWh / dt)
  int a = 0;       // remaining deadline, intervals
  PriceTier tier = PriceTier::kC2;
  Admission u = Admission::kCandidate;
};

struct StationConfig {
  int node = 5;
  int spots = 20;
  double p_min_kw = 0.0;
  double p_max_kw = 6.6;
  double efficiency = 0.9;
  double c1_price = 0.30;  // $/kWh
  double c2_price = 0.20;
  double c1_avg_kw = 6.0;
  double c2_avg_kw = 3.3;
  double dt_hours = 1.0;

  double price(PriceTier tier) const { return tier == PriceTier::kC1 ? c1_price : c2_price; }
  double avg_kw(PriceTier tier) const { return tier == PriceTier::kC1 ? c1_avg_kw : c2_avg_kw; }
  void validate(const FeederModel* feeder = nullptr) const;
};

// Level-2 charging range accepted for p_max_kw.
inline constexpr double kLevel2MinKw = 3.3;
inline constexpr double kLevel2MaxKw = 19.2;

struct Schedule {
  std::vector<int> pev_ids;  // row order
  Matrix<std::uint8_t> d;    // N_k x T_k
  Matrix<double> p;          // kW
  double dt_hours = 1.0;

  double row_sum(std::size_t n) const;
  double column_sum(std::size_t t) const;
  int spots_used(std::size_t t) const;
};

// s = (soc_plugout - soc_plugin) * capacity / (efficiency * dt).
double compute_energy_requirement(const PevRequest& req, const StationConfig& station);

// a = ceil(s / P_Cj) for the vehicle's tier.
int compute_time_of_return(double s, PriceTier tier, const StationConfig& station);

// Reason a candidate cannot be served, or nullopt. Rejects empty requests and
// requests that do not fit in min(a, horizon) intervals at p_max_kw.
std::optional<std::string> screen_candidate(const Contract& c, int horizon,
                                            const StationConfig& station);

struct ContractVars {
  int pev_id = 0;
  bool candidate = false;
  PriceTier tier = PriceTier::kC2;
  double s = 0.0;
  int deadline = 0;      // effective, min(a, T_k)
  int u = -1;
  std::vector<int> d;    // one per interval < deadline
  std::vector<int> p;
};

struct P1Map {
  int first_interval = 1;  // absolute index of column 0
  int horizon = 0;         // T_k
  double dt_hours = 1.0;
  int spots = 0;
  double p_min_kw = 0.0;
  std::vector<ContractVars> contracts;
  std::vector<int> station;  // p_ev variable per interval, kW
};

struct P1Model {
  milp::MilpProblem problem;
  P1Map map;
};

struct P1Inputs {
  std::span<const Contract> contracts;  // prior contracts first, then candidates
  const FeederModel* feeder = nullptr;
  const LdfMatrices* ldf = nullptr;
  const InjectionProfile* profile = nullptr;  // exactly T_k columns
  std::span<const double> prices;             // $/kWh, T_k entries
  const StationConfig* station = nullptr;
  int first_interval = 1;
};

// Throws Error(kBaseLoadInfeasible) naming node and interval when the network
// violates its limits with no EV load.
P1Model build_p1(const P1Inputs& in);

// Branch on admissions before charging indicators, and round node
// relaxations with integral admissions by switching D on wherever P > 0.
// Intervals with more chargers than spots keep the largest powers and the
// powers are re-solved with D fixed.
void configure_p1_search(const P1Model& model, milp::MilpOptions& options);

// Point for the model's variables from a schedule whose rows follow the map's
// contract order; `admitted[n]` gives u.
std::vector<double> encode_point(const P1Map& map, const Schedule& schedule,
                                 const std::vector<bool>& admitted);

struct DecodedSchedule {
  Schedule schedule;
  std::vector<int> admitted;  // pev ids with u = 1 (prior contracts included)
  std::vector<int> rejected;  // candidates with u = 0
  std::vector<double> station_kw;
  milp::ResidualReport residuals;
  double objective = 0.0;
};

// Verifies the solution (binaries snapped, residuals re-checked) and unpacks
// it. Throws Error(kInternalConsistency) on failure.
DecodedSchedule decode_schedule(const milp::MilpSolution& solution, const P1Model& model);

// Zero schedule shaped for the map.
Schedule empty_schedule(const P1Map& map);

}  // namespace evsched
