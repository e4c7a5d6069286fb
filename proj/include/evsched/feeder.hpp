#pragma once

// Single-phase radial feeder and its linearized distribution-flow (LDF)
// voltage model. All electrical quantities are per-unit on the feeder's base
// power; vectors indexed "per non-substation node" put node j at position j-1.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsched/matrix.hpp"

namespace evsched {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct FeederModel {
  std::string name;
  int node_count = 1;  // N, including substation node 0
  // Node-indexed (size N); entry 0 belongs to the substation and is unused
  // for parent / line data.
  std::vector<int> parent;
  std::vector<double> line_r;
  std::vector<double> line_x;
  std::vector<std::optional<double>> s_bar;
  std::vector<std::string> labels;
  // Spot loads used to scale normalized load profiles, kW / kvar.
  std::vector<double> spot_p_kw;

  double v0 = 1.0;  // squared substation voltage
  double v_min_sq = 0.97 * 0.97;
  double v_max_sq = 1.03 * 1.03;
  double p_min = -kUnbounded;
  double p_max = kUnbounded;
  double q_min = -kUnbounded;
  double q_max = kUnbounded;

  double base_kva = 1000.0;
  double base_kv = 4.16;

  int lines() const { return node_count - 1; }
  double kw_to_pu(double kw) const { return kw / base_kva; }
  double pu_to_kw(double pu) const { return pu * base_kva; }

  // Checks sizes, impedance signs, voltage band and the tree property.
  // Throws Error(kTopology) on cycles or dangling parents, kConfig otherwise.
  void validate() const;
};

// Voltage sensitivities, (N-1) x (N-1).
struct LdfMatrices {
  Matrix<double> r;
  Matrix<double> x;
};

// Known generation and load per non-substation node per interval, per-unit.
struct InjectionProfile {
  int intervals = 0;
  Matrix<double> p_g;
  Matrix<double> q_g;
  Matrix<double> p_l;
  Matrix<double> q_l;

  static InjectionProfile zeros(int nodes_excl_substation, int intervals);
  int nodes() const { return static_cast<int>(p_l.rows()); }
  // Columns [first, first + count) as a new profile.
  InjectionProfile slice(int first, int count) const;
  void validate() const;
};

struct NetInjections {
  Matrix<double> p;  // (N-1) x T
  Matrix<double> q;
};

// R[j][k] = 2 * sum of r over the lines shared by the substation->j and
// substation->k paths; X likewise.
LdfMatrices build_ldf_matrices(const FeederModel& feeder);

// v0 * 1 + R p + X q.
std::vector<double> evaluate_voltages(const LdfMatrices& ldf, double v0,
                                      std::span<const double> p,
                                      std::span<const double> q);

// sqrt(s_bar^2 - q^2) per non-substation node; kUnbounded where the node has
// no apparent-power limit. `interval` only labels the error message.
std::vector<double> active_power_envelope(const FeederModel& feeder,
                                          std::span<const double> q,
                                          int interval = -1);

// p = p_g - p_l - p_ev, q = q_g - q_l. `p_ev` is (N-1) x T, nonnegative.
NetInjections net_injections(const InjectionProfile& profile,
                             const Matrix<double>& p_ev);

struct NetworkViolation {
  enum class Kind { kVoltageLow, kVoltageHigh, kActiveLow, kActiveHigh, kReactiveLow,
                    kReactiveHigh, kApparentPower };
  Kind kind;
  int node;      // feeder node index (1..N-1)
  int interval;  // column of the profile
  double value;
  double limit;
};
const char* to_string(NetworkViolation::Kind kind);

struct NetworkCheck {
  std::vector<double> v_min;       // per interval, squared
  std::vector<double> v_max;
  std::vector<int> v_min_node;     // node attaining v_min
  double worst_low_margin = kUnbounded;   // min over t,i of v - v_min_sq
  double worst_high_margin = kUnbounded;  // min over t,i of v_max_sq - v
  std::vector<NetworkViolation> violations;
  bool feasible() const { return violations.empty(); }
};

// Evaluates every static power-system limit (voltage band, injection bounds,
// apparent-power envelope) for the given EV load, (N-1) x T per-unit.
// `tol` absorbs solver round-off.
NetworkCheck check_network(const FeederModel& feeder, const LdfMatrices& ldf,
                           const InjectionProfile& profile, const Matrix<double>& p_ev,
                           double tol = 0.0);

// Path (node indices, substation excluded) from node up to the substation.
std::vector<int> path_to_substation(const FeederModel& feeder, int node);

}  // namespace evsched
