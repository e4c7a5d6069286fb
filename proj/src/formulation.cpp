#include "evsched/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "evsched/error.hpp"

namespace evsched {

using lp::Sense;
using lp::Term;

const char* to_string(PriceTier tier) { return tier == PriceTier::kC1 ? "C1" : "C2"; }

void PevRequest::validate() const {
  if (!(soc_plugin >= 0.0 && soc_plugout <= 1.0 && soc_plugout > soc_plugin)) {
    throw Error(ErrorKind::kConfig,
                fmt::format("PEV {}: need 0 <= soc_plugin < soc_plugout <= 1, got {} -> {}", id,
                            soc_plugin, soc_plugout));
  }
  if (!(battery_kwh > 0.0)) {
    throw Error(ErrorKind::kConfig, fmt::format("PEV {}: battery capacity must be positive", id));
  }
  if (arrival_interval < 1) {
    throw Error(ErrorKind::kConfig, fmt::format("PEV {}: arrival interval must be >= 1", id));
  }
}

void StationConfig::validate(const FeederModel* feeder) const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw Error(ErrorKind::kConfig,
                fmt::format("charging efficiency must lie in (0, 1], got {}", efficiency));
  }
  if (!(dt_hours > 0.0)) throw Error(ErrorKind::kConfig, "interval length must be positive");
  if (!(c1_price > c2_price)) {
    throw Error(ErrorKind::kConfig, fmt::format("tier prices need C1 > C2, got {} and {}",
                                                c1_price, c2_price));
  }
  if (!(c1_avg_kw > c2_avg_kw && c2_avg_kw > 0.0)) {
    throw Error(ErrorKind::kConfig, fmt::format("tier powers need P_C1 > P_C2 > 0, got {} and {}",
                                                c1_avg_kw, c2_avg_kw));
  }
  if (!(p_max_kw >= kLevel2MinKw && p_max_kw <= kLevel2MaxKw)) {
    throw Error(ErrorKind::kConfig,
                fmt::format("per-spot maximum {} kW is outside the Level-2 range [{}, {}]",
                            p_max_kw, kLevel2MinKw, kLevel2MaxKw));
  }
  if (!(p_min_kw >= 0.0 && p_min_kw <= p_max_kw)) {
    throw Error(ErrorKind::kConfig, "per-spot minimum must lie in [0, p_max_kw]");
  }
  if (spots < 0) throw Error(ErrorKind::kConfig, "spot count must be nonnegative");
  if (feeder && (node < 1 || node >= feeder->node_count)) {
    throw Error(ErrorKind::kConfig,
                fmt::format("station node {} is not a non-substation feeder node", node));
  }
}

double Schedule::row_sum(std::size_t n) const {
  double s = 0.0;
  for (std::size_t t = 0; t < p.cols(); ++t) s += p(n, t);
  return s;
}

double Schedule::column_sum(std::size_t t) const {
  double s = 0.0;
  for (std::size_t n = 0; n < p.rows(); ++n) s += p(n, t);
  return s;
}

int Schedule::spots_used(std::size_t t) const {
  int s = 0;
  for (std::size_t n = 0; n < d.rows(); ++n) s += d(n, t);
  return s;
}

double compute_energy_requirement(const PevRequest& req, const StationConfig& station) {
  if (!(station.efficiency > 0.0)) {
    throw Error(ErrorKind::kConfig, "charging efficiency must be positive");
  }
  if (!(station.dt_hours > 0.0)) throw Error(ErrorKind::kConfig, "interval length must be positive");
  return (req.soc_plugout - req.soc_plugin) * req.battery_kwh /
         (station.efficiency * station.dt_hours);
}

int compute_time_of_return(double s, PriceTier tier, const StationConfig& station) {
  if (s <= 0.0) return 0;
  const double ratio = s / station.avg_kw(tier);
  // Absorb representation error so exact multiples do not gain an interval.
  return static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
}

std::optional<std::string> screen_candidate(const Contract& c, int horizon,
                                            const StationConfig& station) {
  constexpr double kTol = 1e-9;
  if (c.s <= kTol) return "no energy requested";
  const int deadline = std::min(c.a, horizon);
  if (deadline < 1) return "no interval left before the deadline";
  if (deadline * station.p_max_kw < c.s - kTol) {
    return fmt::format("needs {:.4g} kW over {} interval(s), exceeds {} kW per spot", c.s,
                       deadline, station.p_max_kw);
  }
  if (station.spots < 1) return "station has no charging spots";
  return std::nullopt;
}

namespace {

void check_base_load(const P1Inputs& in) {
  const Matrix<double> zero(in.profile->nodes(), in.profile->intervals);
  const NetworkCheck check = check_network(*in.feeder, *in.ldf, *in.profile, zero);
  if (check.feasible()) return;
  const NetworkViolation& v = check.violations.front();
  throw Error(ErrorKind::kBaseLoadInfeasible,
              fmt::format("base load violates {} at node {} interval {} (value {:.6g}, limit {:.6g})"
                          "; {} violation(s) in total",
                          to_string(v.kind), v.node, in.first_interval + v.interval, v.value,
                          v.limit, check.violations.size()));
}

}  // namespace

P1Model build_p1(const P1Inputs& in) {
  if (!in.feeder || !in.ldf || !in.profile || !in.station) {
    throw Error(ErrorKind::kConfig, "build_p1: feeder, ldf, profile and station are required");
  }
  const FeederModel& feeder = *in.feeder;
  const StationConfig& st = *in.station;
  const InjectionProfile& prof = *in.profile;
  const int T = prof.intervals;
  prof.validate();
  st.validate(&feeder);
  if (static_cast<int>(in.prices.size()) != T) {
    throw Error(ErrorKind::kDimension,
                fmt::format("build_p1: {} prices for {} intervals", in.prices.size(), T));
  }
  if (prof.nodes() != feeder.lines()) {
    throw Error(ErrorKind::kDimension, "build_p1: profile rows must match feeder nodes");
  }
  check_base_load(in);

  P1Model model;
  lp::LpProblem& lp = model.problem.lp;
  P1Map& map = model.map;
  map.first_interval = in.first_interval;
  map.horizon = T;
  map.dt_hours = st.dt_hours;
  map.spots = st.spots;
  map.p_min_kw = st.p_min_kw;
  const double dt = st.dt_hours;

  // Contract variables.
  for (const Contract& c : in.contracts) {
    ContractVars cv;
    cv.pev_id = c.pev_id;
    cv.candidate = c.u == Admission::kCandidate;
    cv.tier = c.tier;
    cv.s = c.s;
    cv.deadline = std::clamp(c.a, 0, T);
    const double u_lo = cv.candidate ? 0.0 : 1.0;
    cv.u = lp.add_variable(u_lo, 1.0, -st.price(c.tier) * c.s * dt, fmt::format("u[{}]", c.pev_id));
    model.problem.binaries.push_back(cv.u);
    for (int t = 0; t < cv.deadline; ++t) {
      const int k = in.first_interval + t;
      const int d = lp.add_variable(0.0, 1.0, 0.0, fmt::format("D[{},{}]", c.pev_id, k));
      const int p = lp.add_variable(0.0, st.p_max_kw, in.prices[t] * dt,
                                    fmt::format("P[{},{}]", c.pev_id, k));
      model.problem.binaries.push_back(d);
      cv.d.push_back(d);
      cv.p.push_back(p);
    }
    map.contracts.push_back(std::move(cv));
  }
  for (int t = 0; t < T; ++t) {
    map.station.push_back(
        lp.add_variable(0.0, lp::kInf, 0.0, fmt::format("pev[{}]", in.first_interval + t)));
  }

  // Contract rows.
  for (const ContractVars& cv : map.contracts) {
    std::vector<Term> energy;
    for (int t = 0; t < cv.deadline; ++t) {
      const int k = in.first_interval + t;
      if (cv.candidate) {
        lp.add_row({{cv.d[t], 1.0}, {cv.u, -1.0}}, Sense::kLessEqual, 0.0,
                   fmt::format("link[{},{}]", cv.pev_id, k));
      }
      lp.add_row({{cv.p[t], 1.0}, {cv.d[t], -st.p_max_kw}}, Sense::kLessEqual, 0.0,
                 fmt::format("pmax[{},{}]", cv.pev_id, k));
      if (st.p_min_kw > 0.0) {
        lp.add_row({{cv.p[t], 1.0}, {cv.d[t], -st.p_min_kw}}, Sense::kGreaterEqual, 0.0,
                   fmt::format("pmin[{},{}]", cv.pev_id, k));
      }
      energy.push_back({cv.p[t], 1.0});
    }
    energy.push_back({cv.u, -cv.s});
    lp.add_row(std::move(energy), Sense::kEqual, 0.0, fmt::format("energy[{}]", cv.pev_id));
  }

  // Station coupling and spot limit per interval.
  for (int t = 0; t < T; ++t) {
    const int k = in.first_interval + t;
    std::vector<Term> coupling{{map.station[t], 1.0}};
    std::vector<Term> spots;
    for (const ContractVars& cv : map.contracts) {
      if (t >= cv.deadline) continue;
      coupling.push_back({cv.p[t], -1.0});
      spots.push_back({cv.d[t], 1.0});
    }
    lp.add_row(std::move(coupling), Sense::kEqual, 0.0, fmt::format("station[{}]", k));
    lp.add_row(std::move(spots), Sense::kLessEqual, static_cast<double>(st.spots),
               fmt::format("spots[{}]", k));
  }

  // Network rows. The station's kW enter node `st.node` as -p_ev / base_kva,
  // so every limit below is affine in the single variable p_ev[t].
  const int n = feeder.lines();
  const int s_pos = st.node - 1;
  const double to_pu = 1.0 / feeder.base_kva;
  std::vector<double> p(n), q(n);
  for (int t = 0; t < T; ++t) {
    const int k = in.first_interval + t;
    const int ev = map.station[t];
    for (int j = 0; j < n; ++j) {
      p[j] = prof.p_g(j, t) - prof.p_l(j, t);
      q[j] = prof.q_g(j, t) - prof.q_l(j, t);
    }
    const std::vector<double> v = evaluate_voltages(*in.ldf, feeder.v0, p, q);
    for (int j = 0; j < n; ++j) {
      const double coef = -in.ldf->r(j, s_pos) * to_pu;
      lp.add_row({{ev, coef}}, Sense::kGreaterEqual, feeder.v_min_sq - v[j],
                 fmt::format("vmin[{},{}]", j + 1, k));
      lp.add_row({{ev, coef}}, Sense::kLessEqual, feeder.v_max_sq - v[j],
                 fmt::format("vmax[{},{}]", j + 1, k));
    }
    const double pb = p[s_pos];
    if (feeder.p_min > -kUnbounded) {
      lp.add_row({{ev, -to_pu}}, Sense::kGreaterEqual, feeder.p_min - pb,
                 fmt::format("inj_min[{},{}]", st.node, k));
    }
    if (feeder.p_max < kUnbounded) {
      lp.add_row({{ev, -to_pu}}, Sense::kLessEqual, feeder.p_max - pb,
                 fmt::format("inj_max[{},{}]", st.node, k));
    }
    if (feeder.s_bar[st.node]) {
      const std::vector<double> env = active_power_envelope(feeder, q, k);
      const double e = env[s_pos];
      lp.add_row({{ev, -to_pu}}, Sense::kLessEqual, e - pb,
                 fmt::format("sbar_hi[{},{}]", st.node, k));
      lp.add_row({{ev, -to_pu}}, Sense::kGreaterEqual, -e - pb,
                 fmt::format("sbar_lo[{},{}]", st.node, k));
    }
  }
  return model;
}

void configure_p1_search(const P1Model& model, milp::MilpOptions& options) {
  const P1Map& map = model.map;
  options.branch_priority.assign(model.problem.lp.num_vars(), 0);
  for (const ContractVars& cv : map.contracts) options.branch_priority[cv.u] = 1;
  const double tol_int = options.tol_int;
  const auto lp = std::make_shared<const lp::LpProblem>(model.problem.lp);
  const lp::LpOptions lp_options = options.lp;
  const bool p_min_free = model.map.p_min_kw <= 0.0;
  options.rounding = [map, tol_int, lp, lp_options, p_min_free](const std::vector<double>& x)
      -> std::optional<std::vector<double>> {
    constexpr double kOn = 1e-9;
    std::vector<double> u(map.contracts.size());
    bool repair = false;
    for (std::size_t n = 0; n < map.contracts.size(); ++n) {
      const double v = x[map.contracts[n].u];
      u[n] = std::round(v);
      repair |= std::fabs(v - u[n]) > tol_int;
    }

    // Chargers per interval: relaxation powers first, then, when idle spots
    // cost nothing, the other admitted contracts by indicator value.
    std::vector<std::vector<std::pair<double, std::size_t>>> on(map.horizon);
    std::vector<std::vector<std::pair<double, std::size_t>>> idle(map.horizon);
    for (std::size_t n = 0; n < map.contracts.size(); ++n) {
      const ContractVars& cv = map.contracts[n];
      if (u[n] == 0.0) continue;
      for (std::size_t t = 0; t < cv.d.size(); ++t) {
        if (x[cv.p[t]] > kOn) {
          on[t].push_back({x[cv.p[t]], n});
        } else {
          idle[t].push_back({x[cv.d[t]], n});
        }
      }
    }
    const auto larger = [](const auto& a, const auto& b) { return a.first > b.first; };
    for (std::size_t t = 0; t < on.size(); ++t) {
      std::stable_sort(on[t].begin(), on[t].end(), larger);
      if (static_cast<int>(on[t].size()) > map.spots) {
        on[t].resize(map.spots);
        repair = true;
      }
    }

    std::vector<double> out = x;
    if (repair) {
      if (p_min_free) {
        for (std::size_t t = 0; t < on.size(); ++t) {
          std::stable_sort(idle[t].begin(), idle[t].end(), larger);
          for (const auto& entry : idle[t]) {
            if (static_cast<int>(on[t].size()) >= map.spots) break;
            on[t].push_back(entry);
          }
        }
      }
      lp::LpProblem fixed = *lp;
      auto fix = [&fixed](int var, double v) { fixed.lower[var] = fixed.upper[var] = v; };
      for (std::size_t n = 0; n < map.contracts.size(); ++n) {
        const ContractVars& cv = map.contracts[n];
        fix(cv.u, u[n]);
        for (int d : cv.d) fix(d, 0.0);
      }
      for (std::size_t t = 0; t < on.size(); ++t) {
        for (const auto& entry : on[t]) fix(map.contracts[entry.second].d[t], 1.0);
      }
      const lp::LpSolution sol = lp::solve_lp(fixed, lp_options);
      if (sol.status != lp::LpStatus::kOptimal) return std::nullopt;
      out = sol.x;
    }

    for (int v : map.station) out[v] = 0.0;
    for (std::size_t n = 0; n < map.contracts.size(); ++n) {
      const ContractVars& cv = map.contracts[n];
      out[cv.u] = u[n];
      for (std::size_t t = 0; t < cv.d.size(); ++t) {
        const double p = u[n] > 0.0 ? std::max(0.0, out[cv.p[t]]) : 0.0;
        const bool charging = p > kOn;
        out[cv.d[t]] = charging ? 1.0 : 0.0;
        out[cv.p[t]] = charging ? p : 0.0;
        out[map.station[t]] += out[cv.p[t]];
      }
    }
    return out;
  };
}

Schedule empty_schedule(const P1Map& map) {
  Schedule s;
  s.dt_hours = map.dt_hours;
  s.d = Matrix<std::uint8_t>(map.contracts.size(), map.horizon);
  s.p = Matrix<double>(map.contracts.size(), map.horizon);
  for (const ContractVars& cv : map.contracts) s.pev_ids.push_back(cv.pev_id);
  return s;
}

std::vector<double> encode_point(const P1Map& map, const Schedule& schedule,
                                 const std::vector<bool>& admitted) {
  if (schedule.p.rows() != map.contracts.size() || admitted.size() != map.contracts.size()) {
    throw Error(ErrorKind::kDimension, "encode_point: schedule rows must follow the map");
  }
  int nvars = static_cast<int>(map.station.empty() ? 0 : map.station.back() + 1);
  std::vector<double> x(nvars, 0.0);
  for (std::size_t n = 0; n < map.contracts.size(); ++n) {
    const ContractVars& cv = map.contracts[n];
    x[cv.u] = admitted[n] ? 1.0 : 0.0;
    for (int t = 0; t < cv.deadline && t < static_cast<int>(schedule.p.cols()); ++t) {
      x[cv.d[t]] = schedule.d(n, t);
      x[cv.p[t]] = schedule.p(n, t);
      x[map.station[t]] += schedule.p(n, t);
    }
  }
  return x;
}

DecodedSchedule decode_schedule(const milp::MilpSolution& solution, const P1Model& model) {
  const milp::VerifiedSolution v = milp::round_and_verify(solution, model.problem);
  const std::vector<double>& x = v.solution.x;
  const P1Map& map = model.map;
  DecodedSchedule out;
  out.schedule = empty_schedule(map);
  out.residuals = v.residuals;
  out.objective = v.solution.objective;
  for (std::size_t n = 0; n < map.contracts.size(); ++n) {
    const ContractVars& cv = map.contracts[n];
    const bool admitted = x[cv.u] > 0.5;
    (admitted ? out.admitted : out.rejected).push_back(cv.pev_id);
    for (int t = 0; t < cv.deadline; ++t) {
      const bool on = x[cv.d[t]] > 0.5;
      out.schedule.d(n, t) = on ? 1 : 0;
      out.schedule.p(n, t) = on ? std::max(0.0, x[cv.p[t]]) : 0.0;
    }
  }
  out.station_kw.resize(map.horizon);
  for (int t = 0; t < map.horizon; ++t) out.station_kw[t] = std::max(0.0, x[map.station[t]]);
  return out;
}

}  // namespace evsched
