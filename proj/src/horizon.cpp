#include "evsched/horizon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evsched/error.hpp"

namespace evsched {

namespace {

constexpr double kRetireTol = 1e-6;

}  // namespace

void Environment::validate() const {
  feeder.validate();
  profile.validate();
  station.validate(&feeder);
  const int T = day_length();
  if (T < 1) throw Error(ErrorKind::kConfig, "day length must be at least one interval");
  if (profile.nodes() != feeder.lines()) {
    throw Error(ErrorKind::kDimension,
                fmt::format("profile has {} nodes, feeder has {}", profile.nodes(), feeder.lines()));
  }
  if (static_cast<int>(prices.size()) != T) {
    throw Error(ErrorKind::kDimension,
                fmt::format("{} prices for a {}-interval day", prices.size(), T));
  }
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!std::isfinite(prices[t]) || prices[t] < 0.0) {
      throw Error(ErrorKind::kConfig, fmt::format("price {} is not a nonnegative number", t + 1));
    }
  }
  const auto n = static_cast<std::size_t>(feeder.lines());
  if (ldf.r.rows() != n || ldf.r.cols() != n || ldf.x.rows() != n || ldf.x.cols() != n) {
    throw Error(ErrorKind::kDimension, "LDF matrices do not match the feeder");
  }
  if (!backend) throw Error(ErrorKind::kConfig, "no MILP backend configured");
}

Environment make_environment(FeederModel feeder, InjectionProfile profile,
                             std::vector<double> prices, StationConfig station) {
  Environment env;
  feeder.validate();
  env.ldf = build_ldf_matrices(feeder);
  env.feeder = std::move(feeder);
  env.profile = std::move(profile);
  env.prices = std::move(prices);
  env.station = station;
  env.validate();
  return env;
}

const char* to_string(PevOutcome outcome) {
  switch (outcome) {
    case PevOutcome::kAdmitted: return "admitted";
    case PevOutcome::kRejected: return "rejected";
    case PevOutcome::kScreened: return "screened";
  }
  return "unknown";
}

HorizonState HorizonState::start(int day_length) {
  if (day_length < 1) throw Error(ErrorKind::kConfig, "day length must be at least one interval");
  HorizonState s;
  s.day_length = day_length;
  return s;
}

void HorizonState::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvariantViolation, what); };
  if (static_cast<int>(p_ev.size()) != k - 1 || static_cast<int>(intervals.size()) != k - 1) {
    fail(fmt::format("history holds {} intervals at interval {}", p_ev.size(), k));
  }
  for (const ActiveContract& ac : active) {
    const Contract& c = ac.contract;
    if (!(c.s > kRetireTol) || c.a < 1) {
      fail(fmt::format("contract {} carries s = {}, a = {}", c.pev_id, c.s, c.a));
    }
    if (c.u != Admission::kAdmitted) fail(fmt::format("contract {} is not admitted", c.pev_id));
  }
  if (plan && plan->p.rows() != active.size()) fail("carried plan does not match the contracts");
}

void step(HorizonState& state, std::span<const PevRequest> arrivals, const Environment& env) {
  const auto started = std::chrono::steady_clock::now();
  const int T = state.day_length;
  const int k = state.k;
  if (k > T) throw Error(ErrorKind::kConfig, fmt::format("day of {} intervals is complete", T));
  if (env.day_length() != T) {
    throw Error(ErrorKind::kDimension, "environment and state disagree on the day length");
  }
  state.check_invariants();
  const int Tk = T - k + 1;
  const StationConfig& station = env.station;

  IntervalReport rep;
  rep.interval = k;
  rep.arrivals = static_cast<int>(arrivals.size());
  rep.price = env.prices[k - 1];

  std::vector<Contract> contracts;
  std::vector<int> pev_index;
  std::set<int> ids;
  for (const ActiveContract& ac : state.active) {
    contracts.push_back(ac.contract);
    pev_index.push_back(ac.pev_index);
    ids.insert(ac.contract.pev_id);
  }
  const std::size_t n_prior = contracts.size();

  for (const PevRequest& req : arrivals) {
    req.validate();
    if (req.arrival_interval != k) {
      throw Error(ErrorKind::kConfig, fmt::format("PEV {} is stamped for interval {}, not {}",
                                                  req.id, req.arrival_interval, k));
    }
    if (!ids.insert(req.id).second) {
      throw Error(ErrorKind::kConfig, fmt::format("PEV id {} is already in use", req.id));
    }
    PevRecord rec;
    rec.request = req;
    rec.s = compute_energy_requirement(req, station);
    rec.a = compute_time_of_return(rec.s, req.tier, station);
    rec.deadline = k - 1 + std::min(rec.a, Tk);
    rec.trace.assign(T, 0.0);
    const Contract c{req.id, rec.s, rec.a, req.tier, Admission::kCandidate};
    if (auto why = screen_candidate(c, Tk, station)) {
      rec.outcome = PevOutcome::kScreened;
      rec.reason = *why;
      ++rep.screened;
      ++rep.rejected;
    } else {
      contracts.push_back(c);
      pev_index.push_back(static_cast<int>(state.pevs.size()));
    }
    state.pevs.push_back(std::move(rec));
  }

  const InjectionProfile window = env.profile.slice(k - 1, Tk);
  P1Inputs in;
  in.contracts = contracts;
  in.feeder = &env.feeder;
  in.ldf = &env.ldf;
  in.profile = &window;
  in.prices = std::span<const double>(env.prices).subspan(k - 1, Tk);
  in.station = &station;
  in.first_interval = k;
  const P1Model model = build_p1(in);
  rep.binaries = static_cast<int>(model.problem.binaries.size());
  rep.rows = static_cast<int>(model.problem.lp.rows.size());

  // The previous plan minus its implemented column, with every candidate
  // rejected, is feasible here.
  Schedule carried = empty_schedule(model.map);
  std::vector<bool> admitted(contracts.size(), false);
  for (std::size_t n = 0; n < n_prior; ++n) {
    admitted[n] = true;
    if (!state.plan) continue;
    for (std::size_t t = 0; t < state.plan->p.cols() && t < carried.p.cols(); ++t) {
      carried.d(n, t) = state.plan->d(n, t);
      carried.p(n, t) = state.plan->p(n, t);
    }
  }
  std::vector<double> hint = encode_point(model.map, carried, admitted);
  const milp::ResidualReport hint_check = milp::check_point(model.problem, hint);
  rep.hint_feasible =
      hint_check.ok(env.milp.tol_feas) && hint_check.max_integrality <= env.milp.tol_int;
  if (rep.hint_feasible) {
    rep.carried_objective = model.problem.lp.objective_value(hint);
  } else if (n_prior > 0) {
    spdlog::warn("interval {}: carried plan fails verification (row {:.3g}, bound {:.3g})", k,
                 hint_check.max_row, hint_check.max_bound);
  }

  milp::MilpOptions options = env.milp;
  configure_p1_search(model, options);
  options.incumbent_hint = std::move(hint);
  const milp::MilpSolution sol = env.backend->solve(model.problem, options);
  if (env.on_solve) env.on_solve(k, model, sol);
  rep.status = sol.status;
  rep.nodes = sol.node_count;
  rep.lp_iterations = sol.lp_iterations;
  if (sol.status == milp::MilpStatus::kUnbounded) {
    throw Error(ErrorKind::kInternalConsistency, fmt::format("interval {}: MILP is unbounded", k));
  }
  if (!sol.has_incumbent) {
    throw Error(ErrorKind::kInvariantViolation,
                fmt::format("interval {}: no feasible schedule for {} prior contract(s) ({})", k,
                            n_prior, milp::to_string(sol.status)));
  }
  if (sol.status == milp::MilpStatus::kIterationLimit) {
    spdlog::warn("interval {}: node limit reached, using incumbent {:.6g} (bound {:.6g})", k,
                 sol.objective, sol.best_bound);
  }

  const DecodedSchedule dec = decode_schedule(sol, model);
  rep.objective = dec.objective;
  const std::set<int> chosen(dec.admitted.begin(), dec.admitted.end());
  const double dt = station.dt_hours;

  std::vector<ActiveContract> next;
  Schedule plan;
  plan.dt_hours = dt;
  const std::size_t rest = static_cast<std::size_t>(Tk - 1);
  std::vector<std::size_t> kept;
  for (std::size_t n = 0; n < contracts.size(); ++n) {
    Contract c = contracts[n];
    PevRecord& rec = state.pevs[pev_index[n]];
    if (n >= n_prior) {
      if (!chosen.count(c.pev_id)) {
        rec.outcome = PevOutcome::kRejected;
        rec.reason = "not selected";
        ++rep.rejected;
        continue;
      }
      rec.outcome = PevOutcome::kAdmitted;
      rec.revenue = station.price(c.tier) * c.s * dt;
      rep.revenue += rec.revenue;
      ++rep.admitted;
    }
    ++rep.active;
    const double p0 = dec.schedule.p(n, 0);
    rec.trace[k - 1] = p0;
    rep.station_kw += p0;
    rep.charging += dec.schedule.d(n, 0);
    c.u = Admission::kAdmitted;
    c.s -= p0;
    c.a -= 1;
    if (c.s <= kRetireTol) {
      rec.fulfilled_interval = k;
      continue;
    }
    if (c.a < 1 || rest == 0) {
      throw Error(ErrorKind::kInvariantViolation,
                  fmt::format("interval {}: PEV {} still needs {:.6g} at its deadline", k,
                              c.pev_id, c.s));
    }
    next.push_back({c, pev_index[n]});
    kept.push_back(n);
  }
  plan.pev_ids.reserve(kept.size());
  plan.d = Matrix<std::uint8_t>(kept.size(), rest);
  plan.p = Matrix<double>(kept.size(), rest);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    plan.pev_ids.push_back(contracts[kept[r]].pev_id);
    for (std::size_t t = 0; t < rest; ++t) {
      plan.d(r, t) = dec.schedule.d(kept[r], t + 1);
      plan.p(r, t) = dec.schedule.p(kept[r], t + 1);
    }
  }

  // Realized network state with this interval's station load.
  const InjectionProfile now = window.slice(0, 1);
  Matrix<double> p_ev(static_cast<std::size_t>(env.feeder.lines()), 1);
  p_ev(station.node - 1, 0) = env.feeder.kw_to_pu(rep.station_kw);
  const NetworkCheck net = check_network(env.feeder, env.ldf, now, p_ev, 1e-9);
  rep.v_min = net.v_min[0];
  rep.v_max = net.v_max[0];
  rep.v_min_node = net.v_min_node[0];
  for (const NetworkViolation& v : net.violations) {
    spdlog::error("interval {}: {} at node {} ({:.6g} vs {:.6g})", k, to_string(v.kind), v.node,
                  v.value, v.limit);
  }
  for (int j = 0; j < now.nodes(); ++j) {
    const double load = env.feeder.pu_to_kw(now.p_l(j, 0) - now.p_g(j, 0));
    rep.feeder_load_kw += load;
    if (j == station.node - 1) rep.station_node_load_kw = load;
  }

  rep.energy_cost = rep.price * dt * rep.station_kw;
  state.revenue += rep.revenue;
  state.energy_cost += rep.energy_cost;
  state.p_ev.push_back(rep.station_kw);
  state.active = std::move(next);
  state.plan = std::move(plan);
  rep.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  spdlog::debug("interval {}: {} arrivals, {} admitted, {} active, {:.3f} kW, {} nodes, {:.1f} ms",
                k, rep.arrivals, rep.admitted, rep.active, rep.station_kw, rep.nodes,
                rep.wall_ms);
  state.intervals.push_back(rep);
  ++state.k;
}

DayReport run_day(std::span<const PevRequest> arrivals, const Environment& env) {
  env.validate();
  const int T = env.day_length();
  std::vector<std::vector<PevRequest>> by_interval(T);
  for (const PevRequest& req : arrivals) {
    if (req.arrival_interval < 1 || req.arrival_interval > T) {
      throw Error(ErrorKind::kConfig, fmt::format("PEV {} arrives at interval {} outside 1..{}",
                                                  req.id, req.arrival_interval, T));
    }
    by_interval[req.arrival_interval - 1].push_back(req);
  }
  HorizonState state = HorizonState::start(T);
  for (int k = 1; k <= T; ++k) step(state, by_interval[k - 1], env);
  if (!state.active.empty()) {
    throw Error(ErrorKind::kInvariantViolation,
                fmt::format("{} contract(s) outstanding at the end of the day", state.active.size()));
  }

  DayReport day;
  day.day_length = T;
  day.dt_hours = env.station.dt_hours;
  day.station_node = env.station.node;
  day.spots = env.station.spots;
  day.intervals = std::move(state.intervals);
  day.pevs = std::move(state.pevs);
  day.revenue = state.revenue;
  day.energy_cost = state.energy_cost;
  return day;
}

AuditResult audit_commitments(const DayReport& report, double tol) {
  AuditResult out;
  for (const PevRecord& rec : report.pevs) {
    std::vector<std::string> issues;
    const int arrival = rec.request.arrival_interval;
    double delivered = 0.0;
    for (std::size_t t = 0; t < rec.trace.size(); ++t) {
      const double p = rec.trace[t];
      const int interval = static_cast<int>(t) + 1;
      delivered += p;
      if (p == 0.0) continue;
      if (rec.outcome != PevOutcome::kAdmitted) {
        issues.push_back(fmt::format("{} kW delivered at interval {} without a contract", p,
                                     interval));
      } else if (p < 0.0) {
        issues.push_back(fmt::format("negative delivery {} at interval {}", p, interval));
      } else if (interval < arrival || interval > rec.deadline) {
        issues.push_back(fmt::format("{} kW delivered at interval {} outside [{}, {}]", p,
                                     interval, arrival, rec.deadline));
      }
    }
    if (rec.outcome == PevOutcome::kAdmitted) {
      if (std::fabs(delivered - rec.s) > tol) {
        issues.push_back(fmt::format("delivered {:.9g} of {:.9g}", delivered, rec.s));
      }
      if (rec.deadline > arrival - 1 + rec.a) {
        issues.push_back(fmt::format("deadline {} exceeds arrival {} plus time of return {}",
                                     rec.deadline, arrival, rec.a));
      }
      if (rec.trace.size() != static_cast<std::size_t>(report.day_length)) {
        issues.push_back("trace length does not match the day");
      }
    }
    if (issues.empty()) continue;
    std::string msg = issues.front();
    for (std::size_t i = 1; i < issues.size(); ++i) msg += "; " + issues[i];
    out.violations.push_back({rec.request.id, fmt::format("PEV {}: {}", rec.request.id, msg)});
  }
  return out;
}

}  // namespace evsched
