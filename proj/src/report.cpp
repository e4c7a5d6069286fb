#include "evsched/report.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "evsched/error.hpp"

namespace evsched {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double delivered(const PevRecord& rec) {
  double s = 0.0;
  for (double p : rec.trace) s += p;
  return s;
}

}  // namespace

std::string intervals_csv(const DayReport& day) {
  std::string out =
      "interval,arrivals,screened,admitted,rejected,active,charging,station_kw,feeder_load_kw,"
      "station_node_load_kw,price,v_min,v_max,v_min_node,revenue,energy_cost,objective,"
      "carried_objective,hint_feasible,status,nodes,lp_iterations,binaries,rows\n";
  for (const IntervalReport& r : day.intervals) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       r.interval, r.arrivals, r.screened, r.admitted, r.rejected, r.active,
                       r.charging, r.station_kw, r.feeder_load_kw, r.station_node_load_kw,
                       r.price, r.v_min, r.v_max, r.v_min_node, r.revenue, r.energy_cost,
                       r.objective,
                       r.carried_objective ? fmt::format("{}", *r.carried_objective) : "",
                       r.hint_feasible ? 1 : 0, milp::to_string(r.status), r.nodes,
                       r.lp_iterations, r.binaries, r.rows);
  }
  return out;
}

std::string pevs_csv(const DayReport& day) {
  std::string out =
      "pev_id,arrival_interval,tier,soc_plugin,soc_plugout,battery_kwh,s_kw,a,deadline,outcome,"
      "delivered_kw,fulfilled_interval,revenue,reason\n";
  for (const PevRecord& rec : day.pevs) {
    const PevRequest& q = rec.request;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", q.id, q.arrival_interval,
                       to_string(q.tier), q.soc_plugin, q.soc_plugout, q.battery_kwh, rec.s, rec.a,
                       rec.deadline, to_string(rec.outcome), delivered(rec),
                       rec.fulfilled_interval, rec.revenue, csv_field(rec.reason));
  }
  return out;
}

std::string traces_csv(const DayReport& day) {
  std::string out = "pev_id,interval,p_kw\n";
  for (const PevRecord& rec : day.pevs) {
    for (std::size_t t = 0; t < rec.trace.size(); ++t) {
      if (rec.trace[t] != 0.0) out += fmt::format("{},{},{}\n", rec.request.id, t + 1, rec.trace[t]);
    }
  }
  return out;
}

nlohmann::json day_json(const DayReport& day) {
  int admitted = 0, rejected = 0, screened = 0, fulfilled = 0;
  long nodes = 0;
  for (const PevRecord& rec : day.pevs) {
    admitted += rec.outcome == PevOutcome::kAdmitted;
    rejected += rec.outcome == PevOutcome::kRejected;
    screened += rec.outcome == PevOutcome::kScreened;
    fulfilled += rec.fulfilled_interval > 0;
  }
  double energy_kwh = 0.0;
  for (const IntervalReport& r : day.intervals) {
    nodes += r.nodes;
    energy_kwh += r.station_kw * day.dt_hours;
  }
  return {
      {"schema", "evsched.day"},
      {"schema_version", kReportSchemaVersion},
      {"day_length", day.day_length},
      {"dt_hours", day.dt_hours},
      {"station_node", day.station_node},
      {"spots", day.spots},
      {"arrivals", day.pevs.size()},
      {"admitted", admitted},
      {"rejected", rejected},
      {"screened", screened},
      {"fulfilled", fulfilled},
      {"energy_kwh", energy_kwh},
      {"revenue", day.revenue},
      {"energy_cost", day.energy_cost},
      {"profit", day.profit()},
      {"branch_and_bound_nodes", nodes},
  };
}

std::string timings_csv(const DayReport& day) {
  std::string out = "interval,wall_ms,nodes\n";
  for (const IntervalReport& r : day.intervals) {
    out += fmt::format("{},{:.3f},{}\n", r.interval, r.wall_ms, r.nodes);
  }
  return out;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::kConfig, fmt::format("cannot write {}", file.string()));
  os << text;
  if (!os.flush()) throw Error(ErrorKind::kConfig, fmt::format("failed writing {}", file.string()));
}

void write_day_report(const DayReport& day, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::kConfig,
                fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  }
  write_text(dir / "intervals.csv", intervals_csv(day));
  write_text(dir / "pevs.csv", pevs_csv(day));
  write_text(dir / "traces.csv", traces_csv(day));
  write_text(dir / "day.json", day_json(day).dump(2) + "\n");
}

double window_average_kw(const DayReport& day, std::span<const int> intervals) {
  if (intervals.empty()) return 0.0;
  double sum = 0.0;
  for (int k : intervals) {
    if (k < 1 || k > static_cast<int>(day.intervals.size())) {
      throw Error(ErrorKind::kConfig, fmt::format("interval {} is outside the day", k));
    }
    sum += day.intervals[k - 1].station_kw;
  }
  return sum / static_cast<double>(intervals.size());
}

SolveTimeStats solve_time_stats(std::vector<double> samples_ms) {
  SolveTimeStats out;
  out.count = samples_ms.size();
  if (samples_ms.empty()) return out;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  out.min_ms = samples_ms.front();
  out.max_ms = samples_ms.back();
  out.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  return out;
}

}  // namespace evsched
