#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "evsched/lp.hpp"
#include "evsched/report.hpp"

namespace evsched::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kTopology:
    case ErrorKind::kDimension:
      return kExitConfig;
    case ErrorKind::kInfeasibleConfig:
    case ErrorKind::kBaseLoadInfeasible:
      return kExitInfeasible;
    case ErrorKind::kIterationLimit:
    case ErrorKind::kInternalConsistency:
    case ErrorKind::kInvariantViolation:
      return kExitInternal;
  }
  return kExitFailure;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto bad = [&] { return Error(ErrorKind::kConfig, fmt::format("bad seed list \"{}\"", text)); };
  auto number = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw bad();
    try {
      return static_cast<std::uint64_t>(std::stoull(s));
    } catch (const std::exception&) {
      throw bad();
    }
  };
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const std::uint64_t lo = number(item.substr(0, dash));
      const std::uint64_t hi = number(item.substr(dash + 1));
      if (hi < lo || hi - lo > 1000000) throw bad();
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(number(item));
    }
    pos = comma + 1;
  }
  if (out.empty()) throw bad();
  return out;
}

SeedResult run_seed(const ScenarioConfig& config, const Environment& env, std::uint64_t seed,
                    bool audit, const std::filesystem::path& dump_dir) {
  const std::vector<PevRequest> arrivals = generate_arrivals(config, seed);
  Environment local = env;
  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    local.on_solve = [&](int k, const P1Model& model, const milp::MilpSolution&) {
      write_text(dump_dir / fmt::format("milp_{:02d}.lp", k),
                 lp::to_lp_text(model.problem.lp, model.problem.binaries));
    };
  }
  SeedResult r;
  r.seed = seed;
  r.day = run_day(arrivals, local);
  if (audit) r.audit = audit_commitments(r.day);
  r.peak_avg_kw = window_average_kw(r.day, config.peak_intervals);
  r.offpeak_avg_kw = window_average_kw(r.day, config.offpeak_intervals);
  return r;
}

nlohmann::json summary_json(const RunManifest& manifest, const std::vector<SeedResult>& results) {
  using nlohmann::json;
  json seeds = json::array();
  std::vector<double> all_ms;
  double profit = 0.0;
  for (const SeedResult& r : results) {
    std::vector<double> ms;
    for (const IntervalReport& i : r.day.intervals) ms.push_back(i.wall_ms);
    all_ms.insert(all_ms.end(), ms.begin(), ms.end());
    const SolveTimeStats st = solve_time_stats(ms);
    const json day = day_json(r.day);
    const int arrivals = day["arrivals"].get<int>();
    const int admitted = day["admitted"].get<int>();
    profit += r.day.profit();
    seeds.push_back({
        {"seed", r.seed},
        {"profit", r.day.profit()},
        {"revenue", r.day.revenue},
        {"energy_cost", r.day.energy_cost},
        {"arrivals", arrivals},
        {"admitted", admitted},
        {"admission_rate", arrivals ? static_cast<double>(admitted) / arrivals : 0.0},
        {"peak_avg_kw", r.peak_avg_kw},
        {"offpeak_avg_kw", r.offpeak_avg_kw},
        {"audit_violations", r.audit.violations.size()},
        {"solve_ms", {{"min", st.min_ms}, {"median", st.median_ms}, {"max", st.max_ms}}},
    });
  }
  const SolveTimeStats st = solve_time_stats(all_ms);
  return {
      {"schema", "evsched.summary"},
      {"schema_version", kReportSchemaVersion},
      {"config", manifest.config.string()},
      {"seed_count", results.size()},
      {"total_profit", profit},
      {"mean_profit", results.empty() ? 0.0 : profit / static_cast<double>(results.size())},
      {"solve_ms",
       {{"count", st.count}, {"min", st.min_ms}, {"median", st.median_ms}, {"max", st.max_ms}}},
      {"seeds", seeds},
  };
}

int cmd_run(const RunManifest& manifest) {
  if (manifest.seeds.empty()) throw Error(ErrorKind::kConfig, "at least one seed is required");
  const ScenarioConfig config = load_scenario_config(manifest.config);
  const Environment env = build_environment(config);
  std::error_code ec;
  std::filesystem::create_directories(manifest.out_dir, ec);
  if (ec) {
    throw Error(ErrorKind::kConfig, fmt::format("cannot create output directory {}: {}",
                                                manifest.out_dir.string(), ec.message()));
  }
  std::vector<SeedResult> results;
  std::size_t violations = 0;
  for (std::uint64_t seed : manifest.seeds) {
    const std::filesystem::path dir = manifest.out_dir / fmt::format("seed_{}", seed);
    SeedResult r = run_seed(config, env, seed, manifest.audit,
                            manifest.dump_milp ? dir / "milp" : std::filesystem::path{});
    write_day_report(r.day, dir);
    write_text(dir / "timings.csv", timings_csv(r.day));
    for (const CommitmentViolation& v : r.audit.violations) spdlog::error("seed {}: {}", seed, v.message);
    violations += r.audit.violations.size();
    spdlog::info("seed {}: profit {:.4f}, {} of {} PEVs admitted", seed, r.day.profit(),
                 day_json(r.day)["admitted"].get<int>(), r.day.pevs.size());
    results.push_back(std::move(r));
  }
  write_text(manifest.out_dir / "summary.json", summary_json(manifest, results).dump(2) + "\n");
  fmt::print("wrote {} seed report(s) to {}\n", results.size(), manifest.out_dir.string());
  if (violations > 0) {
    fmt::print(stderr, "commitment audit found {} violation(s)\n", violations);
    return kExitInternal;
  }
  return kExitOk;
}

int cmd_validate(const std::filesystem::path& config_path, double load_scale) {
  ScenarioConfig config = load_scenario_config(config_path);
  if (load_scale >= 0.0) config.load_scale = load_scale;
  const Environment env = build_environment(config);
  const Matrix<double> zero(env.feeder.lines(), env.day_length());
  const NetworkCheck check = check_network(env.feeder, env.ldf, env.profile, zero);
  fmt::print("feeder {} ({} nodes), {} intervals, load scale {}\n", env.feeder.name,
             env.feeder.node_count, env.day_length(), config.load_scale);
  fmt::print("interval  v_min     node  v_max\n");
  for (int t = 0; t < env.day_length(); ++t) {
    fmt::print("{:>8}  {:.6f}  {:>4}  {:.6f}\n", t + 1, std::sqrt(check.v_min[t]),
               env.feeder.labels[check.v_min_node[t]], std::sqrt(check.v_max[t]));
  }
  fmt::print("worst margin to v_min^2: {:.6g}\n", check.worst_low_margin);
  fmt::print("worst margin to v_max^2: {:.6g}\n", check.worst_high_margin);
  if (check.feasible()) {
    fmt::print("base load feasible in all {} intervals\n", env.day_length());
    return kExitOk;
  }
  for (const NetworkViolation& v : check.violations) {
    fmt::print("violation: {} at node {} interval {}: {:.6g} vs limit {:.6g}\n", to_string(v.kind),
               env.feeder.labels[v.node], v.interval + 1, v.value, v.limit);
  }
  fmt::print("base load infeasible: {} violation(s)\n", check.violations.size());
  return kExitInfeasible;
}

int cmd_dump_milp(const std::filesystem::path& config_path, std::uint64_t seed, int interval,
                  const std::filesystem::path& out) {
  const ScenarioConfig config = load_scenario_config(config_path);
  const Environment env = build_environment(config);
  const int T = env.day_length();
  if (interval < 1 || interval > T) {
    throw Error(ErrorKind::kConfig, fmt::format("interval {} is outside 1..{}", interval, T));
  }
  const std::vector<PevRequest> arrivals = generate_arrivals(config, seed);
  Environment local = env;
  std::string text;
  local.on_solve = [&](int k, const P1Model& model, const milp::MilpSolution&) {
    if (k == interval) text = lp::to_lp_text(model.problem.lp, model.problem.binaries);
  };
  HorizonState state = HorizonState::start(T);
  for (int k = 1; k <= interval; ++k) {
    std::vector<PevRequest> now;
    for (const PevRequest& r : arrivals) {
      if (r.arrival_interval == k) now.push_back(r);
    }
    step(state, now, local);
  }
  if (out.empty()) {
    fmt::print("{}", text);
  } else {
    write_text(out, text);
  }
  return kExitOk;
}

namespace {

void configure_logging() {
  auto logger = spdlog::get("evsched");
  if (!logger) logger = spdlog::stderr_color_mt("evsched");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("EVSCHED_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main_entry(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Receding-horizon EV charging scheduler"};
  app.require_subcommand(1);

  RunManifest manifest;
  std::string seeds = "1";
  bool no_audit = false;
  auto* run = app.add_subcommand("run", "Run seeded days and write reports");
  run->add_option("--config", manifest.config, "Scenario JSON")->required();
  run->add_option("--out", manifest.out_dir, "Output directory")->required();
  run->add_option("--seeds", seeds, "Seed list, e.g. 1,2,10-20");
  run->add_flag("--no-audit", no_audit, "Skip the commitment audit");
  run->add_flag("--dump-milp", manifest.dump_milp, "Write every interval's MILP");

  std::filesystem::path validate_config;
  double load_scale = -1.0;
  auto* validate = app.add_subcommand("validate", "Check base-load feasibility of a scenario");
  validate->add_option("--config", validate_config, "Scenario JSON")->required();
  validate->add_option("--load-scale", load_scale, "Override the scenario's load scale")
      ->check(CLI::NonNegativeNumber);

  std::filesystem::path dump_config, dump_out;
  std::uint64_t dump_seed = 1;
  int dump_interval = 1;
  auto* dump = app.add_subcommand("dump-milp", "Print the MILP solved at one interval");
  dump->add_option("--config", dump_config, "Scenario JSON")->required();
  dump->add_option("--seed", dump_seed, "Arrival seed");
  dump->add_option("--interval", dump_interval, "Interval to dump (1-based)")->required();
  dump->add_option("--out", dump_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      manifest.seeds = parse_seed_list(seeds);
      manifest.audit = !no_audit;
      return cmd_run(manifest);
    }
    if (*validate) return cmd_validate(validate_config, load_scale);
    if (*dump) return cmd_dump_milp(dump_config, dump_seed, dump_interval, dump_out);
  } catch (const Error& e) {
    fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace evsched::cli
