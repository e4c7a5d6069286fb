#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evsched/error.hpp"
#include "evsched/horizon.hpp"
#include "evsched/scenario.hpp"

namespace evsched::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitInternal = 4,
};

int exit_code_for(ErrorKind kind);

// "1,2,5-8" -> {1, 2, 5, 6, 7, 8}. Throws Error(kConfig) on bad syntax.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct RunManifest {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::vector<std::uint64_t> seeds;
  bool audit = true;
  bool dump_milp = false;
};

struct SeedResult {
  std::uint64_t seed = 0;
  DayReport day;
  AuditResult audit;
  double peak_avg_kw = 0.0;
  double offpeak_avg_kw = 0.0;
};

// Runs one seeded day on a prepared environment. Dumps every interval's
// problem into `dump_dir` when it is non-empty.
SeedResult run_seed(const ScenarioConfig& config, const Environment& env, std::uint64_t seed,
                    bool audit, const std::filesystem::path& dump_dir = {});

nlohmann::json summary_json(const RunManifest& manifest, const std::vector<SeedResult>& results);

int cmd_run(const RunManifest& manifest);
int cmd_validate(const std::filesystem::path& config, double load_scale);
int cmd_dump_milp(const std::filesystem::path& config, std::uint64_t seed, int interval,
                  const std::filesystem::path& out);

int main_entry(int argc, char** argv);

}  // namespace evsched::cli
