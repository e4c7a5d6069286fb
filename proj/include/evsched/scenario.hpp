#pragma once

// Scenario inputs: feeder fixtures, load-profile CSVs, the scenario JSON and
// seeded PEV arrival streams.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evsched/feeder.hpp"
#include "evsched/formulation.hpp"
#include "evsched/horizon.hpp"

namespace evsched {

struct ArrivalModel {
  std::vector<double> rate;  // expected arrivals per interval, T entries
  int max_per_interval = 10;
  double soc_plugin_min = 0.2;
  double soc_plugin_max = 0.6;
  double soc_plugout_min = 0.8;
  double soc_plugout_max = 1.0;
  std::vector<double> battery_kwh{24.0, 40.0, 60.0, 75.0};
  std::vector<double> battery_weights{1.0, 1.0, 1.0, 1.0};
  double c1_probability = 0.4;
};

struct ScenarioConfig {
  std::filesystem::path feeder_path;
  std::filesystem::path profile_path;
  int day_length = 24;
  double power_factor = 0.9;
  double load_scale = 1.0;
  std::vector<double> prices;
  std::vector<int> peak_intervals;
  std::vector<int> offpeak_intervals;
  StationConfig station;
  ArrivalModel arrivals;
  std::uint64_t seed = 1;
  long node_limit = 100000;

  void validate() const;
};

// Parses JSON text, reporting syntax errors as "<source>:line:col: ...".
nlohmann::json parse_json_text(std::string_view text, const std::string& source);
std::string read_text_file(const std::filesystem::path& file);

FeederModel parse_feeder(const nlohmann::json& doc, const std::string& source);
FeederModel load_feeder(const std::filesystem::path& file);

// Normalized per-node demand, header row of node ids then one row per
// interval. Scaled by each node's spot load and `scale`; reactive demand at
// the given lagging power factor.
InjectionProfile parse_profile_csv(std::string_view text, const FeederModel& feeder,
                                   double power_factor, double scale, const std::string& source);
InjectionProfile load_profile_ingest(const std::filesystem::path& file, const FeederModel& feeder,
                                     double power_factor = 0.9, double scale = 1.0);

// Relative paths inside the config resolve against `base_dir`.
ScenarioConfig parse_scenario_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir,
                                     const std::string& source);
ScenarioConfig load_scenario_config(const std::filesystem::path& file);

// Deterministic in `seed`; ids are numbered from 1 in arrival order.
std::vector<PevRequest> generate_arrivals(const ScenarioConfig& config, std::uint64_t seed);

Environment build_environment(const ScenarioConfig& config);

}  // namespace evsched
