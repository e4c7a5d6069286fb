#pragma once

// DayReport serialization. Files written by write_day_report are a pure
// function of the report's deterministic fields; wall-clock timings go to a
// separate file.
//
//   intervals.csv  one row per interval
//   pevs.csv       one row per arriving vehicle
//   traces.csv     pev_id,interval,p_kw for every nonzero delivery
//   day.json       totals and run metadata

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evsched/horizon.hpp"

namespace evsched {

inline constexpr int kReportSchemaVersion = 1;

std::string intervals_csv(const DayReport& day);
std::string pevs_csv(const DayReport& day);
std::string traces_csv(const DayReport& day);
nlohmann::json day_json(const DayReport& day);
std::string timings_csv(const DayReport& day);

// Writes the four deterministic files into `dir`, creating it if needed.
void write_day_report(const DayReport& day, const std::filesystem::path& dir);

// Mean station kW over the given 1-based intervals; 0 for an empty list.
double window_average_kw(const DayReport& day, std::span<const int> intervals);

struct SolveTimeStats {
  std::size_t count = 0;
  double min_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
};
SolveTimeStats solve_time_stats(std::vector<double> samples_ms);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace evsched
