#include "evsched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "evsched/error.hpp"

namespace evsched {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& source, const std::string& what) {
  throw Error(ErrorKind::kConfig, fmt::format("{}: {}", source, what));
}

// Object wrapper that rejects unknown keys and mistyped values.
class Fields {
 public:
  Fields(const json& obj, std::string where, std::string source,
         std::initializer_list<const char*> allowed)
      : obj_(obj), where_(std::move(where)), source_(std::move(source)) {
    if (!obj_.is_object()) config_error(source_, fmt::format("{} must be an object", where_));
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj_.items()) {
      if (!ok.count(item.key())) {
        config_error(source_, fmt::format("unknown key \"{}\" in {}", item.key(), where_));
      }
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }
  const json& raw(const char* key) const { return obj_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(obj_.at(key), path(key));
  }
  double number(const char* key) const {
    require(key);
    return as_number(obj_.at(key), path(key));
  }
  long integer(const char* key, long fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) config_error(source_, fmt::format("{} must be an integer", path(key)));
    return v.get<long>();
  }
  std::string string(const char* key) const {
    require(key);
    const json& v = obj_.at(key);
    if (!v.is_string()) config_error(source_, fmt::format("{} must be a string", path(key)));
    return v.get<std::string>();
  }
  std::vector<double> numbers(const char* key) const {
    require(key);
    return number_array(obj_.at(key), path(key));
  }
  std::vector<int> integers(const char* key) const {
    if (!has(key)) return {};
    const json& v = obj_.at(key);
    if (!v.is_array()) config_error(source_, fmt::format("{} must be an array", path(key)));
    std::vector<int> out;
    for (const json& e : v) {
      if (!e.is_number_integer()) {
        config_error(source_, fmt::format("{} must hold integers", path(key)));
      }
      out.push_back(e.get<int>());
    }
    return out;
  }
  std::vector<double> number_array(const json& v, const std::string& where) const {
    if (!v.is_array()) config_error(source_, fmt::format("{} must be an array", where));
    std::vector<double> out;
    for (const json& e : v) out.push_back(as_number(e, where));
    return out;
  }
  std::pair<double, double> range(const char* key, std::pair<double, double> fallback) const {
    if (!has(key)) return fallback;
    const std::vector<double> v = number_array(obj_.at(key), path(key));
    if (v.size() != 2) config_error(source_, fmt::format("{} must be [low, high]", path(key)));
    return {v[0], v[1]};
  }

 private:
  void require(const char* key) const {
    if (!has(key)) config_error(source_, fmt::format("missing required key {}", path(key)));
  }
  double as_number(const json& v, const std::string& where) const {
    if (!v.is_number()) config_error(source_, fmt::format("{} must be a number", where));
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_error(source_, fmt::format("{} must be finite", where));
    return d;
  }

  const json& obj_;
  std::string where_;
  std::string source_;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

json parse_json_text(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    const auto start = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t from = start == std::string_view::npos || at == 0 ? 0 : start + 1;
    const std::string_view context = text.substr(from, text.find('\n', from) - from);
    std::string msg = e.what();
    if (const auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
    throw Error(ErrorKind::kConfig,
                fmt::format("{}:{}:{}: {}\n  {}", source, line, col, msg, context));
  }
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error(ErrorKind::kConfig, fmt::format("cannot open {}", file.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

FeederModel parse_feeder(const json& doc, const std::string& source) {
  const Fields top(doc, "feeder", source,
                   {"name", "base_kva", "base_kv", "v0", "v_band", "p_limits_pu", "q_limits_pu",
                    "nodes"});
  FeederModel f;
  f.name = top.has("name") ? top.string("name") : "feeder";
  f.base_kva = top.number("base_kva", 1000.0);
  f.base_kv = top.number("base_kv", 4.16);
  if (!(f.base_kva > 0.0 && f.base_kv > 0.0)) config_error(source, "base_kva and base_kv must be positive");
  const double v0 = top.number("v0", 1.0);
  f.v0 = v0 * v0;
  const auto band = top.range("v_band", {0.97, 1.03});
  f.v_min_sq = band.first * band.first;
  f.v_max_sq = band.second * band.second;
  std::tie(f.p_min, f.p_max) = top.range("p_limits_pu", {-kUnbounded, kUnbounded});
  std::tie(f.q_min, f.q_max) = top.range("q_limits_pu", {-kUnbounded, kUnbounded});

  const json& nodes = top.raw("nodes");
  if (!nodes.is_array() || nodes.empty()) config_error(source, "feeder.nodes must be a non-empty array");
  const double z_base = f.base_kv * f.base_kv * 1000.0 / f.base_kva;
  std::map<std::string, int> index;
  std::vector<std::string> parent_ids;
  f.node_count = static_cast<int>(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = fmt::format("feeder.nodes[{}]", i);
    const Fields n(nodes[i], where, source,
                   {"id", "parent", "r_ohm", "x_ohm", "r_pu", "x_pu", "p_kw", "s_bar_kva"});
    const std::string id = n.string("id");
    if (!index.emplace(id, static_cast<int>(i)).second) {
      config_error(source, fmt::format("duplicate node id \"{}\"", id));
    }
    f.labels.push_back(id);
    parent_ids.push_back(n.has("parent") ? n.string("parent") : "");
    double r = 0.0, x = 0.0;
    if (i > 0) {
      if (n.has("r_ohm") == n.has("r_pu") || n.has("x_ohm") == n.has("x_pu")) {
        config_error(source, fmt::format("{} needs exactly one of r_ohm/r_pu and x_ohm/x_pu", where));
      }
      r = n.has("r_ohm") ? n.number("r_ohm") / z_base : n.number("r_pu");
      x = n.has("x_ohm") ? n.number("x_ohm") / z_base : n.number("x_pu");
    }
    f.line_r.push_back(r);
    f.line_x.push_back(x);
    f.spot_p_kw.push_back(n.number("p_kw", 0.0));
    if (n.has("s_bar_kva")) {
      f.s_bar.emplace_back(n.number("s_bar_kva") / f.base_kva);
    } else {
      f.s_bar.emplace_back(std::nullopt);
    }
  }
  f.parent.assign(f.node_count, -1);
  if (!parent_ids[0].empty()) {
    throw Error(ErrorKind::kTopology,
                fmt::format("{}: the first node is the substation and cannot have a parent", source));
  }
  for (int i = 1; i < f.node_count; ++i) {
    const auto it = index.find(parent_ids[i]);
    if (it == index.end()) {
      throw Error(ErrorKind::kTopology, fmt::format("{}: node \"{}\" has unknown parent \"{}\"",
                                                    source, f.labels[i], parent_ids[i]));
    }
    f.parent[i] = it->second;
  }
  f.validate();
  return f;
}

FeederModel load_feeder(const std::filesystem::path& file) {
  const std::string source = file.string();
  return parse_feeder(parse_json_text(read_text_file(file), source), source);
}

InjectionProfile parse_profile_csv(std::string_view text, const FeederModel& feeder,
                                   double power_factor, double scale, const std::string& source) {
  if (!(power_factor > 0.0 && power_factor <= 1.0)) {
    config_error(source, fmt::format("power factor {} is outside (0, 1]", power_factor));
  }
  if (!(scale >= 0.0)) config_error(source, "load scale must be nonnegative");
  std::istringstream is{std::string(text)};
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_no;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.front() == '#') continue;
    rows.push_back(split_csv_line(line));
    line_no.push_back(no);
  }
  if (rows.empty()) config_error(source, "load profile is empty");
  if (rows.size() == 1) config_error(source, "load profile has a header but no intervals");

  const std::vector<std::string>& header = rows.front();
  std::vector<int> column_node;
  std::set<int> seen;
  for (const std::string& id : header) {
    const auto it = std::find(feeder.labels.begin(), feeder.labels.end(), id);
    if (it == feeder.labels.end()) {
      config_error(source, fmt::format("column \"{}\" is not a node of feeder {}", id, feeder.name));
    }
    const int node = static_cast<int>(it - feeder.labels.begin());
    if (node == 0) config_error(source, fmt::format("column \"{}\" is the substation", id));
    if (!seen.insert(node).second) config_error(source, fmt::format("node \"{}\" appears twice", id));
    column_node.push_back(node);
  }
  for (int j = 1; j < feeder.node_count; ++j) {
    if (feeder.spot_p_kw[j] != 0.0 && !seen.count(j)) {
      config_error(source, fmt::format("load node \"{}\" has no profile column", feeder.labels[j]));
    }
  }

  const int T = static_cast<int>(rows.size()) - 1;
  InjectionProfile prof = InjectionProfile::zeros(feeder.lines(), T);
  const double tan_phi = std::tan(std::acos(power_factor));
  for (int t = 0; t < T; ++t) {
    const std::vector<std::string>& row = rows[t + 1];
    if (row.size() != header.size()) {
      config_error(source, fmt::format("line {}: {} values for {} columns", line_no[t + 1],
                                       row.size(), header.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(row[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != row[c].size() || !std::isfinite(v)) {
        config_error(source, fmt::format("line {}: \"{}\" is not a number", line_no[t + 1], row[c]));
      }
      if (v < 0.0) {
        config_error(source, fmt::format("line {}: negative demand {} for node \"{}\"",
                                         line_no[t + 1], v, header[c]));
      }
      const int j = column_node[c] - 1;
      const double p = feeder.kw_to_pu(v * feeder.spot_p_kw[column_node[c]] * scale);
      prof.p_l(j, t) = p;
      prof.q_l(j, t) = p * tan_phi;
    }
  }
  return prof;
}

InjectionProfile load_profile_ingest(const std::filesystem::path& file, const FeederModel& feeder,
                                     double power_factor, double scale) {
  return parse_profile_csv(read_text_file(file), feeder, power_factor, scale, file.string());
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, what); };
  if (day_length < 1) fail("day_length must be at least 1");
  if (static_cast<int>(prices.size()) != day_length) {
    fail(fmt::format("{} prices for a {}-interval day", prices.size(), day_length));
  }
  for (double p : prices) {
    if (p < 0.0) fail("prices must be nonnegative");
  }
  if (!(power_factor > 0.0 && power_factor <= 1.0)) fail("power_factor must lie in (0, 1]");
  if (!(load_scale >= 0.0)) fail("load_scale must be nonnegative");
  for (const auto* list : {&peak_intervals, &offpeak_intervals}) {
    for (int k : *list) {
      if (k < 1 || k > day_length) fail(fmt::format("window interval {} is outside 1..{}", k, day_length));
    }
  }
  station.validate();
  const ArrivalModel& m = arrivals;
  if (static_cast<int>(m.rate.size()) != day_length) {
    fail(fmt::format("arrival rate has {} entries for {} intervals", m.rate.size(), day_length));
  }
  for (double r : m.rate) {
    if (!(r >= 0.0)) fail("arrival rates must be nonnegative");
  }
  if (m.max_per_interval < 0) fail("max_per_interval must be nonnegative");
  if (!(m.soc_plugin_min >= 0.0 && m.soc_plugin_min <= m.soc_plugin_max)) {
    fail("soc_plugin must be an ordered range within [0, 1]");
  }
  if (!(m.soc_plugout_min <= m.soc_plugout_max && m.soc_plugout_max <= 1.0)) {
    fail("soc_plugout must be an ordered range within [0, 1]");
  }
  if (!(m.soc_plugin_max < m.soc_plugout_min)) {
    fail("soc_plugin range must lie strictly below the soc_plugout range");
  }
  if (m.battery_kwh.empty() || m.battery_kwh.size() != m.battery_weights.size()) {
    fail("battery_kwh and battery_weights must be non-empty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m.battery_kwh.size(); ++i) {
    if (!(m.battery_kwh[i] > 0.0)) fail("battery capacities must be positive");
    if (!(m.battery_weights[i] >= 0.0)) fail("battery weights must be nonnegative");
    total += m.battery_weights[i];
  }
  if (!(total > 0.0)) fail("battery weights must not all be zero");
  if (!(m.c1_probability >= 0.0 && m.c1_probability <= 1.0)) fail("c1_probability must lie in [0, 1]");
  if (node_limit < 1) fail("solver.node_limit must be positive");
}

ScenarioConfig parse_scenario_config(const json& doc, const std::filesystem::path& base_dir,
                                     const std::string& source) {
  const Fields top(doc, "scenario", source,
                   {"feeder", "load_profile", "day_length", "interval_hours", "power_factor",
                    "load_scale", "prices", "peak_intervals", "offpeak_intervals", "station",
                    "arrivals", "seed", "solver"});
  ScenarioConfig c;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  c.feeder_path = resolve(top.string("feeder"));
  c.profile_path = resolve(top.string("load_profile"));
  c.day_length = static_cast<int>(top.integer("day_length", 24));
  c.power_factor = top.number("power_factor", 0.9);
  c.load_scale = top.number("load_scale", 1.0);
  c.prices = top.numbers("prices");
  c.peak_intervals = top.integers("peak_intervals");
  c.offpeak_intervals = top.integers("offpeak_intervals");
  const long seed = top.integer("seed", 1);
  if (seed < 0) config_error(source, "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.station.dt_hours = top.number("interval_hours", 1.0);

  if (top.has("station")) {
    const Fields s(top.raw("station"), "scenario.station", source,
                   {"node", "spots", "p_min_kw", "p_max_kw", "efficiency", "c1_price", "c2_price",
                    "c1_avg_kw", "c2_avg_kw"});
    StationConfig& st = c.station;
    st.node = static_cast<int>(s.integer("node", st.node));
    st.spots = static_cast<int>(s.integer("spots", st.spots));
    st.p_min_kw = s.number("p_min_kw", st.p_min_kw);
    st.p_max_kw = s.number("p_max_kw", st.p_max_kw);
    st.efficiency = s.number("efficiency", st.efficiency);
    st.c1_price = s.number("c1_price", st.c1_price);
    st.c2_price = s.number("c2_price", st.c2_price);
    st.c1_avg_kw = s.number("c1_avg_kw", st.c1_avg_kw);
    st.c2_avg_kw = s.number("c2_avg_kw", st.c2_avg_kw);
  }

  ArrivalModel& m = c.arrivals;
  m.rate.assign(c.day_length, 0.0);
  if (top.has("arrivals")) {
    const Fields a(top.raw("arrivals"), "scenario.arrivals", source,
                   {"rate", "max_per_interval", "soc_plugin", "soc_plugout", "battery_kwh",
                    "battery_weights", "c1_probability"});
    if (a.has("rate")) {
      const json& r = a.raw("rate");
      if (r.is_array()) {
        m.rate = a.numbers("rate");
      } else {
        m.rate.assign(c.day_length, a.number("rate"));
      }
    }
    m.max_per_interval = static_cast<int>(a.integer("max_per_interval", m.max_per_interval));
    std::tie(m.soc_plugin_min, m.soc_plugin_max) =
        a.range("soc_plugin", {m.soc_plugin_min, m.soc_plugin_max});
    std::tie(m.soc_plugout_min, m.soc_plugout_max) =
        a.range("soc_plugout", {m.soc_plugout_min, m.soc_plugout_max});
    if (a.has("battery_kwh")) {
      m.battery_kwh = a.numbers("battery_kwh");
      m.battery_weights.assign(m.battery_kwh.size(), 1.0);
    }
    if (a.has("battery_weights")) m.battery_weights = a.numbers("battery_weights");
    m.c1_probability = a.number("c1_probability", m.c1_probability);
  }
  if (top.has("solver")) {
    const Fields s(top.raw("solver"), "scenario.solver", source, {"node_limit"});
    c.node_limit = s.integer("node_limit", c.node_limit);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    config_error(source, e.what());
  }
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& file) {
  const std::string source = file.string();
  return parse_scenario_config(parse_json_text(read_text_file(file), source),
                               file.parent_path(), source);
}

std::vector<PevRequest> generate_arrivals(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const ArrivalModel& m = config.arrivals;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> soc_in(m.soc_plugin_min, m.soc_plugin_max);
  std::uniform_real_distribution<double> soc_out(m.soc_plugout_min, m.soc_plugout_max);
  std::discrete_distribution<std::size_t> battery(m.battery_weights.begin(),
                                                  m.battery_weights.end());
  std::bernoulli_distribution c1(m.c1_probability);
  std::vector<PevRequest> out;
  int next_id = 1;
  for (int k = 1; k <= config.day_length; ++k) {
    int count = 0;
    if (m.rate[k - 1] > 0.0) {
      std::poisson_distribution<int> arrivals(m.rate[k - 1]);
      count = std::min(arrivals(rng), m.max_per_interval);
    }
    for (int i = 0; i < count; ++i) {
      PevRequest r;
      r.id = next_id++;
      r.arrival_interval = k;
      r.soc_plugin = soc_in(rng);
      r.soc_plugout = soc_out(rng);
      r.battery_kwh = m.battery_kwh[battery(rng)];
      r.tier = c1(rng) ? PriceTier::kC1 : PriceTier::kC2;
      out.push_back(r);
    }
  }
  return out;
}

Environment build_environment(const ScenarioConfig& config) {
  config.validate();
  FeederModel feeder = load_feeder(config.feeder_path);
  InjectionProfile profile =
      load_profile_ingest(config.profile_path, feeder, config.power_factor, config.load_scale);
  if (profile.intervals != config.day_length) {
    throw Error(ErrorKind::kConfig,
                fmt::format("{}: {} intervals, scenario day_length is {}",
                            config.profile_path.string(), profile.intervals, config.day_length));
  }
  Environment env = make_environment(std::move(feeder), std::move(profile), config.prices,
                                     config.station);
  env.milp.node_limit = config.node_limit;
  return env;
}

}  // namespace evsched
