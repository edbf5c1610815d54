#include "intersim/engine/config.hpp"

#include <cmath>

namespace intersim::engine {

using nlohmann::json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Fcfs: return "fcfs";
    case Mode::Ca: return "ca";
    case Mode::Cta: return "cta";
    case Mode::CaCta: return "ca-cta";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "fcfs") return Mode::Fcfs;
  if (s == "ca") return Mode::Ca;
  if (s == "cta") return Mode::Cta;
  if (s == "ca-cta") return Mode::CaCta;
  throw ConfigError("unknown mode '" + s + "' (fcfs, ca, cta, ca-cta)");
}

double ScenarioConfig::request_lead_s() const {
  // An auction bid is cleared at the next round boundary and announced one tick later;
  // its arrival must fall after the announcement.
  if (auctioned()) return (auction.round_ticks + 1.5) * tick_s;
  return fcfs_lead_s;
}

json default_config() {
  return json{
      {"mode", "fcfs"},
      {"seed", 1},
      {"window_s", 1800.0},
      {"lambda_per_min", nullptr},
      {"lambda_per_pair", false},
      {"tick_s", 1.0},
      {"horizon_extra_s", 4 * 3600.0},
      {"k_routes", 10},
      {"fcfs_lead_s", 1.0},
      {"v_launch", 3.0},
      {"idm", {{"accel", 0.3}, {"decel", 3.0}, {"headway", 1.5}, {"min_gap", 2.0}, {"exponent", 1.0}}},
      {"meso", {{"accel", 1.5}, {"decel", 3.0}}},
      {"wdp",
       {{"passes", 22000},
        {"wp", 0.15},
        {"np", 0.5},
        {"ranking", "net-gain"},
        {"wall_clock", false},
        {"wall_seconds", 1.0},
        {"early_stop_cap", 32}}},
      {"round_ticks", 2},
      {"market",
       {{"jam_density", 120.0},
        {"supply_share", 0.5},
        {"floor", 0.0},
        {"epsilon", 1.0},
        {"ceiling", 1e6},
        {"cadence_s", 10.0}}},
      {"density_cadence_s", 10.0},
      {"population",
       {{"speed_mean_kmh", 40.0},
        {"speed_sd_kmh", 5.0},
        {"speed_min_kmh", 30.0},
        {"speed_max_kmh", 50.0},
        {"bid_mean", 100.0},
        {"bid_sd", 25.0}}},
      {"tracked", {{"endowments", json::array()}, {"share", 0.0}}},
      {"vehicles", json::array()},
      {"ghost", true},
      {"log_messages", false},
  };
}

namespace {

// Overlays `src` on `dst`; every key of `src` must already exist in `dst`.
void overlay(json& dst, const json& src, const std::string& path) {
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!dst.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    auto& target = dst[it.key()];
    if (target.is_object() && it->is_object()) {
      overlay(target, *it, key);
    } else {
      target = *it;
    }
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

ScenarioConfig make_config(const json& scenario_config, std::span<const std::string> overrides) {
  json j = default_config();
  if (!scenario_config.is_null()) {
    if (!scenario_config.is_object()) throw ConfigError("config must be an object");
    overlay(j, scenario_config, "");
  }
  for (const auto& o : overrides) apply_override(j, o);

  ScenarioConfig c;
  c.mode = mode_from_string(get<std::string>(j, "mode"));
  c.seed = get<std::uint64_t>(j, "seed");
  c.window_s = get<double>(j, "window_s");
  if (!j.at("lambda_per_min").is_null()) c.lambda_per_min = get<double>(j, "lambda_per_min");
  c.lambda_per_pair = get<bool>(j, "lambda_per_pair");
  c.tick_s = get<double>(j, "tick_s");
  c.horizon_extra_s = get<double>(j, "horizon_extra_s");
  c.k_routes = get<std::size_t>(j, "k_routes");
  c.fcfs_lead_s = get<double>(j, "fcfs_lead_s");
  c.v_launch = get<double>(j, "v_launch");

  const auto& idm = j.at("idm");
  c.idm = {get<double>(idm, "accel"), get<double>(idm, "decel"), get<double>(idm, "headway"),
           get<double>(idm, "min_gap"), get<double>(idm, "exponent")};
  const auto& meso = j.at("meso");
  c.meso = {get<double>(meso, "accel"), get<double>(meso, "decel")};

  const auto& w = j.at("wdp");
  c.auction.wdp.passes = get<std::size_t>(w, "passes");
  c.auction.wdp.wp = get<double>(w, "wp");
  c.auction.wdp.np = get<double>(w, "np");
  const auto ranking = get<std::string>(w, "ranking");
  if (ranking == "net-gain") {
    c.auction.wdp.ranking = auction::Ranking::NetGain;
  } else if (ranking == "value") {
    c.auction.wdp.ranking = auction::Ranking::Value;
  } else {
    throw ConfigError("wdp.ranking must be 'net-gain' or 'value'");
  }
  c.auction.wall_clock = get<bool>(w, "wall_clock");
  c.auction.wall_seconds = get<double>(w, "wall_seconds");
  c.auction.early_stop_cap = get<std::size_t>(w, "early_stop_cap");
  c.auction.round_ticks = get<int>(j, "round_ticks");

  const auto& m = j.at("market");
  c.market.diagram.jam_density = get<double>(m, "jam_density");
  c.market.supply_share = get<double>(m, "supply_share");
  c.market.floor = get<double>(m, "floor");
  c.market.epsilon = get<double>(m, "epsilon");
  c.market.ceiling = get<double>(m, "ceiling");
  c.market.cadence_s = get<double>(m, "cadence_s");
  c.density_cadence_s = get<double>(j, "density_cadence_s");

  const auto& p = j.at("population");
  c.population = {get<double>(p, "speed_mean_kmh"), get<double>(p, "speed_sd_kmh"), get<double>(p, "speed_min_kmh"),
                  get<double>(p, "speed_max_kmh"),  get<double>(p, "bid_mean"),     get<double>(p, "bid_sd")};

  c.tracked_endowments = get<std::vector<Money>>(j.at("tracked"), "endowments");
  c.tracked_share = get<double>(j.at("tracked"), "share");
  for (const auto& v : j.at("vehicles")) {
    ScriptedVehicle s;
    s.t = get<double>(v, "t");
    s.origin = get<std::string>(v, "origin");
    s.destination = get<std::string>(v, "destination");
    if (v.contains("lane")) s.lane = get<int>(v, "lane");
    if (v.contains("speed_kmh")) s.speed_kmh = get<double>(v, "speed_kmh");
    if (v.contains("bid")) s.bid = get<double>(v, "bid");
    c.scripted.push_back(s);
  }
  c.ghost = get<bool>(j, "ghost");
  c.log_messages = get<bool>(j, "log_messages");

  if (!(c.window_s > 0)) throw ConfigError("window_s must be positive");
  if (!(c.tick_s > 0)) throw ConfigError("tick_s must be positive");
  if (c.lambda_per_min && !(*c.lambda_per_min >= 0)) throw ConfigError("lambda_per_min must be non-negative");
  if (c.k_routes == 0) throw ConfigError("k_routes must be positive");
  if (!(c.v_launch > 0)) throw ConfigError("v_launch must be positive");
  if (c.auction.wdp.passes == 0) throw ConfigError("wdp.passes must be positive");
  if (c.tracked_share < 0 || c.tracked_share > 1) throw ConfigError("tracked.share must lie in [0,1]");
  if (c.tracked_share > 0 && c.tracked_endowments.empty()) throw ConfigError("tracked.share needs endowments");
  if (!(c.density_cadence_s > 0) || !(c.market.cadence_s > 0)) throw ConfigError("cadences must be positive");
  c.effective = j;
  return c;
}

}  // namespace intersim::engine
