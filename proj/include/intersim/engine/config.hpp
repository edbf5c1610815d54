#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "intersim/auction/round.hpp"
#include "intersim/driver/driver.hpp"
#include "intersim/dynamics/dynamics.hpp"
#include "intersim/market/market.hpp"

namespace intersim::engine {

enum class Mode { Fcfs, Ca, Cta, CaCta };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// A vehicle injected at a fixed time instead of drawn from the demand process.
struct ScriptedVehicle {
  double t = 0.0;
  std::string origin;
  std::string destination;
  std::optional<int> lane;
  std::optional<double> speed_kmh;
  std::optional<Money> bid;
};

struct ScenarioConfig {
  Mode mode = Mode::Fcfs;
  std::uint64_t seed = 1;
  double window_s = 1800.0;
  /// Network-wide arrivals per minute spread uniformly over the OD list; per OD pair when
  /// `lambda_per_pair`. Without it the OD entries' own rates or counts apply.
  std::optional<double> lambda_per_min;
  bool lambda_per_pair = false;
  double tick_s = 1.0;
  double horizon_extra_s = 4 * 3600.0;
  std::size_t k_routes = 10;
  double fcfs_lead_s = 1.0;
  double v_launch = 3.0;
  dynamics::IdmParams idm;
  dynamics::MesoParams meso;
  auction::AuctionParams auction;
  market::MarketParams market;
  double density_cadence_s = 10.0;
  driver::PopulationParams population;
  std::vector<Money> tracked_endowments;
  double tracked_share = 0.0;
  std::vector<ScriptedVehicle> scripted;
  bool ghost = true;
  bool log_messages = false;

  nlohmann::json effective;  // the merged configuration, echoed into the manifest

  /// Earliest arrival a request may ask for, relative to the time it is sent.
  double request_lead_s() const;
  bool auctioned() const { return mode == Mode::Ca || mode == Mode::CaCta; }
  bool priced() const { return mode == Mode::Cta || mode == Mode::CaCta; }
};

nlohmann::json default_config();

/// Defaults, then the scenario's own config block, then "dotted.key=value" overrides. Keys absent
/// from the defaults are rejected with ConfigError.
ScenarioConfig make_config(const nlohmann::json& scenario_config, std::span<const std::string> overrides = {});

/// Applies one "a.b=value" override; the value is parsed as JSON when possible, else kept as text.
void apply_override(nlohmann::json& config, const std::string& assignment);

}  // namespace intersim::engine
