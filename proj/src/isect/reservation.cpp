#include "intersim/isect/reservation.hpp"

#include <algorithm>
#include <cmath>

namespace intersim::isect {

void validate_request(const ReservationRequest& r, const IntersectionGeometry& geo, double now) {
  if (!(r.v_a > 0)) throw InvalidRequest("arrival speed must be positive");
  if (!(r.t_a > now)) throw InvalidRequest("arrival time must lie in the future");
  if (r.bid && *r.bid < 0) throw InvalidRequest("bid value must be non-negative");
  if (!geo.permitted(r.approach, r.lane, r.turn)) {
    throw InvalidRequest("illegal lane " + std::to_string(r.lane) + " for turn " + to_string(r.turn));
  }
}

bool ReservationTable::conflicts(const TileTimeSet& tiles, std::optional<VehicleId> requester) const {
  for (const auto& [step, mask] : tiles) {
    auto it = layers_.find(step);
    if (it == layers_.end() || !it->second.used.intersects(mask)) continue;
    for (const auto& [holder, held] : it->second.holders) {
      if (requester && holder == *requester) continue;
      if (held.intersects(mask)) return true;
    }
  }
  return false;
}

void ReservationTable::book(Reservation r) {
  const VehicleId v = r.request.vehicle;
  if (by_vehicle_.count(v)) throw std::logic_error("vehicle already holds a reservation");
  if (conflicts(r.tiles)) throw std::logic_error("booking would double-book a tile");
  for (const auto& [step, mask] : r.tiles) {
    auto& layer = layers_[step];
    if (layer.used.size() == 0) layer.used.resize(mask.size());
    layer.used |= mask;
    layer.holders.emplace_back(v, mask);
  }
  by_vehicle_.emplace(v, std::move(r));
}

std::optional<Reservation> ReservationTable::remove(VehicleId v) {
  auto it = by_vehicle_.find(v);
  if (it == by_vehicle_.end()) return std::nullopt;
  for (const auto& [step, mask] : it->second.tiles) {
    auto layer = layers_.find(step);
    if (layer == layers_.end()) continue;
    auto& holders = layer->second.holders;
    std::erase_if(holders, [&](const auto& h) { return h.first == v; });
    if (holders.empty()) {
      layers_.erase(layer);
    } else {
      layer->second.used -= mask;
    }
  }
  Reservation out = std::move(it->second);
  by_vehicle_.erase(it);
  return out;
}

const Reservation* ReservationTable::find(VehicleId v) const {
  auto it = by_vehicle_.find(v);
  return it == by_vehicle_.end() ? nullptr : &it->second;
}

void ReservationTable::prune_before(Step step) {
  layers_.erase(layers_.begin(), layers_.lower_bound(step));
}

bool ReservationTable::consistent() const {
  for (const auto& [step, layer] : layers_) {
    TileMask seen(layer.used.size());
    for (const auto& [holder, mask] : layer.holders) {
      if (seen.intersects(mask)) return false;
      seen |= mask;
      auto it = by_vehicle_.find(holder);
      if (it == by_vehicle_.end()) return false;
    }
    if (seen != layer.used) return false;
  }
  return true;
}

DistanceFilter::DistanceFilter(const IntersectionGeometry& geo) {
  for (const auto& a : geo.approaches()) d_.emplace_back(a.lanes, kInfinity);
}

void DistanceFilter::reject(int approach, int lane, double distance) {
  double& d = d_.at(approach).at(lane);
  d = std::min(d, distance);
}

double reservation_distance(const ReservationRequest& r, double now) { return r.v_a * (r.t_a - now); }

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::FilteredByDistance: return "filtered";
    case RejectReason::Conflict: return "conflict";
    case RejectReason::BidViolation: return "bid-violation";
    case RejectReason::LostAuction: return "lost-auction";
    case RejectReason::Stale: return "stale";
    case RejectReason::BelowReserve: return "below-reserve";
  }
  return "?";
}

Reply fcfs_process(const ReservationRequest& r, const IntersectionGeometry& geo, ReservationTable& table,
                   DistanceFilter& filter, double now, Money price) {
  validate_request(r, geo, now);
  const double d = reservation_distance(r, now);
  if (d > filter.get(r.approach, r.lane)) {
    return Rejection{r.vehicle, RejectReason::FilteredByDistance, d, {}};
  }
  table.remove(r.vehicle);
  const auto& m = geo.movement(r.approach, r.lane, r.turn);
  TileTimeSet tiles = geo.trajectory_tiles(m, r.t_a, r.v_a);
  if (table.conflicts(tiles, r.vehicle)) {
    filter.reject(r.approach, r.lane, d);
    return Rejection{r.vehicle, RejectReason::Conflict, d, {}};
  }
  filter.confirm(r.approach, r.lane);
  Confirmation c{r.vehicle, r.t_a, r.v_a, tiles, price};
  table.book(Reservation{r, std::move(tiles), price});
  return c;
}

void consume_reservation(VehicleId v, ReservationTable& table) {
  if (!table.remove(v)) throw std::out_of_range("vehicle " + std::to_string(v.value) + " holds no reservation");
}

namespace {

std::string clock(double t) {
  auto s = static_cast<long long>(std::floor(t));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", s / 3600, (s / 60) % 60, s % 60);
  return buf;
}

}  // namespace

void log_request(std::ostream& os, const ReservationRequest& r, const std::string& manager) {
  os << "(request reservation :sender D-" << r.vehicle.value << " :receiver IM-" << manager
     << " :content(:arrival_time " << clock(r.t_a) << " :arrival_speed "
     << std::lround(r.v_a * 3.6) << "km/h :lane " << r.lane << " :type_of_turn " << to_string(r.turn);
  if (r.bid) os << " :bid " << *r.bid;
  os << "))\n";
}

void log_reply(std::ostream& os, const Reply& reply, const std::string& manager) {
  if (const auto* c = std::get_if<Confirmation>(&reply)) {
    os << "(confirm reservation :sender IM-" << manager << " :receiver D-" << c->vehicle.value
       << " :content(:arrival_time " << clock(c->t_a) << " :arrival_speed " << std::lround(c->v_a * 3.6)
       << "km/h :payment " << c->payment << "))\n";
  } else {
    const auto& j = std::get<Rejection>(reply);
    os << "(reject reservation :sender IM-" << manager << " :receiver D-" << j.vehicle.value
       << " :content(:reason " << to_string(j.reason) << "))\n";
  }
}

}  // namespace intersim::isect
