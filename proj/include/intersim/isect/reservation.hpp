#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "intersim/isect/geometry.hpp"

namespace intersim::isect {

struct ReservationRequest {
  VehicleId vehicle;
  double t_a = 0.0;  // seconds
  double v_a = 0.0;  // m/s
  int approach = 0;
  int lane = 0;
  Turn turn = Turn::Straight;
  std::optional<Money> bid;
};

/// Thrown for requests that cannot be evaluated at all; ordinary refusals are Rejections.
class InvalidRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidRequest unless v_a > 0, t_a > now and the movement is legal.
void validate_request(const ReservationRequest& r, const IntersectionGeometry& geo, double now);

struct Reservation {
  ReservationRequest request;
  TileTimeSet tiles;
  Money payment = 0.0;
};

/// Confirmed bookings. No (tile, step) is held by two vehicles; one reservation per vehicle.
class ReservationTable {
 public:
  /// True iff `tiles` meets a booking held by any vehicle other than `requester`.
  bool conflicts(const TileTimeSet& tiles, std::optional<VehicleId> requester = std::nullopt) const;
  /// Throws std::logic_error if the booking would break a table invariant.
  void book(Reservation r);
  std::optional<Reservation> remove(VehicleId v);
  const Reservation* find(VehicleId v) const;
  std::size_t size() const { return by_vehicle_.size(); }
  bool empty() const { return by_vehicle_.empty(); }
  /// Forgets occupancy layers before `step`; reservations themselves stay until removed.
  void prune_before(Step step);
  /// Full invariant check: layers agree with reservations and are pairwise disjoint.
  bool consistent() const;

 private:
  struct Layer {
    TileMask used;
    std::vector<std::pair<VehicleId, TileMask>> holders;
  };
  std::map<Step, Layer> layers_;
  std::unordered_map<VehicleId, Reservation> by_vehicle_;
};

/// Per-lane maximum reservation distance d_i, initially infinite.
class DistanceFilter {
 public:
  explicit DistanceFilter(const IntersectionGeometry& geo);
  double get(int approach, int lane) const { return d_.at(approach).at(lane); }
  void confirm(int approach, int lane) { d_.at(approach).at(lane) = kInfinity; }
  void reject(int approach, int lane, double distance);
  const std::vector<std::vector<double>>& values() const { return d_; }

 private:
  std::vector<std::vector<double>> d_;
};

/// Distance from which the request is sent, assuming constant speed: v_a * (t_a - now).
double reservation_distance(const ReservationRequest& r, double now);

enum class RejectReason { FilteredByDistance, Conflict, BidViolation, LostAuction, Stale, BelowReserve };
const char* to_string(RejectReason r);

struct Confirmation {
  VehicleId vehicle;
  double t_a = 0.0;
  double v_a = 0.0;
  TileTimeSet tiles;
  Money payment = 0.0;
};

struct Rejection {
  VehicleId vehicle;
  RejectReason reason = RejectReason::Conflict;
  double distance = 0.0;
  std::string detail;
};

using Reply = std::variant<Confirmation, Rejection>;
inline bool confirmed(const Reply& r) { return std::holds_alternative<Confirmation>(r); }

/// First-come-first-served processing of one request. `price` is charged on confirmation.
Reply fcfs_process(const ReservationRequest& r, const IntersectionGeometry& geo, ReservationTable& table,
                   DistanceFilter& filter, double now, Money price = 0.0);

/// Removes the bookings of a vehicle that has left the box. Throws std::out_of_range if it holds none.
void consume_reservation(VehicleId v, ReservationTable& table);

/// Message dumps in the agent-communication style, one message per call.
void log_request(std::ostream& os, const ReservationRequest& r, const std::string& manager);
void log_reply(std::ostream& os, const Reply& reply, const std::string& manager);

}  // namespace intersim::isect
